from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SampleGeometry:
    energy: float
    max_real_part: float
    classification: str


@dataclass(frozen=True)
class Trajectory:
    """
    Time-stamped states of the model plus the deceased count carried alongside.
    ``states[m]`` is the state at ``times[m]``.
    """

    times: np.ndarray
    states: np.ndarray
    deceased: np.ndarray
    geometry: tuple[SampleGeometry, ...] | None = None

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=np.float64)
        states = np.array(self.states, dtype=np.float64)
        deceased = np.array(self.deceased, dtype=np.float64)
        if times.ndim != 1 or states.ndim != 2 or states.shape[0] != times.size or deceased.shape != times.shape:
            raise ValueError(
                f'inconsistent trajectory shapes: times {times.shape}, states {states.shape}, deceased {deceased.shape}'
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError('trajectory times must be strictly increasing')
        if self.geometry is not None and len(self.geometry) != times.size:
            raise ValueError(f'{len(self.geometry)} geometry samples for {times.size} states')
        for name, array in (('times', times), ('states', states), ('deceased', deceased)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def dimension(self) -> int:
        return int(self.states.shape[1])

    @property
    def total_population(self) -> np.ndarray:
        return self.states.sum(axis=1)

    @property
    def conserved_total(self) -> np.ndarray:
        return self.total_population + self.deceased

    def max_conservation_drift(self) -> float:
        totals = self.conserved_total
        return float(np.max(np.abs(totals - totals[0])))

    def is_uniform(self, rel_tol: float = 1e-6) -> bool:
        if self.times.size < 2:
            return True
        steps = np.diff(self.times)
        return bool(np.max(np.abs(steps - steps[0])) <= rel_tol * steps[0])

    def with_geometry(self, samples: list[SampleGeometry] | tuple[SampleGeometry, ...]) -> 'Trajectory':
        return replace(self, geometry=tuple(samples))
