"""
Six-compartment COVID-19 transmission model (S, E, Is, Ia, Ih, R).

N is the plain sum of the six coordinates and is differentiated like any
other function of them; it is never frozen.
"""
import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np
import numpy.typing as npt

from apps.numerics.calculus import Vector
from apps.numerics.exceptions import DegeneratePopulationError, InvalidStateError
from apps.numerics.linalg import Mat, as_matrix

from .vector_field import VectorFieldSpec


COMPARTMENTS = ('S', 'E', 'Is', 'Ia', 'Ih', 'R')
DIMENSION = len(COMPARTMENTS)
S, E, IS, IA, IH, R = range(DIMENSION)


@dataclass(frozen=True)
class ModelParams:
    beta_s: float
    beta_a: float
    beta_h: float
    sigma: float
    r: float
    gamma_s: float
    gamma_a: float
    gamma_h: float
    phi_s: float
    delta_s: float
    delta_h: float

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f'{name} must be finite, got {value}')
            if value < 0:
                raise ValueError(f'{name} must be non-negative, got {value}')
        if not 0 < self.r <= 1:
            raise ValueError(f'r must satisfy 0 < r <= 1, got {self.r}')

    @property
    def transmission(self) -> Vector:
        """Per-compartment transmission rates, zero outside the infectious classes."""
        rates = np.zeros(DIMENSION)
        rates[[IS, IA, IH]] = (self.beta_s, self.beta_a, self.beta_h)
        return rates

    @property
    def symptomatic_exit(self) -> float:
        return self.phi_s + self.gamma_s + self.delta_s

    @property
    def hospital_exit(self) -> float:
        return self.gamma_h + self.delta_h

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


class ForceOfInfection(NamedTuple):
    total: float
    lam: float
    susceptible_share: float

    @property
    def incidence_share(self) -> float:
        """lam * S / N, the d N / d x contribution shared by the first two rows."""
        return self.lam * self.susceptible_share


def population_total(x: npt.ArrayLike) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64))


def check_state(x: Vector, *, strict: bool = False) -> float:
    total = population_total(x)
    if not total > 0:
        raise DegeneratePopulationError(f'degenerate population: N = {total} must be positive')
    if strict:
        negative = np.flatnonzero(x < 0)
        if negative.size:
            name = COMPARTMENTS[negative[0]]
            raise InvalidStateError(f'compartment {name} is negative ({x[negative[0]]}) in strict mode')
    return total


def force_of_infection(params: ModelParams, x: Vector, *, strict: bool = False) -> ForceOfInfection:
    total = check_state(x, strict=strict)
    lam = (params.beta_s * x[IS] + params.beta_a * x[IA] + params.beta_h * x[IH]) / total
    return ForceOfInfection(total=total, lam=lam, susceptible_share=x[S] / total)


def _field(params: ModelParams, x: Vector, strict: bool) -> Vector:
    force = force_of_infection(params, x, strict=strict)
    infection = force.lam * x[S]
    progression = params.sigma * x[E]
    return np.array([
        -infection,
        infection - progression,
        (1.0 - params.r) * progression - params.symptomatic_exit * x[IS],
        params.r * progression - params.gamma_a * x[IA],
        params.phi_s * x[IS] - params.hospital_exit * x[IH],
        params.gamma_s * x[IS] + params.gamma_a * x[IA] + params.gamma_h * x[IH],
    ])


def _jacobian(params: ModelParams, x: Vector, strict: bool) -> Mat:
    force = force_of_infection(params, x, strict=strict)
    infection_row = force.incidence_share - force.susceptible_share * params.transmission
    infection_row[S] -= force.lam

    jac = np.zeros((DIMENSION, DIMENSION))
    jac[S] = infection_row
    jac[E] = -infection_row
    jac[E, E] -= params.sigma
    jac[IS, E] = (1.0 - params.r) * params.sigma
    jac[IS, IS] = -params.symptomatic_exit
    jac[IA, E] = params.r * params.sigma
    jac[IA, IA] = -params.gamma_a
    jac[IH, IS] = params.phi_s
    jac[IH, IH] = -params.hospital_exit
    jac[R, IS] = params.gamma_s
    jac[R, IA] = params.gamma_a
    jac[R, IH] = params.gamma_h
    return as_matrix(jac, name='covid jacobian')


def _hessians(params: ModelParams, x: Vector, strict: bool) -> np.ndarray:
    force = force_of_infection(params, x, strict=strict)
    rates = params.transmission
    unit = np.zeros(DIMENSION)
    unit[S] = 1.0
    # gradient of lam * S (times 1/N) split off from the d N / d x terms
    partial = force.lam * unit + force.susceptible_share * rates
    ones = np.ones(DIMENSION)
    hessian_s = (
        -(np.outer(unit, rates) + np.outer(rates, unit))
        + np.outer(partial, ones)
        + np.outer(ones, partial)
        - 2.0 * force.incidence_share
    ) / force.total

    stack = np.zeros((DIMENSION, DIMENSION, DIMENSION))
    stack[S] = hessian_s
    stack[E] = -hessian_s
    return stack


def deceased_rate(params: ModelParams, x: npt.ArrayLike) -> float:
    point = np.asarray(x, dtype=np.float64)
    return params.delta_s * point[IS] + params.delta_h * point[IH]


def covid_field(params: ModelParams, *, strict: bool = False) -> VectorFieldSpec:
    """The model as a vector field with analytic Jacobian, Hessians and the deceased outflow."""
    return VectorFieldSpec(
        dimension=DIMENSION,
        evaluator=lambda x: _field(params, x, strict),
        jacobian=lambda x: _jacobian(params, x, strict),
        hessians=lambda x: _hessians(params, x, strict),
        sink_rate=lambda x: deceased_rate(params, x),
        name='covid field',
    )


def covid_jacobian(params: ModelParams, *, strict: bool = False) -> Callable[[npt.ArrayLike], Mat]:
    return covid_field(params, strict=strict).jacobian_at


def covid_hessians(params: ModelParams, *, strict: bool = False) -> Callable[[npt.ArrayLike], np.ndarray]:
    return covid_field(params, strict=strict).hessians_at


def state_from_mapping(values: dict[str, float]) -> Vector:
    return np.array([float(values[name]) for name in COMPARTMENTS])


def state_as_mapping(x: npt.ArrayLike) -> dict[str, float]:
    return {name: float(value) for name, value in zip(COMPARTMENTS, np.asarray(x, dtype=np.float64))}


class InitialCondition(NamedTuple):
    state: Vector
    deceased: float = 0.0
