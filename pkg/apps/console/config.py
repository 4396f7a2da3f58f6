"""
Run configuration: one JSON document with the sections params,
initial_state, integrator, geometry and surface. Unknown keys are errors in
every section.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

from rest_framework import serializers

from apps.epidemic.covid import DIMENSION, InitialCondition, ModelParams
from apps.epidemic.serializers import FiniteFloatField, InitialStateSerializer, ModelParamsSerializer, StrictSerializer


class ConfigurationError(ValueError):
    pass


class IntegratorSerializer(StrictSerializer):
    method = serializers.ChoiceField(choices=('rk4', 'adaptive'), default='rk4')
    t0 = FiniteFloatField(default=0.0)
    t1 = FiniteFloatField(default=100.0)
    dt = FiniteFloatField(default=0.05)
    rtol = FiniteFloatField(default=1e-6)
    atol = FiniteFloatField(default=1e-9)

    def validate(self, attrs):
        if not attrs['t1'] > attrs['t0']:
            raise serializers.ValidationError({'t1': ['Must be greater than t0.']})
        for name in ('dt', 'rtol', 'atol'):
            if not attrs[name] > 0:
                raise serializers.ValidationError({name: ['Must be positive.']})
        return attrs


class GeometrySerializer(StrictSerializer):
    tangent = serializers.ChoiceField(choices=('field', 'zero'), default='field')
    check = serializers.BooleanField(default=False)
    strict = serializers.BooleanField(default=False)


class GridAxisSerializer(StrictSerializer):
    min = FiniteFloatField()
    max = FiniteFloatField()
    count = serializers.IntegerField(min_value=2)

    def validate(self, attrs):
        if not attrs['min'] < attrs['max']:
            raise serializers.ValidationError({'max': ['Must be greater than min.']})
        return attrs


class SurfaceSerializer(StrictSerializer):
    axes = serializers.ListField(
        child=serializers.IntegerField(min_value=1, max_value=DIMENSION), min_length=3, max_length=3, required=False
    )
    grid = GridAxisSerializer(many=True, required=False)
    count = serializers.IntegerField(min_value=2, default=20)
    rho = FiniteFloatField(min_value=0, default=0.0)
    tol = FiniteFloatField(min_value=0, default=0.0)
    points = serializers.BooleanField(default=False)

    def validate_axes(self, value):
        if len(set(value)) != 3:
            raise serializers.ValidationError('Axes must be distinct.')
        return value

    def validate_grid(self, value):
        if len(value) not in (1, 3):
            raise serializers.ValidationError('Give one range for every axis or three ranges.')
        return value


class RunConfigSerializer(StrictSerializer):
    params = ModelParamsSerializer()
    initial_state = InitialStateSerializer(required=False)
    integrator = IntegratorSerializer(required=False)
    geometry = GeometrySerializer(required=False)
    surface = SurfaceSerializer(required=False)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: InitialCondition | None = None
    integrator: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    surface: dict = field(default_factory=dict)


def _section_defaults(serializer_class: type[serializers.Serializer]) -> dict:
    serializer = serializer_class(data={})
    serializer.is_valid(raise_exception=True)
    return dict(serializer.validated_data)


def validate_section(serializer_class: type[serializers.Serializer], data: dict, prefix: str) -> dict:
    """One config section after command-line overrides were merged into it."""
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise ConfigurationError('\n'.join(flatten_errors(serializer.errors, prefix)))
    return dict(serializer.validated_data)


def flatten_errors(detail, prefix: str = '') -> list[str]:
    """DRF error detail as ``dotted.path: message`` lines."""
    if isinstance(detail, dict):
        lines = []
        for key, value in detail.items():
            path = prefix if key == 'non_field_errors' else (f'{prefix}.{key}' if prefix else str(key))
            lines.extend(flatten_errors(value, path))
        return lines
    if isinstance(detail, list):
        lines = []
        for index, item in enumerate(detail):
            if isinstance(item, (dict, list)) and item:
                lines.extend(flatten_errors(item, f'{prefix}[{index}]'))
            elif item:
                lines.append(f'{prefix or "config"}: {item}')
        return lines
    return [f'{prefix or "config"}: {detail}']


def parse_run_config(data) -> RunConfig:
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError('\n'.join(flatten_errors(serializer.errors)))
    validated = serializer.validated_data
    params = ModelParamsSerializer().create(dict(validated['params']))
    initial = None
    if 'initial_state' in validated:
        initial = InitialStateSerializer().create(dict(validated['initial_state']))
    return RunConfig(
        params=params,
        initial=initial,
        integrator=dict(validated.get('integrator') or _section_defaults(IntegratorSerializer)),
        geometry=dict(validated.get('geometry') or _section_defaults(GeometrySerializer)),
        surface=dict(validated.get('surface') or _section_defaults(SurfaceSerializer)),
    )


def load_run_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f'cannot read config {path}: {exc.strerror}') from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}') from exc
    return parse_run_config(data)
