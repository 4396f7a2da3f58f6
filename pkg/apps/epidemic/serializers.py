import math
from collections.abc import Mapping

from rest_framework import serializers

from .covid import COMPARTMENTS, InitialCondition, ModelParams, population_total, state_from_mapping


class FiniteFloatField(serializers.FloatField):
    default_error_messages = {'non_finite': 'A finite number is required.'}

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            self.fail('non_finite')
        return value


class StrictSerializer(serializers.Serializer):
    """
    Rejects keys the schema does not declare, so a misspelled rate name is an
    error instead of a silently ignored field.
    """

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown field.'] for key in unknown})
        return super().to_internal_value(data)


class ModelParamsSerializer(StrictSerializer):
    beta_s = FiniteFloatField(min_value=0)
    beta_a = FiniteFloatField(min_value=0)
    beta_h = FiniteFloatField(min_value=0)
    sigma = FiniteFloatField(min_value=0)
    r = FiniteFloatField(min_value=0, max_value=1)
    gamma_s = FiniteFloatField(min_value=0)
    gamma_a = FiniteFloatField(min_value=0)
    gamma_h = FiniteFloatField(min_value=0)
    phi_s = FiniteFloatField(min_value=0)
    delta_s = FiniteFloatField(min_value=0)
    delta_h = FiniteFloatField(min_value=0)

    def validate_r(self, value: float) -> float:
        if value <= 0:
            raise serializers.ValidationError('Ensure 0 < r <= 1.')
        return value

    def create(self, validated_data) -> ModelParams:
        return ModelParams(**validated_data)

    def to_representation(self, instance):
        if isinstance(instance, ModelParams):
            return instance.as_dict()
        return super().to_representation(instance)


class StateSerializer(StrictSerializer):
    S = FiniteFloatField()
    E = FiniteFloatField()
    Is = FiniteFloatField()
    Ia = FiniteFloatField()
    Ih = FiniteFloatField()
    R = FiniteFloatField()

    def validate(self, attrs):
        total = population_total([attrs[name] for name in COMPARTMENTS])
        if not total > 0:
            raise serializers.ValidationError(f'Total population must be positive, got {total}.')
        return attrs

    def create(self, validated_data):
        return state_from_mapping(validated_data)


class InitialStateSerializer(StateSerializer):
    D = FiniteFloatField(required=False, default=0.0, min_value=0)

    def create(self, validated_data) -> InitialCondition:
        return InitialCondition(state=state_from_mapping(validated_data), deceased=validated_data['D'])
