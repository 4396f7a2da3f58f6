from rest_framework import serializers

from .kcc import StabilityVerdict
from .services import GeometryReport


def _tolist(array) -> list:
    return [float(v) for v in array] if array.ndim == 1 else [_tolist(row) for row in array]


class StabilityVerdictSerializer(serializers.Serializer):
    eigenvalues = serializers.SerializerMethodField()
    max_real_part = serializers.FloatField()
    margin = serializers.FloatField()
    band = serializers.FloatField()

    def get_eigenvalues(self, obj: StabilityVerdict) -> list[dict[str, float]]:
        return obj.eigenvalues.as_pairs()

    def to_representation(self, instance: StabilityVerdict):
        data = super().to_representation(instance)
        data['class'] = instance.classification.value
        return data


class OracleDeviationSerializer(serializers.Serializer):
    name = serializers.CharField()
    deviation = serializers.FloatField()
    tolerance = serializers.FloatField()
    passed = serializers.BooleanField()


class GeometryReportSerializer(serializers.Serializer):
    x = serializers.SerializerMethodField()
    y = serializers.SerializerMethodField()
    p = serializers.SerializerMethodField()
    L = serializers.FloatField(source='lagrange.lagrangian')
    G = serializers.SerializerMethodField()
    N = serializers.SerializerMethodField()
    R = serializers.SerializerMethodField()
    EYM = serializers.FloatField(source='lagrange.energy')
    invariant = serializers.SerializerMethodField()
    E = serializers.SerializerMethodField()
    P = serializers.SerializerMethodField()
    verdict = StabilityVerdictSerializer()
    H = serializers.FloatField(source='hamilton.hamiltonian')
    N_H = serializers.SerializerMethodField()
    R_H = serializers.SerializerMethodField()
    checks = OracleDeviationSerializer(many=True)

    def get_x(self, obj: GeometryReport) -> list[float]:
        return _tolist(obj.tangent.x)

    def get_y(self, obj: GeometryReport) -> list[float]:
        return _tolist(obj.tangent.y)

    def get_p(self, obj: GeometryReport) -> list[float]:
        return _tolist(obj.cotangent.p)

    def get_G(self, obj: GeometryReport) -> list[float]:
        return _tolist(obj.lagrange.semispray)

    def get_N(self, obj: GeometryReport) -> list[list[float]]:
        return _tolist(obj.lagrange.connection)

    def get_R(self, obj: GeometryReport) -> list:
        return _tolist(obj.lagrange.torsions)

    def get_invariant(self, obj: GeometryReport) -> list[float]:
        return _tolist(obj.invariant)

    def get_E(self, obj: GeometryReport) -> list[list[float]]:
        return _tolist(obj.curvature)

    def get_P(self, obj: GeometryReport) -> list[list[float]]:
        return _tolist(obj.deviation)

    def get_N_H(self, obj: GeometryReport) -> list[list[float]]:
        return _tolist(obj.hamilton.connection)

    def get_R_H(self, obj: GeometryReport) -> list:
        return _tolist(obj.hamilton.torsions)
