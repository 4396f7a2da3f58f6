from rest_framework import serializers


class GridAxisSerializer(serializers.Serializer):
    min = serializers.FloatField(source='lo')
    max = serializers.FloatField(source='hi')
    count = serializers.IntegerField()


class SurfaceSidecarSerializer(serializers.Serializer):
    """Metadata written next to each exported surface. Projections are slices."""

    mode = serializers.SerializerMethodField()
    axes = serializers.ListField(source='spec.axes', child=serializers.IntegerField())
    fixed = serializers.SerializerMethodField()
    rho = serializers.FloatField(source='spec.rho')
    tol = serializers.FloatField(source='spec.tol')
    grid = GridAxisSerializer(source='spec.grid', many=True)
    energy_range = serializers.SerializerMethodField()
    output = serializers.CharField()
    vertices = serializers.SerializerMethodField()
    triangles = serializers.SerializerMethodField()
    points = serializers.SerializerMethodField()

    def get_mode(self, obj) -> str:
        return 'slice'

    def get_fixed(self, obj) -> dict[str, float]:
        return {str(axis): value for axis, value in obj.spec.fixed.items()}

    def get_energy_range(self, obj) -> list[float]:
        return list(obj.grid.value_range)

    def get_vertices(self, obj) -> int | None:
        return None if obj.mesh is None else obj.mesh.vertex_count

    def get_triangles(self, obj) -> int | None:
        return None if obj.mesh is None else obj.mesh.triangle_count

    def get_points(self, obj) -> int | None:
        return None if obj.points is None else int(obj.points.shape[0])
