import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from django.conf import settings

from apps.epidemic.vector_field import VectorFieldSpec
from apps.numerics.calculus import Vector
from apps.numerics.linalg import Mat

from .hamilton import CotangentPoint, HamiltonGeometry, hamilton_geometry
from .kcc import StabilityVerdict, classify_deviation, curvature_matrix_E, deviation_curvature, first_invariant
from .lagrange import LagrangeGeometry, TangentPoint, lagrange_geometry
from .oracles import OracleDeviation, pointwise_deviations

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeometryReport:
    tangent: TangentPoint
    cotangent: CotangentPoint
    lagrange: LagrangeGeometry
    invariant: Vector
    curvature: Mat
    deviation: Mat
    verdict: StabilityVerdict
    hamilton: HamiltonGeometry
    checks: tuple[OracleDeviation, ...] = ()


class GeometryReportService:
    """
    Evaluates every tensor of both bundles at one point. Defaults follow the
    on-shell convention: y = X(x) and p = 2 (y - X(x)).
    """

    def __init__(self, field: VectorFieldSpec) -> None:
        self.field = field
        self.relative_margin = getattr(settings, 'JACOBI_MARGIN', 1e-9)
        self.eigen_tolerance = getattr(settings, 'EIGEN_TOLERANCE', 1e-10)

    def tangent_point(self, x: npt.ArrayLike, y: npt.ArrayLike | None = None) -> TangentPoint:
        if y is None:
            return TangentPoint.on_shell(self.field, x)
        return TangentPoint(x=x, y=y)

    def verdict(self, tp: TangentPoint) -> StabilityVerdict:
        return classify_deviation(
            deviation_curvature(self.field, tp),
            relative_margin=self.relative_margin,
            tol=self.eigen_tolerance,
        )

    def build(
        self,
        x: npt.ArrayLike,
        y: npt.ArrayLike | None = None,
        p: npt.ArrayLike | None = None,
        *,
        check: bool = False,
    ) -> GeometryReport:
        tp = self.tangent_point(x, y)
        cp = CotangentPoint.legendre(self.field, tp) if p is None else CotangentPoint(x=tp.x, p=p)
        deviation = deviation_curvature(self.field, tp)
        verdict = classify_deviation(deviation, relative_margin=self.relative_margin, tol=self.eigen_tolerance)
        checks: tuple[OracleDeviation, ...] = ()
        if check:
            checks = tuple(pointwise_deviations(self.field, tp))
            failed = [item.name for item in checks if not item.passed]
            if failed:
                logger.warning('Oracle checks above tolerance at x=%s: %s', np.array2string(tp.x), ', '.join(failed))
        logger.debug('Geometry at x=%s classified %s', np.array2string(tp.x), verdict.classification.value)
        return GeometryReport(
            tangent=tp,
            cotangent=cp,
            lagrange=lagrange_geometry(self.field, tp),
            invariant=first_invariant(self.field, tp),
            curvature=curvature_matrix_E(self.field, tp),
            deviation=deviation,
            verdict=verdict,
            hamilton=hamilton_geometry(self.field, cp),
            checks=checks,
        )
