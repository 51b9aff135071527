"""Gradients of the quadratic functionals and residuals of the sigma_2 critical equations.

Every evaluator takes a :class:`~sigma2.curvature.CurvatureData`, so one jet
evaluation serves all functionals at a point.  Tensors are covariant
coordinate components; contractions raise indices with ``cd.metric_inv``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureData, curvature_data
from .expr import MetricChart

SIGMA2_COUPLING = -3.0 / 8.0


def laplacian_ricci(cd: CurvatureData) -> np.ndarray:
    # nabla g = 0, so Delta Ric = Delta E + (Delta R / 3) g
    return cd.lap_E + cd.lap_R / 3.0 * cd.metric


def riemann_contract(cd: CurvatureData, T: np.ndarray) -> np.ndarray:
    """``R_ikjl T_kl`` with k, l raised."""
    gi = cd.metric_inv
    return np.einsum("ikjl,ka,lb,ab->ij", cd.riemann, gi, gi, T)


def grad_rho(cd: CurvatureData) -> np.ndarray:
    g = cd.metric
    return (
        -laplacian_ricci(cd)
        - 2.0 * riemann_contract(cd, cd.ricci)
        + cd.hess_R
        - 0.5 * cd.lap_R * g
        + 0.5 * cd.norm_ricci_sq * g
    )


def grad_S(cd: CurvatureData) -> np.ndarray:
    g, R = cd.metric, cd.scalar
    return 2.0 * cd.hess_R - 2.0 * cd.lap_R * g - 2.0 * R * cd.ricci + 0.5 * R * R * g


def grad_Ft(cd: CurvatureData, t: float) -> np.ndarray:
    g, R = cd.metric, cd.scalar
    return (
        -laplacian_ricci(cd)
        + (1.0 + 2.0 * t) * cd.hess_R
        - 0.5 * (1.0 + 4.0 * t) * cd.lap_R * g
        + 0.5 * (cd.norm_ricci_sq + t * R * R) * g
        - 2.0 * riemann_contract(cd, cd.ricci)
        - 2.0 * t * R * cd.ricci
    )


def trace_identity_residual(cd: CurvatureData, t: float) -> float:
    """``2 tr(grad F_t) + (3 + 8t) Delta R + |Ric|^2 + t R^2``; zero for every metric."""
    tr = float(np.einsum("ij,ij->", cd.metric_inv, grad_Ft(cd, t)))
    R = cd.scalar
    return 2.0 * tr + (3.0 + 8.0 * t) * cd.lap_R + cd.norm_ricci_sq + t * R * R


def general_el_residual(cd: CurvatureData, t: float, n: int = 3):
    """Residuals of the dimension-n critical-point system for F_t.

    Returns (tensor residual of the Delta E equation, scalar residual of the
    traced equation).  Only ever evaluated on 3-dimensional data here.
    """
    g, R, E = cd.metric, cd.scalar, cd.E
    rhs = (
        (1.0 + 2.0 * t) * cd.hess_R
        - (n + 2.0 + 4.0 * n * t) / (2.0 * n) * cd.lap_R * g
        - 2.0 * riemann_contract(cd, E)
        - (2.0 + 2.0 * n * t) / n * R * E
        + 0.5 * (cd.norm_ricci_sq - (4.0 - n * (n - 4.0) * t) / n**2 * R * R) * g
    )
    traced = (n + 4.0 * (n - 1.0) * t) * cd.lap_R - (n - 4.0) * (cd.norm_ricci_sq + t * R * R)
    return cd.lap_E - rhs, traced


def f2_residuals(cd: CurvatureData):
    """(Delta E equation residual tensor, |E|^2 - R^2/24) for the sigma_2 functional."""
    g, R, E = cd.metric, cd.scalar, cd.E
    nE2 = cd.norm_E_sq
    rhs = (
        0.25 * cd.hess_R
        - cd.lap_R / 12.0 * g
        + 4.0 * cd.square(E)
        + 5.0 / 12.0 * R * E
        - 0.5 * (3.0 * nE2 - R * R / 72.0) * g
    )
    return cd.lap_E - rhs, nE2 - R * R / 24.0


def laplacian_norm_E_sq_bochner(cd: CurvatureData) -> float:
    return 2.0 * cd.dot(cd.E, cd.lap_E) + 2.0 * cd.norm_grad_E_sq


def weitzenbock_residual(cd: CurvatureData) -> float:
    R, E = cd.scalar, cd.E
    lhs = 0.5 * laplacian_norm_E_sq_bochner(cd)
    rhs = (
        cd.norm_grad_E_sq
        + 0.25 * cd.dot(E, cd.hess_R)
        + 4.0 * cd.trace_E_cubed
        + 5.0 / 12.0 * R * cd.norm_E_sq
    )
    return lhs - rhs


def pde_residual(cd: CurvatureData):
    """(scalar PDE imbalance, slack of the R^3/12 differential inequality)."""
    R = cd.scalar
    a = R * cd.metric - 6.0 * cd.E
    a_hess = cd.dot(a, cd.hess_R)
    rhs = (
        cd.norm_grad_E_sq
        - cd.norm_grad_R_sq / 24.0
        + 4.0 * cd.trace_E_cubed
        + 5.0 / 12.0 * R * cd.norm_E_sq
    )
    return a_hess / 24.0 - rhs, a_hess - R**3 / 12.0


# residual fields and the curvature scale each one is measured against
FIELDS = (
    "grad_Ft_norm",
    "eq1_norm",
    "eq2_value",
    "weitzenbock_residual",
    "pde_residual",
    "cor34_slack",
)


def residual_scales(cd: CurvatureData) -> dict[str, float]:
    R = abs(cd.scalar)
    return {
        "grad_Ft_norm": 1.0 + R**2,
        "eq1_norm": 1.0 + R**2,
        "eq2_value": 1.0 + R**2,
        "weitzenbock_residual": math.sqrt(1.0 + R**4),
        "pde_residual": 1.0 + R**3,
        "cor34_slack": 1.0 + R**3,
    }


@dataclass(frozen=True)
class ResidualRecord:
    grad_Ft_norm: float
    eq1_norm: float
    eq2_value: float
    weitzenbock_residual: float
    pde_residual: float
    cor34_slack: float
    scalar: float
    scales: dict = field(compare=False)

    def scaled(self, name: str) -> float:
        return abs(getattr(self, name)) / self.scales[name]


def residual_record(cd: CurvatureData, t: float = SIGMA2_COUPLING) -> ResidualRecord:
    eq1, eq2 = f2_residuals(cd)
    pde, slack = pde_residual(cd)
    return ResidualRecord(
        grad_Ft_norm=math.sqrt(max(cd.norm_sq(grad_Ft(cd, t)), 0.0)),
        eq1_norm=math.sqrt(max(cd.norm_sq(eq1), 0.0)),
        eq2_value=eq2,
        weitzenbock_residual=weitzenbock_residual(cd),
        pde_residual=pde,
        cor34_slack=slack,
        scalar=cd.scalar,
        scales=residual_scales(cd),
    )


@dataclass(frozen=True)
class ELReport:
    metric_name: str
    t: float
    points: list  # [(point, ResidualRecord)]

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        for name in FIELDS:
            vals = [getattr(rec, name) for _, rec in self.points]
            scaled = [rec.scaled(name) for _, rec in self.points]
            out[name] = {
                "max": max(vals) if vals else 0.0,
                "mean": math.fsum(vals) / len(vals) if vals else 0.0,
                "max_abs": max(map(abs, vals)) if vals else 0.0,
                "max_scaled": max(scaled) if scaled else 0.0,
            }
        return out


def el_report(chart: MetricChart, points, t: float = SIGMA2_COUPLING) -> ELReport:
    records = []
    for p in points:
        p = tuple(float(v) for v in p)
        records.append((p, residual_record(curvature_data(chart, p), t)))
    return ELReport(chart.name, float(t), records)
