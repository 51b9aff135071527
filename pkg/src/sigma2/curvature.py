"""Pointwise curvature of a 3-metric from exact Taylor jets.

Index conventions.  ``riemann[i, k, j, l]`` is the fully lowered tensor
``R_ikjl = g_ie R^e_kjl`` with

    R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb,

so ``Ric_bd = R^a_bad`` and ``Ric_ij = g^kl R_ikjl``; the unit round
sphere has ``R_ikik = g_ii g_kk - g_ik^2 > 0``.  ``grad_E[k, i, j]`` is
``nabla_k E_ij``.  All arrays index coordinate components; contractions use
``metric_inv``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import SingularInput
from .expr import MetricChart, check_positive_definite

ORDER = jets.MAX_ORDER


@dataclass(frozen=True)
class MetricJets:
    g: np.ndarray
    g_inv: np.ndarray
    point: tuple
    det: np.ndarray


def invert_jet_matrix(g: np.ndarray, order: int = ORDER):
    """Inverse and determinant of a 3x3 matrix of jets, via cofactors."""
    cof = np.empty_like(g)
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            cof[i, j] = jets.mul(g[i1, j1], g[i2, j2], order) - jets.mul(g[i1, j2], g[i2, j1], order)
    det = sum(jets.mul(g[0, j], cof[0, j], order) for j in range(3))
    if det[0] == 0:
        raise SingularInput("reciprocal", "metric jet matrix is singular")
    inv_det = jets.compose("reciprocal", det, order)
    inv = jets.mul(np.swapaxes(cof, 0, 1), inv_det, order)
    return inv, det


def metric_jets(chart: MetricChart, point) -> MetricJets:
    point = tuple(float(v) for v in point)
    chart.check_guard(point)
    g = chart.jets(point, ORDER)
    check_positive_definite(g[..., 0], chart.name, point)
    g_inv, det = invert_jet_matrix(g)
    return MetricJets(g, g_inv, point, det)


@dataclass(frozen=True)
class CurvatureJets:
    """Jets of the intermediate fields, truncated to the order each stays exact to."""

    mj: MetricJets
    gamma: np.ndarray  # Gamma^k_ij, order 3
    riemann_mixed: np.ndarray  # R^a_bcd, order 2
    riemann: np.ndarray  # R_abcd, order 2
    ricci: np.ndarray  # order 2
    scalar: np.ndarray  # order 2
    E: np.ndarray  # order 2


def _christoffel_jets(mj: MetricJets) -> np.ndarray:
    dg = jets.gradient(mj.g)  # dg[k, i, j] = d_k g_ij
    term = np.transpose(dg, (2, 0, 1, 3))  # [l, i, j] -> d_i g_jl
    lowered = 0.5 * (term + np.transpose(term, (0, 2, 1, 3)) - dg)
    return jets.contract("kl,lij->kij", mj.g_inv, lowered, 3)


def christoffel(mj: MetricJets):
    """Christoffel symbols ``Gamma^k_ij`` and their partials ``dGamma[m, k, i, j]``."""
    gam = _christoffel_jets(mj)
    return gam[..., 0], jets.gradient(gam)[..., 0]


def _riemann_jets(mj: MetricJets, gam: np.ndarray):
    dgam = jets.gradient(gam)  # [m, a, b, c] = d_m Gamma^a_bc
    first = np.einsum("cadbZ->abcdZ", dgam)
    quad = jets.contract("ace,edb->abcd", gam, gam, 2)
    mixed = jets.truncate(first - first.swapaxes(2, 3) + quad - quad.swapaxes(2, 3), 2)
    lowered = jets.contract("ae,ebcd->abcd", mj.g, mixed, 2)
    return mixed, lowered


def riemann_tensor(mj: MetricJets):
    """Lowered ``R_ikjl`` values and the order-2 jets of ``R^a_bcd``."""
    mixed, lowered = _riemann_jets(mj, _christoffel_jets(mj))
    return lowered[..., 0], mixed


def curvature_jets(chart: MetricChart, point) -> CurvatureJets:
    mj = metric_jets(chart, point)
    gam = _christoffel_jets(mj)
    mixed, lowered = _riemann_jets(mj, gam)
    ricci = np.einsum("abadZ->bdZ", mixed)
    scalar = jets.contract("bd,bd->", mj.g_inv, ricci, 2)
    E = ricci - jets.mul(mj.g, scalar, 2) / 3.0
    return CurvatureJets(mj, gam, mixed, lowered, ricci, scalar, jets.truncate(E, 2))


@dataclass(frozen=True)
class CurvatureData:
    point: tuple
    metric: np.ndarray
    metric_inv: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    E: np.ndarray
    schouten: np.ndarray
    sigma2: float
    grad_R: np.ndarray
    hess_R: np.ndarray
    lap_R: float
    grad_E: np.ndarray
    lap_E: np.ndarray
    norm_grad_E_sq: float

    def norm_sq(self, T: np.ndarray) -> float:
        """|T|^2 for a covariant 2-tensor."""
        gi = self.metric_inv
        return float(np.einsum("ia,jb,ij,ab->", gi, gi, T, T))

    def dot(self, S: np.ndarray, T: np.ndarray) -> float:
        gi = self.metric_inv
        return float(np.einsum("ia,jb,ij,ab->", gi, gi, S, T))

    def square(self, T: np.ndarray) -> np.ndarray:
        """``T_ip T_jp`` with the repeated index raised."""
        return T @ self.metric_inv @ T.T

    @property
    def norm_E_sq(self) -> float:
        return self.norm_sq(self.E)

    @property
    def norm_ricci_sq(self) -> float:
        return self.norm_sq(self.ricci)

    @property
    def trace_E_cubed(self) -> float:
        """``E_ip E_jp E_ij``, i.e. tr((g^-1 E)^3)."""
        m = self.metric_inv @ self.E
        return float(np.trace(m @ m @ m))

    @property
    def norm_grad_R_sq(self) -> float:
        return float(self.grad_R @ self.metric_inv @ self.grad_R)


def _covariant_derivative_of_E(cj: CurvatureJets) -> np.ndarray:
    """Order-1 jets of nabla_k E_ij."""
    gam, E = cj.gamma, cj.E
    dE = jets.gradient(E)
    return jets.truncate(
        dE
        - jets.contract("lki,lj->kij", gam, E, 1)
        - jets.contract("lkj,il->kij", gam, E, 1),
        1,
    )


def curvature_data(chart: MetricChart, point) -> CurvatureData:
    return curvature_data_from_jets(curvature_jets(chart, point))


def curvature_data_from_jets(cj: CurvatureJets) -> CurvatureData:
    mj = cj.mj
    g, gi = mj.g[..., 0], mj.g_inv[..., 0]
    gam = cj.gamma[..., 0]
    ricci = cj.ricci[..., 0]
    R = float(cj.scalar[0])
    E = cj.E[..., 0]

    schouten = ricci - 0.25 * R * g
    mixed_A = gi @ schouten
    sigma2 = 0.5 * (np.trace(mixed_A) ** 2 - np.trace(mixed_A @ mixed_A))

    dR = jets.gradient(cj.scalar)
    grad_R = dR[..., 0]
    hess_R = jets.gradient(dR)[..., 0] - np.einsum("kij,k->ij", gam, grad_R)
    hess_R = 0.5 * (hess_R + hess_R.T)
    lap_R = float(np.einsum("ij,ij->", gi, hess_R))

    nE = _covariant_derivative_of_E(cj)
    grad_E = nE[..., 0]
    d_nE = jets.gradient(nE)[..., 0]  # [k, l, i, j] = d_k nabla_l E_ij
    second = (
        d_nE
        - np.einsum("mkl,mij->klij", gam, grad_E)
        - np.einsum("mki,lmj->klij", gam, grad_E)
        - np.einsum("mkj,lim->klij", gam, grad_E)
    )
    lap_E = np.einsum("kl,klij->ij", gi, second)
    lap_E = 0.5 * (lap_E + lap_E.T)
    norm_grad_E_sq = float(np.einsum("ka,ib,jc,kij,abc->", gi, gi, gi, grad_E, grad_E))

    return CurvatureData(
        point=mj.point,
        metric=g,
        metric_inv=gi,
        gamma=gam,
        dgamma=jets.gradient(cj.gamma)[..., 0],
        riemann=cj.riemann[..., 0],
        ricci=ricci,
        scalar=R,
        E=E,
        schouten=schouten,
        sigma2=float(sigma2),
        grad_R=grad_R,
        hess_R=hess_R,
        lap_R=lap_R,
        grad_E=grad_E,
        lap_E=lap_E,
        norm_grad_E_sq=norm_grad_E_sq,
    )


def _scalar_laplacian(cj: CurvatureJets, f: np.ndarray) -> float:
    gi, gam = cj.mj.g_inv[..., 0], cj.gamma[..., 0]
    df = jets.gradient(f)
    hess = jets.gradient(df)[..., 0] - np.einsum("kij,k->ij", gam, df[..., 0])
    return float(np.einsum("ij,ij->", gi, hess))


def scalar_laplacian_divergence(cj: CurvatureJets) -> float:
    """Delta R as (1/sqrt g) d_i(sqrt g g^ij d_j R), with no Christoffel symbols."""
    sqrt_det = jets.compose("sqrt", cj.mj.det, 2)
    flux = jets.mul(sqrt_det, jets.contract("ij,j->i", cj.mj.g_inv, jets.gradient(cj.scalar), 1), 1)
    div = sum(jets.diff(flux[i], i)[0] for i in range(3))
    return float(div / sqrt_det[0])


def laplacian_norm_E_sq(cj: CurvatureJets) -> float:
    """Delta |E|^2 from the order-2 jet of |E|^2 (independent of Delta E)."""
    gi = cj.mj.g_inv
    raised = jets.contract("ia,ab->ib", gi, jets.contract("jb,ij->ib", gi, cj.E, 2), 2)
    norm = jets.contract("ab,ab->", raised, cj.E, 2)
    return _scalar_laplacian(cj, norm)


def divergence_of_ricci(cd: CurvatureData) -> np.ndarray:
    """g^jk nabla_k R_ij, using nabla Ric = nabla E + (dR/3) g."""
    gi = cd.metric_inv
    div_E = np.einsum("jk,kij->i", gi, cd.grad_E)
    return div_E + cd.grad_R / 3.0
