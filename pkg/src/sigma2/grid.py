"""Finite-difference curvature of periodic metric fields on [0, 2pi)^3.

Fields are arrays shaped ``(nx, ny, nz, ...)``; the spacing along each axis
is ``2 pi / n_axis``.  An axis of length 1 means "constant in that
direction" (the periodic stencil returns exactly zero there), which lets
one-dimensional test metrics run on ``(n, 1, 1)`` grids.

Every derivative, including second ones, is the fourth-order central first
difference applied once or twice.  Using one stencil everywhere keeps the
energy and the gradient formula built from the same discrete symbol.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def d1(field: np.ndarray, axis: int) -> np.ndarray:
    """Fourth-order periodic central difference along spatial ``axis``."""
    n = field.shape[axis]
    if n == 1:
        return np.zeros_like(field)
    h = TWO_PI / n
    return (
        8.0 * (np.roll(field, -1, axis) - np.roll(field, 1, axis))
        - (np.roll(field, -2, axis) - np.roll(field, 2, axis))
    ) / (12.0 * h)


def grad(field: np.ndarray) -> np.ndarray:
    """Partials stacked on a new axis placed right after the three grid axes."""
    return np.stack([d1(field, a) for a in range(3)], axis=3)


class GridGeometry:
    """Metric, Christoffel symbols, Riemann and Ricci on a periodic grid.

    Index layout after the three grid axes: ``gamma[..., k, i, j]`` is
    Gamma^k_ij, ``riemann[..., a, b, c, d]`` is R_abcd with the same sign
    convention as the jet engine.
    """

    def __init__(self, g: np.ndarray, need_riemann: bool = True):
        self.g = g
        self.shape = g.shape[:3]
        self.g_inv = np.linalg.inv(g)
        self.det = np.linalg.det(g)
        self.sqrt_det = np.sqrt(self.det)
        dg = grad(g)  # [..., k, i, j] = d_k g_ij
        term = np.einsum("...ijl->...lij", dg)
        lowered = 0.5 * (term + np.swapaxes(term, -1, -2) - dg)
        self.gamma = np.einsum("...kl,...lij->...kij", self.g_inv, lowered)
        dgam = grad(self.gamma)  # [..., m, k, i, j]
        gam = self.gamma
        if need_riemann:
            first = np.einsum("...cadb->...abcd", dgam)
            quad = np.einsum("...ace,...edb->...abcd", gam, gam, optimize=True)
            mixed = first - np.swapaxes(first, -1, -2) + quad - np.swapaxes(quad, -1, -2)
            self.riemann = np.einsum("...ae,...ebcd->...abcd", g, mixed, optimize=True)
            self.ricci = np.einsum("...abad->...bd", mixed)
        else:
            # Ric_bd = d_a Gamma^a_db - d_d Gamma^a_ab + Gamma^a_ae Gamma^e_db - Gamma^a_de Gamma^e_ab
            self.riemann = None
            self.ricci = (
                np.einsum("...aadb->...bd", dgam)
                - np.einsum("...daab->...bd", dgam)
                + np.einsum("...aae,...edb->...bd", gam, gam)
                - np.einsum("...ade,...eab->...bd", gam, gam)
            )
        self.ricci = 0.5 * (self.ricci + np.swapaxes(self.ricci, -1, -2))
        self.scalar = np.einsum("...ij,...ij->...", self.g_inv, self.ricci)

    def norm_sq(self, T: np.ndarray) -> np.ndarray:
        gi = self.g_inv
        return np.einsum("...ia,...jb,...ij,...ab->...", gi, gi, T, T, optimize=True)

    def covariant_d2(self, T: np.ndarray) -> np.ndarray:
        """nabla_k T_ij for a covariant 2-tensor field, layout [..., k, i, j]."""
        gam = self.gamma
        return (
            grad(T)
            - np.einsum("...lki,...lj->...kij", gam, T)
            - np.einsum("...lkj,...il->...kij", gam, T)
        )

    def laplacian_2tensor(self, T: np.ndarray) -> np.ndarray:
        gam = self.gamma
        nT = self.covariant_d2(T)  # [..., l, i, j]
        second = (
            grad(nT)  # [..., k, l, i, j]
            - np.einsum("...mkl,...mij->...klij", gam, nT)
            - np.einsum("...mki,...lmj->...klij", gam, nT)
            - np.einsum("...mkj,...lim->...klij", gam, nT)
        )
        out = np.einsum("...kl,...klij->...ij", self.g_inv, second)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def hessian_scalar(self, f: np.ndarray) -> np.ndarray:
        df = grad(f)
        h = grad(df) - np.einsum("...kij,...k->...ij", self.gamma, df)
        return 0.5 * (h + np.swapaxes(h, -1, -2))


def energy_density(geo: GridGeometry, t: float) -> np.ndarray:
    return (geo.norm_sq(geo.ricci) + t * geo.scalar**2) * geo.sqrt_det


def grad_Ft_field(geo: GridGeometry, t: float) -> np.ndarray:
    """Pointwise (grad F_t)_ij from finite-difference curvature."""
    g, gi, Ric, R = geo.g, geo.g_inv, geo.ricci, geo.scalar
    hess = geo.hessian_scalar(R)
    lap_R = np.einsum("...ij,...ij->...", gi, hess)
    lap_ric = geo.laplacian_2tensor(Ric)
    ric_up = np.einsum("...ka,...lb,...ab->...kl", gi, gi, Ric)
    rm_ric = np.einsum("...ikjl,...kl->...ij", geo.riemann, ric_up)
    q = geo.norm_sq(Ric) + t * R**2
    return (
        -lap_ric
        + (1.0 + 2.0 * t) * hess
        - 0.5 * (1.0 + 4.0 * t) * lap_R[..., None, None] * g
        + 0.5 * q[..., None, None] * g
        - 2.0 * rm_ric
        - 2.0 * t * R[..., None, None] * Ric
    )


def cell_volume(shape) -> float:
    return float(np.prod([TWO_PI / n for n in shape]))
