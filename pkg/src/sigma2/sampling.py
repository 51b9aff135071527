"""Deterministic point sets and random chart families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .expr import Add, BinOp, MetricChart, Mul, Num, Pow, Var, eval_expr, warped_chart


def halton_points(count: int, seed: int = 0, low: float = -2.0, high: float = 2.0) -> np.ndarray:
    """Scrambled Halton points in the cube [low, high]^3."""
    sampler = qmc.Halton(d=3, scramble=True, seed=np.random.default_rng(seed))
    return low + (high - low) * sampler.random(count)


@dataclass(frozen=True)
class WarpedFamily:
    """Random dx^2 + dy^2 + f(x, y)^2 dz^2 with f a quadratic polynomial.

    The constant term of f is drawn from ``constant_range``, the other five
    coefficients from [-coef_range, coef_range]; sample points come from
    [-box, box]^3 and are redrawn until f >= margin there.
    """

    degree: int = 2
    coef_range: float = 0.5
    constant_range: tuple = (1.0, 2.0)
    margin: float = 0.2
    box: float = 1.0


_MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def _monomial(px: int, py: int):
    factors = []
    for name, p in (("x", px), ("y", py)):
        if p == 1:
            factors.append(Var(name))
        elif p > 1:
            factors.append(Pow(Var(name), p))
    return factors


def polynomial_expr(coeffs) -> object:
    """c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2 (degree <= 2 uses a prefix)."""
    expr = None
    for c, (px, py) in zip(coeffs, _MONOMIALS):
        term = Num(float(c))
        for factor in _monomial(px, py):
            term = Mul(term, factor)
        expr = term if expr is None else Add(expr, term)
    return expr


def random_warped_chart(rng: np.random.Generator, family: WarpedFamily = WarpedFamily()):
    """(chart, point) with the warping function bounded below by the margin at the point."""
    nterms = {0: 1, 1: 3, 2: 6}[family.degree]
    while True:
        coeffs = np.concatenate(
            [rng.uniform(*family.constant_range, size=1), rng.uniform(-family.coef_range, family.coef_range, size=nterms - 1)]
        )
        f = polynomial_expr(coeffs)
        for _ in range(20):
            point = tuple(rng.uniform(-family.box, family.box, size=3))
            if eval_expr(f, point) >= family.margin:
                return warped_chart(f, name="random_warped"), point


def random_general_chart(rng: np.random.Generator, amplitude: float = 0.2):
    """(chart, point) for a non-diagonal metric g = I + quadratic symmetric perturbation.

    Each component perturbation is a random polynomial in x, y, z of degree
    <= 2; points are drawn from [-0.5, 0.5]^3 where the result stays positive
    definite.
    """
    variables = [Var("x"), Var("y"), Var("z")]
    comps = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            c = rng.uniform(-amplitude, amplitude, size=10)
            e = Num(1.0 if i == j else 0.0)
            terms = [Num(float(c[0]))]
            terms += [Mul(Num(float(c[1 + a])), variables[a]) for a in range(3)]
            k = 4
            for a in range(3):
                for b in range(a, 3):
                    terms.append(Mul(Num(float(c[k])), Mul(variables[a], variables[b])))
                    k += 1
            for term in terms:
                e = BinOp("+", e, term)
            comps[i][j] = comps[j][i] = e
    chart = MetricChart("random_general", comps)
    while True:
        point = tuple(rng.uniform(-0.5, 0.5, size=3))
        g = np.array([[eval_expr(comps[i][j], point) for j in range(3)] for i in range(3)])
        if np.linalg.eigvalsh(g).min() > 0.2:
            return chart, point
