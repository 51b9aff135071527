"""Randomised checks of the pointwise algebra behind the sigma_2 rigidity argument.

Chart-based checks take a :class:`CurvatureData`; matrix-based checks
(Lemma-style eigenvalue inequalities) act on symmetric 3x3 matrices in an
orthonormal frame and have vectorised ``*_batch`` forms for the large
trial counts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .curvature import CurvatureData, curvature_data_from_jets, curvature_jets, divergence_of_ricci, scalar_laplacian_divergence
from .errors import ConfigError, InvalidArgument, PreconditionError
from .expr import catalog_metric, to_text
from .functionals import f2_residuals, riemann_contract, trace_identity_residual, weitzenbock_residual
from .sampling import WarpedFamily, random_warped_chart

INV_SQRT6 = 1.0 / math.sqrt(6.0)


# -- chart-level identities ---------------------------------------------------


def decomposition_rhs(cd: CurvatureData) -> np.ndarray:
    """E_ij g_kl - E_il g_jk + E_kl g_ij - E_kj g_il + (R/6)(g_ij g_kl - g_il g_jk), indexed [i, k, j, l]."""
    g, E, R = cd.metric, cd.E, cd.scalar
    return (
        np.einsum("ij,kl->ikjl", E, g)
        - np.einsum("il,jk->ikjl", E, g)
        + np.einsum("kl,ij->ikjl", E, g)
        - np.einsum("kj,il->ikjl", E, g)
        + R / 6.0 * (np.einsum("ij,kl->ikjl", g, g) - np.einsum("il,jk->ikjl", g, g))
    )


def check_decomposition(cd: CurvatureData) -> float:
    return float(np.abs(cd.riemann - decomposition_rhs(cd)).max())


def contraction_rhs(cd: CurvatureData) -> np.ndarray:
    E = cd.E
    return -2.0 * cd.square(E) - cd.scalar / 6.0 * E + cd.norm_E_sq * cd.metric


def check_contraction(cd: CurvatureData) -> float:
    return float(np.abs(riemann_contract(cd, cd.E) - contraction_rhs(cd)).max())


def riemann_symmetry_residual(cd: CurvatureData) -> float:
    Rm = cd.riemann
    return float(
        max(
            np.abs(Rm + Rm.transpose(1, 0, 2, 3)).max(),
            np.abs(Rm + Rm.transpose(0, 1, 3, 2)).max(),
            np.abs(Rm - Rm.transpose(2, 3, 0, 1)).max(),
        )
    )


def first_bianchi_residual(cd: CurvatureData) -> float:
    Rm = cd.riemann
    # R_abcd + R_acdb + R_adbc
    cyc = Rm + Rm.transpose(0, 3, 1, 2) + Rm.transpose(0, 2, 3, 1)
    return float(np.abs(cyc).max())


def contracted_bianchi_residual(cd: CurvatureData) -> float:
    return float(np.abs(divergence_of_ricci(cd) - 0.5 * cd.grad_R).max())


def sectional_curvatures(cd: CurvatureData) -> np.ndarray:
    """Sectional curvatures of the three coordinate planes of a g-orthonormal frame."""
    w, v = np.linalg.eigh(cd.metric)
    frame = v / np.sqrt(w)  # columns are orthonormal vectors
    Rm = np.einsum("abcd,ai,bj,ck,dl->ijkl", cd.riemann, frame, frame, frame, frame)
    return np.array([Rm[0, 1, 0, 1], Rm[0, 2, 0, 2], Rm[1, 2, 1, 2]])


def check_kato(cd: CurvatureData, threshold: float = 1e-10):
    """``|nabla E|^2 - |nabla |E||^2``, or None where |E| is too small for nabla|E| to exist."""
    nE2 = cd.norm_E_sq
    if not math.sqrt(max(nE2, 0.0)) > threshold:
        return None
    v = _E_dot_grad_E(cd)
    return cd.norm_grad_E_sq - float(v @ cd.metric_inv @ v) / nE2


def _E_dot_grad_E(cd: CurvatureData) -> np.ndarray:
    gi = cd.metric_inv
    return np.einsum("ia,jb,ab,kij->k", gi, gi, cd.E, cd.grad_E)


def sigma2_drift(cd: CurvatureData) -> float:
    """Scaled |grad(|E|^2 - R^2/24)|; zero wherever sigma_2(A) is locally constant."""
    v = _E_dot_grad_E(cd)
    grad = 2.0 * v - cd.scalar / 12.0 * cd.grad_R
    scale = 1.0 + abs(cd.scalar) * math.sqrt(cd.norm_grad_R_sq) + math.sqrt(cd.norm_E_sq * cd.norm_grad_E_sq)
    return math.sqrt(float(grad @ cd.metric_inv @ grad)) / scale


def check_lemma32_on_critical(cd: CurvatureData, drift_tol: float = 1e-8) -> float:
    """``|E|^2 |nabla|E||^2 - R^2 |nabla R|^2 / 576`` on charts with constant sigma_2."""
    drift = sigma2_drift(cd)
    if drift > drift_tol:
        raise PreconditionError("sigma_2(A) is not constant near the point", drift)
    v = _E_dot_grad_E(cd)
    return float(v @ cd.metric_inv @ v) - cd.scalar**2 * cd.norm_grad_R_sq / 576.0


# -- matrix-level inequalities ------------------------------------------------


@dataclass(frozen=True)
class Lemma31Result:
    hypotheses_hold: bool
    conclusion_slack: float


def lemma31_hypotheses(A: np.ndarray) -> np.ndarray:
    """Mask of matrices with tr A >= 0 and sigma_2(A) >= 0."""
    tr = np.trace(A, axis1=-2, axis2=-1)
    sigma2 = 0.5 * (tr**2 - np.einsum("...ij,...ij->...", A, A))
    return (tr >= 0) & (sigma2 >= 0)


def lemma31_batch(A: np.ndarray):
    """(hypotheses mask, slack lambda_1 + lambda_2) for a stack of symmetric matrices."""
    lam = np.linalg.eigvalsh(A)
    return lemma31_hypotheses(A), lam[..., 0] + lam[..., 1]


def check_lemma31(A) -> Lemma31Result:
    hyp, slack = lemma31_batch(np.asarray(A, dtype=float)[None])
    return Lemma31Result(bool(hyp[0]), float(slack[0]))


def lemma33_batch(E: np.ndarray) -> np.ndarray:
    E2 = E @ E
    tr3 = np.einsum("...ij,...ji->...", E2, E)
    tr2 = np.einsum("...ij,...ij->...", E, E)
    return tr3 + INV_SQRT6 * tr2**1.5


def check_lemma33(E) -> float:
    E = np.asarray(E, dtype=float)
    norm = math.sqrt(float(np.sum(E * E)))
    if abs(np.trace(E)) > 1e-12 * norm:
        raise InvalidArgument(f"matrix is not traceless (trace {np.trace(E):.3e})")
    return float(lemma33_batch(E[None])[0])


def random_symmetric(rng: np.random.Generator, count: int) -> np.ndarray:
    U = rng.uniform(-1.0, 1.0, size=(count, 3, 3))
    return 0.5 * (U + U.transpose(0, 2, 1))


def traceless(S: np.ndarray) -> np.ndarray:
    tr = np.trace(S, axis1=-2, axis2=-1)
    return S - tr[..., None, None] / 3.0 * np.eye(3)


# -- suite --------------------------------------------------------------------

DEFAULT_TOLERANCES = {
    "riemann_symmetries": 1e-10,
    "first_bianchi": 1e-10,
    "decomposition": 1e-9,
    "contraction": 1e-9,
    "contracted_bianchi": 1e-9,
    "laplacian_two_ways": 1e-9,
    "trace_identity": 1e-8,
    "weitzenbock_vs_eq1": 1e-10,
    "kato": 1e-10,
    "lemma32_on_critical": 1e-8,
    "lemma31": 1e-12,
    "lemma33": 1e-12,
}

_CHUNK = 200_000


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    n_matrix_trials: int = 100_000
    n_chart_trials: int = 200
    chart_family: WarpedFamily = WarpedFamily()
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def validate(self) -> "SuiteConfig":
        if self.n_matrix_trials < 1 or self.n_chart_trials < 1:
            raise ConfigError("trial counts must be at least 1")
        if not self.chart_family.margin > 0:
            raise ConfigError("positivity margin must be positive")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        for name, tol in self.tolerances.items():
            if not (isinstance(tol, (int, float)) and math.isfinite(tol) and tol >= 0):
                raise ConfigError(f"tolerance {name!r} must be a non-negative number, got {tol!r}")
        return self

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))


@dataclass
class CheckResult:
    """Aggregate of one check.  ``worst`` is the largest scaled residual for
    residual checks, the smallest scaled slack for inequality checks."""

    name: str
    kind: str  # "residual" | "slack"
    tolerance: float
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    worst: float | None = None
    worst_input: object = None
    failing_input: object = None
    info: dict = field(default_factory=dict)

    def record(self, value, scale: float = 1.0, where=None):
        if value is None:
            self.skipped += 1
            return
        scaled = value / scale
        if self.kind == "residual":
            scaled = abs(scaled)
            ok = scaled <= self.tolerance
            worse = self.worst is None or scaled > self.worst
        else:
            ok = scaled >= -self.tolerance
            worse = self.worst is None or scaled < self.worst
        if worse:
            self.worst, self.worst_input = float(scaled), where
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if self.failing_input is None:
                self.failing_input = where

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuiteReport:
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.failed == 0 for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"checks": [c.as_dict() for c in self.checks], "overall": "pass" if self.overall else "fail"}


def _chart_input(chart, point) -> dict:
    return {"g33": to_text(chart.components[2][2]), "point": [float(v) for v in point]}


def run_suite(cfg: SuiteConfig = SuiteConfig()) -> SuiteReport:
    cfg.validate()
    seq = np.random.SeedSequence(cfg.seed)
    rng_charts, rng_t, rng_l33, rng_l31, rng_crit = (np.random.default_rng(s) for s in seq.spawn(5))

    def new(name, kind):
        return CheckResult(name, kind, cfg.tol(name))

    sym, bianchi = new("riemann_symmetries", "residual"), new("first_bianchi", "residual")
    decomp, contr = new("decomposition", "residual"), new("contraction", "residual")
    cbianchi, lap2 = new("contracted_bianchi", "residual"), new("laplacian_two_ways", "residual")
    trace, weitz = new("trace_identity", "residual"), new("weitzenbock_vs_eq1", "residual")
    kato = new("kato", "slack")
    min_sectional = None
    nonneg_trials = 0

    for trial in range(cfg.n_chart_trials):
        chart, point = random_warped_chart(rng_charts, cfg.chart_family)
        cj = curvature_jets(chart, point)
        cd = curvature_data_from_jets(cj)
        where = dict(_chart_input(chart, point), trial=trial)
        riem = 1.0 + float(np.abs(cd.riemann).max())
        sym.record(riemann_symmetry_residual(cd), riem, where)
        bianchi.record(first_bianchi_residual(cd), riem, where)
        decomp.record(check_decomposition(cd), riem, where)
        contr.record(check_contraction(cd), riem**2, where)
        cbianchi.record(contracted_bianchi_residual(cd), 1.0 + np.abs(cd.grad_R).max() + np.abs(cd.grad_E).max(), where)
        lap2.record(scalar_laplacian_divergence(cj) - cd.lap_R, 1.0 + abs(cd.lap_R), where)
        t = float(rng_t.uniform(-1.0, 1.0))
        trace.record(trace_identity_residual(cd, t), 1.0 + cd.norm_ricci_sq + cd.scalar**2, dict(where, t=t))
        eq1, _ = f2_residuals(cd)
        weitz.record(
            weitzenbock_residual(cd) - cd.dot(cd.E, eq1),
            1.0 + abs(cd.dot(cd.E, cd.lap_E)) + cd.norm_grad_E_sq,
            where,
        )
        slack = check_kato(cd, threshold=1e-6)
        kato.record(slack, 1.0 + cd.norm_grad_E_sq, where)
        if cd.scalar >= 0 and cd.sigma2 >= 0:
            nonneg_trials += 1
            k = float(sectional_curvatures(cd).min())
            min_sectional = k if min_sectional is None else min(min_sectional, k)
    # informational only: the lemma is asserted at matrix level
    decomp.info = {"min_sectional_on_nonneg_R_sigma2": min_sectional, "nonneg_R_sigma2_trials": nonneg_trials}

    crit = new("lemma32_on_critical", "residual")
    gv = catalog_metric("gv_example")
    for trial in range(cfg.n_chart_trials):
        point = tuple(rng_crit.uniform(-2.0, 2.0, size=3))
        cd = curvature_data_from_jets(curvature_jets(gv, point))
        scale = 1.0 + cd.scalar**2 * cd.norm_grad_R_sq
        crit.record(check_lemma32_on_critical(cd), scale, {"metric": "gv_example", "point": list(point)})

    l33 = new("lemma33", "slack")
    remaining = cfg.n_matrix_trials
    while remaining:
        batch = min(remaining, _CHUNK)
        E = traceless(random_symmetric(rng_l33, batch))
        _record_batch(l33, lemma33_batch(E), E)
        remaining -= batch
    tight = lemma33_batch(np.diag([1.0, 1.0, -2.0])[None])[0]
    l33.info = {"equality_case_diag_1_1_-2": float(tight)}

    l31 = new("lemma31", "slack")
    remaining, drawn = cfg.n_matrix_trials, 0
    while remaining:
        A = random_symmetric(rng_l31, _CHUNK)
        drawn += _CHUNK
        A = A[lemma31_hypotheses(A)][:remaining]
        _, slack = lemma31_batch(A)
        _record_batch(l31, slack, A)
        remaining -= len(slack)
    l31.info = {"matrices_drawn": drawn}

    return SuiteReport([sym, bianchi, decomp, contr, cbianchi, lap2, trace, weitz, kato, crit, l33, l31])


def _record_batch(result: CheckResult, slack: np.ndarray, inputs: np.ndarray) -> None:
    bad = slack < -result.tolerance
    result.failed += int(bad.sum())
    result.passed += int(len(slack) - bad.sum())
    i = int(np.argmin(slack))
    if result.worst is None or slack[i] < result.worst:
        result.worst, result.worst_input = float(slack[i]), inputs[i].tolist()
    if bad.any() and result.failing_input is None:
        result.failing_input = inputs[int(np.argmax(bad))].tolist()
