"""Gradient descent of F_t over periodic metrics on the flat 3-torus."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument, StalledFlow
from .functionals import SIGMA2_COUPLING
from .grid import TWO_PI, GridGeometry, cell_volume, energy_density, grad_Ft_field

POSITIVITY_MARGIN = 0.1
MAX_HALVINGS = 10
MAX_AMPLITUDE = 0.05
MAX_WAVENUMBER = 2


@dataclass(frozen=True)
class Snapshot:
    """Everything the flow needs to know about one metric field."""

    energy: float
    grad_field: np.ndarray  # pointwise (grad F_t)_ij
    grad_norm: float
    max_abs_ric: float
    max_neg_R: float


def snapshot(g: np.ndarray, t: float) -> Snapshot:
    geo = GridGeometry(g)
    vol = cell_volume(g.shape[:3])
    G = grad_Ft_field(geo, t)
    return Snapshot(
        energy=_sum(energy_density(geo, t)) * vol,
        grad_field=G,
        grad_norm=math.sqrt(max(_sum(geo.norm_sq(G) * geo.sqrt_det) * vol, 0.0)),
        max_abs_ric=float(np.sqrt(np.maximum(geo.norm_sq(geo.ricci), 0.0)).max()),
        max_neg_R=float(max(0.0, (-geo.scalar).max())),
    )


def _sum(values: np.ndarray) -> float:
    # exactly rounded, so the result does not depend on the grid traversal order
    return math.fsum(np.ravel(values))


def grid_energy(g: np.ndarray, t: float) -> float:
    geo = GridGeometry(g, need_riemann=False)
    return _sum(energy_density(geo, t)) * cell_volume(g.shape[:3])


@dataclass(frozen=True)
class FlowState:
    n: int
    g_field: np.ndarray  # (n, n, n, 3, 3)
    t: float = SIGMA2_COUPLING
    step: int = 0
    energy_history: tuple = ()
    grad_norm_history: tuple = ()
    eta_history: tuple = ()
    current: Snapshot | None = field(default=None, repr=False, compare=False)

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def snap(self) -> Snapshot:
        if self.current is not None:
            return self.current
        return snapshot(self.g_field, self.t)


def from_field(g: np.ndarray, t: float = SIGMA2_COUPLING) -> FlowState:
    """Wrap an existing metric field as a step-0 state."""
    g = np.array(g, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n, n, 3, 3):
        raise InvalidArgument(f"metric field must have shape (n, n, n, 3, 3), got {g.shape}")
    snap = snapshot(g, t)
    return FlowState(n, g, float(t), 0, (snap.energy,), (snap.grad_norm,), (), snap)


def mode_list(max_wavenumber: int = MAX_WAVENUMBER):
    """Integer wavevectors with 0 < |k| <= max_wavenumber, one of each +-k pair."""
    out = []
    r = max_wavenumber
    for k in np.ndindex(2 * r + 1, 2 * r + 1, 2 * r + 1):
        k = tuple(int(v) - r for v in k)
        if 0 < sum(v * v for v in k) <= r * r and k > (0, 0, 0):
            out.append(k)
    return out


def random_perturbation(n: int, seed: int) -> np.ndarray:
    """Band-limited random symmetric field, scaled to max spectral norm 1."""
    rng = np.random.default_rng(seed)
    x = np.arange(n) * (TWO_PI / n)
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    P = np.zeros((n, n, n, 3, 3))
    for k in mode_list():
        phase = X @ np.array(k, dtype=float)
        A = rng.uniform(-1.0, 1.0, size=(3, 3))
        B = rng.uniform(-1.0, 1.0, size=(3, 3))
        A, B = A + A.T, B + B.T
        P += np.cos(phase)[..., None, None] * A + np.sin(phase)[..., None, None] * B
    return P / np.abs(np.linalg.eigvalsh(P)).max()


def init_grid(n: int, amplitude: float, seed: int, t: float = SIGMA2_COUPLING) -> FlowState:
    if n < 8 or n % 2:
        raise InvalidArgument(f"grid resolution must be even and >= 8, got {n}")
    if not 0.0 <= amplitude <= MAX_AMPLITUDE:
        raise InvalidArgument(
            f"amplitude {amplitude} outside [0, {MAX_AMPLITUDE}]: the perturbed metric could "
            f"approach the positivity margin {POSITIVITY_MARGIN}"
        )
    g = np.broadcast_to(np.eye(3), (n, n, n, 3, 3)).copy()
    if amplitude > 0:
        g = g + amplitude * random_perturbation(n, seed)
    return from_field(g, t)


def discrete_energy(state: FlowState) -> float:
    """sum over cells of (|Ric|^2 + t R^2) sqrt(det g) h^3."""
    return state.snap.energy


def discrete_gradient(state: FlowState) -> np.ndarray:
    """Cellwise (grad F_t)_ij * sqrt(det g)."""
    G = state.snap.grad_field
    return G * np.sqrt(np.linalg.det(state.g_field))[..., None, None]


def min_eigenvalue(g: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(g).min())


def flow_step(state: FlowState, eta: float) -> FlowState:
    """One backtracking descent step g <- g - eta * grad F_t."""
    if not eta > 0:
        raise InvalidArgument(f"step size must be positive, got {eta}")
    snap = state.snap
    G = snap.grad_field
    trial = float(eta)
    for _ in range(MAX_HALVINGS + 1):
        g_new = state.g_field - trial * G
        g_new = 0.5 * (g_new + np.swapaxes(g_new, -1, -2))
        if min_eigenvalue(g_new) > POSITIVITY_MARGIN:
            new_snap = snapshot(g_new, state.t)
            if new_snap.energy <= snap.energy:
                return replace(
                    state,
                    g_field=g_new,
                    step=state.step + 1,
                    energy_history=state.energy_history + (new_snap.energy,),
                    grad_norm_history=state.grad_norm_history + (new_snap.grad_norm,),
                    eta_history=state.eta_history + (trial,),
                    current=new_snap,
                )
        trial *= 0.5
    raise StalledFlow(
        f"no energy decrease after {MAX_HALVINGS} halvings of eta={eta} at step {state.step}", state
    )


TRAJECTORY_COLUMNS = ("step", "energy", "grad_norm", "max_abs_ric", "max_neg_R")


@dataclass
class Trajectory:
    rows: list = field(default_factory=list)

    def append(self, step: int, snap: Snapshot) -> None:
        self.rows.append((step, snap.energy, snap.grad_norm, snap.max_abs_ric, snap.max_neg_R))

    def column(self, name: str) -> list:
        i = TRAJECTORY_COLUMNS.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for step, *vals in self.rows:
            w.writerow([step] + [format(v, ".17g") for v in vals])
        return buf.getvalue()


DEFAULT_ETA = 0.05


def flow_run(state: FlowState, max_steps: int, target_grad_norm: float, eta: float = DEFAULT_ETA):
    """Iterate :func:`flow_step` until the gradient norm drops to the target.

    The step size restarts from ``eta`` every step; backtracking may shrink
    it within a step.  Returns (final state, trajectory).
    """
    traj = Trajectory()
    traj.append(state.step, state.snap)
    for _ in range(max_steps):
        if state.snap.grad_norm <= target_grad_norm:
            break
        try:
            state = flow_step(state, eta)
        except StalledFlow as exc:
            exc.trajectory = traj
            raise
        traj.append(state.step, state.snap)
    return state, traj
