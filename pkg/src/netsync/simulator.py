"""Network assembly, fixed-step RK4 integration and synchronization checks.

Node i evolves as  X_i' = F_i(X_i, t) - eps * sum_{j ~ i} h(X_i, X_j).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CouplingFunction, ModelError, OscillatorModel, as_weights
from .graph import UndirectedGraph

SYNC_TOL = 1e-6
SYNC_WINDOW = 10.0
DEFAULT_DT = 1e-3
DEFAULT_RECORD_EVERY = 10


class IntegrationBlowUp(RuntimeError):
    def __init__(self, time: float):
        super().__init__(f"non-finite state encountered at t = {time:.17g}")
        self.time = time


@dataclass
class NetworkSystem:
    graph: UndirectedGraph
    model: OscillatorModel
    coupling: CouplingFunction
    weights: np.ndarray
    epsilon: float

    def __post_init__(self):
        d = self.model.dimension
        if self.coupling.dimension != d:
            raise ModelError(f"model has d={d} but coupling has d={self.coupling.dimension}")
        self.weights = as_weights(self.weights, d)
        if not self.epsilon >= 0:
            raise ModelError(f"epsilon must be >= 0, got {self.epsilon}")
        bad = [i for i in self.model.overrides if not 1 <= i <= self.graph.n]
        if bad:
            raise ModelError(f"parameter overrides for nodes {bad} outside 1..{self.graph.n}")
        src, dst = [], []
        for i in range(1, self.graph.n + 1):
            for j in self.graph.neighbors(i):
                src.append(i - 1)
                dst.append(j - 1)
        self._src = np.array(src)
        self._dst = np.array(dst)
        # incidence of arcs on their source node: row i sums h(X_i, X_j) over j ~ i
        self._gather = np.zeros((self.graph.n, len(src)))
        self._gather[self._src, np.arange(len(src))] = 1.0
        self._params = self.model.param_arrays(np.arange(1, self.graph.n + 1))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dimension(self) -> int:
        return self.model.dimension

    def field(self, t: float, X: np.ndarray) -> np.ndarray:
        return self.model.func(X, t, self._params)

    def coupling_sum(self, X: np.ndarray) -> np.ndarray:
        """Row i: sum over neighbors j of h(X_i, X_j)."""
        h = self.coupling.func(X[self._src], X[self._dst])
        return self._gather @ h

    def rhs(self, t: float, X: np.ndarray) -> np.ndarray:
        if self.epsilon == 0:
            return self.model.func(X, t, self._params)
        return self.model.func(X, t, self._params) - self.epsilon * self.coupling_sum(X)


def assemble(graph, model, coupling, weights, epsilon) -> NetworkSystem:
    return NetworkSystem(graph, model, coupling, np.asarray(weights, float), float(epsilon))


# ---------------------------------------------------------------- difference vector and V


def _pair_index(n: int):
    return np.triu_indices(n, 1)


def delta_vector(state) -> np.ndarray:
    """(X_1 - X_2, ..., X_1 - X_n, X_2 - X_3, ..., X_{n-1} - X_n), flattened."""
    X = np.asarray(state, float)
    if X.ndim == 1:
        X = X[:, None]
    i, j = _pair_index(X.shape[0])
    return (X[i] - X[j]).reshape(-1)


def v_norm(delta, weights) -> float:
    """sqrt(delta^T H delta / 2) with H = diag(a) repeated for each pair."""
    a = np.asarray(weights, float)
    D = np.asarray(delta, float).reshape(-1, a.shape[0])
    return math.sqrt(0.5 * float(np.sum(a * D * D)))


def lyapunov_v(state, weights) -> float:
    """V = 1/2 sum_k sum_{i<j} a_k (X_i^k - X_j^k)^2."""
    a = np.asarray(weights, float)
    X = np.asarray(state, float)
    if X.ndim == 1:
        X = X[:, None]
    i, j = _pair_index(X.shape[0])
    D = X[i] - X[j]
    return 0.5 * float(np.sum(a * D * D))


def _v_series(states: np.ndarray, weights: np.ndarray) -> np.ndarray:
    i, j = _pair_index(states.shape[1])
    D = states[:, i] - states[:, j]
    return 0.5 * np.sum(weights * D * D, axis=(1, 2))


def _delta_inf_series(states: np.ndarray) -> np.ndarray:
    if states.shape[1] < 2:
        return np.zeros(states.shape[0])
    i, j = _pair_index(states.shape[1])
    return np.max(np.abs(states[:, i] - states[:, j]), axis=(1, 2))


# ---------------------------------------------------------------- integration


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    weights: np.ndarray
    V: np.ndarray = field(init=False)
    delta_inf: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory time grid must be strictly increasing")
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state per recorded time required")
        self.V = _v_series(self.states, self.weights)
        self.delta_inf = _delta_inf_series(self.states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def header(self) -> list[str]:
        n, d = self.states.shape[1:]
        cols = [f"x_{i}_{k}" for i in range(1, n + 1) for k in range(1, d + 1)]
        return ["t", *cols, "V", "delta_inf"]

    def to_csv(self, fh=None) -> str | None:
        """Write (or return) CSV text; every number in 17 significant digits."""
        out = fh if fh is not None else io.StringIO()
        out.write(",".join(self.header()) + "\n")
        flat = self.states.reshape(self.states.shape[0], -1)
        table = np.column_stack([self.times, flat, self.V, self.delta_inf])
        for row in table:
            out.write(",".join(format(v, ".17g") for v in row) + "\n")
        return out.getvalue() if fh is None else None


def integrate(system, x0, t0: float, t_end: float, dt: float = DEFAULT_DT,
              record_every: int = DEFAULT_RECORD_EVERY) -> Trajectory:
    """Classical RK4 with fixed step ``dt``; the last step is shortened to land on t_end.

    ``system`` is a :class:`NetworkSystem` or any object with ``rhs(t, X)``
    and ``weights``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    X = np.array(x0, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    f = system.rhs
    span = t_end - t0
    n_full = int(math.floor(span / dt * (1 + 1e-12)))
    if n_full * dt > span:
        n_full -= 1
    remainder = span - n_full * dt
    if remainder <= 1e-12 * max(1.0, abs(t_end)):
        remainder = 0.0
    steps = [dt] * n_full + ([remainder] if remainder else [])
    # grid times computed from the step index, not accumulated
    times, states = [t0], [X.copy()]
    half = 0.5
    t = t0
    last = len(steps)
    # overflow is expected on blow-up and is reported through IntegrationBlowUp
    with np.errstate(over="ignore", invalid="ignore"):
        for k, h in enumerate(steps, start=1):
            k1 = f(t, X)
            k2 = f(t + half * h, X + (half * h) * k1)
            k3 = f(t + half * h, X + (half * h) * k2)
            k4 = f(t + h, X + h * k3)
            X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = t_end if k == last else t0 + k * dt
            if k % record_every == 0 or k == last:
                # non-finite values persist, so checking at record steps suffices
                if not np.isfinite(X).all():
                    raise IntegrationBlowUp(t)
                times.append(t)
                states.append(X.copy())
    return Trajectory(np.array(times), np.array(states), np.asarray(system.weights, float))


# ---------------------------------------------------------------- initial conditions


def initial_box(n: int, lower, upper, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(lower, upper, size=(n, len(lower)))


def initial_on_v_sphere(center, n: int, weights, radius: float, rng: np.random.Generator) -> np.ndarray:
    """States with node 1 at ``center`` and |Delta|_V exactly ``radius``.

    Offsets for nodes 2..n point in a seeded random direction and are scaled;
    Delta is linear in the offsets so the scaling is exact.
    """
    center = np.asarray(center, float)
    offsets = rng.standard_normal((n, center.shape[0]))
    offsets[0] = 0.0
    size = math.sqrt(lyapunov_v(offsets, weights))
    return center + offsets * (radius / size)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class Containment:
    radius: float
    max_norm: float
    initial_norm: float
    initial_interior: bool
    first_exit_time: float | None

    @property
    def contained(self) -> bool:
        return self.first_exit_time is None


@dataclass(frozen=True)
class SyncReport:
    synced: bool
    t_sync: float | None
    final_residual: float
    tol: float
    window: float
    v_violations: int
    worst_v_slope: float
    containment: Containment | None = None

    def to_text(self) -> str:
        rows = [
            ("synced", str(self.synced).lower()),
            ("t_sync", "none" if self.t_sync is None else f"{self.t_sync:.17g}"),
            ("final_residual", f"{self.final_residual:.17g}"),
            ("tolerance", f"{self.tol:.17g}"),
            ("window", f"{self.window:.17g}"),
            ("v_monotone_violations", str(self.v_violations)),
            ("worst_v_slope", f"{self.worst_v_slope:.17g}"),
        ]
        c = self.containment
        if c is not None:
            rows += [
                ("ball_radius", f"{c.radius:.17g}"),
                ("ball_initial_norm", f"{c.initial_norm:.17g}"),
                ("ball_initial_interior", str(c.initial_interior).lower()),
                ("ball_max_norm", f"{c.max_norm:.17g}"),
                ("ball_contained", str(c.contained).lower()),
                ("ball_first_exit_time", "none" if c.first_exit_time is None else f"{c.first_exit_time:.17g}"),
            ]
        return "".join(f"{k}: {v}\n" for k, v in rows)


def v_slope_violations(traj: Trajectory, eta_scale: float = 1e-8) -> tuple[int, float]:
    """Count recorded steps where (V_{k+1} - V_k)/dt exceeds eta_scale * max(1, V_k)."""
    if len(traj.times) < 2:
        return 0, 0.0
    slope = np.diff(traj.V) / np.diff(traj.times)
    eta = eta_scale * np.maximum(1.0, traj.V[:-1])
    return int(np.count_nonzero(slope > eta)), float(slope.max())


def sync_report(traj: Trajectory, tol: float = SYNC_TOL, trailing_window: float = SYNC_WINDOW,
                ball_radius: float | None = None, eta_scale: float = 1e-8) -> SyncReport:
    """Synced iff max_{i<j,k} |X_i^k - X_j^k| < tol at every sample in the trailing window."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    span = traj.times[-1] - traj.times[0]
    if trailing_window > span * (1 + 1e-12):
        raise ValueError(f"trailing window {trailing_window} exceeds trajectory span {span}")
    in_window = traj.times >= traj.times[-1] - trailing_window * (1 + 1e-12)
    synced = bool(np.all(traj.delta_inf[in_window] < tol))
    above = np.flatnonzero(traj.delta_inf >= tol)
    if len(above) == 0:
        t_sync = float(traj.times[0])
    elif above[-1] == len(traj.times) - 1:
        t_sync = None
    else:
        t_sync = float(traj.times[above[-1] + 1])
    count, worst = v_slope_violations(traj, eta_scale)
    containment = ball_containment(traj, traj.weights, ball_radius) if ball_radius is not None else None
    return SyncReport(synced, t_sync, float(traj.delta_inf[-1]), tol, trailing_window, count, worst, containment)


def ball_containment(traj: Trajectory, weights, r: float) -> Containment:
    """Track |Delta(t)|_V against the closed ball of radius r."""
    if not r > 0:
        raise ValueError("ball radius must be positive")
    a = np.asarray(weights, float)
    norms = np.sqrt(_v_series(traj.states, a))
    outside = np.flatnonzero(norms > r)
    exit_time = float(traj.times[outside[0]]) if len(outside) else None
    return Containment(float(r), float(norms.max()), float(norms[0]), bool(norms[0] < r), exit_time)
