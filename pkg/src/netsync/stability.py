"""Synchronization thresholds and sampled audits of the hypotheses behind them.

Audits only ever falsify: a pass means no counterexample was found among
the samples drawn, on the region sampled.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Sampler

ZERO_TOL = 1e-9
STATE_TOL = 1e-6
ANTISYMMETRY_TOL = 1e-12
TIME_INTERVAL = (0.0, 100.0)


def epsilon_star(c: float, n: int) -> float:
    """Coupling threshold c / (2n); sufficient, not necessary, for synchronization.

    The derivative of V taken over unordered pairs is only guaranteed
    nonpositive above :func:`epsilon_certified`, which is twice this value.
    """
    if n < 2:
        raise ValueError("threshold needs n >= 2")
    if c < 0:
        raise ValueError("bound constant must be nonnegative")
    return c / (2 * n)


def epsilon_certified(c: float, n: int) -> float:
    """c / n, where V' <= (c - n eps) * sum_edges phi becomes nonpositive."""
    return 2.0 * epsilon_star(c, n)


def fhn_generic_threshold(n: int, diam: int) -> float:
    """(n - 1) diam^(8/3) / 4: the generic bound with rho(m) = m^(5/3), divided by 2n."""
    if n < 2 or diam < 1:
        raise ValueError("need n >= 2 and diam >= 1")
    return (n - 1) * diam ** (8.0 / 3.0) / 4.0


def chua_star_threshold(n: int) -> float:
    if n < 2:
        raise ValueError("need n >= 2")
    return (2 * n - 3) / (2 * n)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class Witness:
    index: int
    inputs: dict
    lhs: float
    rhs: float
    check: str = ""

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    def describe(self) -> str:
        args = ", ".join(f"{k}={_fmt(v)}" for k, v in self.inputs.items())
        tag = f"[{self.check}] " if self.check else ""
        return f"{tag}sample {self.index}: {args}; lhs={self.lhs:.17g} rhs={self.rhs:.17g} gap={self.gap:.17g}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass(frozen=True)
class AuditReport:
    hypothesis: str
    samples: int
    seed: int
    violation_count: int = 0
    witnesses: tuple[Witness, ...] = ()
    worst: Witness | None = None
    notes: str = ""
    max_gap: float | None = None  # largest lhs - rhs over all samples, flagged or not

    @property
    def verdict(self) -> str:
        if self.samples == 0:
            return "vacuous"
        return "pass" if self.violation_count == 0 else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_text(self) -> str:
        lines = [
            f"[{self.hypothesis}]",
            f"verdict: {self.verdict}",
            f"samples: {self.samples}",
            f"seed: {self.seed}",
            f"violations: {self.violation_count}",
            "worst: " + (self.worst.describe() if self.worst else "none"),
        ]
        if self.max_gap is not None:
            lines.append(f"max_gap: {self.max_gap:.17g}")
        if self.notes:
            lines.append(f"notes: {self.notes}")
        return "\n".join(lines) + "\n"


def _report(hypothesis, samples, seed, lhs, rhs, bad, inputs_of, check="", max_witnesses=10, notes=""):
    """Collect witnesses for the flagged sample indices, worst gap first in ``worst``."""
    bad = np.flatnonzero(bad)
    gap = float(np.max(lhs - rhs)) if samples else None
    if len(bad) == 0:
        return AuditReport(hypothesis, samples, seed, notes=notes, max_gap=gap)
    ws = tuple(Witness(int(k), inputs_of(k), float(lhs[k]), float(rhs[k]), check) for k in bad[:max_witnesses])
    k = bad[np.argmax(lhs[bad] - rhs[bad])]
    worst = Witness(int(k), inputs_of(k), float(lhs[k]), float(rhs[k]), check)
    return AuditReport(hypothesis, samples, seed, len(bad), ws, worst, notes, gap)


def _merge(hypothesis, samples, seed, parts, notes=""):
    count = sum(p.violation_count for p in parts)
    gaps = [p.max_gap for p in parts if p.max_gap is not None]
    gap = max(gaps) if gaps else None
    if count == 0:
        return AuditReport(hypothesis, samples, seed, notes=notes, max_gap=gap)
    ws = tuple(itertools.chain.from_iterable(p.witnesses for p in parts))[:10]
    worsts = [p.worst for p in parts if p.worst is not None]
    worst = max(worsts, key=lambda w: w.gap)
    return AuditReport(hypothesis, samples, seed, count, ws, worst, notes, gap)


def _node_pairs(rng, count, nodes):
    i = rng.integers(1, nodes + 1, size=count)
    j = rng.integers(1, nodes + 1, size=count)
    return i, j


def _times(rng, count, interval):
    lo, hi = interval
    return rng.uniform(lo, hi, size=count) if hi > lo else np.full(count, float(lo))


def _field_form(model, weights, i, j, X, Y, t):
    """sum_k a_k (X^k - Y^k)(F_i^k(X, t) - F_j^k(Y, t)), vectorized over samples."""
    a = np.asarray(weights, float)
    fx = model.field(i, X, t)
    fy = model.field(j, Y, t)
    return np.sum(a * (X - Y) * (fx - fy), axis=-1)


def _default_nodes(model, nodes):
    if nodes is not None:
        return nodes
    return max([1, *model.overrides.keys()])


# ---------------------------------------------------------------- audits


def audit_pseudometric(phi, sampler: Sampler, count: int, chain_max: int = 4, rtol: float = 1e-12) -> AuditReport:
    """Nonnegativity, phi(z, z) = 0, symmetry and the chain bound for m = 2..chain_max."""
    sampler.require_within(phi.domain)
    if count == 0:
        return AuditReport("pseudometric", 0, sampler.seed)
    parts = []
    pts = sampler.points(count, per_draw=chain_max + 1, stream=1)
    z1, z2 = pts[:, 0], pts[:, 1]
    d12, d21 = phi(z1, z2), phi(z2, z1)
    dzz = phi(z1, z1)
    zeros = np.zeros(count)

    def inputs_pair(k):
        return {"z1": z1[k].tolist(), "z2": z2[k].tolist()}

    parts.append(_report("pseudometric", count, sampler.seed, -d12, zeros, d12 < 0, inputs_pair, "nonnegative"))
    parts.append(_report("pseudometric", count, sampler.seed, np.abs(dzz), zeros, np.abs(dzz) > 1e-12,
                         lambda k: {"z": z1[k].tolist()}, "identity"))
    asym = np.abs(d12 - d21)
    parts.append(_report("pseudometric", count, sampler.seed, asym, rtol * np.maximum(1, np.abs(d12)),
                         asym > rtol * np.maximum(1, np.abs(d12)), inputs_pair, "symmetry"))
    for m in range(2, chain_max + 1):
        links = sum(phi(pts[:, l], pts[:, l + 1]) for l in range(m))
        direct = phi(pts[:, 0], pts[:, m])
        bound = phi.rho(m) * links
        bad = direct > bound + rtol * np.maximum(1.0, bound)
        parts.append(_report("pseudometric", count, sampler.seed, direct, bound, bad,
                             lambda k, m=m: {"chain": pts[k, : m + 1].tolist()}, f"chain m={m}"))
    return _merge("pseudometric", count, sampler.seed, parts, notes=f"{phi.name}, rho(m) = {phi.rho.describe()}")


def audit_dissipativity(model, phi, weights, sampler: Sampler, count: int, nodes: int | None = None,
                        time_interval=TIME_INTERVAL, rtol: float = 1e-10) -> AuditReport:
    """sum_k a_k (X_i^k - X_j^k)(F_i^k(X_i, t) - F_j^k(X_j, t)) <= phi(X_i, X_j)."""
    if count == 0:
        return AuditReport("dissipativity", 0, sampler.seed)
    nodes = _default_nodes(model, nodes)
    rng = sampler.rng(2)
    X, Y = sampler.pairs(count, stream=3)
    i, j = _node_pairs(rng, count, nodes)
    t = _times(rng, count, time_interval)
    lhs = _field_form(model, weights, i, j, X, Y, t)
    rhs = phi(X, Y)
    bad = lhs > rhs + rtol * np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return _report("dissipativity", count, sampler.seed, lhs, rhs, bad,
                   lambda k: {"i": int(i[k]), "j": int(j[k]), "X": X[k].tolist(), "Y": Y[k].tolist(),
                              "t": float(t[k])})


def audit_separation(model, phi, weights, sampler: Sampler, count: int, nodes: int | None = None,
                     time_interval=TIME_INTERVAL, zero_tol: float = ZERO_TOL,
                     state_tol: float = STATE_TOL, zero_scale: str = "relative") -> AuditReport:
    """Look for X != Y with phi(X, Y) = 0 and the field-difference form = 0 together.

    Half the pairs perturb a random nonempty subset of coordinates only, so
    zero sets aligned with coordinate subspaces are actually visited.

    Both quantities are typically quadratic in X - Y. With ``zero_scale =
    "relative"`` a value counts as zero when it is below
    zero_tol * min(1, |X - Y|_inf^2); ``"absolute"`` compares with zero_tol
    alone, which flags every close pair whatever the dynamics.
    """
    if zero_scale not in ("relative", "absolute"):
        raise ValueError("zero_scale must be 'relative' or 'absolute'")
    if count == 0:
        return AuditReport("separation", 0, sampler.seed)
    nodes = _default_nodes(model, nodes)
    rng = sampler.rng(4)
    X, Y = sampler.pairs(count, stream=5)
    d = X.shape[-1]
    masks = np.array([m for m in itertools.product([0, 1], repeat=d) if any(m)], dtype=bool)
    structured = rng.uniform(size=count) < 0.5
    pick = masks[rng.integers(len(masks), size=count)]
    Y = np.where(structured[:, None] & ~pick, X, Y)
    i, j = _node_pairs(rng, count, nodes)
    t = _times(rng, count, time_interval)
    p = np.abs(phi(X, Y))
    f = np.abs(_field_form(model, weights, i, j, X, Y, t))
    apart = np.max(np.abs(X - Y), axis=-1)
    zero = zero_tol * np.minimum(1.0, apart * apart) if zero_scale == "relative" else zero_tol
    bad = (p < zero) & (f < zero) & (apart > state_tol)
    lhs = apart
    rhs = np.maximum(p, f)
    return _report("separation", count, sampler.seed, lhs, rhs, bad,
                   lambda k: {"i": int(i[k]), "j": int(j[k]), "X": X[k].tolist(), "Y": Y[k].tolist(),
                              "phi": float(p[k]), "field_form": float(f[k])},
                   notes="lhs = max|X - Y|, rhs = max(phi, |field form|); falsification only")


def audit_antisymmetry(h, sampler: Sampler, count: int, tol: float = ANTISYMMETRY_TOL) -> AuditReport:
    """max |h(X, Y) + h(Y, X)| over sampled pairs must stay below ``tol``."""
    if count == 0:
        return AuditReport("antisymmetry", 0, sampler.seed)
    X, Y = sampler.pairs(count, stream=6)
    resid = np.max(np.abs(h(X, Y) + h(Y, X)), axis=-1)
    return _report("antisymmetry", count, sampler.seed, resid, np.full(count, tol), resid > tol,
                   lambda k: {"X": X[k].tolist(), "Y": Y[k].tolist()},
                   notes=f"max residual {resid.max():.3e}")


@dataclass(frozen=True)
class GrowthEnvelope:
    """Psi(s) bounding X^T F(X, t) in terms of s = |X|.

    ``affine`` means Psi(s) = A + B s with A, B >= 0 and A + B > 0, for which
    the integral of ds / Psi diverges automatically. ``custom`` envelopes carry
    a caller-asserted divergence flag.
    """

    form: str
    coefficients: tuple[float, ...] = ()
    func: Callable | None = field(default=None, compare=False)
    declared_divergent: bool = False

    @classmethod
    def affine(cls, A: float, B: float = 0.0) -> "GrowthEnvelope":
        if A < 0 or B < 0 or A + B <= 0:
            raise ValueError("affine envelope needs A, B >= 0 and A + B > 0")
        return cls("affine", (float(A), float(B)), declared_divergent=True)

    @classmethod
    def custom(cls, func: Callable, divergent: bool) -> "GrowthEnvelope":
        return cls("custom", (), func, bool(divergent))

    def __call__(self, s):
        s = np.asarray(s, float)
        if self.form == "affine":
            A, B = self.coefficients
            return A + B * s
        return np.asarray(self.func(s), float)


def audit_wintner(model, psi: GrowthEnvelope, sampler: Sampler, count: int, nodes: int | None = None,
                  time_interval=TIME_INTERVAL) -> AuditReport:
    """X^T F_i(X, t) <= Psi(|X|) on sampled states.

    Supports, does not prove, existence of solutions for all t >= t0.
    """
    if not psi.declared_divergent:
        raise ValueError("growth envelope must be declared divergent (integral of ds/Psi = +inf)")
    if count == 0:
        return AuditReport("wintner", 0, sampler.seed)
    nodes = _default_nodes(model, nodes)
    rng = sampler.rng(7)
    X = sampler.points(count, stream=8)
    i = rng.integers(1, nodes + 1, size=count)
    t = _times(rng, count, time_interval)
    lhs = np.sum(X * model.field(i, X, t), axis=-1)
    rhs = psi(np.linalg.norm(X, axis=-1))
    bad = lhs > rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))
    return _report("wintner", count, sampler.seed, lhs, rhs, bad,
                   lambda k: {"i": int(i[k]), "X": X[k].tolist(), "t": float(t[k])},
                   notes=f"psi {psi.form} {list(psi.coefficients)}; sampled region {sampler.region.describe()}")


def audit_all(model, coupling, phi, weights, psi, sampler: Sampler, count: int, metric_sampler: Sampler | None = None,
              nodes: int | None = None, time_interval=TIME_INTERVAL, chain_max: int = 4) -> list[AuditReport]:
    """The five hypothesis audits in a fixed order."""
    return [
        audit_pseudometric(phi, metric_sampler or sampler, count, chain_max=chain_max),
        audit_dissipativity(model, phi, weights, sampler, count, nodes, time_interval),
        audit_separation(model, phi, weights, sampler, count, nodes, time_interval),
        audit_antisymmetry(coupling, sampler, count),
        audit_wintner(model, psi, sampler, count, nodes, time_interval),
    ]
