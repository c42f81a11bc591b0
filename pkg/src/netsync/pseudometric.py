"""Pseudometrics with a relaxed triangle inequality and their rho(m) sequences.

A pseudometric phi satisfies phi(z, z) = 0, symmetry, and the chain bound

    phi(z_1, z_{m+1}) <= rho(m) * (phi(z_1, z_2) + ... + phi(z_m, z_{m+1}))

with rho(1) = 1 and rho nondecreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .domain import DomainDescriptor, DomainError

EXP_DAMPED_RADIUS = 2.0 - math.sqrt(2.0)


@dataclass(frozen=True)
class RhoSequence:
    """m -> rho(m) on positive integers.

    ``tag`` is ``linear`` (rho(m) = m), ``power`` (m**exponent), ``table``
    (explicit values rho(1), rho(2), ...) or ``max`` (pointwise max of parts).
    """

    tag: str
    exponent: float | None = None
    table: tuple[float, ...] | None = None
    parts: tuple["RhoSequence", ...] = ()

    def __post_init__(self):
        if self.tag in ("linear", "power"):
            if self.exponent is None or self.exponent < 0:
                raise ValueError("power rho needs a nonnegative exponent")
        elif self.tag == "table":
            vals = self.table or ()
            if not vals or vals[0] != 1.0:
                raise ValueError("rho table must start with rho(1) = 1")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ValueError("rho table must be nondecreasing")
        elif self.tag == "max":
            if len(self.parts) < 2:
                raise ValueError("max rho needs at least two parts")
        else:
            raise ValueError(f"unknown rho tag {self.tag!r}")

    @classmethod
    def linear(cls) -> "RhoSequence":
        return cls("linear", exponent=1.0)

    @classmethod
    def power(cls, exponent: float) -> "RhoSequence":
        exponent = float(exponent)
        return cls.linear() if exponent == 1.0 else cls("power", exponent=exponent)

    @classmethod
    def from_table(cls, values) -> "RhoSequence":
        return cls("table", table=tuple(float(v) for v in values))

    def __call__(self, m):
        m_arr = np.asarray(m)
        if np.any(m_arr < 1):
            raise ValueError("rho is defined for m >= 1")
        if self.exponent is not None:
            out = np.power(m_arr.astype(float), self.exponent)
        elif self.tag == "table":
            if np.any(m_arr > len(self.table)):
                raise ValueError(f"rho table only covers m <= {len(self.table)}")
            out = np.asarray(self.table)[m_arr.astype(int) - 1]
        else:
            out = np.maximum.reduce([np.asarray(p(m_arr), float) for p in self.parts])
        return float(out) if np.ndim(out) == 0 else out

    def maximum(self, other: "RhoSequence") -> "RhoSequence":
        """Pointwise max; powers stay closed-form since m >= 1."""
        if self.exponent is not None and other.exponent is not None:
            return RhoSequence.power(max(self.exponent, other.exponent))
        return RhoSequence("max", parts=(self, other))

    def describe(self) -> str:
        if self.tag == "linear":
            return "m"
        if self.tag == "power":
            return f"m^{self.exponent:.17g}"
        if self.tag == "table":
            return "table" + str(list(self.table))
        return "max(" + ", ".join(p.describe() for p in self.parts) + ")"


@dataclass(frozen=True)
class Pseudometric:
    """phi evaluated on pairs of d-vectors (vectorized over leading axes)."""

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    rho: RhoSequence
    domain: DomainDescriptor
    strict_domain: bool = False
    params: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def __call__(self, z1, z2):
        z1 = np.asarray(z1, float)
        z2 = np.asarray(z2, float)
        if z1.shape[-1] != self.dimension or z2.shape[-1] != self.dimension:
            raise DomainError(f"{self.name}: expected {self.dimension}-vectors")
        if self.strict_domain:
            ok = self.domain.contains(z1) & self.domain.contains(z2)
            if not np.all(ok):
                raise DomainError(f"{self.name}: evaluation outside {self.domain.describe()}")
        return self.evaluator(z1, z2)


def power_pseudometric(alpha: float, dimension: int = 2, coordinate: int = 0) -> Pseudometric:
    """((x_1 - x_2)^2)^alpha on one coordinate, with rho(m) = m^(2 alpha - 1)."""
    alpha = float(alpha)
    if alpha < 0.5:
        raise ValueError(f"power pseudometric needs alpha >= 1/2 (got {alpha})")
    if not 0 <= coordinate < dimension:
        raise ValueError("coordinate out of range")

    def evaluate(z1, z2):
        u = np.abs(z1[..., coordinate] - z2[..., coordinate])
        return u * u if alpha == 1.0 else u ** (2.0 * alpha)

    return Pseudometric(
        f"power({alpha:g})",
        evaluate,
        RhoSequence.power(2.0 * alpha - 1.0),
        DomainDescriptor.everywhere(dimension),
        params={"alpha": alpha, "coordinate": coordinate},
    )


def exp_damped_value(u):
    u = np.asarray(u, float)
    return u * u * np.exp(1.0 - np.abs(u))


def exp_damped_pseudometric(dimension: int = 3, coordinate: int = 0) -> Pseudometric:
    """(x_1 - x_2)^2 exp(1 - |x_1 - x_2|) on the closed ball of radius 2 - sqrt 2 at 0.

    rho(m) = m follows from convexity of u^2 exp(1 - |u|) for |u| <= 2 - sqrt 2;
    evaluation outside the ball raises.
    """

    def evaluate(z1, z2):
        return exp_damped_value(z1[..., coordinate] - z2[..., coordinate])

    return Pseudometric(
        "exp_damped",
        evaluate,
        RhoSequence.linear(),
        DomainDescriptor.ball(EXP_DAMPED_RADIUS, dimension=dimension),
        strict_domain=True,
        params={"coordinate": coordinate},
    )


def combine(phi1: Pseudometric, phi2: Pseudometric, alpha: float, beta: float) -> Pseudometric:
    """alpha*phi1 + beta*phi2, with rho(m) = max(rho1(m), rho2(m))."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("combine needs positive coefficients")
    domain = phi1.domain.intersect(phi2.domain)
    e1, e2 = phi1.evaluator, phi2.evaluator

    def evaluate(z1, z2):
        return alpha * e1(z1, z2) + beta * e2(z1, z2)

    return Pseudometric(
        f"{alpha:g}*{phi1.name} + {beta:g}*{phi2.name}",
        evaluate,
        phi1.rho.maximum(phi2.rho),
        domain,
        strict_domain=phi1.strict_domain or phi2.strict_domain,
    )


def induced_pseudometric(h, weights, rho: RhoSequence, domain: DomainDescriptor | None = None) -> Pseudometric:
    """phi(X, Y) = sum_k a_k (X^k - Y^k) h^k(X, Y) for a coupling h.

    The claimed ``rho`` is taken on trust; ``audit_pseudometric`` checks it.
    """
    a = np.asarray(weights, float)
    if domain is None:
        domain = DomainDescriptor.everywhere(h.dimension)
    if not (a.shape == (h.dimension,) and domain.dimension == h.dimension):
        raise DomainError(
            f"dimension mismatch: coupling d={h.dimension}, weights {a.shape[0] if a.ndim else 0}, "
            f"domain d={domain.dimension}"
        )
    if np.any(a < 0):
        raise ValueError("induced pseudometric weights must be nonnegative")

    def evaluate(x, y):
        return np.sum(a * (x - y) * h(x, y), axis=-1)

    return Pseudometric(f"induced({h.name})", evaluate, rho, domain, params={"weights": a.tolist()})


def with_rho(phi: Pseudometric, rho: RhoSequence) -> Pseudometric:
    return replace(phi, rho=rho)


@dataclass(frozen=True)
class RhoCheck:
    passed: bool
    checked_up_to: int
    first_violation: int | None = None


def rho_power_bound_check(rho: RhoSequence, m_max: int) -> RhoCheck:
    """Check rho(m) <= rho(2)^(m-1) for 1 <= m <= m_max."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    r2 = rho(2) if m_max >= 2 else 1.0
    for m in range(1, m_max + 1):
        if rho(m) > r2 ** (m - 1) * (1 + 1e-12):
            return RhoCheck(False, m_max, m)
    return RhoCheck(True, m_max)


def rho_nondecreasing(rho: RhoSequence, m_max: int) -> bool:
    vals = np.asarray([rho(m) for m in range(1, m_max + 1)])
    return bool(vals[0] == 1.0 and np.all(np.diff(vals) >= 0))
