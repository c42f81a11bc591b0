"""Domain descriptors and seeded samplers for state vectors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when points fall outside a domain, or regions are incompatible."""


@dataclass(frozen=True)
class DomainDescriptor:
    """A subset of d-space: all of it, an axis-aligned box, or a closed ball."""

    kind: str
    dimension: int
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    center: tuple[float, ...] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("dimension must be >= 1")
        if self.kind == "all":
            return
        if self.kind == "box":
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if lo.shape != (self.dimension,) or hi.shape != (self.dimension,):
                raise DomainError("box bounds must have one entry per coordinate")
            if np.any(lo >= hi):
                raise DomainError("box requires lower < upper in every coordinate")
            return
        if self.kind == "ball":
            c = np.asarray(self.center, float)
            if c.shape != (self.dimension,):
                raise DomainError("ball center must have one entry per coordinate")
            if not self.radius or self.radius <= 0:
                raise DomainError("ball radius must be positive")
            return
        raise DomainError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def everywhere(cls, dimension: int) -> "DomainDescriptor":
        return cls("all", dimension)

    @classmethod
    def box(cls, lower, upper) -> "DomainDescriptor":
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        return cls("box", len(lower), lower=lower, upper=upper)

    @classmethod
    def ball(cls, radius: float, center=None, dimension: int | None = None) -> "DomainDescriptor":
        if center is None:
            if dimension is None:
                raise DomainError("ball needs a center or a dimension")
            center = (0.0,) * dimension
        center = tuple(float(v) for v in center)
        return cls("ball", len(center), center=center, radius=float(radius))

    @property
    def bounded(self) -> bool:
        return self.kind != "all"

    def contains(self, points, atol: float = 1e-12) -> np.ndarray:
        """Boolean mask over the leading axes of ``points`` (last axis = coordinates)."""
        z = np.asarray(points, float)
        if z.shape[-1] != self.dimension:
            raise DomainError(f"expected {self.dimension}-vectors, got shape {z.shape}")
        if self.kind == "all":
            return np.ones(z.shape[:-1], bool)
        if self.kind == "box":
            return np.all((z >= np.asarray(self.lower) - atol) & (z <= np.asarray(self.upper) + atol), axis=-1)
        dist = np.linalg.norm(z - np.asarray(self.center), axis=-1)
        return dist <= self.radius + atol

    def within(self, other: "DomainDescriptor") -> bool:
        """True if this region is a subset of ``other``."""
        if self.dimension != other.dimension:
            return False
        if other.kind == "all":
            return True
        if self.kind == "all":
            return False
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            if other.kind == "box":
                return bool(np.all(lo >= np.asarray(other.lower)) and np.all(hi <= np.asarray(other.upper)))
            # farthest corner of the box from the ball center
            c = np.asarray(other.center)
            far = np.maximum(np.abs(lo - c), np.abs(hi - c))
            return bool(np.linalg.norm(far) <= other.radius + 1e-12)
        c, r = np.asarray(self.center), self.radius
        if other.kind == "ball":
            return bool(np.linalg.norm(c - np.asarray(other.center)) + r <= other.radius + 1e-12)
        return bool(np.all(c - r >= np.asarray(other.lower)) and np.all(c + r <= np.asarray(other.upper)))

    def intersect(self, other: "DomainDescriptor") -> "DomainDescriptor":
        if self.dimension != other.dimension:
            raise DomainError("cannot intersect domains of different dimension")
        if self.within(other):
            return self
        if other.within(self):
            return other
        if self.kind == "box" and other.kind == "box":
            lo = np.maximum(self.lower, other.lower)
            hi = np.minimum(self.upper, other.upper)
            if np.any(lo >= hi):
                raise DomainError("domains do not intersect")
            return DomainDescriptor.box(lo, hi)
        raise DomainError(f"intersection of {self.kind} and {other.kind} is not representable")

    def describe(self) -> str:
        if self.kind == "all":
            return f"all of R^{self.dimension}"
        if self.kind == "box":
            return "box " + " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.lower, self.upper))
        return f"ball(center={list(self.center)}, radius={self.radius:.17g})"


def _uniform(region: DomainDescriptor, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    d = region.dimension
    if region.kind == "box":
        return rng.uniform(region.lower, region.upper, size=shape + (d,))
    if region.kind == "ball":
        g = rng.standard_normal(shape + (d,))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        r = region.radius * rng.uniform(size=shape + (1,)) ** (1.0 / d)
        return np.asarray(region.center) + r * g
    raise DomainError("cannot sample from an unbounded domain; give a box or ball")


@dataclass(frozen=True)
class Sampler:
    """Seeded uniform sampler over a bounded region.

    Every draw takes a ``stream`` label so independent checks get
    independent but reproducible random streams from one seed.
    """

    region: DomainDescriptor
    seed: int = 0
    max_diff: tuple[float | None, ...] | None = field(default=None)

    def __post_init__(self):
        if not self.region.bounded:
            raise DomainError("sampler region must be a box or a ball")
        if self.max_diff is not None and len(self.max_diff) != self.region.dimension:
            raise DomainError("max_diff needs one entry per coordinate")

    @property
    def dimension(self) -> int:
        return self.region.dimension

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream])

    def points(self, count: int, per_draw: int | None = None, stream: int = 0) -> np.ndarray:
        """``count`` points, or ``count`` groups of ``per_draw`` points."""
        shape = (count,) if per_draw is None else (count, per_draw)
        return _uniform(self.region, self.rng(stream), shape)

    def pairs(self, count: int, stream: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Pairs (X, Y). Coordinates with a ``max_diff`` entry draw Y near X."""
        rng = self.rng(stream)
        x = _uniform(self.region, rng, (count,))
        y = _uniform(self.region, rng, (count,))
        if self.max_diff is not None:
            for k, w in enumerate(self.max_diff):
                if w is not None:
                    y[:, k] = x[:, k] + rng.uniform(-w, w, size=count)
        return x, y

    def require_within(self, domain: DomainDescriptor) -> None:
        if self.region.dimension != domain.dimension:
            raise DomainError(
                f"sampler draws {self.region.dimension}-vectors but the domain is {domain.dimension}-dimensional"
            )
        if not self.region.within(domain):
            raise DomainError(f"sampler region {self.region.describe()} is not inside {domain.describe()}")
