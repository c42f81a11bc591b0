"""Oscillator vector fields, coupling functions and weight vectors.

Fields and couplings are vectorized: the last axis holds the d state
coordinates and parameters broadcast against the leading axes, so one call
evaluates every node (or every sample of an audit) at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

FieldFunc = Callable[[np.ndarray, float, Mapping[str, object]], np.ndarray]


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class OscillatorModel:
    """F_i(X, t) sharing one functional form, with optional per-node parameter overrides."""

    name: str
    dimension: int
    func: FieldFunc
    params: Mapping[str, float] = field(default_factory=dict)
    overrides: Mapping[int, Mapping[str, float]] = field(default_factory=dict)
    validator: Callable[[Mapping[str, float]], None] | None = None

    def __post_init__(self):
        if self.validator is not None:
            self.validator(self.params)
            for node, extra in self.overrides.items():
                try:
                    self.validator({**self.params, **extra})
                except ModelError as exc:
                    raise ModelError(f"node {node}: {exc}") from None
        for node, extra in self.overrides.items():
            unknown = set(extra) - set(self.params)
            if unknown:
                raise ModelError(f"node {node} overrides unknown parameters {sorted(unknown)}")

    @property
    def heterogeneous(self) -> bool:
        return any(self.overrides.values())

    def node_params(self, i: int) -> dict[str, float]:
        return {**self.params, **self.overrides.get(i, {})}

    def param_arrays(self, nodes) -> dict[str, object]:
        """Parameters gathered for an array of 1-based node indices.

        Parameters no node overrides stay scalars, which keeps the
        homogeneous case as cheap as a single oscillator.
        """
        nodes = np.asarray(nodes)
        out: dict[str, object] = {}
        for key, base in self.params.items():
            touched = [i for i, extra in self.overrides.items() if key in extra]
            if not touched:
                out[key] = base
                continue
            table = {i: self.overrides[i][key] for i in touched}
            out[key] = np.vectorize(lambda i: table.get(int(i), base), otypes=[float])(nodes)
        return out

    def field(self, i, X, t: float = 0.0) -> np.ndarray:
        """F_i(X, t). ``i`` may be an int or an array broadcasting with X[..., 0]."""
        X = np.asarray(X, float)
        if X.shape[-1] != self.dimension:
            raise ModelError(f"{self.name}: expected {self.dimension}-dimensional states")
        if np.ndim(i) == 0:
            p = self.node_params(int(i))
        else:
            p = self.param_arrays(i)
        return self.func(X, t, p)

    def with_overrides(self, overrides: Mapping[int, Mapping[str, float]]) -> "OscillatorModel":
        return OscillatorModel(self.name, self.dimension, self.func, self.params, dict(overrides), self.validator)


@dataclass(frozen=True)
class CouplingFunction:
    name: str
    dimension: int
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, X, Y) -> np.ndarray:
        return self.func(np.asarray(X, float), np.asarray(Y, float))


def as_weights(values, dimension: int | None = None) -> np.ndarray:
    """Validated weight vector a_1..a_d.

    Entries must be strictly positive: zero weights would make the
    Lyapunov norm degenerate.
    """
    a = np.array(values, dtype=float).reshape(-1)
    if dimension is not None and a.shape[0] != dimension:
        raise ModelError(f"expected {dimension} weights, got {a.shape[0]}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ModelError(f"weights must be finite and strictly positive, got {a.tolist()}")
    return a


# ---------------------------------------------------------------- FitzHugh-Nagumo


def _fhn(X, t, p):
    x, y = X[..., 0], X[..., 1]
    out = np.empty(np.broadcast_shapes(X.shape, np.shape(p["a"]) + (2,)))
    out[..., 0] = x - x * x * x - y + p["a"]
    out[..., 1] = p["b"] * x - p["c"] * y - p["d"]
    return out


def _check_fhn(p):
    if not p["b"] > 0:
        raise ModelError(f"fitzhugh_nagumo requires b > 0 (got b={p['b']})")


def fhn_field(a: float = 0.0, b: float = 1.0, c: float = 0.0, d: float = 0.0, overrides=None) -> OscillatorModel:
    """F(x, y) = (-x^3 + x - y + a, b x - c y - d)."""
    params = {"a": float(a), "b": float(b), "c": float(c), "d": float(d)}
    return OscillatorModel("fitzhugh_nagumo", 2, _fhn, params, dict(overrides or {}), _check_fhn)


def fhn_weights(b: float) -> np.ndarray:
    return as_weights([1.0, 1.0 / b])


def _odd_five_thirds(u):
    # cube root of u^5 as a real odd function
    return np.cbrt(u * u * u * u * u)


def fhn_coupling(alpha: float = 1.0, beta: float = 0.0, gamma: float = 1.0, c: float | None = None) -> CouplingFunction:
    """h = (alpha u + beta cbrt(u^5), gamma v) with u, v the coordinate differences.

    Requires alpha >= 1, beta >= 0, gamma >= 0; gamma >= -c is checked only
    when the model's ``c`` is passed.
    """
    if alpha < 1 or beta < 0 or gamma < 0:
        raise ModelError(f"fhn_coupling requires alpha >= 1, beta >= 0, gamma >= 0 (got {alpha}, {beta}, {gamma})")
    if c is not None and gamma < -c:
        raise ModelError(f"fhn_coupling requires gamma >= max(0, -c) (gamma={gamma}, c={c})")

    def h(X, Y):
        D = X - Y
        u = D[..., 0]
        out = np.empty(D.shape)
        out[..., 0] = alpha * u + beta * _odd_five_thirds(u) if beta else alpha * u
        out[..., 1] = gamma * D[..., 1]
        return out

    return CouplingFunction("fhn_coupling", 2, h, {"alpha": alpha, "beta": beta, "gamma": gamma})


# ---------------------------------------------------------------- Chua


def chua_f(x, d: float, e: float):
    """Piecewise-linear f(x) = d x + (d - e)(|x + 1| - |x - 1|) / 2."""
    x = np.asarray(x, float)
    # (|x + 1| - |x - 1|) / 2 is x clipped to [-1, 1]
    return d * x + (d - e) * np.minimum(np.maximum(x, -1.0), 1.0)


def _chua(X, t, p):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    out = np.empty(np.broadcast_shapes(X.shape, np.shape(p["a"]) + (3,)))
    out[..., 0] = p["a"] * (y - x - chua_f(x, p["d"], p["e"]))
    out[..., 1] = x - y + z
    out[..., 2] = -p["b"] * y - p["c"] * z
    return out


def _check_chua(p):
    for key in ("a", "b", "c"):
        if not p[key] > 0:
            raise ModelError(f"chua requires {key} > 0 (got {key}={p[key]})")
    if not 2 * p["d"] < p["e"]:
        raise ModelError(f"chua requires 2d < e (got d={p['d']}, e={p['e']})")


def chua_field(a: float, b: float, c: float, d: float, e: float, overrides=None) -> OscillatorModel:
    """F = (a[y - x - f(x)], x - y + z, -b y - c z)."""
    params = {"a": float(a), "b": float(b), "c": float(c), "d": float(d), "e": float(e)}
    return OscillatorModel("chua", 3, _chua, params, dict(overrides or {}), _check_chua)


def chua_weights(a: float, b: float) -> np.ndarray:
    return as_weights([1.0 / a, 1.0, 1.0 / b])


def chua_slope_bound(d: float, e: float) -> float:
    """Upper bound on the secant slopes of f: max(0, d, 2d - e).

    f is piecewise linear with slope d outside [-1, 1] and 2d - e inside,
    so every secant slope is a convex combination of the two.
    """
    if not 2 * d < e:
        raise ModelError(f"chua requires 2d < e (got d={d}, e={e})")
    return float(max(0.0, d, 2 * d - e))


def chua_coupling(a: float, delta: float) -> CouplingFunction:
    """h = (a delta u exp(1 - |u|), 0, 0) with u = x_i - x_j."""
    if a <= 0 or delta < 0:
        raise ModelError(f"chua_coupling requires a > 0 and delta >= 0 (got a={a}, delta={delta})")

    def h(X, Y):
        u = X[..., 0] - Y[..., 0]
        out = np.zeros(X.shape if X.shape == Y.shape else np.broadcast_shapes(X.shape, Y.shape))
        out[..., 0] = (a * delta) * u * np.exp(1.0 - np.abs(u))
        return out

    return CouplingFunction("chua_coupling", 3, h, {"a": a, "delta": delta})


# ---------------------------------------------------------------- user supplied


def custom_model(dimension: int, func: FieldFunc, params=None, name: str = "custom", overrides=None) -> OscillatorModel:
    return OscillatorModel(name, dimension, func, dict(params or {}), dict(overrides or {}))


def custom_coupling(dimension: int, func, name: str = "custom") -> CouplingFunction:
    return CouplingFunction(name, dimension, func)


def linear_coupling(dimension: int = 1) -> CouplingFunction:
    """h(X, Y) = X - Y."""
    return CouplingFunction("linear", dimension, lambda X, Y: X - Y)


MODELS = {"fitzhugh_nagumo": fhn_field, "chua": chua_field}
