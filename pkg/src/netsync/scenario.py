"""Scenario files: YAML documents validated against a JSON schema.

Unknown keys are errors. Every error carries the line of the offending
node so a typo in a numerics config is reported where it sits.
"""
from __future__ import annotations

import contextlib
import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from . import dynamics as dy
from . import graph as gr
from . import pseudometric as pm
from .domain import DomainDescriptor, DomainError, Sampler
from .simulator import SYNC_TOL, SYNC_WINDOW, DEFAULT_DT, DEFAULT_RECORD_EVERY, NetworkSystem, assemble
from .simulator import initial_box, initial_on_v_sphere
from .stability import GrowthEnvelope, TIME_INTERVAL, epsilon_certified, epsilon_star

CHECKS = ("sync", "lyapunov", "containment", "audit")
SHIPPED = ("fhn_k4", "fhn_star_5", "chua_star_5", "consensus_2")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_vec = {"type": "array", "items": _num, "minItems": 1}
_bounds = {"type": "array", "minItems": 1, "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}
_params = {"type": "object", "additionalProperties": {"type": ["number", "string"]}}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA: dict = _obj(
    {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "graph": _obj(
            {
                "family": {"enum": ["star", "path", "cycle", "complete", "custom"]},
                "n": {"type": "integer"},
                "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                                     "minItems": 2, "maxItems": 2}},
            },
            ["family", "n"],
        ),
        "model": _obj(
            {
                "name": {"enum": ["fitzhugh_nagumo", "chua", "zero"]},
                "params": _params,
                "overrides": {"type": "array", "items": _obj({"node": {"type": "integer"}, "params": _params},
                                                             ["node", "params"])},
            },
            ["name"],
        ),
        "coupling": _obj({"name": {"enum": ["fhn_coupling", "chua_coupling", "linear"]}, "params": _params},
                         ["name"]),
        "weights": {"oneOf": [{"const": "auto"}, {"type": "array", "items": _num, "minItems": 1}]},
        "pseudometric": _obj(
            {
                "name": {"enum": ["power", "exp_damped", "induced"]},
                "alpha": {"type": ["number", "string"]},
                "rho": {"oneOf": [
                    {"const": "linear"},
                    _obj({"power": {"type": ["number", "string"]}}, ["power"]),
                    _obj({"table": _vec}, ["table"]),
                ]},
                "domain": _obj({"box": _bounds, "ball": _pos, "center": _vec}),
            },
            ["name"],
        ),
        "epsilon": {"oneOf": [
            {"type": "number", "minimum": 0},
            _obj({"from": {"type": "number", "minimum": 0}, "to": {"type": "number", "minimum": 0},
                  "steps": {"type": "integer", "minimum": 2}}, ["from", "to", "steps"]),
        ]},
        "integration": _obj({"t0": _num, "t_end": _num, "dt": _pos, "record_every": _int_pos}, ["t_end"]),
        "initial": {"oneOf": [
            _obj({"explicit": {"type": "array", "items": _vec, "minItems": 1}}, ["explicit"]),
            _obj({"random_box": _obj({"bounds": _bounds, "seed": {"type": "integer"}}, ["bounds"])},
                 ["random_box"]),
            _obj({"random_ball": _obj({"radius_fraction": _pos, "seed": {"type": "integer"}, "center": _vec},
                                      ["radius_fraction"])}, ["random_ball"]),
        ]},
        "ball": _obj({"radius": {"oneOf": [_pos, {"const": "auto"}]}}, ["radius"]),
        "audit": _obj(
            {
                "count": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
                "box": _bounds,
                "max_diff": {"type": "array", "items": {"type": ["number", "null"]}},
                "metric_region": _obj({"box": _bounds, "ball": _pos}),
                "time_interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                "psi": _obj({"A": {"type": "number", "minimum": 0}, "B": {"type": "number", "minimum": 0}}, ["A"]),
                "chain_max": {"type": "integer", "minimum": 2},
            },
            ["box", "psi"],
        ),
        "thresholds": _obj(
            {
                "method": {"enum": ["generic", "connection-graph", "user-supplied"]},
                "paths": {"enum": ["bfs-min-length", "exhaustive-best"]},
                "c": {"type": "number", "minimum": 0},
            },
            ["method"],
        ),
        "sync": _obj({"tol": _pos, "window": _pos}),
        "checks": {"type": "array", "items": {"enum": list(CHECKS)}, "uniqueItems": True},
        "output": _obj({"csv": {"type": "string"}, "report": {"type": "string"}}),
    },
    ["name", "graph", "model", "coupling", "epsilon", "integration", "initial"],
)


class ScenarioError(ValueError):
    """Parse or validation failure, with the source line when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


# ---------------------------------------------------------------- parsing with line context


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    """Map key paths to 1-based source lines using the composed YAML tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            _line_map(v, path + (key,), out)
            out[path + (key,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _lookup_line(lines: dict, path) -> int | None:
    path = tuple(str(p) if not isinstance(p, int) else p for p in path)
    while path not in lines and path:
        path = path[:-1]
    return lines.get(path)


def validate(data: dict, lines: dict, source: str = "<scenario>") -> None:
    errors = list(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data))
    if errors:
        # oneOf failures are reported through their most specific sub-error
        err = jsonschema.exceptions.best_match(errors)
        path = list(err.absolute_path)
        msg = err.message
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            if extra:
                path = path + [extra[0]]
                msg = f"unknown key {extra[0]!r}"
        where = "/".join(map(str, path)) or "<top>"
        raise ScenarioError(f"{where}: {msg}", _lookup_line(lines, path), source)


def parse(text: str, source: str = "<scenario>") -> tuple[dict, dict]:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                            mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping at top level", 1, source)
    lines = _line_map(node)
    validate(data, lines, source)
    return data, lines


# ---------------------------------------------------------------- building objects


def _number(value, what: str) -> float:
    """Numbers may be written as fractions, e.g. "5/3"."""
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"{what}: cannot read {value!r} as a number") from None
    return float(value)


@dataclass
class Scenario:
    """A validated scenario and the objects it describes."""

    name: str
    data: dict
    lines: dict
    source: str = "<scenario>"
    graph: gr.UndirectedGraph = field(init=False)
    model: dy.OscillatorModel = field(init=False)
    coupling: dy.CouplingFunction = field(init=False)
    weights: np.ndarray = field(init=False)
    phi: pm.Pseudometric = field(init=False)

    def __post_init__(self):
        with self._at("graph"):
            g = self.data["graph"]
            self.graph = gr.build_graph(g["family"], g["n"], g.get("edges"))
        with self._at("model"):
            self.model = self._build_model()
        with self._at("coupling"):
            self.coupling = self._build_coupling()
        if self.coupling.dimension != self.model.dimension:
            self._fail(f"coupling {self.coupling.name} is {self.coupling.dimension}-dimensional "
                       f"but model {self.model.name} is {self.model.dimension}-dimensional", "coupling")
        with self._at("weights"):
            self.weights = self._build_weights()
        with self._at("pseudometric"):
            self.phi = self._build_phi()
        with self._at("initial"):
            self.initial_state()
        bad = [i for i in self.model.overrides if not 1 <= i <= self.graph.n]
        if bad:
            self._fail(f"overrides for nodes {bad} outside 1..{self.graph.n}", "model", "overrides")
        if "containment" in self.checks and "ball" not in self.data:
            self._fail("check 'containment' needs a ball section", "checks")
        if "audit" in self.checks and "audit" not in self.data:
            self._fail("check 'audit' needs an audit section", "checks")
        integ = self.integration
        if not integ["t_end"] > integ["t0"]:
            self._fail("t_end must exceed t0", "integration", "t_end")

    # -- error plumbing

    def _fail(self, message: str, *path):
        raise ScenarioError(message, _lookup_line(self.lines, path), self.source)

    @contextlib.contextmanager
    def _at(self, *path):
        """Re-raise construction errors as ScenarioError located at ``path``."""
        try:
            yield
        except ScenarioError:
            raise
        except KeyError as exc:
            self._fail(f"missing entry {exc}", *path)
        except ValueError as exc:
            self._fail(str(exc), *path)

    # -- builders

    def _params(self, section: str) -> dict[str, float]:
        raw = self.data[section].get("params", {})
        return {k: (v if v == "auto" else _number(v, f"{section}.{k}")) for k, v in raw.items()}

    def _build_model(self) -> dy.OscillatorModel:
        cfg = self.data["model"]
        params = self._params("model")
        overrides = {}
        for k, item in enumerate(cfg.get("overrides", [])):
            node = item["node"]
            if node in overrides:
                self._fail(f"node {node} overridden twice", "model", "overrides", k)
            overrides[node] = {p: _number(v, f"override {p}") for p, v in item["params"].items()}
        if cfg["name"] == "zero":
            dim = int(params.pop("dimension", 1))
            if params:
                raise ValueError(f"zero model takes only 'dimension', got {sorted(params)}")
            return dy.custom_model(dim, lambda X, t, p: np.zeros(np.shape(X)), name="zero")
        try:
            return dy.MODELS[cfg["name"]](**params, overrides=overrides)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {cfg['name']}: {exc}") from None

    def _build_coupling(self) -> dy.CouplingFunction:
        name = self.data["coupling"]["name"]
        params = self._params("coupling")
        if name == "fhn_coupling":
            return dy.fhn_coupling(**params)
        if name == "chua_coupling":
            if self.model.name != "chua":
                raise ValueError("chua_coupling needs the chua model")
            a = params.get("a", self.model.params["a"])
            delta = params.get("delta", "auto")
            if delta == "auto":
                delta = dy.chua_slope_bound(self.model.params["d"], self.model.params["e"])
            unknown = set(params) - {"a", "delta"}
            if unknown:
                raise ValueError(f"unknown chua_coupling parameters {sorted(unknown)}")
            return dy.chua_coupling(a, delta)
        if params:
            raise ValueError("linear coupling takes no parameters")
        return dy.linear_coupling(self.model.dimension)

    def _build_weights(self) -> np.ndarray:
        w = self.data.get("weights", "auto")
        if w == "auto":
            p = self.model.params
            if self.model.name == "fitzhugh_nagumo":
                return dy.fhn_weights(p["b"])
            if self.model.name == "chua":
                return dy.chua_weights(p["a"], p["b"])
            return np.ones(self.model.dimension)
        return dy.as_weights(w, self.model.dimension)

    def _rho(self, cfg) -> pm.RhoSequence:
        if cfg == "linear":
            return pm.RhoSequence.linear()
        if "power" in cfg:
            return pm.RhoSequence.power(_number(cfg["power"], "rho.power"))
        return pm.RhoSequence.from_table(cfg["table"])

    def _domain(self, cfg, dim: int) -> DomainDescriptor:
        if "box" in cfg:
            b = np.asarray(cfg["box"], float)
            return DomainDescriptor.box(b[:, 0], b[:, 1])
        if "ball" in cfg:
            return DomainDescriptor.ball(cfg["ball"], cfg.get("center"), dimension=dim)
        return DomainDescriptor.everywhere(dim)

    def _build_phi(self) -> pm.Pseudometric:
        cfg = self.data.get("pseudometric", {"name": "induced", "rho": "linear"})
        d = self.model.dimension
        name = cfg["name"]
        if name == "power":
            phi = pm.power_pseudometric(_number(cfg.get("alpha", 1), "alpha"), dimension=d)
        elif name == "exp_damped":
            phi = pm.exp_damped_pseudometric(dimension=d)
        else:
            if "rho" not in cfg:
                raise ValueError("induced pseudometric needs a declared rho")
            domain = self._domain(cfg.get("domain", {}), d)
            return pm.induced_pseudometric(self.coupling, self.weights, self._rho(cfg["rho"]), domain)
        if phi.dimension != d:
            raise DomainError(f"pseudometric is {phi.dimension}-dimensional, model is {d}-dimensional")
        if "rho" in cfg:
            phi = pm.with_rho(phi, self._rho(cfg["rho"]))
        return phi

    # -- derived settings

    @property
    def checks(self) -> tuple[str, ...]:
        return tuple(self.data.get("checks", ["sync"]))

    @property
    def integration(self) -> dict:
        integ = self.data["integration"]
        return {
            "t0": float(integ.get("t0", 0.0)),
            "t_end": float(integ["t_end"]),
            "dt": float(integ.get("dt", DEFAULT_DT)),
            "record_every": int(integ.get("record_every", DEFAULT_RECORD_EVERY)),
        }

    @property
    def sync_settings(self) -> tuple[float, float]:
        s = self.data.get("sync", {})
        return float(s.get("tol", SYNC_TOL)), float(s.get("window", SYNC_WINDOW))

    @property
    def epsilons(self) -> list[float]:
        eps = self.data["epsilon"]
        if isinstance(eps, dict):
            return np.linspace(eps["from"], eps["to"], eps["steps"]).tolist()
        return [float(eps)]

    @property
    def epsilon(self) -> float:
        eps = self.data["epsilon"]
        if isinstance(eps, dict):
            self._fail("this command needs a scalar epsilon", "epsilon")
        return float(eps)

    def ball_radius(self) -> float | None:
        ball = self.data.get("ball")
        if ball is None:
            return None
        r = ball["radius"]
        if r == "auto":
            if self.model.name != "chua":
                self._fail("radius 'auto' is only defined for the chua model", "ball", "radius")
            return (math.sqrt(2.0) - 1.0) * math.sqrt(self.model.params["a"])
        return float(r)

    def initial_state(self) -> np.ndarray:
        cfg = self.data["initial"]
        n, d = self.graph.n, self.model.dimension
        if "explicit" in cfg:
            x0 = np.asarray(cfg["explicit"], float)
            if x0.shape != (n, d):
                raise ValueError(f"explicit initial state must be {n}x{d}, got {'x'.join(map(str, x0.shape))}")
            return x0
        if "random_box" in cfg:
            box = cfg["random_box"]
            b = np.asarray(box["bounds"], float)
            if b.shape[0] != d:
                raise ValueError(f"random_box needs {d} bounds, got {b.shape[0]}")
            return initial_box(n, b[:, 0], b[:, 1], np.random.default_rng(box.get("seed", 0)))
        ball = cfg["random_ball"]
        r = self.ball_radius()
        if r is None:
            raise ValueError("random_ball needs a ball section")
        center = np.asarray(ball.get("center", np.zeros(d)), float)
        if center.shape != (d,):
            raise ValueError(f"random_ball center must have {d} entries")
        rng = np.random.default_rng(ball.get("seed", 0))
        return initial_on_v_sphere(center, n, self.weights, ball["radius_fraction"] * r, rng)

    def system(self, epsilon: float | None = None) -> NetworkSystem:
        return assemble(self.graph, self.model, self.coupling, self.weights,
                        self.epsilon if epsilon is None else epsilon)

    def bound(self) -> gr.BoundReport:
        cfg = self.data.get("thresholds", {"method": "generic"})
        method = cfg["method"]
        if method == "user-supplied":
            if "c" not in cfg:
                self._fail("user-supplied threshold needs c", "thresholds")
            return gr.user_bound(cfg["c"])
        if method == "generic":
            return gr.generic_bound(self.graph, self.phi.rho)
        with self._at("thresholds", "paths"):
            paths = gr.choose_paths(self.graph, cfg.get("paths", "bfs-min-length"), rho=self.phi.rho)
        return gr.connection_graph_bound(self.graph, self.phi.rho, paths)

    def thresholds(self) -> dict[str, float]:
        c = self.bound().c_value
        return {"c": c, "epsilon_star": epsilon_star(c, self.graph.n),
                "epsilon_certified": epsilon_certified(c, self.graph.n)}

    def audit_setup(self) -> dict[str, Any]:
        if "audit" not in self.data:
            self._fail("scenario has no audit section")
        cfg = self.data["audit"]
        d = self.model.dimension
        with self._at("audit", "box"):
            b = np.asarray(cfg["box"], float)
            if b.shape[0] != d:
                raise ValueError(f"audit box needs {d} bounds, got {b.shape[0]}")
            region = DomainDescriptor.box(b[:, 0], b[:, 1])
        max_diff = cfg.get("max_diff")
        if max_diff is not None and len(max_diff) != d:
            self._fail(f"max_diff needs {d} entries", "audit", "max_diff")
        seed = int(cfg.get("seed", 0))
        sampler = Sampler(region, seed, tuple(max_diff) if max_diff is not None else None)
        metric_sampler = None
        if "metric_region" in cfg:
            with self._at("audit", "metric_region"):
                metric_sampler = Sampler(self._domain(cfg["metric_region"], d), seed)
        psi = cfg["psi"]
        return {
            "sampler": sampler,
            "metric_sampler": metric_sampler,
            "count": int(cfg.get("count", 100_000)),
            "psi": GrowthEnvelope.affine(psi["A"], psi.get("B", 0.0)),
            "time_interval": tuple(cfg.get("time_interval", TIME_INTERVAL)),
            "chain_max": int(cfg.get("chain_max", 4)),
            "nodes": self.graph.n,
        }

    def output_names(self) -> tuple[str, str]:
        out = self.data.get("output", {})
        return out.get("csv", f"{self.name}.csv"), out.get("report", f"{self.name}_report.txt")


def load_text(text: str, source: str = "<scenario>", overrides: dict | None = None) -> Scenario:
    """Parse, validate and build. ``overrides`` may set seed, dt, t_end, epsilon_range."""
    data, lines = parse(text, source)
    if overrides:
        data = apply_overrides(data, overrides)
        validate(data, lines, source)
    return Scenario(data["name"], data, lines, source)


def load(path, overrides: dict | None = None) -> Scenario:
    p = Path(path)
    if not p.exists() and str(path) in SHIPPED:
        return load_text(shipped_text(str(path)), f"{path}.yaml", overrides)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", None, str(path)) from None
    return load_text(text, str(path), overrides)


def apply_overrides(data: dict, ov: dict) -> dict:
    data = copy.deepcopy(data)
    if ov.get("dt") is not None:
        data["integration"]["dt"] = float(ov["dt"])
    if ov.get("t_end") is not None:
        data["integration"]["t_end"] = float(ov["t_end"])
    if ov.get("seed") is not None:
        init = data["initial"]
        for kind in ("random_box", "random_ball"):
            if kind in init:
                init[kind]["seed"] = int(ov["seed"])
        if "audit" in data:
            data["audit"]["seed"] = int(ov["seed"])
    if ov.get("epsilon_range") is not None:
        lo, hi, steps = ov["epsilon_range"]
        data["epsilon"] = {"from": float(lo), "to": float(hi), "steps": int(steps)}
    return data


def shipped_text(name: str) -> str:
    if name not in SHIPPED:
        raise ScenarioError(f"no shipped scenario named {name!r}")
    return resources.files("netsync").joinpath("scenarios", f"{name}.yaml").read_text()
