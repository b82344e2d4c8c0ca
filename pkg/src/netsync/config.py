"""Experiment configuration files (YAML).

A config has these top-level keys; only ``graph`` and ``nodes`` are
required::

    seed: 42
    graph:                      # either edges or weights, or a file
      n: 3
      edges: [[1, 0, 2.0]]      # (i, j, l_ij): node i listens to node j, 0-indexed
      # weights: [[0, 1], [1, 0]]
      # file: ring3.yaml        # same keys, path relative to the config
    nodes:
      - {model: hopf, mu_R: 1.0, mu_I: 1.0, repeat: 3}
      - {model: polynomial, dim: 2, terms: [[0, -1.0, [1, 0]]]}
      - {model: linear, matrix: [[-1, 0], [0, -2]]}
    sigma: 50                   # or sigmas: [10, 20, 40]
    solver: {method: rk45, rtol: 1.0e-9, atol: 1.0e-11, t_end: 200}
    ic: {kind: explicit, states: [[...]]}
    # ic: {kind: random_ball, radius: 5, count: 16}
    analysis: {transient: 0.5, k: 8, tol: 1.0e-6, margin: 1.0e-3}
    thresholds: {...}           # scenario verdict thresholds

Validation collects every problem before raising.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from .analysis import sample_ball
from .errors import ValidationError
from .graph import WeightedDigraph, check_connectivity
from .integrate import SolverConfig
from .models import HopfParams, VectorField, hopf_field, linear_field, polynomial_field
from .network import NetworkSystem

__all__ = ["ExperimentConfig", "load_config", "parse_config", "build_model", "register_model", "MODELS"]


def _hopf(spec):
    if "params" in spec:
        mu_R, mu_I = spec["params"]
    else:
        mu_R, mu_I = spec["mu_R"], spec["mu_I"]
    return hopf_field(HopfParams(float(mu_R), float(mu_I)), nu=spec.get("nu", 1.0))


def _polynomial(spec):
    return polynomial_field(int(spec["dim"]), [(c, float(a), e) for c, a, e in spec["terms"]])


def _linear(spec):
    return linear_field(np.array(spec["matrix"], dtype=float))


MODELS: dict[str, Callable[[dict], VectorField]] = {
    "hopf": _hopf,
    "polynomial": _polynomial,
    "linear": _linear,
}


def register_model(name: str, factory: Callable[[dict], VectorField]) -> None:
    """Add a node model; every instance is checked for ``f(0) = 0`` when built."""
    MODELS[name] = factory


def build_model(spec: dict) -> VectorField:
    name = spec.get("model")
    if name not in MODELS:
        raise ValidationError(f"unknown model {name!r}; known: {sorted(MODELS)}")
    try:
        f = MODELS[name](spec)
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"model {name!r}: bad parameters ({exc!r})") from exc
    f0 = np.asarray(f(np.zeros(f.dim)))
    if np.abs(f0).max() > 1e-12:
        raise ValidationError(f"model {name!r} has f(0) = {f0.tolist()}; the origin must be an equilibrium")
    return f


@dataclass
class ExperimentConfig:
    graph: WeightedDigraph
    nodes: list
    sigmas: list
    solver: SolverConfig
    ics: np.ndarray
    seed: int
    analysis: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)
    node_specs: list = field(default_factory=list, repr=False)

    @property
    def sigma(self) -> float:
        return self.sigmas[0]

    def system(self, sigma: float | None = None) -> NetworkSystem:
        return NetworkSystem(self.nodes, self.graph, self.sigma if sigma is None else float(sigma))

    @property
    def n(self) -> int:
        return self.nodes[0].dim

    @property
    def dim(self) -> int:
        return self.graph.N * self.n


def _floats(x):
    return np.asarray(x, dtype=float)


def _parse_graph(block, base: Path | None, problems):
    if not isinstance(block, dict):
        problems.append("graph: block missing or not a mapping")
        return None
    if "file" in block:
        path = Path(block["file"])
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            block = yaml.safe_load(path.read_text())
            block = block.get("graph", block)
        except OSError as exc:
            problems.append(f"graph: cannot read {path}: {exc}")
            return None
    try:
        if "weights" in block:
            return WeightedDigraph(_floats(block["weights"]))
        if "edges" in block:
            return WeightedDigraph.from_edges(int(block["n"]), block["edges"])
        problems.append("graph: needs 'weights' or 'n' + 'edges'")
    except ValidationError as exc:
        problems.extend(f"graph: {p}" for p in exc.problems)
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"graph: malformed block ({exc!r})")
    return None


def _parse_nodes(block, problems):
    if not isinstance(block, list) or not block:
        problems.append("nodes: must be a non-empty list")
        return [], []
    nodes, specs = [], []
    for k, spec in enumerate(block):
        if not isinstance(spec, dict):
            problems.append(f"nodes[{k}]: not a mapping")
            continue
        try:
            f = build_model(spec)
        except ValidationError as exc:
            problems.extend(f"nodes[{k}]: {p}" for p in exc.problems)
            continue
        for _ in range(int(spec.get("repeat", 1))):
            nodes.append(f)
            specs.append(spec)
    return nodes, specs


def _parse_solver(block, problems):
    block = dict(block or {})
    kw = {}
    for key in ("t_end", "h", "rtol", "atol", "divergence_bound", "t0", "h_max"):
        if key in block:
            kw[key] = float(block.pop(key))
    if "max_steps" in block:
        kw["max_steps"] = int(float(block.pop("max_steps")))
    if "method" in block:
        kw["method"] = str(block.pop("method"))
    for key in block:
        problems.append(f"solver: unknown key {key!r}")
    try:
        return SolverConfig(**kw)
    except ValidationError as exc:
        problems.extend(f"solver: {p}" for p in exc.problems)
        return None


def _parse_ics(block, dim, seed, problems):
    block = block or {"kind": "random_ball", "radius": 1.0, "count": 1}
    kind = block.get("kind", "explicit")
    if kind == "explicit":
        states = block.get("states", [block["state"]] if "state" in block else None)
        if states is None:
            problems.append("ic: explicit kind needs 'state' or 'states'")
            return None
        arr = np.atleast_2d(_floats(states))
        if dim is not None and arr.shape[1] != dim:
            problems.append(f"ic: states have length {arr.shape[1]}, network state has length {dim}")
            return None
        return arr
    if kind == "random_ball":
        radius = float(block.get("radius", 1.0))
        count = int(block.get("count", 1))
        if radius < 0 or count < 1:
            problems.append("ic: random_ball needs radius >= 0 and count >= 1")
            return None
        if dim is None:
            return None
        return sample_ball(np.random.default_rng(seed), dim, radius, count)
    problems.append(f"ic: unknown kind {kind!r}")
    return None


def parse_config(raw: dict, base: Path | None = None, seed: int | None = None, sigma: float | None = None):
    """Validate a config mapping; raises ValidationError listing all problems."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ValidationError("config must be a mapping")
    seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    graph = _parse_graph(raw.get("graph"), base, problems)
    nodes, specs = _parse_nodes(raw.get("nodes"), problems)
    dims = {f.dim for f in nodes}
    if len(dims) > 1:
        problems.append(f"nodes: state dimensions differ {sorted(dims)}")
    if graph is not None and nodes and len(nodes) != graph.N:
        problems.append(f"nodes: {len(nodes)} node models for a graph with N={graph.N}")
    if sigma is not None:
        sigmas = [float(sigma)]
    elif "sigmas" in raw:
        sigmas = [float(s) for s in raw["sigmas"]]
    else:
        sigmas = [float(raw.get("sigma", 1.0))]
    if any(not s > 0 for s in sigmas):
        problems.append(f"sigma: values must be positive, got {sigmas}")
    solver = _parse_solver(raw.get("solver"), problems)
    dim = graph.N * nodes[0].dim if (graph is not None and nodes and len(dims) == 1) else None
    ics = _parse_ics(raw.get("ic"), dim, seed, problems)
    if graph is not None and not problems:
        if not check_connectivity(graph):
            problems.append("graph: no rooted spanning tree (Laplacian zero eigenvalue is not simple)")
    if problems:
        raise ValidationError(problems)
    return ExperimentConfig(
        graph=graph,
        nodes=nodes,
        sigmas=sigmas,
        solver=solver,
        ics=ics,
        seed=seed,
        analysis=dict(raw.get("analysis") or {}),
        thresholds=dict(raw.get("thresholds") or {}),
        raw=raw,
        node_specs=specs,
    )


def load_config(path, seed: int | None = None, sigma: float | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(raw, base=path.parent, seed=seed, sigma=sigma)
