"""Structural causal models: mechanisms, synthetic sampling, intervention.

A model couples a Dag with one mechanism per node (linear with additive
noise, or logistic producing a Bernoulli draw) and serves as the ground
truth generator against which discovery, identification and estimation
are validated. Sampling uses one independent noise substream per node, so
intervening on a node perturbs nothing upstream: non-descendant columns of
``sample_do`` are bit-identical to ``sample`` under the same seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .dag import Dag, GraphError
from .matrix import FeatureMatrix
from .util import derived_rng, sigmoid

NOISE_DISTS = ("gaussian", "uniform", "laplace", "bernoulli", "none")


class ScmError(ValueError):
    pass


@dataclass(frozen=True)
class Noise:
    """Exogenous-noise spec: gaussian(sigma), uniform(+-a), laplace(b),
    bernoulli (implicit in a logistic mechanism) or none (degenerate)."""

    dist: str
    param: float = 0.0

    def __post_init__(self):
        if self.dist not in NOISE_DISTS:
            raise ScmError(f"unknown noise dist {self.dist!r}")
        if self.dist in ("gaussian", "uniform", "laplace") and not self.param > 0:
            raise ScmError(f"{self.dist} noise needs a positive param, got {self.param}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.dist == "gaussian":
            return rng.normal(0.0, self.param, size=n)
        if self.dist == "uniform":
            return rng.uniform(-self.param, self.param, size=n)
        if self.dist == "laplace":
            return rng.laplace(0.0, self.param, size=n)
        return np.zeros(n)


@dataclass(frozen=True)
class Mechanism:
    """Assignment function of one node given its parents.

    ``linear``:   value = intercept + sum(w * parent) + noise
    ``logistic``: value ~ Bernoulli(sigmoid(intercept + sum(w * parent)))
    """

    kind: str
    weights: Mapping[str, float] = field(default_factory=dict)
    intercept: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "logistic"):
            raise ScmError(f"unknown mechanism kind {self.kind!r}")
        object.__setattr__(self, "weights", dict(self.weights))

    def linear_part(self, parent_values: Mapping[str, np.ndarray]) -> np.ndarray:
        n = len(next(iter(parent_values.values()))) if parent_values else None
        total = None
        for name, w in sorted(self.weights.items()):
            contrib = w * parent_values[name]
            total = contrib if total is None else total + contrib
        if total is None:
            if n is None:
                raise ScmError("cannot size an intercept-only mechanism without parents")
            total = np.zeros(n)
        return total + self.intercept


class Scm:
    def __init__(self, dag: Dag, mechanisms: Mapping[str, Mechanism], noise: Mapping[str, Noise]):
        self.dag = dag
        self.mechanisms = dict(mechanisms)
        self.noise = dict(noise)
        for node in dag.nodes:
            if node not in self.mechanisms:
                raise ScmError(f"node {node!r} has no mechanism")
            mech = self.mechanisms[node]
            extra = set(mech.weights) - set(dag.parents(node))
            if extra:
                raise ScmError(f"mechanism of {node!r} references non-parents {sorted(extra)}")
            spec = self.noise.get(node)
            if mech.kind == "logistic":
                if spec is not None and spec.dist != "bernoulli":
                    raise ScmError(f"logistic node {node!r} has explicit noise {spec.dist!r}")
                self.noise[node] = Noise("bernoulli")
            elif spec is None:
                raise ScmError(f"linear node {node!r} has no noise spec")

    def is_all_linear(self) -> bool:
        return all(m.kind == "linear" for m in self.mechanisms.values())

    def node_kinds(self) -> dict[str, str]:
        return {
            v: ("binary" if self.mechanisms[v].kind == "logistic" else "continuous")
            for v in self.dag.nodes
        }

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "nodes": list(self.dag.nodes),
            "edges": sorted([a, b] for a, b in self.dag.edges),
            "mechanisms": {
                v: {
                    "type": m.kind,
                    "weights": {p: m.weights[p] for p in sorted(m.weights)},
                    "intercept": m.intercept,
                }
                for v, m in sorted(self.mechanisms.items())
            },
            "noise": {
                v: {"dist": s.dist, "param": s.param} for v, s in sorted(self.noise.items())
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Scm":
        payload = json.loads(text)
        dag = Dag(payload["nodes"], [tuple(e) for e in payload["edges"]])
        mechanisms = {
            v: Mechanism(spec["type"], spec.get("weights", {}), spec.get("intercept", 0.0))
            for v, spec in payload["mechanisms"].items()
        }
        noise = {
            v: Noise(spec["dist"], spec.get("param", 0.0))
            for v, spec in payload.get("noise", {}).items()
        }
        return cls(dag, mechanisms, noise)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Scm":
        return cls.from_json(Path(path).read_text())


def sample(scm: Scm, n: int, seed: int) -> FeatureMatrix:
    """Draw ``n`` i.i.d. rows in topological order; deterministic given seed."""
    return sample_do(scm, {}, n, seed)


def sample_do(scm: Scm, intervention: Mapping[str, float], n: int, seed: int) -> FeatureMatrix:
    """Sample under do(intervention): fixed values, incoming edges ignored."""
    if n < 1:
        raise ScmError(f"n must be >= 1, got {n}")
    for v in intervention:
        if v not in scm.dag._idx:
            raise GraphError(f"cannot intervene on undefined variable {v!r}")

    dag = scm.dag
    values: dict[str, np.ndarray] = {}
    kinds = scm.node_kinds()
    for node in dag.topological_order():
        i = dag.index(node)
        if node in intervention:
            fixed = float(intervention[node])
            values[node] = np.full(n, fixed)
            if kinds[node] == "binary" and fixed not in (0.0, 1.0):
                kinds[node] = "continuous"
            continue
        rng = derived_rng(seed, i)
        mech = scm.mechanisms[node]
        parent_vals = {p: values[p] for p in mech.weights}
        if mech.kind == "logistic":
            if mech.weights:
                p = sigmoid(mech.linear_part(parent_vals))
            else:
                p = np.full(n, float(sigmoid(mech.intercept)))
            values[node] = (rng.random(n) < p).astype(float)
        else:
            noise = scm.noise[node].draw(rng, n)
            if mech.weights:
                values[node] = mech.linear_part(parent_vals) + noise
            else:
                values[node] = np.full(n, mech.intercept) + noise

    data = np.column_stack([values[v] for v in dag.nodes])
    return FeatureMatrix(dag.nodes, [kinds[v] for v in dag.nodes], data)


@dataclass(frozen=True)
class EffectTruth:
    """Oracle value of E[Y|do(X=x1)] - E[Y|do(X=x0)] with its uncertainty."""

    value: float
    se: float
    method: str  # "closed_form" or "monte_carlo"

    def __float__(self) -> float:
        return self.value


def true_effect(
    scm: Scm,
    treatment: str,
    outcome: str,
    x1: float = 1.0,
    x0: float = 0.0,
    n_mc: int = 200_000,
    seed: int = 0,
) -> EffectTruth:
    """Ground-truth interventional contrast for validation.

    All-linear models are solved exactly by summing path-coefficient
    products ((I - W)^-1 off-diagonal entry). Anything else falls back to
    paired Monte Carlo through ``sample_do``; the two arms share exogenous
    draws, so the reported standard error is that of the paired difference.
    """
    dag = scm.dag
    ti, oi = dag.index(treatment), dag.index(outcome)
    if scm.is_all_linear():
        w = np.zeros((dag.n, dag.n))
        for node, mech in scm.mechanisms.items():
            j = dag.index(node)
            for parent, weight in mech.weights.items():
                w[dag.index(parent), j] = weight
        total = np.linalg.inv(np.eye(dag.n) - w)
        return EffectTruth(float(total[ti, oi] * (x1 - x0)), 0.0, "closed_form")

    if n_mc < 100:
        raise ScmError(f"monte carlo oracle needs n_mc >= 100, got {n_mc}")
    y1 = sample_do(scm, {treatment: x1}, n_mc, seed).column(outcome)
    y0 = sample_do(scm, {treatment: x0}, n_mc, seed).column(outcome)
    diff = y1 - y0
    return EffectTruth(float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(n_mc)), "monte_carlo")


# -- reference synthetic models ------------------------------------------

FORK_WEIGHTS = {
    "z_intercept": 0.0,
    "x_on_z": 2.0,
    "x_intercept": -1.0,
    "y_on_z": 2.0,
    "y_on_x": 1.0,
    "y_intercept": -2.0,
}


def fork_scm() -> Scm:
    """Binary confounded triangle z -> x, z -> y, x -> y with fixed weights.

    The shared cause z is strong enough that the unadjusted x/y association
    is badly biased, which is what the estimation suite demonstrates.
    """
    w = FORK_WEIGHTS
    dag = Dag(["z", "x", "y"], [("z", "x"), ("z", "y"), ("x", "y")])
    mechanisms = {
        "z": Mechanism("logistic", {}, w["z_intercept"]),
        "x": Mechanism("logistic", {"z": w["x_on_z"]}, w["x_intercept"]),
        "y": Mechanism("logistic", {"z": w["y_on_z"], "x": w["y_on_x"]}, w["y_intercept"]),
    }
    return Scm(dag, mechanisms, {})


def chain_scm(weight_xm: float = 0.8, weight_my: float = 0.8, sigma: float = 1.0) -> Scm:
    """Linear-gaussian chain x -> m -> y."""
    dag = Dag(["x", "m", "y"], [("x", "m"), ("m", "y")])
    mechanisms = {
        "x": Mechanism("linear"),
        "m": Mechanism("linear", {"x": weight_xm}),
        "y": Mechanism("linear", {"m": weight_my}),
    }
    noise = {v: Noise("gaussian", sigma) for v in dag.nodes}
    return Scm(dag, mechanisms, noise)


def collider_scm(weight_xc: float = 1.0, weight_yc: float = 1.0, sigma: float = 1.0) -> Scm:
    """Linear-gaussian collider x -> c <- y."""
    dag = Dag(["x", "c", "y"], [("x", "c"), ("y", "c")])
    mechanisms = {
        "x": Mechanism("linear"),
        "y": Mechanism("linear"),
        "c": Mechanism("linear", {"x": weight_xc, "y": weight_yc}),
    }
    noise = {v: Noise("gaussian", sigma) for v in dag.nodes}
    return Scm(dag, mechanisms, noise)


def random_linear_scm(
    dag: Dag,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 1.5),
    noise: str = "gaussian",
    noise_param: float = 1.0,
) -> Scm:
    """Random edge weights (uniform magnitude, random sign) on a given dag."""
    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    mechanisms = {}
    for node in dag.nodes:
        weights = {
            p: float(rng.uniform(lo, hi) * rng.choice([-1.0, 1.0])) for p in dag.parents(node)
        }
        mechanisms[node] = Mechanism("linear", weights)
    return Scm(dag, mechanisms, {v: Noise(noise, noise_param) for v in dag.nodes})


def random_logistic_scm(
    dag: Dag,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 2.0),
    intercept_range: tuple[float, float] = (-1.0, 1.0),
) -> Scm:
    """All-binary model: every node logistic in its parents."""
    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    mechanisms = {}
    for node in dag.nodes:
        weights = {
            p: float(rng.uniform(lo, hi) * rng.choice([-1.0, 1.0])) for p in dag.parents(node)
        }
        intercept = float(rng.uniform(*intercept_range))
        mechanisms[node] = Mechanism("logistic", weights, intercept)
    return Scm(dag, mechanisms, {})
