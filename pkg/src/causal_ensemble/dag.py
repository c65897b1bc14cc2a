"""Directed acyclic graphs over named variables.

The Dag is the lingua franca of the package: structural models carry one,
discovery algorithms emit edge sets over one variable list, the consensus
builder repairs one, and identification queries walk one. Instances are
immutable; derived structure (parent lists, ancestor sets) is cached.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or unknown variables."""


def is_acyclic(edges: Iterable[tuple[int, int]], n: int) -> bool:
    """True iff the directed graph on nodes 0..n-1 admits a topological order."""
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b in edges:
        if a == b:
            return False
        children[a].append(b)
        indeg[b] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == n


class Dag:
    def __init__(self, nodes: Sequence[str], edges: Iterable[tuple[str, str]]):
        self.nodes: tuple[str, ...] = tuple(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError("duplicate node names")
        self._idx = {name: i for i, name in enumerate(self.nodes)}
        edge_list = []
        for a, b in edges:
            if a not in self._idx or b not in self._idx:
                raise GraphError(f"edge ({a!r}, {b!r}) references unknown node")
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            edge_list.append((a, b))
        self.edges: frozenset[tuple[str, str]] = frozenset(edge_list)

        n = len(self.nodes)
        parents: list[list[int]] = [[] for _ in range(n)]
        children: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            ia, ib = self._idx[a], self._idx[b]
            parents[ib].append(ia)
            children[ia].append(ib)
        self._parents = tuple(tuple(sorted(p)) for p in parents)
        self._children = tuple(tuple(sorted(c)) for c in children)

        if not is_acyclic([(self._idx[a], self._idx[b]) for a, b in self.edges], n):
            raise GraphError("graph contains a cycle")
        self._desc_cache: dict[int, frozenset[int]] = {}
        self._anc_cache: dict[int, frozenset[int]] = {}

    # -- basic structure ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index(self, node: str) -> int:
        try:
            return self._idx[node]
        except KeyError:
            raise GraphError(f"unknown variable {node!r}") from None

    def parents(self, node: str) -> tuple[str, ...]:
        return tuple(self.nodes[i] for i in self._parents[self.index(node)])

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(self.nodes[i] for i in self._children[self.index(node)])

    def topological_order(self) -> list[str]:
        indeg = [len(p) for p in self._parents]
        # heap-free Kahn with deterministic (index) tie-breaking
        ready = sorted(i for i in range(self.n) if indeg[i] == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        return [self.nodes[i] for i in order]

    def _descendants_idx(self, i: int) -> frozenset[int]:
        cached = self._desc_cache.get(i)
        if cached is None:
            seen: set[int] = set()
            stack = list(self._children[i])
            while stack:
                v = stack.pop()
                if v not in seen:
                    seen.add(v)
                    stack.extend(self._children[v])
            cached = frozenset(seen)
            self._desc_cache[i] = cached
        return cached

    def _ancestors_idx(self, i: int) -> frozenset[int]:
        cached = self._anc_cache.get(i)
        if cached is None:
            seen: set[int] = set()
            stack = list(self._parents[i])
            while stack:
                v = stack.pop()
                if v not in seen:
                    seen.add(v)
                    stack.extend(self._parents[v])
            cached = frozenset(seen)
            self._anc_cache[i] = cached
        return cached

    def descendants(self, node: str) -> set[str]:
        """Strict descendants (node itself excluded)."""
        return {self.nodes[j] for j in self._descendants_idx(self.index(node))}

    def ancestors(self, node: str) -> set[str]:
        """Strict ancestors (node itself excluded)."""
        return {self.nodes[j] for j in self._ancestors_idx(self.index(node))}

    def remove_outgoing(self, node: str) -> "Dag":
        """Copy with ``node``'s outgoing edges deleted (backdoor graph)."""
        self.index(node)
        return Dag(self.nodes, [(a, b) for a, b in self.edges if a != node])

    def remove_incoming(self, nodes: Iterable[str]) -> "Dag":
        """Copy with incoming edges of ``nodes`` deleted (graph mutilation)."""
        dropped = set(nodes)
        for v in dropped:
            self.index(v)
        return Dag(self.nodes, [(a, b) for a, b in self.edges if b not in dropped])

    def adjacency_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n), dtype=int)
        for a, b in self.edges:
            mat[self._idx[a], self._idx[b]] = 1
        return mat

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Dag({self.n} nodes, {len(self.edges)} edges)"

    def to_dot(self, edge_labels: dict[tuple[str, str], str] | None = None) -> str:
        lines = ["digraph g {"]
        for node in self.nodes:
            lines.append(f'  "{node}";')
        for a, b in sorted(self.edges):
            label = ""
            if edge_labels and (a, b) in edge_labels:
                label = f' [label="{edge_labels[(a, b)]}"]'
            lines.append(f'  "{a}" -> "{b}"{label};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def d_separated(dag: Dag, x: str, y: str, z: Iterable[str]) -> bool:
    """True iff every path between ``x`` and ``y`` is blocked given ``z``.

    Reachability formulation: starting from ``x``, a ball travels edges in
    both directions; at a non-collider it is stopped by membership in ``z``,
    at a collider it passes only if the collider has a descendant (or
    itself) in ``z``. ``x`` and ``y`` must be distinct and outside ``z``.
    """
    zi = frozenset(dag.index(v) for v in z)
    xi, yi = dag.index(x), dag.index(y)
    if xi == yi:
        raise GraphError("x and y must differ")
    if xi in zi or yi in zi:
        raise GraphError("x and y must not be conditioned on")
    return _reachable_blocked(dag, xi, yi, zi)


def _reachable_blocked(dag: Dag, xi: int, yi: int, zi: frozenset[int]) -> bool:
    # z and all ancestors of z: the set that opens colliders
    opens = set(zi)
    stack = list(zi)
    while stack:
        v = stack.pop()
        for p in dag._parents[v]:
            if p not in opens:
                opens.add(p)
                stack.append(p)

    # state (node, arrived_via_incoming_edge); ball starts at x moving out
    visited_up = [False] * dag.n    # reached while traveling toward parents
    visited_down = [False] * dag.n  # reached via an incoming edge
    stack2: list[tuple[int, bool]] = [(xi, False)]
    while stack2:
        v, came_down = stack2.pop()
        if v == yi:
            return False
        if came_down:
            if visited_down[v]:
                continue
            visited_down[v] = True
            # collider at v opens only if v in z or has a conditioned descendant
            if v in opens:
                for p in dag._parents[v]:
                    stack2.append((p, False))
            if v not in zi:
                for c in dag._children[v]:
                    stack2.append((c, True))
        else:
            if visited_up[v]:
                continue
            visited_up[v] = True
            if v in zi:
                continue
            for p in dag._parents[v]:
                stack2.append((p, False))
            for c in dag._children[v]:
                stack2.append((c, True))
    return True


def random_dag(n_nodes: int, edge_prob: float, seed: int, prefix: str = "x") -> Dag:
    """Erdos-Renyi DAG over a shuffled topological order; acyclic by construction."""
    if not 0.0 <= edge_prob <= 1.0:
        raise GraphError(f"edge_prob must be in [0,1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    names = [f"{prefix}{i}" for i in range(n_nodes)]
    order = rng.permutation(n_nodes)
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.append((names[order[i]], names[order[j]]))
    return Dag(names, edges)
