"""Directed multigraphs, incidence algebra, connectivity, and positive circuits.

Everything here is exact: incidence entries are integers and rank
computations run over rationals.  Vertices are numbered 1..n and edges
1..m; both stay stable under every query.  Parallel edges are allowed
(normalization creates them), self-loops are not.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import CircuitCapError, ValidationError

DEFAULT_CYCLE_CAP = 10**6


@dataclass(frozen=True)
class DirectedGraph:
    """A directed multigraph given by its vertex count and ordered edge list."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValidationError("graph needs at least one vertex")
        object.__setattr__(self, "edges", tuple((int(t), int(h)) for t, h in self.edges))
        for eid, (tail, head) in enumerate(self.edges, start=1):
            if not (1 <= tail <= self.vertex_count and 1 <= head <= self.vertex_count):
                raise ValidationError(f"edge {eid}: endpoint outside 1..{self.vertex_count}")
            if tail == head:
                raise ValidationError(f"edge {eid}: self-loops are not allowed")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def endpoints(self, edge_id: int) -> tuple[int, int]:
        """(tail, head) of a 1-based edge id."""
        return self.edges[edge_id - 1]


def incidence_matrix(g: DirectedGraph) -> np.ndarray:
    """Vertex-by-edge incidence matrix: +1 at the head, -1 at the tail."""
    mat = np.zeros((g.vertex_count, g.edge_count), dtype=np.int64)
    for j, (tail, head) in enumerate(g.edges):
        mat[tail - 1, j] = -1
        mat[head - 1, j] = 1
    return mat


def incidence_apply(g: DirectedGraph, flow: Sequence) -> tuple:
    """Exact product of the incidence matrix with an edge vector.

    Works for Fractions, ints, and floats alike; entry v is the net
    inflow at vertex v under the given edge flows.
    """
    if len(flow) != g.edge_count:
        raise ValidationError("flow vector length does not match edge count")
    zero = 0 * sum(flow[:1], 0)  # preserves Fraction-ness of the input
    net = [zero] * g.vertex_count
    for (tail, head), value in zip(g.edges, flow):
        net[tail - 1] -= value
        net[head - 1] += value
    return tuple(net)


def _undirected_adjacency(g: DirectedGraph, edge_ids: Iterable[int]):
    adj: list[list[int]] = [[] for _ in range(g.vertex_count + 1)]
    for eid in edge_ids:
        tail, head = g.endpoints(eid)
        adj[tail].append(head)
        adj[head].append(tail)
    return adj


def weakly_connected_components(
    g: DirectedGraph, edge_subset: Iterable[int] | None = None
) -> tuple[tuple[int, ...], ...]:
    """Connected components of the orientation-blind subgraph (V, edge_subset).

    Components are returned sorted by their smallest vertex, each as an
    ascending vertex tuple.  Isolated vertices appear as singletons.
    """
    ids = range(1, g.edge_count + 1) if edge_subset is None else sorted(set(edge_subset))
    for eid in ids:
        if not 1 <= eid <= g.edge_count:
            raise ValidationError(f"edge id {eid} outside 1..{g.edge_count}")
    adj = _undirected_adjacency(g, ids)
    seen = [False] * (g.vertex_count + 1)
    components = []
    for start in range(1, g.vertex_count + 1):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        components.append(tuple(sorted(comp)))
    return tuple(components)


def is_weakly_connected(g: DirectedGraph) -> bool:
    return len(weakly_connected_components(g)) == 1


def contains_spanning_tree(g: DirectedGraph, edge_subset: Iterable[int]) -> bool:
    """True iff the orientation-blind subgraph connects all n vertices."""
    return len(weakly_connected_components(g, edge_subset)) == 1


def _reachable(n: int, adj: Sequence[Sequence[int]], start: int) -> int:
    seen = [False] * (n + 1)
    seen[start] = True
    stack = [start]
    count = 1
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every vertex reaches every other along edge directions."""
    n = g.vertex_count
    if n == 1:
        return True
    fwd: list[list[int]] = [[] for _ in range(n + 1)]
    bwd: list[list[int]] = [[] for _ in range(n + 1)]
    for tail, head in g.edges:
        fwd[tail].append(head)
        bwd[head].append(tail)
    return _reachable(n, fwd, 1) == n and _reachable(n, bwd, 1) == n


def _cycle_cap(cap: int | None) -> int:
    if cap is not None:
        return cap
    env = os.environ.get("FLOWNET_MAX_CYCLES")
    return int(env) if env else DEFAULT_CYCLE_CAP


def circuit_vector(g: DirectedGraph, edge_ids: Iterable[int]) -> tuple[int, ...]:
    """{0,1} edge-space vector supported on the given edge ids."""
    vec = [0] * g.edge_count
    for eid in edge_ids:
        vec[eid - 1] = 1
    return tuple(vec)


def enumerate_positive_circuits(
    g: DirectedGraph, cap: int | None = None
) -> list[tuple[int, ...]]:
    """All simple directed cycles of g as {0,1} edge vectors.

    Parallel edges give distinct circuits.  Output order is deterministic:
    lexicographic by the sorted edge-id support.  Enumeration is a
    backtracking search anchored at each cycle's smallest vertex; the cap
    (default 10^6, overridable via FLOWNET_MAX_CYCLES) guards against
    combinatorial blow-up.
    """
    cap = _cycle_cap(cap)
    out_edges: list[list[tuple[int, int]]] = [[] for _ in range(g.vertex_count + 1)]
    for eid, (tail, head) in enumerate(g.edges, start=1):
        out_edges[tail].append((eid, head))

    supports: list[tuple[int, ...]] = []
    for anchor in range(1, g.vertex_count + 1):
        # Depth-first over simple paths through vertices >= anchor; every
        # directed cycle is found exactly once, from its smallest vertex.
        on_path = [False] * (g.vertex_count + 1)
        on_path[anchor] = True
        path_edges: list[int] = []
        stack = [iter(out_edges[anchor])]
        trail = [anchor]
        while stack:
            advanced = False
            for eid, head in stack[-1]:
                if head == anchor:
                    supports.append(tuple(sorted(path_edges + [eid])))
                    if len(supports) > cap:
                        raise CircuitCapError(
                            f"more than {cap} directed cycles; raise the cap to proceed"
                        )
                elif head > anchor and not on_path[head]:
                    on_path[head] = True
                    trail.append(head)
                    path_edges.append(eid)
                    stack.append(iter(out_edges[head]))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                v = trail.pop()
                on_path[v] = False
                if path_edges:
                    path_edges.pop()
    supports.sort()
    return [circuit_vector(g, ids) for ids in supports]


def rational_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a matrix by exact Gaussian elimination over the rationals."""
    mat = [[Fraction(x) for x in row] for row in rows]
    if not mat:
        return 0
    n_rows, n_cols = len(mat), len(mat[0])
    rank = 0
    col = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        inv = 1 / mat[rank][col]
        mat[rank] = [x * inv for x in mat[rank]]
        for r in range(n_rows):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        if rank == n_rows:
            break
    return rank
