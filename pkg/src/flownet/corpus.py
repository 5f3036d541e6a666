"""Test corpora: exhaustive small networks and seeded random generators.

The agreement sweep cross-checks the verdict algorithm against the
flow-range oracle over every weakly connected multigraph structure up to
the requested size.  Interval assignments with small integer endpoints
are enumerated exhaustively where the cross product stays small and
sampled deterministically (seeded) elsewhere, so a sweep is reproducible
end to end.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Iterator

from .errors import InfeasibleError
from .graph import DirectedGraph, is_weakly_connected
from .ipc import FAILS, HOLDS, INFEASIBLE, check_ipc, check_ipc_oracle
from .network import ConstrainedNetwork, Terminals

#: interval endpoints {0..3} with lower <= upper, minus the forbidden (0,0)
INTERVAL_PAIRS: tuple[tuple[Fraction, Fraction], ...] = tuple(
    (Fraction(l), Fraction(u))
    for l in range(4)
    for u in range(l, 4)
    if (l, u) != (0, 0)
)


def weakly_connected_structures(
    max_vertices: int = 4, max_edges: int = 6
) -> Iterator[DirectedGraph]:
    """Every weakly connected multigraph with n <= max_vertices, m <= max_edges.

    Edges are multisets over the ordered vertex pairs (parallel edges
    included), listed in sorted order, so each structure appears once and
    the iteration order is deterministic.
    """
    yield DirectedGraph(1, ())
    for n in range(2, max_vertices + 1):
        arc_types = [
            (a, b) for a in range(1, n + 1) for b in range(1, n + 1) if a != b
        ]
        for m in range(n - 1, max_edges + 1):
            for combo in combinations_with_replacement(arc_types, m):
                g = DirectedGraph(n, combo)
                if is_weakly_connected(g):
                    yield g


def exhaustive_interval_cases(g: DirectedGraph) -> Iterator[ConstrainedNetwork]:
    """The full cross product of interval assignments for one structure."""
    for bounds in product(INTERVAL_PAIRS, repeat=g.edge_count):
        yield ConstrainedNetwork(
            g, [b[0] for b in bounds], [b[1] for b in bounds]
        )


def sampled_interval_cases(
    g: DirectedGraph, rng: random.Random, count: int
) -> Iterator[ConstrainedNetwork]:
    for _ in range(count):
        bounds = [rng.choice(INTERVAL_PAIRS) for _ in range(g.edge_count)]
        yield ConstrainedNetwork(g, [b[0] for b in bounds], [b[1] for b in bounds])


def verdict_corpus(
    max_vertices: int = 4,
    max_edges: int = 6,
    exhaustive_edge_limit: int = 3,
    samples_per_structure: int = 2,
    seed: int = 0,
) -> Iterator[ConstrainedNetwork]:
    """Agreement-sweep corpus over all structures up to the given size.

    Structures with few edges get every interval assignment; the rest get
    `samples_per_structure` seeded draws, so the corpus is exhaustive in
    the graph structure and dense in the constraints.
    """
    rng = random.Random(seed)
    for g in weakly_connected_structures(max_vertices, max_edges):
        if g.edge_count <= exhaustive_edge_limit:
            yield from exhaustive_interval_cases(g)
        else:
            yield from sampled_interval_cases(g, rng, samples_per_structure)


@dataclass
class SweepSummary:
    cases: int = 0
    holds: int = 0
    fails: int = 0
    infeasible: int = 0
    disagreements: list[ConstrainedNetwork] = field(default_factory=list)

    @property
    def agreement(self) -> bool:
        return not self.disagreements


def agreement_sweep(networks) -> SweepSummary:
    """Run verdict vs. oracle on every network; collect any disagreement."""
    summary = SweepSummary()
    for net in networks:
        summary.cases += 1
        verdict = check_ipc(net)
        try:
            oracle = check_ipc_oracle(net)
        except InfeasibleError:
            oracle = INFEASIBLE
        if verdict.status == INFEASIBLE:
            summary.infeasible += 1
            agreed = oracle == INFEASIBLE
        else:
            summary.holds += verdict.status == HOLDS
            summary.fails += verdict.status == FAILS
            agreed = oracle is not INFEASIBLE and oracle == (verdict.status == HOLDS)
        if not agreed:
            summary.disagreements.append(net)
    return summary


def random_compatible_network(
    rng: random.Random,
    max_vertices: int = 8,
    max_extra_edges: int = 6,
    widen: bool = False,
) -> ConstrainedNetwork:
    """Random weakly connected compatible network with small integer bounds.

    A random spanning tree with random edge orientations guarantees weak
    connectivity; extra arcs (parallel ones allowed) add cycles.  With
    `widen`, intervals all start at 0, which biases towards rich
    circulation polytopes.
    """
    n = rng.randint(2, max_vertices)
    edges: list[tuple[int, int]] = []
    for v in range(2, n + 1):
        w = rng.randint(1, v - 1)
        edges.append((v, w) if rng.random() < 0.5 else (w, v))
    for _ in range(rng.randint(0, max_extra_edges)):
        a = rng.randint(1, n)
        b = rng.randint(1, n)
        if a != b:
            edges.append((a, b))
    rng.shuffle(edges)
    lower, upper = [], []
    for _ in edges:
        if widen:
            lower.append(Fraction(0))
            upper.append(Fraction(rng.randint(1, 3)))
        else:
            l, u = rng.choice(INTERVAL_PAIRS)
            lower.append(l)
            upper.append(u)
    return ConstrainedNetwork(DirectedGraph(n, edges), lower, upper)


def random_holds_network(
    rng: random.Random, max_vertices: int = 8, max_extra_edges: int = 6
) -> ConstrainedNetwork:
    """Random network on which the interior point condition holds."""
    while True:
        net = random_compatible_network(
            rng, max_vertices, max_extra_edges, widen=rng.random() < 0.7
        )
        if check_ipc(net).holds:
            return net


def random_consensus_network(
    rng: random.Random,
    max_vertices: int = 8,
    max_extra_edges: int = 6,
    min_width: int = 2,
    max_width: int = 4,
) -> ConstrainedNetwork:
    """Random network tuned for finite-horizon consensus experiments.

    Intervals straddle 0 on both sides by at least `min_width`.  The
    normalized twin then satisfies the interior point condition, and the
    conserved kernel part of any moderate controller state lands strictly
    inside the constraint box, so the terminal phase is exponential rather
    than a slow boundary crawl.  Saturation still engages during
    transients for storage values of a few units.
    """
    n = rng.randint(2, max_vertices)
    edges: list[tuple[int, int]] = []
    for v in range(2, n + 1):
        w = rng.randint(1, v - 1)
        edges.append((v, w) if rng.random() < 0.5 else (w, v))
    for _ in range(rng.randint(0, max_extra_edges)):
        a = rng.randint(1, n)
        b = rng.randint(1, n)
        if a != b:
            edges.append((a, b))
    rng.shuffle(edges)
    lower = [Fraction(-rng.randint(min_width, max_width)) for _ in edges]
    upper = [Fraction(rng.randint(min_width, max_width)) for _ in edges]
    return ConstrainedNetwork(DirectedGraph(n, edges), lower, upper)


def random_fails_network(
    rng: random.Random, max_vertices: int = 6, max_extra_edges: int = 4
) -> ConstrainedNetwork:
    """Random feasible network on which the interior point condition fails."""
    while True:
        net = random_compatible_network(rng, max_vertices, max_extra_edges)
        if check_ipc(net).status == FAILS:
            return net


def random_terminal_network(
    rng: random.Random, max_vertices: int = 6
) -> ConstrainedNetwork:
    """Random network with balanced constant in/outflows at two terminals.

    The injections cancel (1^T E d = 0), so the matching condition is
    solvable on the weakly connected graph.
    """
    base = random_compatible_network(rng, max_vertices, max_extra_edges=4, widen=True)
    n = base.vertex_count
    v_in = rng.randint(1, n)
    v_out = rng.randint(1, n)
    while v_out == v_in and n > 1:
        v_out = rng.randint(1, n)
    flow = Fraction(rng.randint(1, 9), rng.randint(1, 10))
    terminals = Terminals(((v_in, 1), (v_out, -1)), (flow, flow))
    return ConstrainedNetwork(base.graph, base.lower, base.upper, terminals)


def distinct_feasible_circulations(net: ConstrainedNetwork, count: int):
    """Up to `count` distinct feasible circulations, deterministically.

    Starts from the canonical feasible point and pushes varying amounts
    around residual cycles; networks with a full-dimensional circulation
    polytope yield plenty of distinct points.
    """
    from .circulation import (
        augment_circulation,
        feasible_circulation,
        residual_graph,
        residual_path,
    )

    base = feasible_circulation(net)
    found = {base}
    out = [base]
    res = residual_graph(net, base)
    for idx, arc in enumerate(res.arcs):
        if len(out) >= count:
            break
        path = residual_path(res, arc.head, arc.tail, skip=idx)
        if path is None:
            continue
        cycle = [arc] + path
        bottleneck = min(a.slack for a in cycle)
        for denominator in (1, 2, 3, 5):
            z = augment_circulation(base, cycle, bottleneck / denominator)
            if z not in found:
                found.add(z)
                out.append(z)
                if len(out) >= count:
                    break
    return out


def random_strongly_connected_graph(
    rng: random.Random, max_vertices: int = 6, max_extra_edges: int = 6
) -> DirectedGraph:
    """Random strongly connected multigraph: a vertex cycle plus extra arcs."""
    n = rng.randint(2, max_vertices)
    ring = list(range(1, n + 1))
    rng.shuffle(ring)
    edges = [(ring[i], ring[(i + 1) % n]) for i in range(n)]
    for _ in range(rng.randint(0, max_extra_edges)):
        a = rng.randint(1, n)
        b = rng.randint(1, n)
        if a != b:
            edges.append((a, b))
    rng.shuffle(edges)
    return DirectedGraph(n, edges)


def random_circulation(
    rng: random.Random, g: DirectedGraph, max_cycles: int = 4
) -> tuple[Fraction, ...]:
    """Random nonnegative rational circulation: positive mix of random cycles.

    Cycles are random closed directed walks reduced to simple cycles, so
    the construction works on any strongly connected graph without
    enumerating its circuit set.
    """
    out_edges: list[list[tuple[int, int]]] = [[] for _ in range(g.vertex_count + 1)]
    for eid, (tail, head) in enumerate(g.edges, start=1):
        out_edges[tail].append((eid, head))
    z = [Fraction(0)] * g.edge_count
    for _ in range(rng.randint(1, max_cycles)):
        start = rng.randint(1, g.vertex_count)
        path: list[int] = []
        seen = {start: 0}
        v = start
        while True:
            eid, w = rng.choice(out_edges[v])
            path.append(eid)
            if w in seen:
                cycle = path[seen[w]:]
                break
            seen[w] = len(path)
            v = w
        weight = Fraction(rng.randint(1, 12), rng.randint(1, 8))
        for eid in cycle:
            z[eid - 1] += weight
    return tuple(z)
