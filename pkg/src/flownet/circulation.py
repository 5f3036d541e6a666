"""Exact circulation machinery on compatible networks.

All arithmetic here is rational: verdicts downstream hinge on strict
inequalities, so nothing is allowed to round.  Feasibility under interval
bounds reduces to one max-flow with a super source/sink; per-edge flow
ranges and the augmentation steps of the verdict algorithm both run on
the residual graph of a feasible circulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DecompositionError, InfeasibleError, ValidationError
from .graph import DirectedGraph, circuit_vector, incidence_apply
from .network import ConstrainedNetwork


class _MaxFlow:
    """Edmonds-Karp with rational capacities and deterministic arc order."""

    def __init__(self, node_count: int):
        self.adj: list[list[int]] = [[] for _ in range(node_count)]
        self.to: list[int] = []
        self.cap: list[Fraction] = []

    def add(self, u: int, v: int, capacity: Fraction) -> int:
        """Add arc u->v; returns its index (reverse arc is index^1)."""
        idx = len(self.to)
        self.adj[u].append(idx)
        self.to.append(v)
        self.cap.append(capacity)
        self.adj[v].append(idx + 1)
        self.to.append(u)
        self.cap.append(Fraction(0))
        return idx

    def run(self, source: int, sink: int) -> Fraction:
        total = Fraction(0)
        while True:
            parent_arc = [-1] * len(self.adj)
            parent_arc[source] = -2
            queue = [source]
            head = 0
            while head < len(queue) and parent_arc[sink] == -1:
                u = queue[head]
                head += 1
                for idx in self.adj[u]:
                    v = self.to[idx]
                    if parent_arc[v] == -1 and self.cap[idx] > 0:
                        parent_arc[v] = idx
                        queue.append(v)
            if parent_arc[sink] == -1:
                return total
            bottleneck = None
            v = sink
            while v != source:
                idx = parent_arc[v]
                if bottleneck is None or self.cap[idx] < bottleneck:
                    bottleneck = self.cap[idx]
                v = self.to[idx ^ 1]
            v = sink
            while v != source:
                idx = parent_arc[v]
                self.cap[idx] -= bottleneck
                self.cap[idx ^ 1] += bottleneck
                v = self.to[idx ^ 1]
            total += bottleneck

    def sent(self, arc_index: int, original_capacity: Fraction) -> Fraction:
        return original_capacity - self.cap[arc_index]


def _require_compatible(net: ConstrainedNetwork):
    if not net.is_compatible:
        raise ValidationError("operation requires a compatible network (normalize first)")


def feasible_circulation(net: ConstrainedNetwork) -> tuple[Fraction, ...]:
    """Any circulation within the bounds, or InfeasibleError if none exists.

    Standard reduction: send each edge its lower bound, then repair the
    vertex imbalances through a super source/sink max-flow.  Deterministic
    for a fixed edge order.
    """
    _require_compatible(net)
    g = net.graph
    n, m = g.vertex_count, g.edge_count
    source, sink = 0, n + 1
    mf = _MaxFlow(n + 2)

    edge_arcs = []
    for eid in range(1, m + 1):
        tail, head = g.endpoints(eid)
        l, u = net.interval(eid)
        edge_arcs.append(mf.add(tail, head, u - l))

    excess = [Fraction(0)] * (n + 1)
    for eid in range(1, m + 1):
        tail, head = g.endpoints(eid)
        l = net.lower[eid - 1]
        excess[head] += l
        excess[tail] -= l

    required = Fraction(0)
    for v in range(1, n + 1):
        if excess[v] > 0:
            mf.add(source, v, excess[v])
            required += excess[v]
        elif excess[v] < 0:
            mf.add(v, sink, -excess[v])

    if mf.run(source, sink) < required:
        raise InfeasibleError("no circulation fits the constraint intervals")

    caps = [net.upper[e] - net.lower[e] for e in range(m)]
    return tuple(
        net.lower[e] + mf.sent(edge_arcs[e], caps[e]) for e in range(m)
    )


def _check_feasible(net: ConstrainedNetwork, z: Sequence[Fraction]):
    if len(z) != net.edge_count:
        raise ValidationError("circulation length does not match edge count")
    for eid in range(1, net.edge_count + 1):
        l, u = net.interval(eid)
        if not l <= z[eid - 1] <= u:
            raise ValidationError(f"edge {eid}: flow {z[eid - 1]} outside [{l}, {u}]")
    if any(v != 0 for v in incidence_apply(net.graph, z)):
        raise ValidationError("vector is not a circulation (net vertex flow nonzero)")


def flow_range(
    net: ConstrainedNetwork, z0: Sequence[Fraction], edge_id: int
) -> tuple[Fraction, Fraction]:
    """Exact [min, max] of the flow on one edge over all feasible circulations.

    Rerouting z0 around edge_id is a max-flow between its endpoints in the
    residual graph with edge_id's own arcs removed; the polytope being
    convex, the attainable set is the full interval between the extremes.
    """
    _check_feasible(net, z0)
    g = net.graph
    tail, head = g.endpoints(edge_id)
    z_e = z0[edge_id - 1]
    l_e, u_e = net.interval(edge_id)

    def reroute(src: int, dst: int) -> Fraction:
        mf = _MaxFlow(g.vertex_count + 1)
        for eid in range(1, g.edge_count + 1):
            if eid == edge_id:
                continue
            t, h = g.endpoints(eid)
            l, u = net.interval(eid)
            z = z0[eid - 1]
            if z < u:
                mf.add(t, h, u - z)
            if z > l:
                mf.add(h, t, z - l)
        return mf.run(src, dst)

    z_max = z_e + min(u_e - z_e, reroute(head, tail))
    z_min = z_e - min(z_e - l_e, reroute(tail, head))
    return z_min, z_max


@dataclass(frozen=True)
class ResidualArc:
    tail: int
    head: int
    edge_id: int
    direction: str  # "forward" | "backward"
    slack: Fraction


@dataclass(frozen=True)
class ResidualGraph:
    vertex_count: int
    arcs: tuple[ResidualArc, ...]

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count + 1)]
        for idx, arc in enumerate(self.arcs):
            adj[arc.tail].append(idx)
        return adj


def residual_graph(net: ConstrainedNetwork, z: Sequence[Fraction]) -> ResidualGraph:
    """Permissible perturbation directions of a feasible circulation."""
    _check_feasible(net, z)
    arcs = []
    for eid in range(1, net.edge_count + 1):
        tail, head = net.graph.endpoints(eid)
        l, u = net.interval(eid)
        flow = z[eid - 1]
        if flow < u:
            arcs.append(ResidualArc(tail, head, eid, "forward", u - flow))
        if flow > l:
            arcs.append(ResidualArc(head, tail, eid, "backward", flow - l))
    return ResidualGraph(net.vertex_count, tuple(arcs))


def residual_path(
    res: ResidualGraph, source: int, target: int, skip: int | None = None
) -> list[ResidualArc] | None:
    """Shortest arc path source -> target, BFS in arc order; None if unreachable.

    `skip` excludes one arc index (so a cycle search cannot answer with the
    seed arc itself reversed).
    """
    adjacency = res.adjacency()
    parent: dict[int, int] = {source: -1}
    queue = [source]
    head = 0
    while head < len(queue) and target not in parent:
        v = queue[head]
        head += 1
        for idx in adjacency[v]:
            if idx == skip:
                continue
            w = res.arcs[idx].head
            if w not in parent:
                parent[w] = idx
                queue.append(w)
    if target not in parent:
        return None
    path = []
    v = target
    while parent[v] != -1:
        arc = res.arcs[parent[v]]
        path.append(arc)
        v = arc.tail
    path.reverse()
    return path


def augment_circulation(
    z: Sequence[Fraction], cycle: Sequence[ResidualArc], amount: Fraction
) -> tuple[Fraction, ...]:
    """Push `amount` around a residual cycle (forward arcs up, backward down).

    Any amount below the cycle's minimum slack keeps the result feasible.
    """
    out = [Fraction(v) for v in z]
    for arc in cycle:
        if arc.direction == "forward":
            out[arc.edge_id - 1] += amount
        else:
            out[arc.edge_id - 1] -= amount
    return tuple(out)


def decompose_circulation(
    g: DirectedGraph, z: Sequence[Fraction]
) -> list[tuple[Fraction, tuple[int, ...]]]:
    """Write a nonnegative circulation as a positive combination of circuits.

    Classic flow decomposition: walk along positive-flow edges until a
    vertex repeats, peel off the cycle at its minimum flow, repeat.  The
    reconstruction sum(alpha_i * circuit_i) equals z exactly, with at most
    one term per edge.
    """
    z = [Fraction(v) for v in z]
    if len(z) != g.edge_count:
        raise ValidationError("circulation length does not match edge count")
    if any(v < 0 for v in z):
        raise ValidationError("decomposition requires a nonnegative circulation")
    if any(v != 0 for v in incidence_apply(g, z)):
        raise ValidationError("vector is not a circulation (net vertex flow nonzero)")

    out_edges: list[list[int]] = [[] for _ in range(g.vertex_count + 1)]
    for eid, (tail, _) in enumerate(g.edges, start=1):
        out_edges[tail].append(eid)

    terms: list[tuple[Fraction, tuple[int, ...]]] = []
    while True:
        start = next((e for e in range(1, g.edge_count + 1) if z[e - 1] > 0), None)
        if start is None:
            break
        path = [start]
        position = {g.endpoints(start)[0]: 0}
        current = g.endpoints(start)[1]
        while current not in position:
            position[current] = len(path)
            step = next(
                (e for e in out_edges[current] if z[e - 1] > 0), None
            )
            if step is None:
                raise DecompositionError(
                    f"positive flow strands at vertex {current}; input was no circulation"
                )
            path.append(step)
            current = g.endpoints(step)[1]
        cycle = path[position[current]:]
        weight = min(z[e - 1] for e in cycle)
        for e in cycle:
            z[e - 1] -= weight
        terms.append((weight, circuit_vector(g, cycle)))
    return terms
