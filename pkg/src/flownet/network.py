"""Constrained networks and the orientation-compatibility pipeline.

A network couples a directed graph with per-edge rational flow intervals
[lower, upper] and, optionally, terminal vertices where constant flows
enter or leave.  Three exact transformations bring any such network into
*compatible* form (upper >= lower >= 0 on every edge, never both zero):

  absorb   -- realize the terminal flows as steady edge flows and fold
              them into the intervals,
  split    -- divide each edge whose interval straddles 0 into two
              parallel one-directional edges,
  reorient -- flip edges whose interval is nonpositive, negating it.

Every step records an invertible :class:`EdgeMap`, so flows and
controller states translate back and forth between the original and the
normalized network.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import NoMatchingError, ValidationError
from .graph import DirectedGraph, weakly_connected_components


def _frac_vec(values: Sequence, length: int, what: str) -> tuple[Fraction, ...]:
    out = tuple(Fraction(v) for v in values)
    if len(out) != length:
        raise ValidationError(f"{what}: expected {length} entries, got {len(out)}")
    return out


@dataclass(frozen=True)
class Terminals:
    """Terminal columns (vertex, sign) and the constant flow through each.

    sign +1 means flow enters the network at the vertex, -1 that it leaves.
    """

    columns: tuple[tuple[int, int], ...]
    flows: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "columns", tuple((int(v), int(s)) for v, s in self.columns)
        )
        object.__setattr__(self, "flows", tuple(Fraction(f) for f in self.flows))
        if len(self.columns) != len(self.flows):
            raise ValidationError("terminals: one flow value per column required")
        for vertex, sign in self.columns:
            if sign not in (-1, 1):
                raise ValidationError("terminal sign must be +1 or -1")
            if vertex < 1:
                raise ValidationError("terminal vertex ids are 1-based")

    def injection(self, vertex_count: int) -> tuple[Fraction, ...]:
        """Net constant inflow per vertex (the E*d vector)."""
        net = [Fraction(0)] * vertex_count
        for (vertex, sign), flow in zip(self.columns, self.flows):
            if vertex > vertex_count:
                raise ValidationError(f"terminal vertex {vertex} outside graph")
            net[vertex - 1] += sign * flow
        return tuple(net)


@dataclass(frozen=True)
class ConstrainedNetwork:
    graph: DirectedGraph
    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]
    terminals: Terminals | None = None

    def __post_init__(self):
        m = self.graph.edge_count
        object.__setattr__(self, "lower", _frac_vec(self.lower, m, "lower bounds"))
        object.__setattr__(self, "upper", _frac_vec(self.upper, m, "upper bounds"))
        for eid in range(1, m + 1):
            if self.lower[eid - 1] > self.upper[eid - 1]:
                raise ValidationError(f"edge {eid}: lower bound exceeds upper bound")
        if self.terminals is not None:
            self.terminals.injection(self.graph.vertex_count)

    @property
    def edge_count(self) -> int:
        return self.graph.edge_count

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    def interval(self, edge_id: int) -> tuple[Fraction, Fraction]:
        return self.lower[edge_id - 1], self.upper[edge_id - 1]

    @property
    def is_compatible(self) -> bool:
        """Orientation compatible with the constraints: u >= l >= 0, not both 0."""
        if self.terminals is not None:
            return False
        return all(
            u >= l >= 0 and (l, u) != (0, 0)
            for l, u in zip(self.lower, self.upper)
        )

    def replace_bounds(self, lower, upper, terminals=None) -> "ConstrainedNetwork":
        return ConstrainedNetwork(self.graph, lower, upper, terminals)


@dataclass(frozen=True)
class EdgeMapEntry:
    """One normalized edge: which original edge it carries, with what sign."""

    source: int
    sign: int
    lower: Fraction
    upper: Fraction


@dataclass(frozen=True)
class EdgeMap:
    """Invertible flow translation between an original and a normalized net.

    normalized flow = sign * (original flow + shift[source]), restricted to
    the entry's sub-interval; split edges contribute additively.  `dropped`
    lists original edges whose shifted interval collapsed to [0,0] (their
    flow is forced to -shift).
    """

    source_edge_count: int
    shift: tuple[Fraction, ...]
    entries: tuple[EdgeMapEntry, ...]
    dropped: tuple[int, ...] = ()

    def flow_to_source(self, normalized_flow: Sequence) -> tuple:
        """Map a normalized-feasible flow vector back to original coordinates."""
        if len(normalized_flow) != len(self.entries):
            raise ValidationError("flow length does not match normalized edge count")
        out = [-s for s in self.shift]
        for entry, value in zip(self.entries, normalized_flow):
            out[entry.source - 1] += entry.sign * value
        return tuple(out)

    def flow_to_normalized(self, source_flow: Sequence) -> tuple:
        """Map an original-feasible flow vector into normalized coordinates."""
        if len(source_flow) != self.source_edge_count:
            raise ValidationError("flow length does not match original edge count")
        out = []
        for entry in self.entries:
            shifted = source_flow[entry.source - 1] + self.shift[entry.source - 1]
            value = entry.sign * shifted
            value = min(max(value, entry.lower), entry.upper)
            out.append(value)
        return tuple(out)

    def controller_to_normalized(self, controller: Sequence) -> tuple:
        """Translate controller states; split halves inherit the same value."""
        if len(controller) != self.source_edge_count:
            raise ValidationError("controller length does not match original edge count")
        return tuple(
            entry.sign * (controller[entry.source - 1] - self.shift[entry.source - 1])
            for entry in self.entries
        )

    @property
    def is_identity(self) -> bool:
        return (
            not self.dropped
            and all(s == 0 for s in self.shift)
            and len(self.entries) == self.source_edge_count
            and all(
                entry.source == j and entry.sign == 1
                for j, entry in enumerate(self.entries, start=1)
            )
        )


def _identity_entries(net: ConstrainedNetwork) -> list[EdgeMapEntry]:
    return [
        EdgeMapEntry(eid, 1, net.lower[eid - 1], net.upper[eid - 1])
        for eid in range(1, net.edge_count + 1)
    ]


def solve_matching(net: ConstrainedNetwork) -> tuple[Fraction, ...]:
    """Steady edge flows carrying the terminal in/outflows.

    Solves incidence * flow = injection exactly by rooting a spanning tree
    in each weak component: off-tree entries are pinned to 0 and tree
    entries aggregate the subtree demands.  Raises NoMatchingError when a
    component's in/outflows do not cancel (no steady state exists).
    """
    if net.terminals is None:
        raise ValidationError("solve_matching needs terminal data")
    g = net.graph
    demand = list(net.terminals.injection(g.vertex_count))

    for comp in weakly_connected_components(g):
        if sum(demand[v - 1] for v in comp) != 0:
            raise NoMatchingError(
                f"in/outflows on component {comp} sum to "
                f"{sum(demand[v - 1] for v in comp)}, not zero"
            )

    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.vertex_count + 1)]
    for eid, (tail, head) in enumerate(g.edges, start=1):
        adj[tail].append((eid, head))
        adj[head].append((eid, tail))

    flow = [Fraction(0)] * g.edge_count
    visited = [False] * (g.vertex_count + 1)
    for root in range(1, g.vertex_count + 1):
        if visited[root]:
            continue
        visited[root] = True
        order: list[int] = [root]
        parent_edge: dict[int, int] = {}
        queue = [root]
        while queue:
            v = queue.pop(0)
            for eid, w in adj[v]:
                if not visited[w]:
                    visited[w] = True
                    parent_edge[w] = eid
                    order.append(w)
                    queue.append(w)
        for v in reversed(order[1:]):
            eid = parent_edge[v]
            _, head = g.endpoints(eid)
            sign = 1 if head == v else -1
            flow[eid - 1] = sign * demand[v - 1]
            other = g.endpoints(eid)[0] if head == v else g.endpoints(eid)[1]
            demand[other - 1] += demand[v - 1]
            demand[v - 1] = Fraction(0)
        assert demand[root - 1] == 0
    return tuple(flow)


def absorb_disturbance(
    net: ConstrainedNetwork,
) -> tuple[ConstrainedNetwork, tuple[Fraction, ...]]:
    """Fold the terminal flows into the constraint intervals.

    Returns the terminal-free network with intervals shifted by the steady
    flow vector, plus that vector (controller states translate as
    xc' = xc - shift).
    """
    shift = solve_matching(net)
    lower = tuple(l + s for l, s in zip(net.lower, shift))
    upper = tuple(u + s for u, s in zip(net.upper, shift))
    return net.replace_bounds(lower, upper, terminals=None), shift


def split_bidirectional(
    net: ConstrainedNetwork,
) -> tuple[ConstrainedNetwork, EdgeMap]:
    """Divide every edge whose interval straddles 0 into two parallel edges.

    The clamp of a straddling interval is the sum of the clamps of its
    negative and positive parts, so the split network carries exactly the
    same flows.
    """
    if net.terminals is not None:
        raise ValidationError("absorb the terminal flows before splitting")
    zero = Fraction(0)
    edges: list[tuple[int, int]] = []
    lower: list[Fraction] = []
    upper: list[Fraction] = []
    entries: list[EdgeMapEntry] = []
    for eid, (tail, head) in enumerate(net.graph.edges, start=1):
        l, u = net.interval(eid)
        if l < 0 < u:
            edges.append((tail, head))
            lower.append(l)
            upper.append(zero)
            entries.append(EdgeMapEntry(eid, 1, l, zero))
            edges.append((tail, head))
            lower.append(zero)
            upper.append(u)
            entries.append(EdgeMapEntry(eid, 1, zero, u))
        else:
            edges.append((tail, head))
            lower.append(l)
            upper.append(u)
            entries.append(EdgeMapEntry(eid, 1, l, u))
    split = ConstrainedNetwork(
        DirectedGraph(net.vertex_count, tuple(edges)), lower, upper
    )
    emap = EdgeMap(
        net.edge_count, (zero,) * net.edge_count, tuple(entries)
    )
    return split, emap


def reorient(net: ConstrainedNetwork) -> tuple[ConstrainedNetwork, EdgeMap]:
    """Flip every edge with a nonpositive interval; drop [0,0] edges.

    Requires the straddling edges to be split already.  The result is
    compatible: upper >= lower >= 0 with at least one strict inequality.
    """
    if net.terminals is not None:
        raise ValidationError("absorb the terminal flows before reorienting")
    edges: list[tuple[int, int]] = []
    lower: list[Fraction] = []
    upper: list[Fraction] = []
    entries: list[EdgeMapEntry] = []
    dropped: list[int] = []
    for eid, (tail, head) in enumerate(net.graph.edges, start=1):
        l, u = net.interval(eid)
        if l < 0 < u:
            raise ValidationError(f"edge {eid} straddles 0; split it first")
        if l == 0 and u == 0:
            dropped.append(eid)
        elif u <= 0:
            edges.append((head, tail))
            lower.append(-u)
            upper.append(-l)
            entries.append(EdgeMapEntry(eid, -1, -u, -l))
        else:
            edges.append((tail, head))
            lower.append(l)
            upper.append(u)
            entries.append(EdgeMapEntry(eid, 1, l, u))
    flipped = ConstrainedNetwork(
        DirectedGraph(net.vertex_count, tuple(edges)), lower, upper
    )
    emap = EdgeMap(
        net.edge_count,
        (Fraction(0),) * net.edge_count,
        tuple(entries),
        tuple(dropped),
    )
    return flipped, emap


def normalize(net: ConstrainedNetwork) -> tuple[ConstrainedNetwork, EdgeMap]:
    """absorb (if terminals) -> split -> reorient, with one composed EdgeMap."""
    if net.terminals is not None:
        absorbed, shift = absorb_disturbance(net)
    else:
        absorbed, shift = net, (Fraction(0),) * net.edge_count
    split, split_map = split_bidirectional(absorbed)
    compatible, flip_map = reorient(split)

    entries = []
    for entry in flip_map.entries:
        parent = split_map.entries[entry.source - 1]
        entries.append(
            EdgeMapEntry(parent.source, parent.sign * entry.sign, entry.lower, entry.upper)
        )
    dropped = tuple(split_map.entries[eid - 1].source for eid in flip_map.dropped)
    emap = EdgeMap(net.edge_count, shift, tuple(entries), dropped)
    return compatible, emap
