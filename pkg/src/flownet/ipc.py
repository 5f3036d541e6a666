"""Interior-point verdicts for load balancing, with witness and counterexample.

A compatible, weakly connected network balances its storage under the
saturated PI loop exactly when some feasible circulation is strictly
inside its interval on a spanning set of edges.  `check_ipc` decides this
by repeatedly augmenting a feasible circulation around residual cycles
that pass through a saturated edge -- one rule that covers both of the
merge cases (edges at opposite bounds, edges at the same bound) -- until
no saturated edge can be freed.  `check_ipc_oracle` decides the same
question independently from per-edge flow ranges, and
`build_counterexample` turns a failing verdict into initial data that
provably freezes the closed loop away from consensus.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .circulation import (
    ResidualArc,
    augment_circulation,
    feasible_circulation,
    flow_range,
    residual_graph,
    residual_path,
)
from .errors import (
    InfeasibleError,
    NotApplicableError,
    NotWeaklyConnectedError,
    ValidationError,
)
from .graph import contains_spanning_tree, weakly_connected_components
from .network import ConstrainedNetwork

HOLDS = "holds"
FAILS = "fails"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class EdgePartition:
    """Edge classes induced by a feasible circulation.

    zero_flow / positive_flow split by the flow value; interior / saturated
    split by its position in the constraint interval.  A fixed edge
    (lower == upper) is always saturated.
    """

    zero_flow: frozenset[int]
    positive_flow: frozenset[int]
    interior: frozenset[int]
    saturated: frozenset[int]


def edge_partition(net: ConstrainedNetwork, z: Sequence[Fraction]) -> EdgePartition:
    if len(z) != net.edge_count:
        raise ValidationError("circulation length does not match edge count")
    zero, positive, interior, saturated = set(), set(), set(), set()
    for eid in range(1, net.edge_count + 1):
        flow = z[eid - 1]
        l, u = net.interval(eid)
        (zero if flow == 0 else positive).add(eid)
        (interior if l < flow < u else saturated).add(eid)
    return EdgePartition(
        frozenset(zero), frozenset(positive), frozenset(interior), frozenset(saturated)
    )


@dataclass(frozen=True)
class IpcVerdict:
    status: str
    witness: tuple[Fraction, ...] | None = None
    final_z: tuple[Fraction, ...] | None = None
    reduced_components: tuple[tuple[int, ...], ...] | None = None
    augmentations: int = 0

    @property
    def holds(self) -> bool:
        return self.status == HOLDS


def _require_weakly_connected(net: ConstrainedNetwork):
    if len(weakly_connected_components(net.graph)) != 1:
        raise NotWeaklyConnectedError("verdict requires a weakly connected network")


def _find_freeing_cycle(
    net: ConstrainedNetwork, z: list[Fraction]
) -> list[ResidualArc] | None:
    """A residual cycle through the arc of some saturated, non-fixed edge.

    Deterministic: saturated edges are tried in id order and the closing
    path comes from a BFS over arcs in residual order.
    """
    res = residual_graph(net, z)
    for eid in range(1, net.edge_count + 1):
        l, u = net.interval(eid)
        if l == u or l < z[eid - 1] < u:
            continue
        seed = next(arc for arc in res.arcs if arc.edge_id == eid)
        path = residual_path(res, seed.head, seed.tail)
        if path is not None:
            return [seed] + path
    return None


def check_ipc(
    net: ConstrainedNetwork, start: Sequence[Fraction] | None = None
) -> IpcVerdict:
    """Decide the interior point condition.

    Starting from any feasible circulation, augment by half the minimum
    slack around residual cycles through saturated edges; each pass
    strictly enlarges the interior edge set, so at most one augmentation
    per edge occurs.  On termination the interior set is maximal and the
    verdict is read off its weak components: one component spanning all
    vertices means the condition holds (the final circulation is the
    witness); several components mean it fails, and the final circulation
    drives the counterexample construction.
    """
    if not net.is_compatible:
        raise ValidationError("verdict requires a compatible network (normalize first)")
    _require_weakly_connected(net)
    try:
        z = list(feasible_circulation(net)) if start is None else list(
            Fraction(v) for v in start
        )
    except InfeasibleError:
        return IpcVerdict(INFEASIBLE)

    augmentations = 0
    for _ in range(net.edge_count + 1):
        cycle = _find_freeing_cycle(net, z)
        if cycle is None:
            break
        epsilon = min(arc.slack for arc in cycle) / 2
        z = list(augment_circulation(z, cycle, epsilon))
        augmentations += 1
    else:
        raise AssertionError("augmentation failed to terminate within edge count")

    partition = edge_partition(net, z)
    components = weakly_connected_components(net.graph, partition.interior)
    status = HOLDS if len(components) == 1 else FAILS
    return IpcVerdict(
        status,
        witness=tuple(z) if status == HOLDS else None,
        final_z=tuple(z),
        reduced_components=components,
        augmentations=augmentations,
    )


def check_ipc_oracle(net: ConstrainedNetwork) -> bool:
    """Independent check: spanning tree among the interior-able edges.

    An edge can be strictly interior in *some* feasible circulation iff
    its attainable flow range meets the open interval; averaging feasible
    points makes any set of individually interior-able edges interior
    simultaneously, so the condition reduces to a spanning-tree test.
    """
    if not net.is_compatible:
        raise ValidationError("verdict requires a compatible network (normalize first)")
    _require_weakly_connected(net)
    z0 = feasible_circulation(net)
    interior_able = []
    for eid in range(1, net.edge_count + 1):
        l, u = net.interval(eid)
        if l == u:
            continue
        low, high = flow_range(net, z0, eid)
        if low < u and high > l:
            interior_able.append(eid)
    return contains_spanning_tree(net.graph, interior_able)


@dataclass(frozen=True)
class Counterexample:
    """Initial data freezing the closed loop away from consensus.

    storage0 assigns every vertex its component's level; controller0 is
    the negated final circulation.  Under the saturated loop the storage
    derivative stays exactly zero while the storage gradient differences
    stay bounded away from zero.
    """

    storage0: tuple[Fraction, ...]
    controller0: tuple[Fraction, ...]
    levels: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]


def build_counterexample(
    net: ConstrainedNetwork, verdict: IpcVerdict
) -> Counterexample:
    """Frozen-clustering initial state for a failing network (quadratic storage).

    Between two interior-components, a non-fixed saturated edge pins an
    order: the head side must sit strictly above the tail side when the
    flow is at its lower bound, strictly below at its upper bound.  These
    order arcs form a DAG (a cycle would be a residual cycle, contradicting
    termination); components are ranked in (longest-path depth, vertex)
    order so every pair of components gets a distinct integer level and
    every order arc a gap of at least one.
    """
    if verdict.status != FAILS:
        raise NotApplicableError("counterexample exists only for a failing verdict")
    assert verdict.final_z is not None and verdict.reduced_components is not None
    components = verdict.reduced_components
    comp_of = {}
    for idx, comp in enumerate(components):
        for v in comp:
            comp_of[v] = idx

    k = len(components)
    order_arcs: set[tuple[int, int]] = set()
    for eid in range(1, net.edge_count + 1):
        tail, head = net.graph.endpoints(eid)
        ci, cj = comp_of[tail], comp_of[head]
        if ci == cj:
            continue
        l, u = net.interval(eid)
        if l == u:
            continue
        flow = verdict.final_z[eid - 1]
        if flow == l:
            order_arcs.add((ci, cj))  # head side above tail side
        elif flow == u:
            order_arcs.add((cj, ci))  # head side below tail side
        else:
            raise AssertionError("interior edge between components")

    succ: list[list[int]] = [[] for _ in range(k)]
    indeg = [0] * k
    for a, b in sorted(order_arcs):
        succ[a].append(b)
        indeg[b] += 1
    depth = [0] * k
    ready = [i for i in range(k) if indeg[i] == 0]
    seen = 0
    while ready:
        a = ready.pop()
        seen += 1
        for b in succ[a]:
            depth[b] = max(depth[b], depth[a] + 1)
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if seen != k:
        raise AssertionError("order constraints contain a cycle")

    ranked = sorted(range(k), key=lambda i: (depth[i], components[i][0]))
    level = [0] * k
    for rank, comp_idx in enumerate(ranked):
        level[comp_idx] = rank

    storage0 = tuple(
        Fraction(level[comp_of[v]]) for v in range(1, net.vertex_count + 1)
    )
    controller0 = tuple(-z for z in verdict.final_z)
    return Counterexample(storage0, controller0, tuple(level), components)
