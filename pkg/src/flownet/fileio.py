"""Network spec files, reports, and trajectory CSV output.

The network format is line oriented and human readable; rationals are
written as integer fractions ("3/10") or decimals and parsed exactly, so
a parse/serialize round trip reproduces the network bit for bit.

    # storage ring with one fixed edge
    vertices 3
    edge 1  1 2  0 1
    edge 2  2 3  0 1
    edge 3  3 1  1 2
    terminal 1 + 3/10
    terminal 2 - 3/10
    x0 1 0 -1
    xc0 0 0 0
    weights 1 1 1

Reports are JSON documents with a fixed key order; reruns on identical
inputs differ only in the timestamp field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from .errors import ParseError
from .graph import DirectedGraph
from .network import ConstrainedNetwork, EdgeMap, Terminals

TOOL_VERSION = "0.1.0"


def parse_rational(token: str, line: int | None = None) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {token!r}: {exc}", line) from None


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class NetworkDocument:
    """A parsed spec file: the network plus optional initial data."""

    network: ConstrainedNetwork
    x0: tuple[Fraction, ...] | None = None
    xc0: tuple[Fraction, ...] | None = None
    weights: tuple[Fraction, ...] | None = None


def parse_network(text: str) -> NetworkDocument:
    """Parse a spec file; ParseError carries the offending line number."""
    vertices: int | None = None
    edge_records: dict[int, tuple[int, int, Fraction, Fraction]] = {}
    terminal_cols: list[tuple[int, int]] = []
    terminal_flows: list[Fraction] = []
    extras: dict[str, tuple[Fraction, ...]] = {}
    extra_lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "vertices":
            if vertices is not None:
                raise ParseError("duplicate vertices line", lineno)
            if len(rest) != 1 or not rest[0].isdigit() or int(rest[0]) < 1:
                raise ParseError("vertices needs one positive integer", lineno)
            vertices = int(rest[0])
        elif key == "edge":
            if len(rest) != 5:
                raise ParseError("edge needs: id tail head lower upper", lineno)
            try:
                eid, tail, head = int(rest[0]), int(rest[1]), int(rest[2])
            except ValueError:
                raise ParseError("edge id and endpoints must be integers", lineno) from None
            if eid in edge_records:
                raise ParseError(f"duplicate edge id {eid}", lineno)
            edge_records[eid] = (
                tail,
                head,
                parse_rational(rest[3], lineno),
                parse_rational(rest[4], lineno),
            )
        elif key == "terminal":
            if len(rest) != 3 or rest[1] not in ("+", "-"):
                raise ParseError("terminal needs: vertex +|- flow", lineno)
            try:
                vertex = int(rest[0])
            except ValueError:
                raise ParseError("terminal vertex must be an integer", lineno) from None
            terminal_cols.append((vertex, 1 if rest[1] == "+" else -1))
            terminal_flows.append(parse_rational(rest[2], lineno))
        elif key in ("x0", "xc0", "weights"):
            if key in extras:
                raise ParseError(f"duplicate {key} line", lineno)
            extras[key] = tuple(parse_rational(tok, lineno) for tok in rest)
            extra_lines[key] = lineno
        else:
            raise ParseError(f"unknown key {key!r}", lineno)

    if vertices is None:
        raise ParseError("missing vertices line")
    m = len(edge_records)
    if sorted(edge_records) != list(range(1, m + 1)):
        raise ParseError(f"edge ids must be exactly 1..{m}")
    edges, lower, upper = [], [], []
    for eid in range(1, m + 1):
        tail, head, l, u = edge_records[eid]
        edges.append((tail, head))
        lower.append(l)
        upper.append(u)

    terminals = (
        Terminals(tuple(terminal_cols), tuple(terminal_flows))
        if terminal_cols
        else None
    )
    net = ConstrainedNetwork(
        DirectedGraph(vertices, tuple(edges)), lower, upper, terminals
    )

    for key, expected in (("x0", vertices), ("weights", vertices), ("xc0", m)):
        if key in extras and len(extras[key]) != expected:
            raise ParseError(
                f"{key} needs {expected} entries, got {len(extras[key])}",
                extra_lines[key],
            )
    if "weights" in extras and any(w <= 0 for w in extras["weights"]):
        raise ParseError("weights must be positive", extra_lines["weights"])
    return NetworkDocument(
        net, extras.get("x0"), extras.get("xc0"), extras.get("weights")
    )


def serialize_network(doc: NetworkDocument | ConstrainedNetwork) -> str:
    """Spec-file text whose parse reproduces the input exactly."""
    if isinstance(doc, ConstrainedNetwork):
        doc = NetworkDocument(doc)
    net = doc.network
    lines = [f"vertices {net.vertex_count}"]
    for eid in range(1, net.edge_count + 1):
        tail, head = net.graph.endpoints(eid)
        l, u = net.interval(eid)
        lines.append(
            f"edge {eid}  {tail} {head}  {format_rational(l)} {format_rational(u)}"
        )
    if net.terminals is not None:
        for (vertex, sign), flow in zip(net.terminals.columns, net.terminals.flows):
            lines.append(
                f"terminal {vertex} {'+' if sign > 0 else '-'} {format_rational(flow)}"
            )
    for key, vec in (("x0", doc.x0), ("xc0", doc.xc0), ("weights", doc.weights)):
        if vec is not None:
            lines.append(f"{key} " + " ".join(format_rational(v) for v in vec))
    return "\n".join(lines) + "\n"


def edge_map_payload(emap: EdgeMap) -> dict:
    return {
        "source_edge_count": emap.source_edge_count,
        "shift": [format_rational(s) for s in emap.shift],
        "entries": [
            {
                "source": entry.source,
                "sign": entry.sign,
                "lower": format_rational(entry.lower),
                "upper": format_rational(entry.upper),
            }
            for entry in emap.entries
        ],
        "dropped": list(emap.dropped),
    }


def verdict_payload(verdict) -> dict:
    body: dict = {"status": verdict.status}
    if verdict.witness is not None:
        body["witness"] = [format_rational(v) for v in verdict.witness]
    if verdict.final_z is not None:
        body["final_circulation"] = [format_rational(v) for v in verdict.final_z]
    if verdict.reduced_components is not None:
        body["reduced_components"] = [list(c) for c in verdict.reduced_components]
    body["augmentations"] = verdict.augmentations
    return body


def render_report(kind: str, body: dict, input_text: str = "", config: dict | None = None) -> str:
    """Deterministic JSON report; only generated_at varies between reruns."""
    doc = {
        "report": kind,
        "tool_version": TOOL_VERSION,
        "input_sha256": hashlib.sha256(input_text.encode()).hexdigest(),
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config": config or {},
        "body": body,
    }
    return json.dumps(doc, indent=2) + "\n"


def trajectory_csv(traj) -> str:
    """CSV with the exact header t,x_1..x_n,xc_1..xc_m,V,sum_x,norm_BtgradH."""
    n = traj.x.shape[1]
    m = traj.xc.shape[1]
    header = (
        ["t"]
        + [f"x_{i}" for i in range(1, n + 1)]
        + [f"xc_{e}" for e in range(1, m + 1)]
        + ["V", "sum_x", "norm_BtgradH"]
    )
    rows = [",".join(header)]
    for k in range(len(traj.times)):
        cells = [repr(float(traj.times[k]))]
        cells += [repr(float(v)) for v in traj.x[k]]
        cells += [repr(float(v)) for v in traj.xc[k]]
        cells += [
            repr(float(traj.lyapunov[k])),
            repr(float(traj.total_storage[k])),
            repr(float(traj.gradient_gap_inf[k])),
        ]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def float_vector(values) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)
