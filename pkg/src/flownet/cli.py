"""Command-line surface.

    flownet normalize NET        rewrite into compatible orientation + edge map
    flownet check-ipc NET        verdict report; exit 0 holds, 2 fails, 3 infeasible
    flownet circuits NET         positive circuits and a circulation decomposition
    flownet simulate NET         closed-loop run -> trajectory CSV + verification
    flownet steer NET --target   run the target-tracking loop
    flownet counterexample NET   frozen initial data for a failing network
    flownet sweep                verdict-vs-oracle agreement over small networks

Simulation parameters come from flags (--step, --horizon, --tol) or a JSON
--config file; --out picks the output directory.  All other errors exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .circulation import decompose_circulation, feasible_circulation
from .dynamics import QuadraticHamiltonian, SimState
from .engine import (
    CONSENSUS,
    DISTURBED,
    STEERING,
    SimConfig,
    detect_convergence,
    integrate,
    verify_trajectory,
)
from .errors import FlownetError, InfeasibleError
from .fileio import (
    NetworkDocument,
    edge_map_payload,
    float_vector,
    format_rational,
    parse_network,
    parse_rational,
    render_report,
    serialize_network,
    trajectory_csv,
    verdict_payload,
)
from .ipc import FAILS, HOLDS, build_counterexample, check_ipc
from .network import normalize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flownet",
        description="Load-balancing verdicts and saturated-PI simulation "
        "for flow-constrained distribution networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_network=True):
        if with_network:
            p.add_argument("network", help="network spec file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", help="JSON file with simulation defaults")
        p.add_argument("--step", type=float, help="integration step")
        p.add_argument("--horizon", type=float, help="integration horizon")
        p.add_argument("--tol", type=float, help="convergence tolerance")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized runs")

    add_common(sub.add_parser("normalize", help="rewrite into compatible orientation"))
    add_common(sub.add_parser("check-ipc", help="decide the interior point condition"))
    add_common(sub.add_parser("circuits", help="positive circuits and decomposition"))
    add_common(sub.add_parser("simulate", help="integrate the closed loop"))
    steer = sub.add_parser("steer", help="drive storage to an admissible target")
    add_common(steer)
    steer.add_argument(
        "--target",
        required=True,
        help="comma-separated storage target (must preserve the total)",
    )
    add_common(sub.add_parser("counterexample", help="frozen state for a failing net"))
    sweep = sub.add_parser("sweep", help="verdict-vs-oracle agreement sweep")
    add_common(sweep, with_network=False)
    sweep.add_argument("--max-vertices", type=int, default=4)
    sweep.add_argument("--max-edges", type=int, default=6)
    sweep.add_argument("--samples", type=int, default=2,
                       help="interval samples per larger structure")
    return parser


def _sim_config(args, default_horizon: float) -> SimConfig:
    settings = {"horizon": default_horizon}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        allowed = {"step", "horizon", "convergence_tol", "dwell", "record_every"}
        unknown = set(loaded) - allowed
        if unknown:
            raise FlownetError(f"unknown config keys: {sorted(unknown)}")
        settings.update(loaded)
    if args.step is not None:
        settings["step"] = args.step
    if args.horizon is not None:
        settings["horizon"] = args.horizon
    if args.tol is not None:
        settings["convergence_tol"] = args.tol
    return SimConfig(**settings)


def _config_echo(config: SimConfig) -> dict:
    return {
        "step": config.step,
        "horizon": config.horizon,
        "convergence_tol": config.convergence_tol,
        "dwell": config.dwell,
        "record_every": config.record_every,
    }


def _load(args) -> tuple[NetworkDocument, str]:
    text = Path(args.network).read_text()
    return parse_network(text), text


def _write(args, name: str, payload: str) -> Path:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(payload)
    return path


def _stem(args) -> str:
    return Path(args.network).stem


def _hamiltonian(doc: NetworkDocument) -> QuadraticHamiltonian:
    if doc.weights is not None:
        return QuadraticHamiltonian([float(w) for w in doc.weights])
    return QuadraticHamiltonian.unit(doc.network.vertex_count)


def _initial_state(doc: NetworkDocument, require_x0: bool = True) -> SimState:
    net = doc.network
    if doc.x0 is None:
        if require_x0:
            raise FlownetError("spec file provides no x0 initial storage")
        x0 = np.zeros(net.vertex_count)
    else:
        x0 = float_vector(doc.x0)
    xc0 = (
        np.zeros(net.edge_count) if doc.xc0 is None else float_vector(doc.xc0)
    )
    return SimState(x0, xc0)


def _cmd_normalize(args) -> int:
    doc, text = _load(args)
    compatible, emap = normalize(doc.network)
    spec_path = _write(args, f"{_stem(args)}.normalized.net", serialize_network(compatible))
    report = render_report("normalize", edge_map_payload(emap), text)
    report_path = _write(args, f"{_stem(args)}.edgemap.json", report)
    print(f"normalized network -> {spec_path}")
    print(f"edge map           -> {report_path}")
    return 0


def _normalized_for_verdict(doc: NetworkDocument):
    net = doc.network
    if net.is_compatible:
        return net, None
    return normalize(net)[0], "normalized first (orientation was not compatible)"


def _cmd_check_ipc(args) -> int:
    doc, text = _load(args)
    net, note = _normalized_for_verdict(doc)
    verdict = check_ipc(net)
    body = verdict_payload(verdict)
    if note:
        body["note"] = note
    _write(args, f"{_stem(args)}.verdict.json", render_report("check-ipc", body, text))
    print(f"interior point condition: {verdict.status}")
    if verdict.status == HOLDS:
        print("witness:", " ".join(format_rational(v) for v in verdict.witness))
        return 0
    if verdict.status == FAILS:
        print("components:", verdict.reduced_components)
        return 2
    return 3


def _cmd_circuits(args) -> int:
    from .graph import enumerate_positive_circuits

    doc, text = _load(args)
    net, _ = _normalized_for_verdict(doc)
    circuits = enumerate_positive_circuits(net.graph)
    body: dict = {"circuit_count": len(circuits), "circuits": [list(c) for c in circuits]}
    print(f"{len(circuits)} positive circuit(s)")
    try:
        z = feasible_circulation(net)
        terms = decompose_circulation(net.graph, z)
        body["circulation"] = [format_rational(v) for v in z]
        body["decomposition"] = [
            {"weight": format_rational(w), "circuit": list(c)} for w, c in terms
        ]
        print(f"feasible circulation decomposes into {len(terms)} circuit(s)")
    except InfeasibleError:
        body["circulation"] = None
        print("no feasible circulation")
    _write(args, f"{_stem(args)}.circuits.json", render_report("circuits", body, text))
    return 0


def _run_and_report(args, doc, text, mode, target=None, horizon=50.0):
    net = doc.network
    config = _sim_config(args, horizon)
    hamiltonian = _hamiltonian(doc)
    state0 = _initial_state(doc)
    traj = integrate(net, hamiltonian, state0, config, mode, target)

    kernel_vectors = []
    if net.terminals is None and net.is_compatible:
        try:
            verdict = check_ipc(net)
        except FlownetError:
            verdict = None
        if verdict is not None and verdict.status == HOLDS:
            kernel_vectors = [
                float_vector(c)
                for _, c in decompose_circulation(net.graph, verdict.witness)
            ]
    rate = 0.0
    if mode == DISTURBED:
        rate = float(sum(net.terminals.injection(net.vertex_count)))
    report = verify_trajectory(
        traj, net, hamiltonian, kernel_vectors,
        convergence_tol=config.convergence_tol, expected_storage_rate=rate,
    )
    conv = detect_convergence(traj, config)

    csv_path = _write(args, f"{_stem(args)}.trajectory.csv", trajectory_csv(traj))
    body = {
        "mode": mode,
        "converged": conv.converged,
        "alpha": conv.alpha,
        "t_converged": conv.t_converged,
        "total_storage_drift": report.total_storage_drift,
        "kernel_drifts": list(report.kernel_drifts),
        "lyapunov_violations": report.lyapunov_violations,
        "lyapunov_min": report.lyapunov_min,
        "final_equilibrium": report.final_equilibrium,
    }
    report_path = _write(
        args, f"{_stem(args)}.simreport.json",
        render_report("simulate", body, text, _config_echo(config)),
    )
    print(f"trajectory -> {csv_path}")
    print(f"report     -> {report_path}")
    print(f"converged: {conv.converged}" + (f" (alpha={conv.alpha:.6g})" if conv.converged else ""))
    return 0


def _cmd_simulate(args) -> int:
    doc, text = _load(args)
    mode = DISTURBED if doc.network.terminals is not None else CONSENSUS
    return _run_and_report(args, doc, text, mode)


def _cmd_steer(args) -> int:
    doc, text = _load(args)
    target = float_vector(
        [parse_rational(tok.strip()) for tok in args.target.split(",")]
    )
    return _run_and_report(args, doc, text, STEERING, target=target)


def _cmd_counterexample(args) -> int:
    doc, text = _load(args)
    net, _ = _normalized_for_verdict(doc)
    verdict = check_ipc(net)
    if verdict.status != FAILS:
        print(f"interior point condition: {verdict.status}; no counterexample",
              file=sys.stderr)
        return 1
    frozen = build_counterexample(net, verdict)
    spec = serialize_network(
        NetworkDocument(net, x0=frozen.storage0, xc0=frozen.controller0)
    )
    spec_path = _write(args, f"{_stem(args)}.counterexample.net", spec)

    config = _sim_config(args, 50.0)
    hamiltonian = QuadraticHamiltonian.unit(net.vertex_count)
    traj = integrate(
        net, hamiltonian,
        SimState(float_vector(frozen.storage0), float_vector(frozen.controller0)),
        config,
    )
    body = {
        "levels": list(frozen.levels),
        "components": [list(c) for c in frozen.components],
        "max_storage_rate": float(traj.rate_inf.max()),
        "min_gradient_gap": float(traj.gradient_gap_inf.min()),
        "frozen": bool(traj.rate_inf.max() <= 1e-12),
    }
    report_path = _write(
        args, f"{_stem(args)}.freeze.json",
        render_report("counterexample", body, text, _config_echo(config)),
    )
    print(f"counterexample -> {spec_path}")
    print(f"freeze report  -> {report_path}")
    print(f"max |dx/dt| over horizon: {body['max_storage_rate']:.3g}")
    return 0


def _cmd_sweep(args) -> int:
    networks = corpus_mod.verdict_corpus(
        max_vertices=args.max_vertices,
        max_edges=args.max_edges,
        samples_per_structure=args.samples,
        seed=args.seed,
    )
    summary = corpus_mod.agreement_sweep(networks)
    body = {
        "cases": summary.cases,
        "holds": summary.holds,
        "fails": summary.fails,
        "infeasible": summary.infeasible,
        "disagreements": len(summary.disagreements),
    }
    _write(args, "sweep.json", render_report("sweep", body, config={
        "max_vertices": args.max_vertices,
        "max_edges": args.max_edges,
        "samples": args.samples,
        "seed": args.seed,
    }))
    print(
        f"{summary.cases} cases: {summary.holds} holds, {summary.fails} fails, "
        f"{summary.infeasible} infeasible, {len(summary.disagreements)} disagreements"
    )
    return 0 if summary.agreement else 1


_COMMANDS = {
    "normalize": _cmd_normalize,
    "check-ipc": _cmd_check_ipc,
    "circuits": _cmd_circuits,
    "simulate": _cmd_simulate,
    "steer": _cmd_steer,
    "counterexample": _cmd_counterexample,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FlownetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
