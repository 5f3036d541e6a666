"""Deterministic fixed-step integration of the closed loops, with monitors.

Classical 4th-order Runge-Kutta at a fixed step: reproducible runs and
simple monitor semantics matter more here than adaptive efficiency.  For
quadratic storage functions the stepping loop is compiled with numba;
other storage functions fall back to a plain Python loop over the same
right-hand sides.

Every recorded sample carries the Lyapunov value, the total storage, the
sup-norms of the state derivative and of the storage-gradient differences
across edges; `verify_trajectory` turns those into drift/monotonicity
checks and `detect_convergence` applies the dwell-window consensus test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import (
    QuadraticHamiltonian,
    SimState,
    admissible_target,
    closed_loop_rhs,
    closed_loop_rhs_disturbed,
    equilibrium_membership,
    float_bounds,
    float_injection,
    lyapunov,
    steering_rhs,
)
from .errors import NonFiniteStateError, ValidationError
from .network import ConstrainedNetwork

CONSENSUS = "consensus"
DISTURBED = "disturbed"
STEERING = "steering"


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    step: float = 1e-3
    convergence_tol: float = 1e-6
    dwell: float = 1.0
    record_every: int = 1

    def __post_init__(self):
        if self.step <= 0 or self.horizon <= 0 or self.step >= self.horizon:
            raise ValidationError("need 0 < step < horizon")
        if self.convergence_tol <= 0 or self.dwell <= 0:
            raise ValidationError("tolerances and dwell must be positive")
        if self.record_every < 1:
            raise ValidationError("record_every must be a positive integer")


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    xc: np.ndarray
    lyapunov: np.ndarray
    total_storage: np.ndarray
    rate_inf: np.ndarray
    gradient_gap_inf: np.ndarray
    mode: str
    net: ConstrainedNetwork
    hamiltonian: object
    target: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)

    def final_state(self) -> SimState:
        return SimState(self.x[-1].copy(), self.xc[-1].copy(), float(self.times[-1]))


def _clamp_anti(y, a, b):
    if y < a:
        return a * y - 0.5 * a * a
    if y > b:
        return b * y - 0.5 * b * b
    return 0.5 * y * y


def _rk4_quadratic(tails, heads, lower, upper, weights, target, inflow,
                   x0, xc0, step, n_steps, record_every, n_records):
    n = x0.shape[0]
    m = xc0.shape[0]
    xs = np.empty((n_records, n))
    xcs = np.empty((n_records, m))
    values = np.empty(n_records)
    totals = np.empty(n_records)
    rate_inf = np.empty(n_records)
    grad_gap_inf = np.empty(n_records)

    x = x0.copy()
    xc = xc0.copy()
    grad = np.empty(n)
    dx = np.empty(n)
    dxc = np.empty(m)
    ax = np.empty(n)
    axc = np.empty(m)
    sum_dx = np.empty(n)
    sum_dxc = np.empty(m)

    anti0 = 0.0
    for e in range(m):
        a = lower[e]
        b = upper[e]
        anti0 += _clamp_anti(0.0, a, b)

    rec = 0
    bad = -1
    for k in range(n_steps + 1):
        if k % record_every == 0 or k == n_steps:
            # rhs and monitors at the current state
            for i in range(n):
                grad[i] = weights[i] * (x[i] - target[i])
                dx[i] = inflow[i]
            value = 0.0
            gap_max = 0.0
            for e in range(m):
                gap = grad[heads[e]] - grad[tails[e]]
                dxc[e] = gap
                if abs(gap) > gap_max:
                    gap_max = abs(gap)
                w = -gap - xc[e]
                s = w
                if s < lower[e]:
                    s = lower[e]
                elif s > upper[e]:
                    s = upper[e]
                dx[tails[e]] -= s
                dx[heads[e]] += s
                value += _clamp_anti(w, lower[e], upper[e])
            value -= anti0
            total = 0.0
            rate_max = 0.0
            finite = True
            for i in range(n):
                value += 0.5 * weights[i] * (x[i] - target[i]) ** 2
                total += x[i]
                if abs(dx[i]) > rate_max:
                    rate_max = abs(dx[i])
                if not np.isfinite(x[i]):
                    finite = False
            for e in range(m):
                if not np.isfinite(xc[e]):
                    finite = False
            xs[rec] = x
            xcs[rec] = xc
            values[rec] = value
            totals[rec] = total
            rate_inf[rec] = rate_max
            grad_gap_inf[rec] = gap_max
            if not finite:
                bad = rec
                rec += 1
                break
            rec += 1
        if k == n_steps:
            break

        # one classical Runge-Kutta step
        for stage in range(4):
            if stage == 0:
                for i in range(n):
                    ax[i] = x[i]
                for e in range(m):
                    axc[e] = xc[e]
                scale = step / 6.0
            elif stage == 3:
                for i in range(n):
                    ax[i] = x[i] + step * dx[i]
                for e in range(m):
                    axc[e] = xc[e] + step * dxc[e]
                scale = step / 6.0
            else:
                for i in range(n):
                    ax[i] = x[i] + 0.5 * step * dx[i]
                for e in range(m):
                    axc[e] = xc[e] + 0.5 * step * dxc[e]
                scale = step / 3.0
            for i in range(n):
                grad[i] = weights[i] * (ax[i] - target[i])
                dx[i] = inflow[i]
            for e in range(m):
                gap = grad[heads[e]] - grad[tails[e]]
                dxc[e] = gap
                s = -gap - axc[e]
                if s < lower[e]:
                    s = lower[e]
                elif s > upper[e]:
                    s = upper[e]
                dx[tails[e]] -= s
                dx[heads[e]] += s
            if stage == 0:
                for i in range(n):
                    sum_dx[i] = scale * dx[i]
                for e in range(m):
                    sum_dxc[e] = scale * dxc[e]
            else:
                for i in range(n):
                    sum_dx[i] += scale * dx[i]
                for e in range(m):
                    sum_dxc[e] += scale * dxc[e]
        for i in range(n):
            x[i] += sum_dx[i]
        for e in range(m):
            xc[e] += sum_dxc[e]

    return xs, xcs, values, totals, rate_inf, grad_gap_inf, bad


try:  # pragma: no cover - exercised implicitly by every quadratic run
    from numba import njit

    _clamp_anti = njit(cache=True)(_clamp_anti)
    _rk4_quadratic = njit(cache=True)(_rk4_quadratic)
except ImportError:  # pragma: no cover
    pass


def _record_indices(n_steps: int, record_every: int) -> np.ndarray:
    idx = np.arange(0, n_steps + 1, record_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _integrate_generic(net, hamiltonian, state0, config, mode, target, indices):
    """Reference path for pluggable storage functions: same stepping, numpy rhs."""

    def rhs(x, xc):
        state = SimState(x, xc)
        if mode == CONSENSUS:
            return closed_loop_rhs(net, hamiltonian, state)
        if mode == DISTURBED:
            return closed_loop_rhs_disturbed(net, hamiltonian, state)
        return steering_rhs(net, hamiltonian, state, target)

    plain = net if net.terminals is None else net.replace_bounds(net.lower, net.upper)
    x = state0.x.copy()
    xc = state0.xc.copy()
    step = config.step
    records = []
    pointer = 0
    for k in range(int(indices[-1]) + 1):
        if pointer < len(indices) and k == indices[pointer]:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xc))):
                break
            dx, dxc = rhs(x, xc)
            state = SimState(x.copy(), xc.copy(), k * step)
            value = lyapunov(plain, hamiltonian, state, target if mode == STEERING else None)
            gap = np.abs(dxc).max() if len(dxc) else 0.0
            rate = np.abs(dx).max() if len(dx) else 0.0
            records.append((state, value, float(np.sum(x)), rate, gap))
            pointer += 1
        if k == indices[-1]:
            break
        k1 = rhs(x, xc)
        k2 = rhs(x + 0.5 * step * k1[0], xc + 0.5 * step * k1[1])
        k3 = rhs(x + 0.5 * step * k2[0], xc + 0.5 * step * k2[1])
        k4 = rhs(x + step * k3[0], xc + step * k3[1])
        x = x + (step / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        xc = xc + (step / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return records


def integrate(
    net: ConstrainedNetwork,
    hamiltonian,
    state0: SimState,
    config: SimConfig,
    mode: str = CONSENSUS,
    target=None,
) -> Trajectory:
    """Integrate the selected closed loop and record the monitor values.

    Bit-for-bit deterministic for identical inputs.  Raises
    NonFiniteStateError if the state leaves the representable range
    (symptom of a step too large for the network's stiffness).
    """
    if mode not in (CONSENSUS, DISTURBED, STEERING):
        raise ValidationError(f"unknown mode {mode!r}")
    if len(state0.x) != net.vertex_count or len(state0.xc) != net.edge_count:
        raise ValidationError("initial state dimensions do not match the network")
    if mode == DISTURBED and net.terminals is None:
        raise ValidationError("disturbed mode needs terminal data")
    if mode != DISTURBED and net.terminals is not None:
        raise ValidationError("terminal flows present; absorb them or simulate disturbed")
    if mode == STEERING:
        target = admissible_target(state0.x, target)

    n_steps = max(1, int(round(config.horizon / config.step)))
    indices = _record_indices(n_steps, config.record_every)

    if isinstance(hamiltonian, QuadraticHamiltonian):
        graph = net.graph
        tails = np.array([t - 1 for t, _ in graph.edges], dtype=np.int64)
        heads = np.array([h - 1 for _, h in graph.edges], dtype=np.int64)
        lower, upper = float_bounds(net)
        weights = np.asarray(hamiltonian.weights, dtype=float)
        tvec = np.zeros(net.vertex_count) if target is None else np.asarray(target, float)
        inflow = float_injection(net) if mode == DISTURBED else np.zeros(net.vertex_count)
        xs, xcs, values, totals, rate_inf, gap_inf, bad = _rk4_quadratic(
            tails, heads, np.asarray(lower), np.asarray(upper), weights, tvec,
            inflow, state0.x.astype(float), state0.xc.astype(float),
            float(config.step), n_steps, int(config.record_every), len(indices),
        )
        if bad >= 0:
            raise NonFiniteStateError(
                f"state became non-finite near t={indices[bad] * config.step:g}"
            )
        times = indices.astype(float) * config.step
        traj = Trajectory(times, xs, xcs, values, totals, rate_inf, gap_inf,
                          mode, net, hamiltonian,
                          None if mode != STEERING else tvec)
        return traj

    records = _integrate_generic(net, hamiltonian, state0, config, mode, target, indices)
    states = [r[0] for r in records]
    last = states[-1]
    if len(records) < len(indices) or not (
        np.all(np.isfinite(last.x)) and np.all(np.isfinite(last.xc))
    ):
        raise NonFiniteStateError(
            f"state became non-finite near t={last.t:g}"
        )
    return Trajectory(
        np.array([s.t for s in states]),
        np.stack([s.x for s in states]),
        np.stack([s.xc for s in states]),
        np.array([r[1] for r in records]),
        np.array([r[2] for r in records]),
        np.array([r[3] for r in records]),
        np.array([r[4] for r in records]),
        mode, net, hamiltonian,
        None if mode != STEERING else np.asarray(target, dtype=float),
    )


@dataclass(frozen=True)
class VerificationReport:
    total_storage_drift: float
    kernel_drifts: tuple[float, ...]
    lyapunov_violations: int
    lyapunov_max_increase: float
    lyapunov_min: float
    final_equilibrium: bool

    @property
    def clean(self) -> bool:
        return self.lyapunov_violations == 0


def verify_trajectory(
    traj: Trajectory,
    net: ConstrainedNetwork,
    hamiltonian,
    kernel_vectors: Sequence = (),
    convergence_tol: float = 1e-6,
    expected_storage_rate: float = 0.0,
) -> VerificationReport:
    """Conservation, Lyapunov-monotonicity, and equilibrium checks.

    The storage drift is measured against the line 1^T x(0) + rate * t
    (rate nonzero only for unbalanced terminal flows); each supplied
    kernel vector beta yields the drift of beta . xc, conserved because
    beta annihilates the incidence map.  A Lyapunov increase counts as a
    violation only beyond 1e-9 * (1 + |V|).
    """
    if len(traj) == 0:
        raise ValidationError("empty trajectory")
    expected = traj.total_storage[0] + expected_storage_rate * (
        traj.times - traj.times[0]
    )
    storage_drift = float(np.abs(traj.total_storage - expected).max())

    drifts = []
    for beta in kernel_vectors:
        beta = np.asarray(beta, dtype=float)
        series = traj.xc @ beta
        drifts.append(float(np.abs(series - series[0]).max()))

    values = traj.lyapunov
    increases = values[1:] - values[:-1]
    allowance = 1e-9 * (1.0 + np.abs(values[:-1]))
    violations = int(np.sum(increases > allowance))
    max_increase = float(increases.max()) if len(increases) else 0.0

    final = equilibrium_membership(
        net if net.terminals is None else net.replace_bounds(net.lower, net.upper),
        hamiltonian,
        traj.final_state(),
        convergence_tol,
        target=traj.target,
    )
    return VerificationReport(
        storage_drift,
        tuple(drifts),
        violations,
        max_increase,
        float(values.min()),
        final,
    )


@dataclass(frozen=True)
class ConvergenceResult:
    converged: bool
    alpha: float | None = None
    t_converged: float | None = None


def detect_convergence(traj: Trajectory, config: SimConfig) -> ConvergenceResult:
    """Consensus reached: gradient differences below tolerance for a full dwell.

    alpha is the consensus gradient value, the mean gradient entry at the
    final sample.
    """
    if len(traj) == 0:
        raise ValidationError("empty trajectory")
    gaps = traj.gradient_gap_inf
    times = traj.times
    ok = gaps <= config.convergence_tol
    if not ok[-1]:
        return ConvergenceResult(False)
    first_bad_from_end = len(ok) - 1
    while first_bad_from_end > 0 and ok[first_bad_from_end - 1]:
        first_bad_from_end -= 1
    t_ok = float(times[first_bad_from_end])
    if float(times[-1]) - t_ok < config.dwell - 1e-12:
        return ConvergenceResult(False)
    offset = (
        traj.x[-1]
        if traj.target is None
        else traj.x[-1] - np.asarray(traj.target, dtype=float)
    )
    grad = traj.hamiltonian.grad(offset)
    return ConvergenceResult(True, float(np.mean(grad)), t_ok)
