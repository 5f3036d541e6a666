"""Saturated PI closed-loop dynamics, Lyapunov function, equilibrium tests.

Verdicts stay rational; dynamics run in binary64.  The storage function H
is pluggable (anything with value/grad/hess and a positive definite
Hessian); the controller energy is fixed at the quadratic 0.5*|xc|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .graph import DirectedGraph, incidence_matrix
from .network import ConstrainedNetwork


@lru_cache(maxsize=256)
def float_incidence(graph: DirectedGraph) -> np.ndarray:
    mat = incidence_matrix(graph).astype(float)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=256)
def float_bounds(net: ConstrainedNetwork) -> tuple[np.ndarray, np.ndarray]:
    lower = np.array([float(v) for v in net.lower])
    upper = np.array([float(v) for v in net.upper])
    lower.setflags(write=False)
    upper.setflags(write=False)
    return lower, upper


def float_injection(net: ConstrainedNetwork) -> np.ndarray:
    if net.terminals is None:
        return np.zeros(net.vertex_count)
    return np.array([float(v) for v in net.terminals.injection(net.vertex_count)])


def sat(values, lower, upper) -> np.ndarray:
    """Elementwise clamp of values into [lower, upper]."""
    return np.clip(np.asarray(values, dtype=float), lower, upper)


def _clamp_antiderivative(y, lower, upper):
    # Continuous antiderivative of the clamp: quadratic inside the interval,
    # affine continuation outside.
    y = np.asarray(y, dtype=float)
    return np.where(
        y < lower,
        lower * y - 0.5 * lower * lower,
        np.where(y > upper, upper * y - 0.5 * upper * upper, 0.5 * y * y),
    )


def sat_integral(values, lower, upper) -> np.ndarray:
    """Componentwise integral of the clamp from 0 to each value.

    The lower limit is 0 even when 0 lies outside [lower, upper]; the
    integrand is then constant near 0 and the result is still exact.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return _clamp_antiderivative(values, lower, upper) - _clamp_antiderivative(
        0.0, lower, upper
    )


class QuadraticHamiltonian:
    """H(x) = 0.5 * sum(weights * x^2) with strictly positive weights."""

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.ndim != 1 or np.any(self.weights <= 0):
            raise ValidationError("quadratic storage weights must be positive")

    @classmethod
    def unit(cls, vertex_count: int) -> "QuadraticHamiltonian":
        return cls(np.ones(vertex_count))

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * np.dot(self.weights, x * x))

    def grad(self, x) -> np.ndarray:
        return self.weights * np.asarray(x, dtype=float)

    def hess(self, x) -> np.ndarray:
        return np.diag(self.weights)


@dataclass
class SimState:
    """Continuous closed-loop state: storage per vertex, controller per edge."""

    x: np.ndarray
    xc: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xc = np.asarray(self.xc, dtype=float)
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xc))):
            raise ValidationError("state entries must be finite")


def _gradient(hamiltonian, x, target=None) -> np.ndarray:
    if target is None:
        return hamiltonian.grad(x)
    return hamiltonian.grad(np.asarray(x, dtype=float) - np.asarray(target, dtype=float))


def closed_loop_rhs(
    net: ConstrainedNetwork, hamiltonian, state: SimState
) -> tuple[np.ndarray, np.ndarray]:
    """Saturated PI loop: dx = B sat(-B^T grad - xc), dxc = B^T grad."""
    if net.terminals is not None:
        raise ValidationError("terminal flows present; use the disturbed dynamics")
    incidence = float_incidence(net.graph)
    lower, upper = float_bounds(net)
    grad = _gradient(hamiltonian, state.x)
    pressure = incidence.T @ grad
    dx = incidence @ sat(-pressure - state.xc, lower, upper)
    return dx, pressure


def closed_loop_rhs_disturbed(
    net: ConstrainedNetwork, hamiltonian, state: SimState
) -> tuple[np.ndarray, np.ndarray]:
    """Saturated PI loop with the constant terminal flows added to dx."""
    if net.terminals is None:
        raise ValidationError("disturbed dynamics need terminal data")
    dx, dxc = closed_loop_rhs(net.replace_bounds(net.lower, net.upper), hamiltonian, state)
    return dx + float_injection(net), dxc


def steering_rhs(
    net: ConstrainedNetwork, hamiltonian, state: SimState, target
) -> tuple[np.ndarray, np.ndarray]:
    """PI loop driven by the gradient of the offset from a target state."""
    incidence = float_incidence(net.graph)
    lower, upper = float_bounds(net)
    grad = _gradient(hamiltonian, state.x, target)
    pressure = incidence.T @ grad
    dx = incidence @ sat(-pressure - state.xc, lower, upper)
    return dx, pressure


def admissible_target(x0, target, tol: float = 1e-12) -> np.ndarray:
    """Validate that the target preserves total storage (1^T x is invariant)."""
    x0 = np.asarray(x0, dtype=float)
    target = np.asarray(target, dtype=float)
    if target.shape != x0.shape:
        raise ValidationError("target length does not match vertex count")
    gap = abs(float(np.sum(target) - np.sum(x0)))
    if gap > tol * (1.0 + abs(float(np.sum(x0)))):
        raise ValidationError(
            f"target total storage differs from initial by {gap}; unreachable"
        )
    return target


def lyapunov(net: ConstrainedNetwork, hamiltonian, state: SimState, target=None) -> float:
    """1^T S(-B^T grad - xc) + H, the decreasing energy of the loop."""
    incidence = float_incidence(net.graph)
    lower, upper = float_bounds(net)
    offset = state.x if target is None else state.x - np.asarray(target, dtype=float)
    grad = hamiltonian.grad(offset)
    pre_sat = -(incidence.T @ grad) - state.xc
    return float(np.sum(sat_integral(pre_sat, lower, upper)) + hamiltonian.value(offset))


def lyapunov_lower_bound(
    net: ConstrainedNetwork, witness, controller0
) -> float:
    """Finite lower bound for the Lyapunov value along any trajectory.

    Each clamp integral dominates its tangent at the witness flow, and the
    witness-weighted controller sum is conserved; with a nonnegative
    storage function the Lyapunov value can never drop below
    -witness.xc(0) + sum_e (S(z_e) - z_e^2).
    """
    z = np.array([float(v) for v in witness])
    xc0 = np.asarray(controller0, dtype=float)
    lower, upper = float_bounds(net)
    tangent_gap = sat_integral(z, lower, upper) - z * z
    return float(-np.dot(z, xc0) + np.sum(tangent_gap))


def equilibrium_membership(
    net: ConstrainedNetwork, hamiltonian, state: SimState, tol: float, target=None
) -> bool:
    """Inside the limit set: gradient in consensus and controller flows balanced."""
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    incidence = float_incidence(net.graph)
    lower, upper = float_bounds(net)
    offset = state.x if target is None else state.x - np.asarray(target, dtype=float)
    grad = hamiltonian.grad(offset)
    gradient_gap = np.abs(incidence.T @ grad).max() if net.edge_count else 0.0
    controller_flow = incidence @ sat(-state.xc, lower, upper)
    flow_gap = np.abs(controller_flow).max() if net.vertex_count else 0.0
    return gradient_gap <= tol and flow_gap <= tol
