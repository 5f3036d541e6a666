"""Flow-constrained distribution networks: verdicts, witnesses, simulation.

The package decides whether a network of storage vertices and
interval-constrained flow edges can balance its load under a saturated
distributed PI controller, constructs the witness circulation or a frozen
counterexample, and verifies the theory numerically with conservation and
Lyapunov monitors.
"""

from .circulation import (
    ResidualArc,
    ResidualGraph,
    decompose_circulation,
    feasible_circulation,
    flow_range,
    residual_graph,
)
from .dynamics import (
    QuadraticHamiltonian,
    SimState,
    closed_loop_rhs,
    closed_loop_rhs_disturbed,
    equilibrium_membership,
    lyapunov,
    lyapunov_lower_bound,
    sat,
    sat_integral,
    steering_rhs,
)
from .engine import (
    CONSENSUS,
    DISTURBED,
    STEERING,
    ConvergenceResult,
    SimConfig,
    Trajectory,
    VerificationReport,
    detect_convergence,
    integrate,
    verify_trajectory,
)
from .errors import (
    CircuitCapError,
    DecompositionError,
    FlownetError,
    InfeasibleError,
    NoMatchingError,
    NonFiniteStateError,
    NotApplicableError,
    NotWeaklyConnectedError,
    ParseError,
    ValidationError,
)
from .graph import (
    DirectedGraph,
    contains_spanning_tree,
    enumerate_positive_circuits,
    incidence_apply,
    incidence_matrix,
    is_strongly_connected,
    is_weakly_connected,
    rational_rank,
    weakly_connected_components,
)
from .ipc import (
    FAILS,
    HOLDS,
    INFEASIBLE,
    Counterexample,
    EdgePartition,
    IpcVerdict,
    build_counterexample,
    check_ipc,
    check_ipc_oracle,
    edge_partition,
)
from .network import (
    ConstrainedNetwork,
    EdgeMap,
    EdgeMapEntry,
    Terminals,
    absorb_disturbance,
    normalize,
    reorient,
    solve_matching,
    split_bidirectional,
)
from .fileio import (
    NetworkDocument,
    parse_network,
    parse_rational,
    serialize_network,
)

__version__ = "0.1.0"
