"""Two interacting qubits under Milburn intrinsic decoherence.

Dynamics of concurrence and measurement-induced nonlocality for an
anisotropic Heisenberg pair with a z-axis Dzyaloshinskii-Moriya term.
"""

from .errors import (
    ConfigError,
    DomainError,
    StabilityError,
    TruncationError,
    ValidationError,
)
from .evolve import (
    ENGINES,
    Trajectory,
    evolve,
    evolve_kraus,
    evolve_ode,
    evolve_spectral,
    evolve_xstate_closed,
    steady_state,
)
from .lab import EventReport, RunConfig, detect_events, run_scenario, sweep, write_series
from .measures import (
    CorrelationSample,
    concurrence_general,
    concurrence_xstate,
    min_hs_closed,
    min_numeric,
    min_trace_closed,
    min_xstate,
    purity,
)
from .model import ModelParams, SpectralData, analytic_spectrum, build_hamiltonian
from .qmath import (
    BlochRep,
    HermitianEigenSystem,
    bloch_decompose,
    hermitian_eigendecompose,
    marginal_a,
    trace_norm,
    validate_density,
)
from .states import ScenarioSpec, XState, make_initial_state, xstate_to_matrix

__version__ = "0.1.0"
