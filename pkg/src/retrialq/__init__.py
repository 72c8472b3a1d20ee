"""Ergodicity analysis of a single-server retrial queue with constant retrial rate.

The package classifies the queue (null ergodic, exponentially ergodic or
critical), builds convergence-rate certificates from weighted l1 logarithmic
norms, and checks the resulting bounds against a truncated forward Kolmogorov
solver and an exact stochastic simulator.
"""

from .errors import (
    ConvergenceError,
    IntegrationError,
    NoCertificateError,
    NumericalError,
    RegimeError,
    TruncationError,
    UnreliableBoundError,
)
from .model import (
    QueueState,
    SystemParams,
    TruncatedGenerator,
    build_generator,
    generator_norm,
    index_to_state,
    state_to_index,
    transition_rates,
)
from .weights import (
    ErgWeights,
    NullWeights,
    erg_alphas,
    lognorm_erg_analytic,
    lognorm_null_analytic,
    lognorm_numeric,
)
from .ergodicity import (
    ErgBound,
    Interval,
    RateCertificate,
    Regime,
    classify,
    erg_b_interval,
    erg_bound,
    erg_intervals,
    erg_x_interval,
    null_a_interval,
    null_b_interval,
    null_bound,
    optimize_rate,
)
from .kolmogorov import (
    DistributionSnapshot,
    l1_distance,
    point_mass,
    stationary,
    transient,
)
from .simulate import SimConfig, SimResult, jump_chain, simulate_paths, step_distribution

__version__ = "0.1.0"
