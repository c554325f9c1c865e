"""Jointly differentially private packing.

Solvers coordinate allocations through a differentially private dual-price
path; each agent's bundle is then post-processing of its own data plus that
path, which is what joint privacy asks for. The batch solver runs noisy
truncated dual multiplicative-weights rounds and averages the per-round best
responses; the online solver makes one random-order pass, charges posted
prices, and is exactly truthful.
"""

from .dmw import (
    DmwParams,
    DmwResult,
    DmwTrace,
    derive_dmw_params,
    mwu_step,
    run_dmw,
    run_dmw_exact_feasible,
    truncate_gradient,
)
from .domw import (
    DomwParams,
    DomwResult,
    OnlineAllocator,
    RoundOutcome,
    compute_payment,
    derive_domw_params,
    run_domw,
    run_domw_online,
)
from .dual import (
    BestResponse,
    DualPriceVector,
    best_response,
    best_response_allocation,
    dual_objective,
    exact_subgradient,
    lagrangian,
    uniform_prices,
)
from .errors import (
    InstanceFormatError,
    ParameterGuardError,
    PrivpackError,
    ShapeMismatchError,
    SolverRuntimeError,
)
from .experiment import ExperimentConfig, run_experiment
from .generators import generate_instance, generate_workload
from .hardness import (
    QueryWorkload,
    ReductionInstance,
    build_reduction_instance,
    evaluate_release_accuracy,
    opt_lower_bound,
    release_queries,
)
from .kernels import available_backends, default_backend_name, get_backend
from .model import (
    AgentData,
    Allocation,
    AllocationMetrics,
    PackingInstance,
    evaluate_allocation,
    load_instance,
    save_instance,
    validate_instance,
)
from .privacy import (
    AuditResult,
    NoiseStream,
    PrivacySpec,
    audit_laplace,
    composition_epsilon,
    adaptive_sum_concentration,
    truncation_overflow_concentration,
    laplace_draw,
    per_step_epsilon_dmw,
    sigma_domw,
)
from .reference import OracleResult, brute_force_opt, noiseless_dual_mwu, trivial_allocate
from .report import SolverReport

__version__ = "0.1.0"
