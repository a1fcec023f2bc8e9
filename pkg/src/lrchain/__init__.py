"""Finite spin chains: exact commutator dynamics against analytic propagation bounds.

The library builds one-dimensional quantum spin chains (nearest-neighbor
bonds plus on-site impurity terms), evolves observables exactly through
dense eigendecomposition, and evaluates every explicit constant and bound
function of the commutator-bound family — the a-priori exponential bound,
its impurity-improved refinements whose prefactor shrinks with each strong
impurity between the observables, and the double-commutator variants — so
exact norms and analytic bounds can be compared at every grid point.  A
disorder module runs reproducible Monte Carlo sweeps over chains with
heavy-tailed random field strengths.
"""

from .bounds import (
    BoundOutcome,
    BoundReport,
    ConvergenceError,
    LRParameters,
    apriori_bound,
    bound_report,
    compute_c_mu,
    compute_K_mu,
    decay_profile,
    derivative_bound_constant,
    double_commutator_bound,
    growth_profile,
    main_bound,
    main_constant,
    single_impurity_bound,
    uniform_impurity_bound,
    window_decay_sum,
)
from .disorder import (
    DisorderConfig,
    SweepReport,
    SweepRow,
    build_heisenberg_sparse_field,
    default_epsilon,
    disorder_bound,
    heisenberg_bond,
    large_deviation_indicator,
    monte_carlo_sweep,
    sample_couplings,
    sample_heavy_tail,
    splitmix64,
    wilson_interval,
)
from .dynamics import (
    DecoupledDynamics,
    EvolutionContext,
    commutator_norm_evolved,
    heisenberg_evolve,
)
from .geometry import ChainGeometry, SiteSupport, SupportError, site_distance
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentRecord,
    IdentitiesReport,
    IdentityCheck,
    ObservableSpec,
    VerifyReport,
    constants_csv,
    constants_rows,
    find_improvement_points,
    run_identities,
    run_verify,
    write_report,
)
from .model import (
    ImpuritySpec,
    ModelFormatError,
    NNInteraction,
    SiteImpurity,
    build_decoupled_hamiltonian,
    build_nn_hamiltonian,
    build_perturbed_hamiltonian,
    decoupled_split,
    impurity_window,
    load_model,
    min_spacing,
    offdiagonal_block,
    perturbation_operator,
)
from .operators import (
    DenseOperator,
    HermiticityError,
    PAULI,
    assert_localized,
    commutator,
    commutator_norm,
    conditional_expectation,
    embed_local,
    hermitian_spectral,
    kron_product,
    local_commutator_epsilon,
    operator_norm,
    weyl_basis,
)

__version__ = "0.1.0"

__all__ = [
    "BoundOutcome",
    "BoundReport",
    "ChainGeometry",
    "ConfigError",
    "ConvergenceError",
    "DecoupledDynamics",
    "DenseOperator",
    "DisorderConfig",
    "EvolutionContext",
    "ExperimentConfig",
    "ExperimentRecord",
    "HermiticityError",
    "IdentitiesReport",
    "IdentityCheck",
    "ImpuritySpec",
    "LRParameters",
    "ModelFormatError",
    "NNInteraction",
    "ObservableSpec",
    "PAULI",
    "SiteImpurity",
    "SiteSupport",
    "SupportError",
    "SweepReport",
    "SweepRow",
    "VerifyReport",
    "apriori_bound",
    "assert_localized",
    "bound_report",
    "build_decoupled_hamiltonian",
    "build_heisenberg_sparse_field",
    "build_nn_hamiltonian",
    "build_perturbed_hamiltonian",
    "commutator",
    "commutator_norm",
    "commutator_norm_evolved",
    "compute_K_mu",
    "compute_c_mu",
    "conditional_expectation",
    "constants_csv",
    "constants_rows",
    "decay_profile",
    "decoupled_split",
    "default_epsilon",
    "derivative_bound_constant",
    "disorder_bound",
    "double_commutator_bound",
    "embed_local",
    "find_improvement_points",
    "growth_profile",
    "heisenberg_bond",
    "heisenberg_evolve",
    "hermitian_spectral",
    "impurity_window",
    "kron_product",
    "large_deviation_indicator",
    "load_model",
    "local_commutator_epsilon",
    "main_bound",
    "main_constant",
    "min_spacing",
    "monte_carlo_sweep",
    "offdiagonal_block",
    "operator_norm",
    "perturbation_operator",
    "run_identities",
    "run_verify",
    "sample_couplings",
    "sample_heavy_tail",
    "single_impurity_bound",
    "site_distance",
    "splitmix64",
    "uniform_impurity_bound",
    "weyl_basis",
    "wilson_interval",
    "write_report",
]
