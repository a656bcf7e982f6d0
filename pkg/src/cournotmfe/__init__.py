"""Stationary mean-field equilibrium of a regime-switching Cournot industry
with irreversible investment.

Pipeline: characteristic roots -> investment thresholds (free boundary,
smooth fit) -> closed-form stationary firm-size law -> mean-field fixed
point -> economic indicators, cross-checked by Monte Carlo simulation.
"""

from .errors import (
    BracketError,
    ConfigError,
    DivergentMomentError,
    FixedPointError,
    HeavyTailError,
    InvalidParamsError,
    ThresholdSolveError,
)
from .params import (
    ChainLaw,
    ModelParams,
    ValidationReport,
    chain_stationary,
    inverse_demand,
    load_params,
    parse_params_text,
    validate,
)
from .roots import (
    QuadraticRoots,
    QuarticRoots,
    RootBundle,
    TailExponent,
    alpha1_roots,
    gamma_roots,
    lambda_roots,
    solve_roots,
    theta_roots,
)
from .thresholds import (
    ParticularCoeffs,
    ThresholdSolution,
    ValueFunctions,
    particular_coeffs,
    single_regime_threshold,
    solve_k,
    solve_thresholds,
    value_functions,
)
from .stationary import StationaryLaw, solve_cdf_coeffs
from .equilibrium import (
    BestResponse,
    Equilibrium,
    EquilibriumBounds,
    best_response,
    equilibrium_bounds,
    solve_equilibrium,
)
from .simulate import PathStats, SimConfig, corridor_stats, effective_samples, simulate
from .metrics import (
    ConcentrationReport,
    ElasticityReport,
    concentration,
    elasticities,
    gini_index,
    lorenz_share,
    symmetric_base_params,
    table1_rows,
    v_star,
)

__version__ = "0.1.0"
