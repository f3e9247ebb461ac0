"""Equilibria and incentive mechanisms for creator competition on ranked results."""

from .core import (
    CostModel,
    GameConfig,
    GameError,
    MaxEffortViolation,
    MixedStrategy,
    MonotonicityBroken,
    NonMonotone,
    NonPositive,
    NonPositiveDelta,
    PositionBiases,
    ProfitParams,
    StrictDecreaseRequired,
    TypeSplit,
    ValidationFailed,
    argmax_linear_reward,
    cost_grad,
    cost_value,
    expected_rank_bias,
    make_binary_game,
    make_game,
    validate_biases,
)
from .symmetric import J_of, K_of, SymmetricEquilibrium, closed_form_two_player, solve_symmetric
from .binary import (
    BinaryTypeEquilibrium,
    PseudoStrategy,
    PureProfile,
    best_deviation_L,
    compute_uH,
    diagnostics_jacobian_k,
    diagnostics_quasiconvexity,
    pseudo_strategy,
    pure_ne,
    solve_binary,
    verify_equilibrium,
)
from .welfare import WelfareBreakdown, order_stat_expectations, scenario_sweep, welfare
from .mechanisms import (
    CitationDesign,
    CompensationVector,
    approximation_ratio,
    grid_search_compensation,
    majorization_probe,
    profit,
    profit_reformulated,
    simplified_optimal_citation,
    tpbl,
    ubl,
)
from .clicks import ClickRecord, LayoutSpec, PbmFit, em_fit, overview_bias_estimate, simulate_clicks

__version__ = "0.1.0"
