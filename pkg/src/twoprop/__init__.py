"""Two-proposer block confirmation: delay models, utilities, timing-game equilibria."""

__version__ = "0.1.0"

from .delay import (
    DelayDistribution,
    ProtocolParams,
    QuadratureConfig,
    QuadratureError,
    UniformDelay,
    cdf,
    is_peaked,
    m_threshold,
    p_first,
    pdf,
    q_reach,
    restricted_l2,
)
from .game import (
    LatencyGameSolver,
    MatrixCellError,
    PayoffMatrix,
    PureEquilibrium,
    StrategyGrid,
    best_response,
    build_matrix,
    find_psne,
    optimal_delay_xi,
)
from .payoff import (
    ScenarioSpec,
    UtilityBreakdown,
    ValuationModel,
    collusion_probability,
    utility_2prop,
    utility_xi,
)
from .slot_sim import SlotInputs, die_roll, monte_carlo_utility, reward_share, run_slot
from .validation import DomainError
