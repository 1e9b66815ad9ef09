"""The discretised Latency Game: payoff matrices and pure equilibria.

``LatencyGameSolver`` wraps the functional API in the scikit-learn estimator
protocol (``get_params``/``set_params``/``fit``) so solver settings can be
cloned and grid-searched like any other estimator.
"""

from dataclasses import dataclass, field
from decimal import Decimal
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .delay import DEFAULT_QUAD, QuadratureConfig, QuadratureError, p_first
from .payoff import utility_from_probabilities, utility_xi
from .validation import DomainError, check_non_negative, check_positive

__all__ = [
    "StrategyGrid",
    "PayoffMatrix",
    "PureEquilibrium",
    "MatrixCellError",
    "build_matrix",
    "find_psne",
    "best_response",
    "optimal_delay_xi",
    "LatencyGameSolver",
]

DEFAULT_EPS = 1e-9


class MatrixCellError(ArithmeticError):
    """Numerical failure while filling one payoff-matrix cell."""

    def __init__(self, cell, deltas, cause):
        super().__init__(f"cell {cell} at deltas {deltas}: {cause}")
        self.cell = cell
        self.deltas = deltas


@dataclass(frozen=True)
class StrategyGrid:
    """Delays ``{0, step, 2*step, ..., horizon}`` with exact decimal points.

    ``horizon=0`` gives the one-point grid ``{0}``.
    """

    step: float = 0.05
    horizon: float = 4.0
    points: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        step = check_positive(self.step, "step")
        horizon = check_non_negative(self.horizon, "horizon")
        if horizon == 0.0:
            # degenerate one-point grid: the player cannot delay at all
            object.__setattr__(self, "points", (0.0,))
            return
        count = round(horizon / step)
        if count < 1 or not math.isclose(count * step, horizon, rel_tol=0, abs_tol=1e-9):
            raise DomainError(f"horizon {horizon} is not a multiple of step {step}")
        d_step = Decimal(repr(step))
        pts = tuple(float(d_step * k) for k in range(count)) + (horizon,)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def index(self, delta, tol=1e-9):
        for k, p in enumerate(self.points):
            if abs(p - delta) <= tol:
                return k
        raise DomainError(f"{delta} is not a grid point")


@dataclass(frozen=True)
class PayoffMatrix:
    """Utilities ``u0[a, b]`` and ``u1[a, b]`` at delays ``(points[a], points[b])``."""

    grid: StrategyGrid
    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        u0 = np.asarray(self.u0, dtype=float)
        u1 = np.asarray(self.u1, dtype=float)
        if u0.shape != (n, n) or u1.shape != (n, n):
            raise DomainError(f"payoff matrices must be {n}x{n}, got {u0.shape} and {u1.shape}")
        if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(u1))):
            raise DomainError("payoff matrices contain non-finite entries")
        if (u0 < 0).any() or (u1 < 0).any():
            raise DomainError("payoff matrices contain negative entries")
        u0.setflags(write=False)
        u1.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "u1", u1)

    @property
    def shape(self):
        return self.u0.shape

    def swapped(self):
        """The same game with the players' roles exchanged."""
        return PayoffMatrix(self.grid, self.u1.T.copy(), self.u0.T.copy())


@dataclass(frozen=True)
class PureEquilibrium:
    delta_0: float
    delta_1: float
    u0: float
    u1: float


def build_matrix(spec, grid, quad=DEFAULT_QUAD):
    """Evaluate both players' 2-Prop utilities on every grid cell.

    Reach probabilities are computed once per grid point and first-arrival
    probabilities once per ordered pair of points.
    """
    params = spec.params
    if not math.isclose(grid.horizon, params.tau1, abs_tol=1e-12):
        raise DomainError(f"grid horizon {grid.horizon} differs from tau1 {params.tau1}")
    pts = np.array(grid.points)
    n, K = params.n_attestors, params.threshold
    d0, d1 = spec.dist_0, spec.dist_1
    q0 = np.asarray(d0.cdf(params.tau1 - pts), dtype=float)
    q1 = np.asarray(d1.cdf(params.tau1 - pts), dtype=float)
    size = len(pts)
    p0 = np.zeros((size, size))
    p1 = np.zeros((size, size))
    for a in range(size):
        for b in range(size):
            try:
                p0[a, b] = p_first(d0, d1, pts[a], pts[b], params, quad)
                p1[a, b] = p_first(d1, d0, pts[b], pts[a], params, quad)
            except QuadratureError as exc:
                raise MatrixCellError((a, b), (pts[a], pts[b]), exc) from exc
    slope = spec.valuation.slope_c
    v0 = (slope * pts)[:, None]
    v1 = (slope * pts)[None, :]
    Q0, Q1 = q0[:, None], q1[None, :]
    r1, r2 = utility_from_probabilities(n, K, Q0, Q1, p0, p1, v0, v1)
    u0 = np.maximum(r1 + r2, 0.0)
    r1, r2 = utility_from_probabilities(n, K, Q1, Q0, p1, p0, v1, v0)
    u1 = np.maximum(r1 + r2, 0.0)
    return PayoffMatrix(grid, u0, u1)


def find_psne(m, eps=DEFAULT_EPS):
    """All cells where each player's utility is within ``eps`` of its best
    unilateral deviation, in lexicographic order of (delta_0, delta_1)."""
    eps = check_non_negative(eps, "eps")
    best0 = m.u0.max(axis=0, keepdims=True)
    best1 = m.u1.max(axis=1, keepdims=True)
    mask = (m.u0 >= best0 - eps) & (m.u1 >= best1 - eps)
    pts = m.grid.points
    return [
        PureEquilibrium(pts[a], pts[b], float(m.u0[a, b]), float(m.u1[a, b]))
        for a, b in zip(*np.nonzero(mask))
    ]


def best_response(m, player, opponent_delta, eps=DEFAULT_EPS):
    if player not in (0, 1):
        raise DomainError(f"player must be 0 or 1, got {player!r}")
    k = m.grid.index(opponent_delta)
    payoff = m.u0[:, k] if player == 0 else m.u1[k, :]
    top = payoff.max()
    return [m.grid.points[a] for a in np.nonzero(payoff >= top - eps)[0]]


def optimal_delay_xi(dist, params, val, grid, eps=0.0):
    """Best single-proposer delay on the grid.

    Returns ``(delta, utility)``; among utilities within ``eps`` of the
    maximum the smallest delay wins.
    """
    utils = np.array([utility_xi(dist, d, params, val) for d in grid.points])
    k = int(np.nonzero(utils >= utils.max() - eps)[0][0])
    return grid.points[k], float(utils[k])


class LatencyGameSolver(BaseEstimator):
    """Estimator-style front end to the discretised Latency Game.

    ``fit(spec)`` builds the payoff matrix and stores ``payoff_``,
    ``equilibria_`` and ``xi_optimum_`` (one ``(delta, utility)`` per player).
    ``predict(opponent_deltas, player)`` returns the smallest best response.
    """

    def __init__(self, step=0.05, eps=DEFAULT_EPS, abs_tol=1e-12, rel_tol=1e-10,
                 max_subdivisions=200):
        self.step = step
        self.eps = eps
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.max_subdivisions = max_subdivisions

    def fit(self, spec, y=None):
        grid = StrategyGrid(self.step, spec.params.tau1)
        quad = QuadratureConfig(self.abs_tol, self.rel_tol, self.max_subdivisions)
        self.spec_ = spec
        self.grid_ = grid
        self.payoff_ = build_matrix(spec, grid, quad)
        self.equilibria_ = find_psne(self.payoff_, self.eps)
        self.xi_optimum_ = tuple(
            optimal_delay_xi(spec.dist(i), spec.params, spec.valuation, grid)
            for i in (0, 1)
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "payoff_"):
            raise NotFittedError("LatencyGameSolver is not fitted yet; call fit(spec)")

    def predict(self, opponent_deltas, player=0):
        self._check_fitted()
        return np.array([
            best_response(self.payoff_, player, d, self.eps)[0]
            for d in np.atleast_1d(opponent_deltas)
        ])

    def score(self, spec=None, y=None):
        """Utility sum at the first equilibrium (NaN when there is none)."""
        self._check_fitted()
        if not self.equilibria_:
            return float("nan")
        eq = self.equilibria_[0]
        return eq.u0 + eq.u1
