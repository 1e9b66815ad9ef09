"""Propagation-delay laws and the attestor reach probabilities built on them.

A proposer's block reaches each attestor after a random network delay drawn
from a Gamma(shape, rate) law.  Everything downstream (utilities, equilibria,
simulation) consumes the three quantities defined here:

* ``q_reach``      -- one attestor receives a block delayed by ``delta`` by tau1
* ``p_first``      -- one attestor receives block i strictly before block j,
                      both in time
* ``m_threshold``  -- at least K of n attestors receive a block in time
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .validation import (
    DomainError,
    check_count,
    check_delay,
    check_positive,
)

__all__ = [
    "DelayDistribution",
    "UniformDelay",
    "ProtocolParams",
    "QuadratureConfig",
    "QuadratureError",
    "pdf",
    "cdf",
    "q_reach",
    "p_first",
    "m_threshold",
    "restricted_l2",
    "is_peaked",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class DelayDistribution:
    """Gamma law of the delay between publication and receipt at an attestor.

    ``rate`` is in 1/seconds, so ``mean == shape / rate`` seconds.
    """

    shape: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "shape", check_positive(self.shape, "shape"))
        object.__setattr__(self, "rate", check_positive(self.rate, "rate"))

    @classmethod
    def from_mean(cls, mean, shape=2.0):
        mean = check_positive(mean, "mean")
        return cls(shape=shape, rate=shape / mean)

    @property
    def mean(self):
        return self.shape / self.rate

    def scaled(self, gamma):
        """Same shape, mean multiplied by ``gamma``."""
        gamma = check_positive(gamma, "gamma")
        return DelayDistribution(self.shape, self.rate / gamma)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, lam = self.shape, self.rate
        xp = np.where(x > 0, x, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            log_f = a * math.log(lam) + (a - 1.0) * np.log(xp) - lam * xp - math.lgamma(a)
            out = np.where(x > 0, np.exp(log_f), 0.0)
        if a == 1.0:
            out = np.where(x == 0, lam, out)
        elif a < 1.0:
            out = np.where(x == 0, np.inf, out)
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0, special.gammainc(self.shape, self.rate * np.maximum(x, 0.0)), 0.0)
        return out[()] if out.ndim == 0 else out

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    # Scalar fast paths used inside quadrature integrands.
    def _pdf1(self, x):
        if x <= 0.0:
            return float(self.pdf(x))
        a, lam = self.shape, self.rate
        return math.exp(a * math.log(lam) + (a - 1.0) * math.log(x) - lam * x - math.lgamma(a))

    def _cdf1(self, x):
        if x <= 0.0:
            return 0.0
        return float(special.gammainc(self.shape, self.rate * x))


@dataclass(frozen=True)
class UniformDelay:
    """Uniform delay on ``[0, width]``; only used to exercise edge cases."""

    width: float

    def __post_init__(self):
        object.__setattr__(self, "width", check_positive(self.width, "width"))

    @property
    def mean(self):
        return self.width / 2.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= 0) & (x <= self.width), 1.0 / self.width, 0.0)
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip(x / self.width, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def sample(self, rng, size):
        return rng.uniform(0.0, self.width, size)

    def _pdf1(self, x):
        return 1.0 / self.width if 0.0 <= x <= self.width else 0.0

    def _cdf1(self, x):
        return min(max(x / self.width, 0.0), 1.0)


@dataclass(frozen=True)
class ProtocolParams:
    """Slot timing (seconds) and attestation threshold.

    Defaults are the experiment preset (n=12, K=9); ``ethereum()`` gives the
    mainnet committee (n=127, K=floor(2n/3)+1).
    """

    slot_len: float = 12.0
    attest_deadline: float = 4.0
    aggregate_deadline: float = 8.0
    n_attestors: int = 12
    threshold: int = 9

    def __post_init__(self):
        for name in ("slot_len", "attest_deadline", "aggregate_deadline"):
            object.__setattr__(self, name, check_positive(getattr(self, name), name))
        if not self.attest_deadline < self.aggregate_deadline < self.slot_len:
            raise DomainError(
                "need 0 < attest_deadline < aggregate_deadline < slot_len, got "
                f"{self.attest_deadline}, {self.aggregate_deadline}, {self.slot_len}"
            )
        n = check_count(self.n_attestors, "n_attestors", minimum=1)
        k = check_count(self.threshold, "threshold", minimum=1)
        if k > n:
            raise DomainError(f"threshold K={k} exceeds n_attestors n={n}")

    @classmethod
    def ethereum(cls):
        n = 127
        return cls(12.0, 4.0, 8.0, n, 2 * n // 3 + 1)

    @property
    def tau1(self):
        return self.attest_deadline


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        check_positive(self.abs_tol, "abs_tol")
        check_positive(self.rel_tol, "rel_tol")
        check_count(self.max_subdivisions, "max_subdivisions", minimum=1)


DEFAULT_QUAD = QuadratureConfig()


def pdf(dist, x):
    return dist.pdf(x)


def cdf(dist, x):
    return dist.cdf(x)


def q_reach(dist, delta, params):
    """Probability that a single attestor receives the block by tau1."""
    delta = check_delay(delta, params.tau1)
    return float(dist.cdf(params.tau1 - delta))


def _checked_quad(func, a, b, quad, points=None):
    val, err, info = integrate.quad(
        func, a, b,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        # quadpack needs more subintervals than break points
        limit=max(quad.max_subdivisions, len(points or ()) + 1),
        points=points,
        full_output=1,
    )[:3]
    if err > max(quad.abs_tol, quad.rel_tol * abs(val)):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge", err)
    return val


def p_first(dist_i, dist_j, delta_i, delta_j, params, quad=DEFAULT_QUAD):
    """Probability that block i reaches an attestor strictly before block j,
    with both inside the attestation window.

    The inner integral over block j's delay is the CDF difference
    ``F_j(tau1 - delta_j) - F_j(x + delta_i - delta_j)``; only the outer
    integral over block i's delay is numerical.
    """
    tau1 = params.tau1
    delta_i = check_delay(delta_i, tau1, "delta_i")
    delta_j = check_delay(delta_j, tau1, "delta_j")
    upper = tau1 - delta_i
    if upper <= 0.0:
        return 0.0
    top = dist_j._cdf1(tau1 - delta_j)
    if top == 0.0:
        return 0.0
    shift = delta_i - delta_j
    pdf_i, cdf_j = dist_i._pdf1, dist_j._cdf1

    def integrand(x):
        return pdf_i(x) * max(top - cdf_j(x + shift), 0.0)

    kink = -shift
    points = [kink] if 0.0 < kink < upper else None
    return _checked_quad(integrand, 0.0, upper, quad, points)


def _log_binom(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def m_threshold(q, n, K):
    """Probability that at least K of n attestors receive the block.

    Terms are accumulated in log space with log-gamma coefficients, so large
    committees (n=127) neither overflow nor lose the tail.  ``q`` may be an
    array; the result then has the same shape.
    """
    n = check_count(n, "n", minimum=1)
    K = check_count(K, "K", minimum=1)
    if K > n:
        raise DomainError(f"K={K} exceeds n={n}")
    q_arr = np.asarray(q, dtype=float)
    if np.any((q_arr < 0) | (q_arr > 1)) or np.any(np.isnan(q_arr)):
        raise DomainError(f"q must lie in [0, 1], got {q!r}")
    k = np.arange(K, n + 1, dtype=float)
    qf = q_arr.reshape(-1, 1)
    log_terms = (
        _log_binom(n, k)
        + special.xlogy(k, qf)
        + special.xlog1py(n - k, -qf)
    )
    out = np.exp(special.logsumexp(log_terms, axis=1))
    out = np.clip(out, 0.0, 1.0).reshape(q_arr.shape)
    return float(out) if out.ndim == 0 else out


def restricted_l2(dist, a, b, quad=DEFAULT_QUAD):
    """L2 norm of the density restricted to ``[a, b]``."""
    if a < 0 or b < a:
        raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    sq = _checked_quad(lambda x: dist._pdf1(x) ** 2, a, b, quad)
    return math.sqrt(max(sq, 0.0))


def is_peaked(dist, tau1, quad=DEFAULT_QUAD):
    """Peakedness condition on the attestation window: L2[0, tau1] >= 1/(2 sqrt(tau1))."""
    return restricted_l2(dist, 0.0, tau1, quad) >= 1.0 / (2.0 * math.sqrt(tau1))
