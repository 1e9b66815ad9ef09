"""Block valuation and expected proposer utilities.

All utilities are normalised by the expected pre-slot block value, so a
block published at delta=0 and confirmed with full reward is worth 1.

For two proposers i and j, one attestor ends up in one of five states:

    both blocks, i first      p_i
    both blocks, j first      p_j
    only i                    q_i (1 - q_j)
    only j                    q_j (1 - q_i)
    neither                   (1 - q_i)(1 - q_j)

``utility_2prop`` sums the multinomial over attestation counts (x, y), the
number w of attestors holding both blocks, and their vote split z.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special

from .delay import DEFAULT_QUAD, ProtocolParams, m_threshold, p_first, q_reach
from .validation import DomainError, check_delay, check_non_negative, check_probability

__all__ = [
    "ValuationModel",
    "UtilityBreakdown",
    "ScenarioSpec",
    "block_value",
    "utility_2prop",
    "utility_from_probabilities",
    "r1_weight_total",
    "z_share_direct",
    "z_share_fast",
    "utility_xi",
    "collusion_probability",
]


@dataclass(frozen=True)
class ValuationModel:
    """Linear extra block value ``v(delta) = slope_c * delta``.

    ``slope_c`` is per second and in units of the normaliser, so the default
    0.25 makes a block held until tau1 = 4 s worth twice a prompt one.
    """

    slope_c: float = 0.25
    normalizer: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "slope_c", check_non_negative(self.slope_c, "slope_c"))
        if not self.normalizer > 0:
            raise DomainError(f"normalizer must be positive, got {self.normalizer!r}")

    def value(self, delta):
        return self.slope_c * np.asarray(delta, dtype=float)


@dataclass(frozen=True)
class UtilityBreakdown:
    r1: float
    r2: float

    @property
    def total(self):
        return self.r1 + self.r2


@dataclass(frozen=True)
class ScenarioSpec:
    """The two proposers' delay laws together with protocol and valuation."""

    dist_0: object
    dist_1: object
    params: ProtocolParams = ProtocolParams()
    valuation: ValuationModel = ValuationModel()

    def __post_init__(self):
        for name in ("dist_0", "dist_1"):
            d = getattr(self, name)
            if not (hasattr(d, "cdf") and hasattr(d, "pdf")):
                raise DomainError(f"{name} is not a delay distribution: {d!r}")

    def dist(self, i):
        return (self.dist_0, self.dist_1)[i]

    @property
    def homogeneous(self):
        return self.dist_0 == self.dist_1


def block_value(val, delta, tau1=4.0):
    delta = check_delay(delta, tau1)
    return val.slope_c * delta


# -- the both-confirmable term ------------------------------------------------

def z_share_direct(x, y, w, p_i, p_j):
    """Vote-weighted reward share, summing the vote split of the w common
    attestors term by term."""
    total = 0.0
    for z in range(w + 1):
        total += math.comb(w, z) * p_i**z * p_j ** (w - z) * (x - w + z) / (x + y - w)
    return total


def z_share_fast(x, y, w, p_i, p_j):
    """Closed form of ``z_share_direct`` via the binomial mean."""
    s = p_i + p_j
    lead = (x - w) * s**w
    tail = w * p_i * s ** (w - 1) if w > 0 else 0.0
    return (lead + tail) / (x + y - w)


class _R1Kernel:
    """Index set and log multinomial counts for fixed (n, K)."""

    def __init__(self, n, k_lo):
        xs, ys, ws = [], [], []
        for x in range(k_lo, n + 1):
            for y in range(k_lo, n + 1):
                for w in range(max(0, x + y - n), min(x, y) + 1):
                    xs.append(x)
                    ys.append(y)
                    ws.append(w)
        self.n = n
        self.x = np.array(xs, dtype=float)
        self.y = np.array(ys, dtype=float)
        self.w = np.array(ws, dtype=float)
        lg = special.gammaln
        n1 = lg(n + 1.0)
        # C(n,w) C(n-w,x-w) C(n-x,y-w) as a multinomial over the four groups
        self.log_e = n1 - (
            lg(self.w + 1)
            + lg(self.x - self.w + 1)
            + lg(self.y - self.w + 1)
            + lg(n - self.x - self.y + self.w + 1)
        )
        self.denom = self.x + self.y - self.w
        self.chunk = max(1, 2_000_000 // max(len(xs), 1))

    def _log_weights(self, qi, qj):
        x, y, w, n = self.x, self.y, self.w, self.n
        a = (qi * (1 - qj))[:, None]
        b = (qj * (1 - qi))[:, None]
        c = ((1 - qi) * (1 - qj))[:, None]
        return (
            self.log_e
            + special.xlogy(x - w, a)
            + special.xlogy(y - w, b)
            + special.xlogy(n - x - y + w, c)
        )

    def share(self, qi, qj, pi, pj):
        out = np.empty(len(qi))
        w = self.w
        wm1 = np.maximum(w - 1, 0)
        for lo in range(0, len(qi), self.chunk):
            sl = slice(lo, lo + self.chunk)
            s = (pi[sl] + pj[sl])[:, None]
            with np.errstate(divide="ignore"):
                weights = np.exp(self._log_weights(qi[sl], qj[sl]))
            zf = (self.x - w) * s**w + w * pi[sl][:, None] * s**wm1
            out[sl] = np.sum(weights * zf / self.denom, axis=1)
        return out

    def weight_total(self, qi, qj, pi, pj):
        s = (pi + pj)[:, None]
        with np.errstate(divide="ignore"):
            weights = np.exp(self._log_weights(qi, qj))
        return np.sum(weights * s**self.w, axis=1)


@lru_cache(maxsize=32)
def _kernel(n, k_lo):
    return _R1Kernel(n, k_lo)


def _as_arrays(*vals):
    arrs = np.broadcast_arrays(*[np.atleast_1d(np.asarray(v, dtype=float)) for v in vals])
    return [a.ravel() for a in arrs], arrs[0].shape


def utility_from_probabilities(n, K, q_i, q_j, p_i, p_j, v_i, v_j, fast=True):
    """(r1, r2) for proposer i from its reach/first-arrival probabilities.

    Inputs broadcast, so a whole payoff matrix can be evaluated at once.
    """
    (qi, qj, pi, pj, vi, vj), shape = _as_arrays(q_i, q_j, p_i, p_j, v_i, v_j)
    if fast:
        share = _kernel(n, K).share(qi, qj, pi, pj)
    else:
        share = np.array([_share_direct(n, K, *args) for args in zip(qi, qj, pi, pj)])
    r1 = share * (1.0 + 0.5 * (vi + vj))
    r2 = m_threshold(qi, n, K) * (1.0 - m_threshold(qj, n, K)) * (1.0 + vi)
    if all(np.ndim(v) == 0 for v in (q_i, q_j, p_i, p_j, v_i, v_j)):
        return float(r1[0]), float(r2[0])
    return r1.reshape(shape), r2.reshape(shape)


def _share_direct(n, K, qi, qj, pi, pj):
    a, b, c = qi * (1 - qj), qj * (1 - qi), (1 - qi) * (1 - qj)
    total = 0.0
    for x in range(K, n + 1):
        for y in range(K, n + 1):
            for w in range(max(0, x + y - n), min(x, y) + 1):
                e = math.comb(n, w) * math.comb(n - w, x - w) * math.comb(n - x, y - w)
                weight = e * a ** (x - w) * b ** (y - w) * c ** (n - (x + y - w))
                total += weight * z_share_direct(x, y, w, pi, pj)
    return total


def r1_weight_total(n, q_i, q_j, p_i, p_j):
    """Total probability of the multinomial weights with x, y over all of [0, n].

    Equals 1 whenever ``p_i + p_j == q_i * q_j``.
    """
    (qi, qj, pi, pj), _ = _as_arrays(q_i, q_j, p_i, p_j)
    out = _kernel(n, 0).weight_total(qi, qj, pi, pj)
    return float(out[0]) if np.ndim(q_i) == 0 else out


def utility_2prop(spec, delta_0, delta_1, for_player, quad=DEFAULT_QUAD, fast=True):
    """Expected normalised utility of ``for_player`` under 2-Prop."""
    if for_player not in (0, 1):
        raise DomainError(f"for_player must be 0 or 1, got {for_player!r}")
    params = spec.params
    deltas = (check_delay(delta_0, params.tau1, "delta_0"),
              check_delay(delta_1, params.tau1, "delta_1"))
    i, j = for_player, 1 - for_player
    di, dj = spec.dist(i), spec.dist(j)
    qi = q_reach(di, deltas[i], params)
    qj = q_reach(dj, deltas[j], params)
    pi = p_first(di, dj, deltas[i], deltas[j], params, quad)
    pj = p_first(dj, di, deltas[j], deltas[i], params, quad)
    val = spec.valuation
    r1, r2 = utility_from_probabilities(
        params.n_attestors, params.threshold, qi, qj, pi, pj,
        val.slope_c * deltas[i], val.slope_c * deltas[j], fast=fast,
    )
    return UtilityBreakdown(r1=max(r1, 0.0), r2=max(r2, 0.0))


def utility_xi(dist, delta, params, val):
    """Single-proposer objective (1 + v(delta)) * P[at least K attestations]."""
    delta = check_delay(delta, params.tau1)
    q = q_reach(dist, delta, params)
    return (1.0 + val.slope_c * delta) * m_threshold(q, params.n_attestors, params.threshold)


def collusion_probability(p_single):
    """Chance that both independently drawn proposers belong to the colluding set."""
    p = check_probability(p_single, "p_single")
    return p * p
