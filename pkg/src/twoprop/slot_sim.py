"""Event-level Monte-Carlo simulation of a single 2-Prop (or single-proposer) slot.

Each attestor independently draws a network delay for every published block.
Blocks arriving after the attestation deadline are ignored; the earlier of
the two arrivals is the attestor's vote.  Confirmation, the hash-based die
roll and vote-proportional reward sharing follow the protocol rules.

Every slot gets its own random stream derived from ``(seed, slot_index)``,
so results are reproducible and trials can be merged in any order.
"""

from dataclasses import dataclass
import hashlib
import json
import math

import numpy as np

from .payoff import ScenarioSpec
from .validation import DomainError, check_count, check_delay

__all__ = [
    "TWO_PROP",
    "XI_BASELINE",
    "SlotInputs",
    "AttestorObservation",
    "SlotOutcome",
    "BlockCommitment",
    "MonteCarloEstimate",
    "run_slot",
    "reward_share",
    "die_roll",
    "commitment_for",
    "monte_carlo_utility",
    "trace_record",
    "write_trace",
]

TWO_PROP = "two-prop"
XI_BASELINE = "xi-baseline"
_MODES = (TWO_PROP, XI_BASELINE)
_U64 = 2**64


@dataclass(frozen=True)
class SlotInputs:
    spec: ScenarioSpec
    delta_0: float
    delta_1: float = 0.0
    seed: int = 0
    mode: str = TWO_PROP
    slot_index: int = 0

    def __post_init__(self):
        tau1 = self.spec.params.tau1
        object.__setattr__(self, "delta_0", check_delay(self.delta_0, tau1, "delta_0"))
        object.__setattr__(self, "delta_1", check_delay(self.delta_1, tau1, "delta_1"))
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        seed = check_count(self.seed, "seed")
        if seed >= _U64:
            raise DomainError(f"seed must fit in 64 bits, got {seed}")
        check_count(self.slot_index, "slot_index")


@dataclass(frozen=True)
class AttestorObservation:
    arrival_0: float | None
    arrival_1: float | None
    first_block: int | None


@dataclass(frozen=True)
class SlotOutcome:
    x0: int
    x1: int
    y0: int
    y1: int
    confirmed: int | None
    r0: float
    r1: float
    value0: float
    value1: float
    observations: tuple = ()


@dataclass(frozen=True)
class BlockCommitment:
    """32-byte stand-in for a block's Merkle root."""

    root: bytes

    def __post_init__(self):
        if not isinstance(self.root, (bytes, bytearray)) or len(self.root) != 32:
            raise DomainError("a block commitment must be exactly 32 bytes")
        object.__setattr__(self, "root", bytes(self.root))

    def hex(self):
        return self.root.hex()


def reward_share(x0, x1, y0, y1, K, n=None):
    """Fractions of the confirmed block's reward paid to each proposer."""
    x0, x1, y0, y1 = (check_count(v, name) for v, name in
                      ((x0, "x0"), (x1, "x1"), (y0, "y0"), (y1, "y1")))
    if y0 > x0 or y1 > x1:
        raise DomainError(f"votes exceed attestations: x=({x0},{x1}) y=({y0},{y1})")
    if n is not None and (max(x0, x1) > n or y0 + y1 > n):
        raise DomainError(f"counts exceed n={n}: x=({x0},{x1}) y=({y0},{y1})")
    ok0, ok1 = x0 >= K, x1 >= K
    if ok0 and ok1:
        votes = y0 + y1
        if votes == 0:
            return 0.5, 0.5
        return y0 / votes, y1 / votes
    if ok0:
        return 1.0, 0.0
    if ok1:
        return 0.0, 1.0
    return 0.0, 0.0


def _sha256(data):
    return hashlib.sha256(data).digest()


_MAX_REROLLS = 64


def die_roll(roots):
    """Pick one of k committed blocks: the block whose root hash is closest in
    Hamming distance to the hash of all root hashes.

    A tie is re-rolled by hashing the combined hash again, which keeps the
    roll unbiased; blocks whose hashes coincide cannot be separated and
    resolve to the lowest index.
    """
    if not roots:
        raise DomainError("die_roll needs at least one block commitment")
    hashes = [_sha256(r.root if isinstance(r, BlockCommitment) else bytes(r)) for r in roots]
    values = [int.from_bytes(h, "big") for h in hashes]
    combined = _sha256(b"".join(hashes))
    for _ in range(_MAX_REROLLS):
        c = int.from_bytes(combined, "big")
        distances = [(c ^ v).bit_count() for v in values]
        best = min(distances)
        winners = [d for d, dist in enumerate(distances) if dist == best]
        if len(winners) == 1 or len({values[d] for d in winners}) == 1:
            return winners[0]
        combined = _sha256(combined)
    return winners[0]


def commitment_for(seed, slot_index, proposer):
    data = seed.to_bytes(8, "big") + slot_index.to_bytes(8, "big") + bytes([proposer])
    return BlockCommitment(_sha256(data))


def _stream(seed, slot_index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(slot_index,)))


def run_slot(inputs, keep_observations=False):
    spec = inputs.spec
    params = spec.params
    n, K, tau1 = params.n_attestors, params.threshold, params.tau1
    rng = _stream(inputs.seed, inputs.slot_index)

    arr0 = inputs.delta_0 + spec.dist_0.sample(rng, n)
    in0 = arr0 <= tau1
    if inputs.mode == TWO_PROP:
        arr1 = inputs.delta_1 + spec.dist_1.sample(rng, n)
        in1 = arr1 <= tau1
    else:
        arr1 = np.full(n, np.inf)
        in1 = np.zeros(n, dtype=bool)
    coin = rng.random(n) < 0.5

    both = in0 & in1
    zero_first = both & ((arr0 < arr1) | ((arr0 == arr1) & coin))
    first = np.full(n, -1)
    first[in0 & ~in1] = 0
    first[in1 & ~in0] = 1
    first[both] = 1
    first[zero_first] = 0

    x0, x1 = int(in0.sum()), int(in1.sum())
    y0, y1 = int((first == 0).sum()), int((first == 1).sum())
    r0, r1 = reward_share(x0, x1, y0, y1, K, n)

    if x0 >= K and x1 >= K:
        confirmed = die_roll([commitment_for(inputs.seed, inputs.slot_index, p) for p in (0, 1)])
    elif x0 >= K:
        confirmed = 0
    elif x1 >= K:
        confirmed = 1
    else:
        confirmed = None

    if confirmed is None:
        value0 = value1 = 0.0
    else:
        delta_win = (inputs.delta_0, inputs.delta_1)[confirmed]
        factor = 1.0 + spec.valuation.slope_c * delta_win
        value0, value1 = r0 * factor, r1 * factor

    observations = ()
    if keep_observations:
        observations = tuple(
            AttestorObservation(
                float(arr0[k]) if in0[k] else None,
                float(arr1[k]) if in1[k] else None,
                None if first[k] < 0 else int(first[k]),
            )
            for k in range(n)
        )
    return SlotOutcome(x0, x1, y0, y1, confirmed, r0, r1, value0, value1, observations)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean_0: float
    mean_1: float
    stderr_0: float
    stderr_1: float
    trials: int

    @property
    def stderr_defined(self):
        """False for a single trial, where the standard errors are 0 by convention."""
        return self.trials > 1

    def __iter__(self):
        return iter((self.mean_0, self.mean_1, self.stderr_0, self.stderr_1))


def monte_carlo_utility(spec, delta_0, delta_1, trials, seed, mode=TWO_PROP, on_slot=None):
    """Mean realised normalised reward of each proposer over seeded slots.

    ``on_slot(inputs, outcome)``, if given, sees every simulated slot in order.
    """
    trials = check_count(trials, "trials", minimum=1)
    v0 = np.empty(trials)
    v1 = np.empty(trials)
    for t in range(trials):
        inputs = SlotInputs(spec, delta_0, delta_1, seed, mode, slot_index=t)
        out = run_slot(inputs)
        if on_slot is not None:
            on_slot(inputs, out)
        v0[t], v1[t] = out.value0, out.value1
    if trials == 1:
        return MonteCarloEstimate(float(v0[0]), float(v1[0]), 0.0, 0.0, 1)
    scale = math.sqrt(trials)
    return MonteCarloEstimate(
        float(v0.mean()), float(v1.mean()),
        float(v0.std(ddof=1) / scale), float(v1.std(ddof=1) / scale),
        trials,
    )


def trace_record(inputs, outcome):
    return {
        "seed": inputs.seed,
        "slot_index": inputs.slot_index,
        "mode": inputs.mode,
        "delta_0": inputs.delta_0,
        "delta_1": inputs.delta_1,
        "commitments": [commitment_for(inputs.seed, inputs.slot_index, p).hex() for p in (0, 1)],
        "x": [outcome.x0, outcome.x1],
        "y": [outcome.y0, outcome.y1],
        "confirmed": outcome.confirmed,
        "rewards": [outcome.r0, outcome.r1],
        "values": [outcome.value0, outcome.value1],
    }


def write_trace(fp, records):
    """Write one JSON object per line."""
    for rec in records:
        fp.write(json.dumps(rec, sort_keys=True) + "\n")
