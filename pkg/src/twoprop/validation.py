"""Input validation helpers shared by the analytic and simulation code."""

import math
import numbers


class DomainError(ValueError):
    """Raised when an argument falls outside the domain of an operation."""


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def check_non_negative(value, name):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be non-negative and finite, got {value!r}")
    return float(value)


def check_probability(value, name="probability"):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_delay(delta, tau1, name="delta"):
    """Validate a proposal delay against the attestation deadline.

    Values within 1e-12 of an endpoint are snapped onto it so grid points
    built by repeated arithmetic do not fail the range check.
    """
    if not isinstance(delta, numbers.Real) or isinstance(delta, bool):
        raise DomainError(f"{name} must be a real number, got {delta!r}")
    delta = float(delta)
    if -1e-12 < delta < 0.0:
        delta = 0.0
    elif tau1 < delta < tau1 + 1e-12:
        delta = float(tau1)
    if not 0.0 <= delta <= tau1:
        raise DomainError(f"{name} must lie in [0, {tau1}], got {delta!r}")
    return delta
