"""Closed-form drift, equilibrium and event thresholds for the noisy
three-sample majority process.

The bias s = 2b - n evolves with conditional mean

    E[s' | s] = s (1-p)/2 * (3 - (s/n)^2 (1-p)^2),

which has interior fixed points +-s_eq = +-(n/(1-p)) * sqrt((1-3p)/(1-p))
exactly when p < 1/3.  Above that noise level the only fixed point is 0 and
the drift always points back toward the balanced configuration, which is why
p = 1/3 is the phase boundary every experiment in this package probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "InvalidEpsilon",
    "NOISE_THRESHOLD",
    "TheoremThresholds",
    "expected_bias",
    "equilibrium_bias",
    "metastable_interval",
    "theorem_thresholds",
    "validate_event_parameters",
]

NOISE_THRESHOLD = 1.0 / 3.0


class InvalidEpsilon(ValueError):
    """Event parameters outside the hypotheses the predictions require."""


def expected_bias(s: float, n: float, p: float) -> float:
    """Conditional mean of the next-round bias given the current bias s.

    Defined for real s as well, so it can be used as a smooth drift map;
    the process itself only visits integers with the parity of n.
    """
    c = 1.0 - p
    return s * c / 2.0 * (3.0 - (s / n) ** 2 * c * c)


def equilibrium_bias(n: float, p: float) -> float | None:
    """Positive interior fixed point of the drift map, or None for p >= 1/3.

    Returning None instead of 0 forces callers to branch on the regime
    explicitly.
    """
    if p >= NOISE_THRESHOLD:
        return None
    c = 1.0 - p
    return (n / c) * math.sqrt((1.0 - 3.0 * p) / c)


def metastable_interval(n: float, p: float, epsilon: float) -> tuple[float, float]:
    """Band [(1-eps) s_eq, (1+eps) s_eq] around the positive equilibrium."""
    if not 0.0 <= p < NOISE_THRESHOLD:
        raise ValueError(f"interior equilibrium requires p < 1/3, got p={p}")
    if not 0.0 < epsilon < 1.0 / 3.0:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1/3), got {epsilon}")
    if epsilon * epsilon > (1.0 - 3.0 * p) / 2.0:
        raise InvalidEpsilon(
            f"epsilon**2 must be <= (1-3p)/2; got epsilon**2={epsilon**2:.6g} "
            f"> {(1.0 - 3.0 * p) / 2.0:.6g} at p={p}"
        )
    s_eq = equilibrium_bias(n, p)
    assert s_eq is not None
    return ((1.0 - epsilon) * s_eq, (1.0 + epsilon) * s_eq)


@dataclass(frozen=True)
class TheoremThresholds:
    """Event levels used by the trial detectors.

    symmetry_break_level: |s| at which a near-balanced start counts as broken.
    noise_collapse_level: |s| below which the majority counts as lost.
    bounded_band: |s| the process should not exceed after the collapse.
    """

    symmetry_break_level: float
    noise_collapse_level: float
    bounded_band: float


def theorem_thresholds(
    n: float, p: float, gamma: float = 1.0, epsilon: float = 0.05
) -> TheoremThresholds:
    """Event boundaries for population size n; natural log throughout."""
    if n < 2:
        raise ValueError(f"population size must be at least 2, got {n}")
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if epsilon <= 0.0:
        raise InvalidEpsilon(f"epsilon must be positive, got {epsilon}")
    level = gamma * math.sqrt(n * math.log(n))
    return TheoremThresholds(
        symmetry_break_level=level,
        noise_collapse_level=math.sqrt(n) / (epsilon * epsilon),
        bounded_band=level,
    )


def validate_event_parameters(p: float, gamma: float, epsilon: float) -> None:
    """Check (gamma, epsilon) against the hypotheses of the regime at noise p.

    Below the threshold the metastable-band prediction needs epsilon < 1/3
    with epsilon**2 <= (1-3p)/2; above it the collapse prediction needs
    epsilon < min(1/4, 1-p, (3p-1)/2).  Raises InvalidEpsilon naming the
    violated constraint.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if epsilon <= 0.0:
        raise InvalidEpsilon(f"epsilon must be positive, got {epsilon}")
    if p < NOISE_THRESHOLD:
        if epsilon >= 1.0 / 3.0:
            raise InvalidEpsilon(
                f"epsilon must be < 1/3 for p < 1/3, got epsilon={epsilon}"
            )
        if epsilon * epsilon > (1.0 - 3.0 * p) / 2.0:
            raise InvalidEpsilon(
                f"epsilon**2 <= (1-3p)/2 violated: epsilon**2={epsilon**2:.6g} "
                f"> {(1.0 - 3.0 * p) / 2.0:.6g} at p={p}"
            )
    elif p > NOISE_THRESHOLD:
        bound = min(0.25, 1.0 - p, (3.0 * p - 1.0) / 2.0)
        if epsilon >= bound:
            raise InvalidEpsilon(
                f"epsilon must be < min(1/4, 1-p, (3p-1)/2) = {bound:.6g} "
                f"for p > 1/3, got epsilon={epsilon}"
            )
    # p == 1/3 sits on the boundary; neither regime constrains epsilon.
