"""Exact finite-state analysis of the aggregate beta-count chain.

For small populations the one-round law is computable in closed form, so the
(n+1)-state transition matrix is the ground truth every statistical claim in
the test suite is checked against: evolved distributions, one-step means and
first-passage times all come from direct linear algebra, independently of
any sampling code.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.special import gammaln

from .dynamics import beta_adoption_prob_3maj, beta_pull_prob

__all__ = [
    "Dynamics",
    "BiasChain",
    "CapExceeded",
    "DimensionMismatch",
    "SingularSystem",
    "MAX_CHAIN_N",
    "build_chain",
    "point_mass",
    "evolve",
    "one_step_mean_bias",
    "expected_hitting_time",
    "quasi_stationary_band_mass",
    "export_chain_csv",
]

MAX_CHAIN_N = 2048

# Direct dense solve is fine up to this size; above it one step of iterative
# refinement is applied to the first-passage system.
_REFINE_ABOVE = 512


class Dynamics(enum.Enum):
    """Update rules supported by the simulator; the exact chain covers the
    two whose aggregate state is the beta count alone."""

    THREE_MAJORITY = "three_majority"
    TWO_CHOICES = "two_choices"
    UNDECIDED_STATE = "undecided_state"


class CapExceeded(ValueError):
    """Requested chain larger than the configured dense-matrix cap."""


class DimensionMismatch(ValueError):
    """Distribution length does not match the chain's state space."""


class SingularSystem(ValueError):
    """First-passage system has no finite solution (target unreachable)."""


@dataclass(frozen=True)
class BiasChain:
    """Row-stochastic transition matrix over beta counts {0, ..., n}."""

    n: int
    p: float
    dynamics: Dynamics
    rows: np.ndarray

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.n + 1)

    @property
    def biases(self) -> np.ndarray:
        return 2 * self.states - self.n


def _binom_pmf(m: int, q: float) -> np.ndarray:
    """Binomial(m, q) pmf over {0, ..., m} via log-factorials."""
    out = np.zeros(m + 1)
    if q <= 0.0:
        out[0] = 1.0
        return out
    if q >= 1.0:
        out[m] = 1.0
        return out
    k = np.arange(m + 1)
    log_pmf = (
        gammaln(m + 1)
        - gammaln(k + 1)
        - gammaln(m - k + 1)
        + k * np.log(q)
        + (m - k) * np.log1p(-q)
    )
    return np.exp(log_pmf)


def _normalize_row(row: np.ndarray, b: int) -> np.ndarray:
    residual = abs(row.sum() - 1.0)
    if residual > 1e-10:
        raise ValueError(f"row {b} fails normalization by {residual:.3e}")
    if residual > 1e-12:
        row = row / row.sum()
    return row


def build_chain(
    n: int,
    p: float,
    dynamics: Dynamics = Dynamics.THREE_MAJORITY,
    cap: int = MAX_CHAIN_N,
) -> BiasChain:
    """Exact (n+1) x (n+1) transition matrix of the aggregate process."""
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the dense-chain cap {cap}")
    if n <= 0:
        raise ValueError(f"population size must be positive, got {n}")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"noise probability must lie in [0, 1), got {p}")
    if dynamics is Dynamics.UNDECIDED_STATE:
        raise ValueError(
            "the undecided-state process is not a function of the beta count "
            "alone; its ground truth is exhaustive enumeration at small n"
        )

    rows = np.empty((n + 1, n + 1))
    for b in range(n + 1):
        if dynamics is Dynamics.THREE_MAJORITY:
            q = float(beta_adoption_prob_3maj(n, b, p))
            row = _binom_pmf(n, q)
        else:
            qb = beta_pull_prob(n, b, p)
            qa = 1.0 - qb
            # Independent flips in the two camps; their sum spans {0, ..., n}.
            row = np.convolve(_binom_pmf(b, 1.0 - qa * qa), _binom_pmf(n - b, qb * qb))
        rows[b] = _normalize_row(row, b)
    rows.setflags(write=False)
    return BiasChain(n=n, p=p, dynamics=dynamics, rows=rows)


def point_mass(n: int, b: int) -> np.ndarray:
    """Distribution concentrated on beta count b."""
    if not 0 <= b <= n:
        raise ValueError(f"state must lie in [0, {n}], got {b}")
    dist = np.zeros(n + 1)
    dist[b] = 1.0
    return dist


def _check_distribution(dist: np.ndarray, chain: BiasChain) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (chain.n + 1,):
        raise DimensionMismatch(
            f"distribution has length {dist.size}, chain expects {chain.n + 1}"
        )
    if dist.min() < -1e-12 or abs(dist.sum() - 1.0) > 1e-10:
        raise ValueError("distribution must be non-negative and sum to 1")
    return dist


def evolve(dist: np.ndarray, chain: BiasChain, t: int) -> np.ndarray:
    """Distribution after t rounds, computed by t vector-matrix products."""
    if t < 0:
        raise ValueError(f"round count must be non-negative, got {t}")
    w = _check_distribution(dist, chain).copy()
    for _ in range(t):
        w = w @ chain.rows
    return w


def one_step_mean_bias(chain: BiasChain, b: int) -> float:
    """Mean next-round bias from beta count b: sum_b' P(b -> b') (2b' - n)."""
    if not 0 <= b <= chain.n:
        raise ValueError(f"state must lie in [0, {chain.n}], got {b}")
    return float(chain.rows[b] @ chain.biases)


def expected_hitting_time(
    chain: BiasChain, start: int, target: Iterable[int]
) -> float:
    """Expected rounds until the chain first enters the target set.

    Solves the first-passage system (I - Q) h = 1 restricted to non-target
    states, where Q is the sub-matrix over those states.
    """
    target_set = set(int(s) for s in target)
    if not target_set:
        raise ValueError("target set must be non-empty")
    if not all(0 <= s <= chain.n for s in target_set):
        raise ValueError(f"target states must lie in [0, {chain.n}]")
    if not 0 <= start <= chain.n:
        raise ValueError(f"start state must lie in [0, {chain.n}], got {start}")
    if start in target_set:
        return 0.0

    keep = np.array([s for s in range(chain.n + 1) if s not in target_set])
    A = np.eye(keep.size) - chain.rows[np.ix_(keep, keep)]
    ones = np.ones(keep.size)
    try:
        with warnings.catch_warnings():
            # An exactly-zero pivot is reported as SingularSystem below.
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(A)
            h = lu_solve(lu, ones)
            if keep.size > _REFINE_ABOVE:
                h += lu_solve(lu, ones - A @ h)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"target unreachable from some state: {exc}") from exc
    if not np.all(np.isfinite(h)) or np.max(np.abs(A @ h - ones)) > 1e-6:
        raise SingularSystem("first-passage system is singular; target unreachable")
    return float(h[np.searchsorted(keep, start)])


def quasi_stationary_band_mass(
    chain: BiasChain, band: tuple[int, int], dist0: np.ndarray, t: int
) -> float:
    """Probability mass on beta counts in [band[0], band[1]] after t rounds."""
    lo, hi = band
    w = evolve(dist0, chain, t)
    if hi < lo:
        return 0.0
    lo = max(int(lo), 0)
    hi = min(int(hi), chain.n)
    return float(w[lo : hi + 1].sum())


def export_chain_csv(chain: BiasChain, path) -> None:
    """Write the matrix row-major as 'from,to,prob' with 17 digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("from,to,prob\n")
        for b in range(chain.n + 1):
            for b2 in range(chain.n + 1):
                fh.write(f"{b},{b2},{chain.rows[b, b2]:.17g}\n")
