"""Single-round update laws for opinion dynamics under uniform message noise.

The communication network is the complete graph with self loops, so agents
are exchangeable and a configuration is fully described by opinion counts.
Every message an agent pulls is independently garbled with probability p,
in which case the received symbol is uniform over the message alphabet.

Three dynamics are implemented, each in an exact aggregate form (one
binomial/multinomial draw per sub-population per round) and, for the
three-sample majority rule, also agent by agent for cross-validation:

* three-sample majority: adopt the majority of three pulled opinions;
* two-choices: adopt an opinion only if both pulled samples agree on it;
* undecided-state: conflicting pull makes an agent undecided, and an
  undecided agent adopts whatever opinion it pulls.

The noisy pull is also reproduced exactly by a noiseless model with two
fixed communities of stubborn agents, one per opinion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Configuration",
    "TernaryConfiguration",
    "StubbornConfiguration",
    "PullDistribution",
    "RngStream",
    "NonIntegralStubbornSize",
    "pull_probabilities",
    "ternary_pull_probabilities",
    "adopt_beta_probability_3maj",
    "step_aggregate_3maj",
    "step_agentwise_3maj",
    "step_2choices",
    "step_undecided",
    "to_stubborn_model",
    "stubborn_adopt_beta_probability",
    "step_stubborn_3maj",
    "beta_pull_prob",
    "beta_adoption_prob_3maj",
    "sample_next_b_3maj",
    "sample_next_b_2choices",
    "sample_next_counts_undecided",
]


class NonIntegralStubbornSize(ValueError):
    """p*n / (2*(1-p)) is not an integer, so no exact stubborn model exists."""


def _check_noise(p: float) -> None:
    # The model takes p in (0, 1); p = 0 is admitted as the noiseless baseline.
    if not 0.0 <= p < 1.0:
        raise ValueError(f"noise probability must lie in [0, 1), got {p}")


@dataclass(frozen=True)
class Configuration:
    """Population of n agents on the complete graph, b of them holding beta."""

    n: int
    b: int

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"population size must be positive, got {self.n}")
        if not 0 <= self.b <= self.n:
            raise ValueError(f"beta count must lie in [0, {self.n}], got {self.b}")

    @property
    def a(self) -> int:
        return self.n - self.b

    @property
    def bias(self) -> int:
        return 2 * self.b - self.n


@dataclass(frozen=True)
class TernaryConfiguration:
    """Population with b beta supporters, u undecided agents, rest alpha."""

    n: int
    b: int
    u: int

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"population size must be positive, got {self.n}")
        if self.b < 0 or self.u < 0 or self.b + self.u > self.n:
            raise ValueError(
                f"counts must satisfy b >= 0, u >= 0, b + u <= n; "
                f"got b={self.b}, u={self.u}, n={self.n}"
            )

    @property
    def a(self) -> int:
        return self.n - self.b - self.u

    @property
    def bias(self) -> int:
        # Difference between the decided camps; undecided agents do not count.
        return self.b - self.a


@dataclass(frozen=True)
class PullDistribution:
    """Per-sample probabilities of receiving each symbol through the noisy channel."""

    q_alpha: float
    q_beta: float
    q_undecided: float = 0.0


@dataclass(frozen=True)
class StubbornConfiguration:
    """Noiseless population with two equal stubborn communities, one per opinion."""

    regular: Configuration
    stubborn_per_opinion: int

    def __post_init__(self) -> None:
        if self.stubborn_per_opinion < 0:
            raise ValueError("stubborn community size must be non-negative")

    @property
    def total(self) -> int:
        return self.regular.n + 2 * self.stubborn_per_opinion

    @property
    def pull_beta(self) -> float:
        """Probability that a pull over the enlarged population returns beta."""
        return (self.regular.b + self.stubborn_per_opinion) / self.total


@dataclass
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    The same pair always reproduces the same sample sequence, and distinct
    stream ids give statistically independent generators, so trials can run
    on a worker pool without sharing state.
    """

    seed: int
    stream_id: int = 0
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative integers")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# Scalar core, shared by the public operations, the exact chain and the
# experiment loops.  All functions accept numpy arrays for b.
# ---------------------------------------------------------------------------

def beta_pull_prob(n, b, p):
    """Probability that one pulled message reads beta: (b/n)(1-p) + p/2."""
    return (b / n) * (1.0 - p) + p / 2.0


def beta_adoption_prob_3maj(n, b, p):
    """Probability a single agent's three-sample majority comes out beta."""
    qb = beta_pull_prob(n, b, p)
    qa = 1.0 - qb
    return qb * qb * (qb + 3.0 * qa)


def sample_next_b_3maj(n: int, b: int, p: float, gen: np.random.Generator) -> int:
    # Agents update i.i.d. given the current counts, so the round law is
    # exactly Binomial(n, q); numpy's sampler is exact (inversion / BTPE).
    return int(gen.binomial(n, beta_adoption_prob_3maj(n, b, p)))


def sample_next_b_2choices(n: int, b: int, p: float, gen: np.random.Generator) -> int:
    qb = beta_pull_prob(n, b, p)
    qa = 1.0 - qb
    # A beta holder flips only when both samples read alpha; an alpha holder
    # flips only when both read beta; any tie keeps the former opinion.
    stay = gen.binomial(b, 1.0 - qa * qa)
    gain = gen.binomial(n - b, qb * qb)
    return int(stay + gain)


def ternary_message_probs(n: int, b: int, u: int, p: float) -> tuple[float, float, float]:
    """Per-sample (alpha, beta, undecided) message probabilities.

    A garbled message is uniform over the three symbols alpha, beta,
    undecided; an intact message reports the sampled agent's state.
    """
    a = n - b - u
    c = 1.0 - p
    q_alpha = (a / n) * c + p / 3.0
    q_beta = (b / n) * c + p / 3.0
    q_undecided = 1.0 - q_alpha - q_beta
    return q_alpha, q_beta, q_undecided


def sample_next_counts_undecided(
    n: int, b: int, u: int, p: float, gen: np.random.Generator
) -> tuple[int, int]:
    """One synchronous undecided-state round; returns the new (b, u)."""
    a = n - b - u
    q_alpha, q_beta, q_undecided = ternary_message_probs(n, b, u, p)
    # Three independent multinomial draws, one per sub-population.
    b_to_undecided = int(gen.binomial(b, q_alpha)) if b else 0
    a_to_undecided = int(gen.binomial(a, q_beta)) if a else 0
    if u:
        to_alpha, to_beta, stay = gen.multinomial(u, (q_alpha, q_beta, q_undecided))
    else:
        to_alpha = to_beta = stay = 0
    new_b = (b - b_to_undecided) + int(to_beta)
    new_u = b_to_undecided + a_to_undecided + int(stay)
    return new_b, new_u


# ---------------------------------------------------------------------------
# Public operations on configurations
# ---------------------------------------------------------------------------

def pull_probabilities(cfg: Configuration, p: float) -> PullDistribution:
    """Distribution of a single noisy pull in the binary case."""
    _check_noise(p)
    q_beta = beta_pull_prob(cfg.n, cfg.b, p)
    return PullDistribution(q_alpha=1.0 - q_beta, q_beta=q_beta)


def ternary_pull_probabilities(cfg: TernaryConfiguration, p: float) -> PullDistribution:
    """Distribution of a single noisy pull when undecided agents are present."""
    _check_noise(p)
    q_alpha, q_beta, q_undecided = ternary_message_probs(cfg.n, cfg.b, cfg.u, p)
    return PullDistribution(q_alpha=q_alpha, q_beta=q_beta, q_undecided=q_undecided)


def adopt_beta_probability_3maj(cfg: Configuration, p: float) -> float:
    """Chance one agent ends the round holding beta under the majority rule."""
    _check_noise(p)
    return float(beta_adoption_prob_3maj(cfg.n, cfg.b, p))


def step_aggregate_3maj(cfg: Configuration, p: float, rng: RngStream) -> Configuration:
    """Exact one-round law of the majority dynamics as a single binomial draw."""
    _check_noise(p)
    return Configuration(cfg.n, sample_next_b_3maj(cfg.n, cfg.b, p, rng.gen))


def step_agentwise_3maj(cfg: Configuration, p: float, rng: RngStream) -> Configuration:
    """One round simulated agent by agent; same law as step_aggregate_3maj.

    Each agent draws three uniform neighbors (with replacement, self included)
    and each of the three messages is independently garbled with probability p.
    Kept for cross-validation of the aggregate sampler.
    """
    _check_noise(p)
    n, b = cfg.n, cfg.b
    gen = rng.gen
    # Exchangeability: a uniform index below b reads beta.
    neighbor_beta = gen.integers(0, n, size=(n, 3)) < b
    garbled = gen.random(size=(n, 3)) < p
    uniform_beta = gen.integers(0, 2, size=(n, 3)).astype(bool)
    received = np.where(garbled, uniform_beta, neighbor_beta)
    new_b = int((received.sum(axis=1) >= 2).sum())
    return Configuration(n, new_b)


def step_2choices(cfg: Configuration, p: float, rng: RngStream) -> Configuration:
    """One synchronous two-choices round in aggregate form."""
    _check_noise(p)
    return Configuration(cfg.n, sample_next_b_2choices(cfg.n, cfg.b, p, rng.gen))


def step_undecided(
    cfg: TernaryConfiguration, p: float, rng: RngStream
) -> TernaryConfiguration:
    """One synchronous undecided-state round in aggregate form.

    A decided agent that pulls the opposite opinion becomes undecided; pulling
    its own opinion or an undecided message leaves it unchanged.  An undecided
    agent adopts the opinion it pulls and stays undecided on an undecided
    message.
    """
    _check_noise(p)
    new_b, new_u = sample_next_counts_undecided(cfg.n, cfg.b, cfg.u, p, rng.gen)
    return TernaryConfiguration(cfg.n, new_b, new_u)


def to_stubborn_model(cfg: Configuration, p: float) -> StubbornConfiguration:
    """Equivalent noiseless model with two stubborn communities of size
    p*n / (2*(1-p)) each.

    The construction is exact only when that size is an integer; no silent
    rounding is performed because the equivalence being certified is exact.
    """
    _check_noise(p)
    exact = p * cfg.n / (2.0 * (1.0 - p))
    size = round(exact)
    if abs(exact - size) > 1e-9:
        raise NonIntegralStubbornSize(
            f"p*n/(2*(1-p)) = {exact!r} is not an integer for n={cfg.n}, p={p}; "
            f"choose a compatible (n, p) pair"
        )
    return StubbornConfiguration(regular=cfg, stubborn_per_opinion=size)


def stubborn_adopt_beta_probability(scfg: StubbornConfiguration) -> float:
    """Noiseless three-sample majority over the enlarged population."""
    qb = scfg.pull_beta
    qa = 1.0 - qb
    return qb * qb * (qb + 3.0 * qa)


def step_stubborn_3maj(scfg: StubbornConfiguration, rng: RngStream) -> StubbornConfiguration:
    """One majority round for the regular agents; stubborn counts never move."""
    q = stubborn_adopt_beta_probability(scfg)
    new_b = int(rng.gen.binomial(scfg.regular.n, q))
    return StubbornConfiguration(
        regular=Configuration(scfg.regular.n, new_b),
        stubborn_per_opinion=scfg.stubborn_per_opinion,
    )
