"""Unit tests for the single-round update laws."""

import math

import numpy as np
import pytest

from noisy_majority.chain import Dynamics, build_chain
from noisy_majority.dynamics import (
    Configuration,
    NonIntegralStubbornSize,
    RngStream,
    TernaryConfiguration,
    adopt_beta_probability_3maj,
    pull_probabilities,
    sample_next_counts_undecided,
    step_2choices,
    step_agentwise_3maj,
    step_aggregate_3maj,
    step_stubborn_3maj,
    step_undecided,
    ternary_pull_probabilities,
    to_stubborn_model,
)
from noisy_majority.verification import total_variation


def test_configuration_invariants():
    cfg = Configuration(100, 30)
    assert cfg.a == 70
    assert cfg.bias == -40
    assert (cfg.bias + cfg.n) % 2 == 0
    with pytest.raises(ValueError):
        Configuration(100, 101)
    with pytest.raises(ValueError):
        Configuration(0, 0)
    with pytest.raises(ValueError):
        TernaryConfiguration(10, 6, 5)


def test_pull_probabilities_hand_values():
    dist = pull_probabilities(Configuration(100, 50), 0.0)
    assert (dist.q_alpha, dist.q_beta) == (0.5, 0.5)
    dist = pull_probabilities(Configuration(100, 100), 0.5)
    assert dist.q_beta == pytest.approx(0.75)
    assert dist.q_alpha == pytest.approx(0.25)


@pytest.mark.parametrize("n,b", [(7, 0), (7, 3), (100, 99), (1000, 500)])
@pytest.mark.parametrize("p", [0.0, 0.1, 1 / 3, 0.9])
def test_pull_probabilities_sum_to_one(n, b, p):
    dist = pull_probabilities(Configuration(n, b), p)
    assert abs(dist.q_alpha + dist.q_beta - 1.0) <= 1e-12


def test_adopt_probability_hand_values():
    assert adopt_beta_probability_3maj(Configuration(100, 50), 0.37) == pytest.approx(0.5)
    assert adopt_beta_probability_3maj(Configuration(100, 100), 0.0) == 1.0
    assert adopt_beta_probability_3maj(Configuration(100, 75), 0.2) == pytest.approx(
        0.784, abs=1e-12
    )
    # Single agent, all-alpha start, p = 0.5: q_beta = 0.25.
    assert adopt_beta_probability_3maj(Configuration(1, 0), 0.5) == pytest.approx(
        0.15625, abs=1e-15
    )


def test_adopt_probability_swap_symmetry_and_monotonicity():
    n, p = 48, 0.25
    q = np.array(
        [adopt_beta_probability_3maj(Configuration(n, b), p) for b in range(n + 1)]
    )
    swapped = q[::-1]
    assert np.allclose(q, 1.0 - swapped, atol=1e-13)
    assert np.all(np.diff(q) > 0)
    # Noise removes absorbing states entirely.
    assert 0.0 < q[0] and q[-1] < 1.0


def test_aggregate_step_absorbing_and_symmetric():
    rng = RngStream(7)
    assert step_aggregate_3maj(Configuration(100, 100), 0.0, rng).b == 100
    assert step_aggregate_3maj(Configuration(100, 0), 0.0, rng).b == 0
    gen_stream = RngStream(11)
    draws = np.array(
        [step_aggregate_3maj(Configuration(100, 50), 0.5, gen_stream).b
         for _ in range(100_000)]
    )
    # E[b'] = 50 by symmetry; allow 3 standard errors.
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - 50.0) <= 3 * se


def test_aggregate_step_deterministic_in_stream():
    a = [step_aggregate_3maj(Configuration(500, 100), 0.3, RngStream(42, 5)).b
         for _ in range(1)]
    b = [step_aggregate_3maj(Configuration(500, 100), 0.3, RngStream(42, 5)).b
         for _ in range(1)]
    assert a == b
    streams = RngStream(42, 5), RngStream(42, 6)
    seq = [
        [step_aggregate_3maj(Configuration(500, 100), 0.3, s).b for _ in range(8)]
        for s in streams
    ]
    assert seq[0] != seq[1]


def test_agentwise_step_absorbing():
    rng = RngStream(3)
    assert step_agentwise_3maj(Configuration(100, 100), 0.0, rng).b == 100
    assert step_agentwise_3maj(Configuration(100, 0), 0.0, rng).b == 0


def test_agentwise_single_agent_law():
    # P(b'=1 | n=1, b=0, p=0.5) = 0.15625.
    rng = RngStream(17)
    hits = sum(
        step_agentwise_3maj(Configuration(1, 0), 0.5, rng).b for _ in range(20_000)
    )
    freq = hits / 20_000
    se = math.sqrt(0.15625 * (1 - 0.15625) / 20_000)
    assert abs(freq - 0.15625) <= 4 * se


def test_agentwise_matches_aggregate_law():
    # One-step law of the agent-level simulation vs the exact binomial row.
    n, b0, p, samples = 12, 6, 0.3, 100_000
    rng = RngStream(23)
    counts = np.zeros(n + 1)
    for _ in range(samples):
        counts[step_agentwise_3maj(Configuration(n, b0), p, rng).b] += 1
    exact = build_chain(n, p, Dynamics.THREE_MAJORITY).rows[b0]
    assert total_variation(counts / samples, exact) <= 0.01


@pytest.mark.parametrize("p", [0.0, 0.6, 0.9])
def test_agentwise_matches_aggregate_law_across_noise_grid(p):
    # Same check at the edges of the noise range, many replicas at once.
    from noisy_majority.verification import agentwise_snapshot_counts

    n, b0 = 8, 3
    gen = RngStream(47, int(p * 10)).gen
    empirical = agentwise_snapshot_counts(n, b0, p, (1,), 100_000, gen)[1]
    exact = build_chain(n, p, Dynamics.THREE_MAJORITY).rows[b0]
    assert total_variation(empirical, exact) <= 0.01


def test_two_choices_absorbing_and_mean():
    rng = RngStream(5)
    assert step_2choices(Configuration(100, 100), 0.0, rng).b == 100
    assert step_2choices(Configuration(100, 0), 0.0, rng).b == 0
    # Exact conditional mean at (n=10, b=7, p=0.2) is 7.4976.
    row = build_chain(10, 0.2, Dynamics.TWO_CHOICES).rows[7]
    assert row @ np.arange(11) == pytest.approx(7.4976, abs=1e-12)
    draws = np.array(
        [step_2choices(Configuration(10, 7), 0.2, rng).b for _ in range(100_000)]
    )
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - 7.4976) <= 4 * se


def test_two_choices_symmetric_mean():
    rng = RngStream(29)
    draws = np.array(
        [step_2choices(Configuration(50, 25), 0.4, rng).b for _ in range(50_000)]
    )
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - 25.0) <= 4 * se


def test_two_choices_aggregate_matches_explicit_vote():
    # Independent route: every agent takes the majority among its own
    # opinion and two noisy samples (a strict majority always exists among
    # three binary values), simulated for many replicas in one round.
    n, b0, p, replicas = 10, 6, 0.3, 100_000
    gen = RngStream(53).gen
    own = np.zeros((replicas, n), dtype=bool)
    own[:, :b0] = True
    neighbor = gen.integers(0, n, size=(replicas, n, 2)) < b0
    garbled = gen.random(size=(replicas, n, 2)) < p
    uniform = gen.integers(0, 2, size=(replicas, n, 2), dtype=np.uint8).astype(bool)
    received = np.where(garbled, uniform, neighbor)
    votes = own.astype(np.int8) + received.sum(axis=2, dtype=np.int8)
    new_b = (votes >= 2).sum(axis=1)
    empirical = np.bincount(new_b, minlength=n + 1) / replicas
    exact = build_chain(n, p, Dynamics.TWO_CHOICES).rows[b0]
    assert total_variation(empirical, exact) <= 0.01


def test_undecided_monochromatic_and_all_undecided_fixed_points():
    rng = RngStream(31)
    cfg = step_undecided(TernaryConfiguration(100, 100, 0), 0.0, rng)
    assert (cfg.b, cfg.u) == (100, 0)
    cfg = step_undecided(TernaryConfiguration(100, 0, 0), 0.0, rng)
    assert (cfg.b, cfg.u) == (0, 0)
    cfg = step_undecided(TernaryConfiguration(100, 0, 100), 0.0, rng)
    assert cfg.u == 100


def test_undecided_message_probs_sum_to_one():
    for p in (0.0, 0.2, 0.7):
        dist = ternary_pull_probabilities(TernaryConfiguration(30, 10, 5), p)
        assert abs(dist.q_alpha + dist.q_beta + dist.q_undecided - 1.0) <= 1e-12


def _undecided_one_step_law(n, b, u, p):
    """Exhaustive one-step law over (b', u') from independent camp outcomes.

    Beta holders turn undecided on an alpha pull, alpha holders on a beta
    pull, and undecided agents split three ways; camps are independent, so
    the joint law is a product of binomial/multinomial factors.
    """
    from math import comb

    from noisy_majority.dynamics import ternary_message_probs

    a = n - b - u
    qa, qb, qu = ternary_message_probs(n, b, u, p)
    law: dict[tuple[int, int], float] = {}
    for k_b in range(b + 1):  # beta holders turning undecided
        pb = comb(b, k_b) * qa**k_b * (1 - qa) ** (b - k_b)
        for k_a in range(a + 1):  # alpha holders turning undecided
            pa = comb(a, k_a) * qb**k_a * (1 - qb) ** (a - k_a)
            for u_a in range(u + 1):
                for u_b in range(u - u_a + 1):  # undecided adopting alpha/beta
                    stay = u - u_a - u_b
                    pu = (
                        math.factorial(u)
                        / (math.factorial(u_a) * math.factorial(u_b) * math.factorial(stay))
                        * qa**u_a * qb**u_b * qu**stay
                    )
                    key = (b - k_b + u_b, k_b + k_a + stay)
                    law[key] = law.get(key, 0.0) + pb * pa * pu
    return law


@pytest.mark.parametrize("b,u,p", [(5, 0, 0.4), (4, 3, 0.25)])
def test_undecided_matches_enumeration(b, u, p):
    n, samples = 10, 100_000
    law = _undecided_one_step_law(n, b, u, p)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
    gen = RngStream(37, b * 10 + u).gen
    counts: dict[tuple[int, int], int] = {}
    for _ in range(samples):
        key = sample_next_counts_undecided(n, b, u, p, gen)
        counts[key] = counts.get(key, 0) + 1
    keys = set(law) | set(counts)
    tv = 0.5 * sum(
        abs(counts.get(k, 0) / samples - law.get(k, 0.0)) for k in keys
    )
    assert tv <= 0.01


def test_stubborn_construction_hand_values():
    assert to_stubborn_model(Configuration(100, 40), 1 / 3).stubborn_per_opinion == 25
    assert to_stubborn_model(Configuration(100, 40), 0.0).stubborn_per_opinion == 0
    scfg = to_stubborn_model(Configuration(100, 40), 0.5)
    assert scfg.stubborn_per_opinion == 50
    assert scfg.total == 200
    with pytest.raises(NonIntegralStubbornSize):
        to_stubborn_model(Configuration(100, 40), 0.3)


def test_stubborn_pull_identity():
    # (b + 25)/150 must equal (2/3)(b/100) + 1/6 for every b at p = 1/3.
    for b in range(101):
        scfg = to_stubborn_model(Configuration(100, b), 1 / 3)
        direct = pull_probabilities(Configuration(100, b), 1 / 3).q_beta
        assert abs(scfg.pull_beta - direct) <= 1e-12
        assert abs(scfg.pull_beta - ((2 / 3) * (b / 100) + 1 / 6)) <= 1e-12


def test_stubborn_step_reduces_to_noiseless():
    # Zero stubborn agents: same absorbing behavior as the p=0 model.
    scfg = to_stubborn_model(Configuration(64, 64), 0.0)
    out = step_stubborn_3maj(scfg, RngStream(41))
    assert out.regular.b == 64
    assert out.stubborn_per_opinion == 0


def test_stubborn_step_symmetric_mean():
    scfg = to_stubborn_model(Configuration(100, 50), 0.5)
    rng = RngStream(43)
    draws = np.array([step_stubborn_3maj(scfg, rng).regular.bias for _ in range(50_000)])
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean()) <= 4 * se


def test_noise_out_of_range_rejected():
    with pytest.raises(ValueError):
        pull_probabilities(Configuration(10, 5), 1.0)
    with pytest.raises(ValueError):
        pull_probabilities(Configuration(10, 5), -0.1)
