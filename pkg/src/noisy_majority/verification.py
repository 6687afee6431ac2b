"""Cross-validation suites: sampled dynamics against exact laws.

Three independent routes exist for the one-round law of the majority
dynamics: the closed-form drift, the exact transition matrix, and agent-level
sampling.  These suites check that all routes agree, which is the backbone of
the package's correctness story.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import expected_bias
from .chain import Dynamics, build_chain, evolve, point_mass
from .dynamics import (
    Configuration,
    RngStream,
    adopt_beta_probability_3maj,
    beta_adoption_prob_3maj,
    stubborn_adopt_beta_probability,
    to_stubborn_model,
)

__all__ = [
    "CheckResult",
    "total_variation",
    "agentwise_snapshot_counts",
    "drift_consistency_suite",
    "stubborn_equivalence_suite",
    "oracle_equivalence_suite",
    "run_verify_suites",
]

DRIFT_SIZES = (4, 10, 100, 1000)
DRIFT_NOISES = (0.0, 0.1, 0.2, 1.0 / 3.0, 0.5, 0.9)
ORACLE_SIZES = (4, 8, 12)
ORACLE_NOISES = (0.1, 0.2, 0.5)
ORACLE_ROUNDS = (1, 5, 20)
STUBBORN_CASES = ((100, 1.0 / 3.0), (100, 0.5), (300, 0.25))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance between two probability vectors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def agentwise_snapshot_counts(
    n: int,
    b0: int,
    p: float,
    snapshot_rounds: tuple[int, ...],
    replicas: int,
    gen: np.random.Generator,
) -> dict[int, np.ndarray]:
    """Empirical beta-count distributions from many agent-level replicas.

    Every replica advances agent by agent: each agent pulls three uniform
    neighbors (self included) and each message is independently garbled.
    Returns, per requested round, the histogram over beta counts 0..n
    normalized to a distribution.
    """
    b = np.full(replicas, b0, dtype=np.int64)
    horizon = max(snapshot_rounds)
    out: dict[int, np.ndarray] = {}
    for t in range(1, horizon + 1):
        neighbor_beta = gen.integers(0, n, size=(replicas, n, 3)) < b[:, None, None]
        garbled = gen.random(size=(replicas, n, 3)) < p
        uniform_beta = gen.integers(0, 2, size=(replicas, n, 3), dtype=np.uint8).astype(bool)
        received = np.where(garbled, uniform_beta, neighbor_beta)
        b = (received.sum(axis=2) >= 2).sum(axis=1)
        if t in snapshot_rounds:
            out[t] = np.bincount(b, minlength=n + 1) / replicas
    return out


def drift_consistency_suite(
    sizes: tuple[int, ...] = DRIFT_SIZES,
    noises: tuple[float, ...] = DRIFT_NOISES,
    tolerance: float = 1e-9,
) -> CheckResult:
    """Exact agreement between the sampled-round mean and the drift formula.

    For every state, n (2q(b) - 1) must equal the closed-form conditional
    mean of the next bias, where q is the per-agent beta-adoption chance.
    """
    worst = 0.0
    for n in sizes:
        b = np.arange(n + 1)
        s = 2 * b - n
        for p in noises:
            q = beta_adoption_prob_3maj(n, b, p)
            err = np.abs(n * (2.0 * q - 1.0) - expected_bias(s, n, p)).max()
            worst = max(worst, float(err))
    return CheckResult(
        name="drift-consistency",
        passed=worst <= tolerance,
        detail=f"max |n(2q-1) - drift| = {worst:.3e} over n in {sizes}, tol {tolerance:g}",
    )


def stubborn_equivalence_suite(
    cases: tuple[tuple[int, float], ...] = STUBBORN_CASES,
    tolerance: float = 1e-12,
) -> CheckResult:
    """Adoption probabilities of the noisy and stubborn models, all states."""
    worst = 0.0
    for n, p in cases:
        for b in range(n + 1):
            cfg = Configuration(n, b)
            noisy = adopt_beta_probability_3maj(cfg, p)
            stub = stubborn_adopt_beta_probability(to_stubborn_model(cfg, p))
            worst = max(worst, abs(noisy - stub))
    return CheckResult(
        name="stubborn-equivalence",
        passed=worst <= tolerance,
        detail=f"max |q_noisy - q_stubborn| = {worst:.3e} over {cases}, tol {tolerance:g}",
    )


def oracle_equivalence_suite(
    sizes: tuple[int, ...] = ORACLE_SIZES,
    noises: tuple[float, ...] = ORACLE_NOISES,
    rounds: tuple[int, ...] = ORACLE_ROUNDS,
    replicas: int = 100_000,
    seed: int = 2024_0214,
    tolerance: float = 0.015,
) -> tuple[CheckResult, list[tuple[int, float, int, float]]]:
    """Agent-level simulation against the exact evolved distribution.

    Returns the aggregate verdict plus every (n, p, t, tv) measurement.
    """
    measurements: list[tuple[int, float, int, float]] = []
    worst = 0.0
    for i, n in enumerate(sizes):
        for j, p in enumerate(noises):
            gen = RngStream(seed, stream_id=i * len(noises) + j).gen
            b0 = n // 2
            empirical = agentwise_snapshot_counts(n, b0, p, rounds, replicas, gen)
            chain = build_chain(n, p, Dynamics.THREE_MAJORITY)
            for t in rounds:
                exact = evolve(point_mass(n, b0), chain, t)
                tv = total_variation(empirical[t], exact)
                measurements.append((n, p, t, tv))
                worst = max(worst, tv)
    result = CheckResult(
        name="oracle-equivalence",
        passed=worst <= tolerance,
        detail=(
            f"max TV(agent-level empirical, exact) = {worst:.4f} over "
            f"{len(measurements)} combinations at {replicas} replicas, tol {tolerance:g}"
        ),
    )
    return result, measurements


def run_verify_suites(replicas: int = 100_000) -> list[CheckResult]:
    """The full verify battery, in deterministic order."""
    results = [drift_consistency_suite(), stubborn_equivalence_suite()]
    oracle_result, _ = oracle_equivalence_suite(replicas=replicas)
    results.append(oracle_result)
    return results
