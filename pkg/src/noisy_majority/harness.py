"""Seeded trials, parameter sweeps and event detection.

A trial simulates one aggregate trajectory and detects, in a single pass,
the events the bias predictions are stated in terms of: entering the
metastable band around the equilibrium bias, breaking symmetry past
gamma*sqrt(n ln n), collapsing below sqrt(n)/eps^2, majority switches, and
residence inside the band afterwards.

Every trial draws from its own random stream, derived from the experiment
seed and the trial's (noise index, trial index) pair, so summaries are a
pure function of the configuration no matter how many workers run them.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .analysis import (
    InvalidEpsilon,
    NOISE_THRESHOLD,
    metastable_interval,
    theorem_thresholds,
    validate_event_parameters,
)
from .chain import Dynamics
from .dynamics import (
    RngStream,
    sample_next_b_2choices,
    sample_next_b_3maj,
    sample_next_counts_undecided,
)

__all__ = [
    "RecordMode",
    "ValidationError",
    "ExperimentConfig",
    "TrialRecord",
    "NoiseSummary",
    "ExperimentSummary",
    "PhasePoint",
    "detect_majority_switch",
    "scan_majority_switches",
    "default_t_max",
    "run_trial",
    "run_trials",
    "summarize",
    "run_experiment",
    "phase_diagram",
    "resolve_threads",
]

SYMMETRIC = "symmetric"


class ValidationError(ValueError):
    """Experiment configuration violates an invariant."""


class RecordMode(enum.Enum):
    FULL_TRAJECTORY = "full_trajectory"
    EVENTS_ONLY = "events_only"


def default_t_max(n: int) -> int:
    """Round cap for hitting-time experiments: ceil(40 ln n)."""
    return math.ceil(40.0 * math.log(n))


@dataclass(frozen=True)
class ExperimentConfig:
    """All inputs of an experiment; the summary is a pure function of this."""

    n: int
    p_grid: tuple[float, ...]
    trials: int
    seed: int
    dynamics: Dynamics = Dynamics.THREE_MAJORITY
    s0: int | str = SYMMETRIC
    t_max: int | None = None
    gamma: float = 1.0
    epsilon: float = 0.05
    record_mode: RecordMode = RecordMode.EVENTS_ONLY
    metastability_window: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if self.t_max is None:
            object.__setattr__(self, "t_max", default_t_max(self.n))
        if self.metastability_window is None:
            object.__setattr__(self, "metastability_window", self.n)
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if not self.p_grid:
            raise ValidationError("p_grid must contain at least one noise value")
        for p in self.p_grid:
            if not 0.0 <= p < 1.0:
                raise ValidationError(f"noise values must lie in [0, 1), got {p}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.t_max is None or self.t_max < 1:
            raise ValidationError(f"t_max must be >= 1, got {self.t_max}")
        if self.metastability_window is None or self.metastability_window < 1:
            raise ValidationError(
                f"metastability_window must be >= 1, got {self.metastability_window}"
            )
        if self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed}")
        if isinstance(self.s0, str):
            if self.s0 != SYMMETRIC:
                raise ValidationError(f"s0 must be an integer or '{SYMMETRIC}'")
            # Bias parity equals n's parity, so a balanced start needs even n.
            if self.n % 2:
                raise ValidationError("s0='symmetric' requires an even population")
        else:
            if abs(self.s0) > self.n:
                raise ValidationError(f"|s0| must be <= n, got s0={self.s0}")
            if (self.s0 + self.n) % 2:
                raise ValidationError(
                    f"s0={self.s0} has the wrong parity for n={self.n}"
                )
        if not isinstance(self.dynamics, Dynamics):
            raise ValidationError(f"unknown dynamics {self.dynamics!r}")
        if not isinstance(self.record_mode, RecordMode):
            raise ValidationError(f"unknown record mode {self.record_mode!r}")
        if self.gamma <= 0.0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.dynamics is Dynamics.THREE_MAJORITY:
            # The event predictions only hold under their stated hypotheses.
            for p in self.p_grid:
                try:
                    validate_event_parameters(p, self.gamma, self.epsilon)
                except InvalidEpsilon as exc:
                    raise ValidationError(f"at p={p}: {exc}") from exc

    def initial_bias(self) -> int:
        return 0 if self.s0 == SYMMETRIC else int(self.s0)


@dataclass(eq=False)
class TrialRecord:
    """Events of one trial; trajectory kept only in full-record mode."""

    p: float
    trial_index: int
    seed: int
    stream_id: int
    s0: int
    rounds: int
    first_hit_metastable: int | None
    first_hit_symmetry_break: int | None
    first_hit_collapse: int | None
    band_exit_round: int | None
    max_abs_bias_after_collapse: int | None
    majority_switch_rounds: list[int]
    zero_bias_rounds: int
    mean_abs_bias_final_quarter: float
    trajectory: np.ndarray | None = None


@dataclass(frozen=True)
class NoiseSummary:
    """Aggregates over the trials run at one noise value."""

    p: float
    trials: int
    frac_metastable_hit: float
    mean_tau1: float | None
    median_tau1: float | None
    frac_symmetry_break: float
    median_tau2: float | None
    frac_collapse: float
    median_tau3: float | None
    switch_rate: float
    band_residence_frac: float | None
    mean_abs_bias_over_n: float
    mean_residence_rounds: float | None
    total_switches: int


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    per_p: tuple[NoiseSummary, ...]


@dataclass(frozen=True)
class PhasePoint:
    """One row of the phase-diagram table."""

    p: float
    mean_abs_bias_over_n: float
    switch_rate: float
    band_residence_frac: float


def detect_majority_switch(prev_bias: float, next_bias: float) -> bool:
    """True when the majority opinion flips between two consecutive rounds.

    Exact zeros never count here; trajectory scans track the nearest nonzero
    sign instead, so a crossing through 0 is counted exactly once.
    """
    return prev_bias * next_bias < 0


def scan_majority_switches(biases: np.ndarray) -> tuple[list[int], int]:
    """Switch rounds and zero-bias round count for a full trajectory.

    A switch is recorded at round t when the bias at t has nonzero sign
    opposite to the last nonzero sign seen before t.
    """
    switches: list[int] = []
    zeros = 0
    last = 0 if biases[0] == 0 else (1 if biases[0] > 0 else -1)
    for t in range(1, len(biases)):
        s = biases[t]
        if s == 0:
            zeros += 1
            continue
        sign = 1 if s > 0 else -1
        if last != 0 and sign != last:
            switches.append(t)
        last = sign
    return switches, zeros


def run_trial(cfg: ExperimentConfig, p: float, trial_index: int) -> TrialRecord:
    """Simulate one trajectory at noise p and detect all events in one pass."""
    try:
        p_index = cfg.p_grid.index(float(p))
    except ValueError:
        raise ValidationError(f"p={p} is not on the configured grid") from None
    if not 0 <= trial_index < cfg.trials:
        raise ValidationError(f"trial_index must lie in [0, {cfg.trials})")

    n = cfg.n
    t_max = int(cfg.t_max)  # type: ignore[arg-type]
    window = int(cfg.metastability_window)  # type: ignore[arg-type]
    stream_id = p_index * cfg.trials + trial_index
    gen = RngStream(cfg.seed, stream_id).gen

    s0 = cfg.initial_bias()
    b = (n + s0) // 2
    u = 0

    levels = theorem_thresholds(n, p, cfg.gamma, cfg.epsilon) if n >= 2 else None
    band: tuple[float, float] | None = None
    if cfg.dynamics is Dynamics.THREE_MAJORITY and p < NOISE_THRESHOLD:
        band = metastable_interval(n, p, cfg.epsilon)

    sign0 = 0 if s0 == 0 else (1 if s0 > 0 else -1)
    tau1: int | None = None
    tau2: int | None = None
    tau3: int | None = None
    band_exit: int | None = None
    hit_side = 0
    max_after_collapse: int | None = None
    switch_rounds: list[int] = []
    zero_rounds = 0
    last_sign = sign0

    quarter = max(1, t_max // 4)
    quarter_start = t_max - quarter + 1
    quarter_acc = 0.0

    trajectory = None
    if cfg.record_mode is RecordMode.FULL_TRAJECTORY:
        trajectory = np.empty(t_max + 1, dtype=np.int64)
        trajectory[0] = s0

    def observe(t: int, s: int) -> None:
        nonlocal tau1, tau2, tau3, band_exit, hit_side, max_after_collapse
        nonlocal zero_rounds, last_sign, quarter_acc
        if band is not None:
            lo, hi = band
            if tau1 is None:
                if sign0 >= 0 and lo <= s <= hi:
                    tau1, hit_side = t, 1
                elif sign0 <= 0 and lo <= -s <= hi:
                    tau1, hit_side = t, -1
            elif band_exit is None and not lo <= hit_side * s <= hi:
                band_exit = t
        if levels is not None:
            if tau2 is None and abs(s) >= levels.symmetry_break_level:
                tau2 = t
            if tau3 is None and abs(s) <= levels.noise_collapse_level:
                tau3 = t
            elif tau3 is not None and tau3 < t <= tau3 + window:
                if max_after_collapse is None or abs(s) > max_after_collapse:
                    max_after_collapse = abs(s)
        if t >= 1:
            if s == 0:
                zero_rounds += 1
            else:
                sign = 1 if s > 0 else -1
                if last_sign != 0 and sign != last_sign:
                    switch_rounds.append(t)
                last_sign = sign
        if t >= quarter_start:
            quarter_acc += abs(s) / n

    observe(0, s0)
    for t in range(1, t_max + 1):
        if cfg.dynamics is Dynamics.THREE_MAJORITY:
            b = sample_next_b_3maj(n, b, p, gen)
            s = 2 * b - n
        elif cfg.dynamics is Dynamics.TWO_CHOICES:
            b = sample_next_b_2choices(n, b, p, gen)
            s = 2 * b - n
        else:
            b, u = sample_next_counts_undecided(n, b, u, p, gen)
            s = 2 * b + u - n
        if trajectory is not None:
            trajectory[t] = s
        observe(t, s)

    return TrialRecord(
        p=p,
        trial_index=trial_index,
        seed=cfg.seed,
        stream_id=stream_id,
        s0=s0,
        rounds=t_max,
        first_hit_metastable=tau1,
        first_hit_symmetry_break=tau2,
        first_hit_collapse=tau3,
        band_exit_round=band_exit,
        max_abs_bias_after_collapse=max_after_collapse,
        majority_switch_rounds=switch_rounds,
        zero_bias_rounds=zero_rounds,
        mean_abs_bias_final_quarter=quarter_acc / quarter,
        trajectory=trajectory,
    )


def resolve_threads(threads: int | None) -> int:
    """0 means auto (cpu count); None means sequential."""
    if threads is None:
        return 1
    if threads < 0:
        raise ValidationError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def _trial_task(cfg: ExperimentConfig, task: tuple[float, int]) -> TrialRecord:
    return run_trial(cfg, task[0], task[1])


def run_trials(
    cfg: ExperimentConfig, threads: int | None = 1
) -> dict[float, list[TrialRecord]]:
    """All trials of the experiment, grouped by noise value.

    Results are identical for any worker count: each trial owns the stream
    derived from its grid position, and grouping is by index, not by
    completion order.
    """
    workers = resolve_threads(threads)
    tasks = [(p, i) for p in cfg.p_grid for i in range(cfg.trials)]
    if workers <= 1 or len(tasks) == 1:
        records = [run_trial(cfg, p, i) for p, i in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(partial(_trial_task, cfg), tasks, chunksize=chunk))
    grouped: dict[float, list[TrialRecord]] = {p: [] for p in cfg.p_grid}
    for rec in records:
        grouped[rec.p].append(rec)
    for p in grouped:
        grouped[p].sort(key=lambda r: r.trial_index)
    return grouped


def _median(values: list[int]) -> float | None:
    return float(np.median(values)) if values else None


def summarize(
    cfg: ExperimentConfig, per_p_records: dict[float, list[TrialRecord]]
) -> ExperimentSummary:
    """Order-independent aggregation of trial records into per-noise rows."""
    window = int(cfg.metastability_window)  # type: ignore[arg-type]
    rows = []
    for p in cfg.p_grid:
        records = per_p_records[p]
        if len(records) != cfg.trials:
            raise ValidationError(
                f"expected {cfg.trials} records at p={p}, got {len(records)}"
            )
        tau1 = [r.first_hit_metastable for r in records if r.first_hit_metastable is not None]
        tau2 = [r.first_hit_symmetry_break for r in records if r.first_hit_symmetry_break is not None]
        tau3 = [r.first_hit_collapse for r in records if r.first_hit_collapse is not None]
        total_switches = sum(len(r.majority_switch_rounds) for r in records)
        total_rounds = sum(r.rounds for r in records)

        residences = []
        fracs = []
        for r in records:
            if r.first_hit_metastable is None:
                continue
            avail = min(window, r.rounds - r.first_hit_metastable)
            if avail <= 0:
                continue
            if r.band_exit_round is None:
                stayed = avail
            else:
                stayed = min(r.band_exit_round - r.first_hit_metastable, avail)
            residences.append(stayed)
            fracs.append(stayed / avail)

        rows.append(
            NoiseSummary(
                p=p,
                trials=cfg.trials,
                frac_metastable_hit=len(tau1) / cfg.trials,
                mean_tau1=float(np.mean(tau1)) if tau1 else None,
                median_tau1=_median(tau1),
                frac_symmetry_break=len(tau2) / cfg.trials,
                median_tau2=_median(tau2),
                frac_collapse=len(tau3) / cfg.trials,
                median_tau3=_median(tau3),
                switch_rate=total_switches / total_rounds,
                band_residence_frac=float(np.mean(fracs)) if fracs else None,
                mean_abs_bias_over_n=float(
                    np.mean([r.mean_abs_bias_final_quarter for r in records])
                ),
                mean_residence_rounds=float(np.mean(residences)) if residences else None,
                total_switches=total_switches,
            )
        )
    return ExperimentSummary(config=cfg, per_p=tuple(rows))


def run_experiment(cfg: ExperimentConfig, threads: int | None = 1) -> ExperimentSummary:
    """Run trials x |p_grid| independent trials and aggregate them."""
    return summarize(cfg, run_trials(cfg, threads=threads))


def _phase_trial(
    n: int,
    p: float,
    dynamics: Dynamics,
    seed: int,
    stream_id: int,
    horizon: int,
    warmup: int,
    band: tuple[float, float] | None,
) -> tuple[float, float, float]:
    gen = RngStream(seed, stream_id).gen
    biases = np.empty(horizon + 1, dtype=np.int64)
    b, u = n, 0
    biases[0] = n
    for t in range(1, horizon + 1):
        if dynamics is Dynamics.THREE_MAJORITY:
            b = sample_next_b_3maj(n, b, p, gen)
            biases[t] = 2 * b - n
        elif dynamics is Dynamics.TWO_CHOICES:
            b = sample_next_b_2choices(n, b, p, gen)
            biases[t] = 2 * b - n
        else:
            b, u = sample_next_counts_undecided(n, b, u, p, gen)
            biases[t] = 2 * b + u - n
    window = biases[warmup:]
    mean_abs = float(np.abs(window).mean()) / n
    switch_rounds, _ = scan_majority_switches(biases)
    switches = sum(1 for t in switch_rounds if t > warmup)
    rate = switches / (horizon - warmup)
    if band is None:
        frac = 0.0
    else:
        lo, hi = band
        frac = float(((np.abs(window) >= lo) & (np.abs(window) <= hi)).mean())
    return mean_abs, rate, frac


def _phase_task(args) -> tuple[int, tuple[float, float, float]]:
    p_index, stats_args = args
    return p_index, _phase_trial(*stats_args)


def phase_diagram(
    n: int,
    p_grid: list[float] | tuple[float, ...],
    warmup: int,
    horizon: int,
    trials: int,
    seed: int,
    dynamics: Dynamics = Dynamics.THREE_MAJORITY,
    epsilon: float = 0.05,
    threads: int | None = 1,
) -> list[PhasePoint]:
    """Long-run bias statistics per noise value, from a monochromatic start.

    Each trajectory starts with every agent on the same opinion, runs for
    `horizon` rounds, and is aggregated over rounds [warmup, horizon].  This
    is the data behind the phase-transition figure: below the 1/3 threshold
    the scaled bias hugs the equilibrium value, above it the bias collapses
    toward zero and the majority keeps switching.
    """
    if warmup >= horizon:
        raise ValidationError(f"warmup ({warmup}) must be < horizon ({horizon})")
    if warmup < 0 or trials < 1 or n < 1:
        raise ValidationError("n, trials must be positive and warmup non-negative")
    p_grid = tuple(float(p) for p in p_grid)

    tasks = []
    for p_index, p in enumerate(p_grid):
        band = None
        if dynamics is Dynamics.THREE_MAJORITY and p < NOISE_THRESHOLD:
            try:
                band = metastable_interval(n, p, epsilon)
            except InvalidEpsilon:
                band = None
        for i in range(trials):
            stream_id = p_index * trials + i
            tasks.append((p_index, (n, p, dynamics, seed, stream_id, horizon, warmup, band)))

    workers = resolve_threads(threads)
    if workers <= 1 or len(tasks) == 1:
        results = [_phase_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_phase_task, tasks, chunksize=chunk))

    acc: dict[int, list[tuple[float, float, float]]] = {i: [] for i in range(len(p_grid))}
    for p_index, stats in results:
        acc[p_index].append(stats)
    points = []
    for p_index, p in enumerate(p_grid):
        stats = np.array(acc[p_index])
        points.append(
            PhasePoint(
                p=p,
                mean_abs_bias_over_n=float(stats[:, 0].mean()),
                switch_rate=float(stats[:, 1].mean()),
                band_residence_frac=float(stats[:, 2].mean()),
            )
        )
    return points
