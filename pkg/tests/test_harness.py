"""Unit tests for trial execution, event detection and aggregation."""

import math

import numpy as np
import pytest

from noisy_majority.analysis import metastable_interval, theorem_thresholds
from noisy_majority.chain import Dynamics, build_chain, expected_hitting_time
from noisy_majority.dynamics import RngStream, beta_adoption_prob_3maj
from noisy_majority.harness import (
    ExperimentConfig,
    RecordMode,
    ValidationError,
    detect_majority_switch,
    phase_diagram,
    run_experiment,
    run_trial,
    run_trials,
    scan_majority_switches,
    summarize,
)


def _cfg(**overrides):
    base = dict(n=1000, p_grid=(0.2,), trials=4, seed=99)
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_defaults():
    cfg = _cfg()
    assert cfg.t_max == math.ceil(40 * math.log(1000))
    assert cfg.metastability_window == 1000
    assert cfg.record_mode is RecordMode.EVENTS_ONLY


def test_config_validation_errors():
    with pytest.raises(ValidationError):
        _cfg(n=1001)  # symmetric start needs even n
    with pytest.raises(ValidationError):
        _cfg(s0=11)  # parity mismatch with n=1000
    with pytest.raises(ValidationError):
        _cfg(s0=2000)
    with pytest.raises(ValidationError):
        _cfg(trials=0)
    with pytest.raises(ValidationError):
        _cfg(p_grid=())
    with pytest.raises(ValidationError):
        _cfg(p_grid=(1.2,))
    with pytest.raises(ValidationError) as err:
        _cfg(p_grid=(0.3,), epsilon=0.3)
    assert "(1-3p)/2" in str(err.value)
    with pytest.raises(ValidationError):
        _cfg(gamma=0.0)
    with pytest.raises(ValidationError):
        _cfg(seed=-1)


def test_detect_majority_switch():
    assert detect_majority_switch(5, -3)
    assert not detect_majority_switch(5, 1)
    assert not detect_majority_switch(2, 0)
    assert not detect_majority_switch(0, -2)


def test_scan_counts_zero_crossing_once():
    switches, zeros = scan_majority_switches(np.array([2, 0, -2, -1, 3]))
    assert switches == [2, 4]
    assert zeros == 1


def test_run_trial_deterministic():
    cfg = _cfg(record_mode=RecordMode.FULL_TRAJECTORY, t_max=80)
    a = run_trial(cfg, 0.2, 1)
    b = run_trial(cfg, 0.2, 1)
    assert np.array_equal(a.trajectory, b.trajectory)
    assert (a.first_hit_metastable, a.first_hit_symmetry_break, a.first_hit_collapse) == (
        b.first_hit_metastable,
        b.first_hit_symmetry_break,
        b.first_hit_collapse,
    )
    assert a.majority_switch_rounds == b.majority_switch_rounds
    c = run_trial(cfg, 0.2, 2)
    assert not np.array_equal(a.trajectory, c.trajectory)


def test_run_trial_rejects_off_grid_inputs():
    cfg = _cfg()
    with pytest.raises(ValidationError):
        run_trial(cfg, 0.3, 0)
    with pytest.raises(ValidationError):
        run_trial(cfg, 0.2, 10)


def test_noiseless_monochromatic_start_hits_band_at_round_zero():
    # p=0: the equilibrium is n itself and the start sits inside the band.
    cfg = _cfg(n=100, p_grid=(0.0,), s0=100, t_max=10)
    rec = run_trial(cfg, 0.0, 0)
    assert rec.first_hit_metastable == 0
    assert rec.first_hit_symmetry_break == 0
    assert rec.band_exit_round is None
    assert rec.mean_abs_bias_final_quarter == pytest.approx(1.0)


def test_events_rederivable_from_trajectory():
    cfg = ExperimentConfig(
        n=2000,
        p_grid=(0.25,),
        trials=2,
        seed=4242,
        s0=250 if (250 + 2000) % 2 == 0 else 251,
        t_max=400,
        record_mode=RecordMode.FULL_TRAJECTORY,
        metastability_window=150,
    )
    rec = run_trial(cfg, 0.25, 0)
    s = rec.trajectory
    lo, hi = metastable_interval(cfg.n, 0.25, cfg.epsilon)
    levels = theorem_thresholds(cfg.n, 0.25, cfg.gamma, cfg.epsilon)

    inside = (s >= lo) & (s <= hi)  # start is positive, so signed band = +band
    tau1 = int(np.argmax(inside)) if inside.any() else None
    assert rec.first_hit_metastable == tau1
    if tau1 is not None:
        after = np.nonzero(~inside[tau1 + 1 :])[0]
        exit_round = int(after[0]) + tau1 + 1 if after.size else None
        assert rec.band_exit_round == exit_round

    broke = np.abs(s) >= levels.symmetry_break_level
    assert rec.first_hit_symmetry_break == (int(np.argmax(broke)) if broke.any() else None)

    collapsed = np.abs(s) <= levels.noise_collapse_level
    tau3 = int(np.argmax(collapsed)) if collapsed.any() else None
    assert rec.first_hit_collapse == tau3
    if tau3 is not None and tau3 < rec.rounds:
        window = s[tau3 + 1 : tau3 + 1 + cfg.metastability_window]
        expected_max = int(np.abs(window).max()) if window.size else None
        assert rec.max_abs_bias_after_collapse == expected_max

    switches, zeros = scan_majority_switches(s)
    assert rec.majority_switch_rounds == switches
    assert rec.zero_bias_rounds == zeros

    quarter = max(1, rec.rounds // 4)
    assert rec.mean_abs_bias_final_quarter == pytest.approx(
        np.abs(s[rec.rounds - quarter + 1 :]).mean() / cfg.n
    )


def test_single_trial_summary_matches_record():
    cfg = _cfg(n=500, p_grid=(0.2,), trials=1, s0=100, t_max=200, metastability_window=50)
    rec = run_trial(cfg, 0.2, 0)
    summary = run_experiment(cfg)
    row = summary.per_p[0]
    assert row.trials == 1
    assert row.frac_metastable_hit == (1.0 if rec.first_hit_metastable is not None else 0.0)
    if rec.first_hit_metastable is not None:
        assert row.median_tau1 == rec.first_hit_metastable
        assert row.mean_tau1 == rec.first_hit_metastable
    assert row.switch_rate == len(rec.majority_switch_rounds) / rec.rounds
    assert row.mean_abs_bias_over_n == pytest.approx(rec.mean_abs_bias_final_quarter)


def test_parallel_matches_sequential():
    cfg = _cfg(n=400, p_grid=(0.1, 0.5), trials=6, t_max=120)
    assert run_experiment(cfg, threads=1) == run_experiment(cfg, threads=3)


def test_summary_is_seed_stable_across_reruns():
    cfg = _cfg(n=400, p_grid=(0.2,), trials=5, t_max=100)
    assert run_experiment(cfg) == run_experiment(cfg)


def test_doubling_trials_keeps_fractions_within_noise():
    # i.i.d. trials: hit fractions from disjoint seeds agree within 3 SE.
    base = dict(n=10_000, p_grid=(0.2,), s0=700, t_max=60)
    frac = []
    for trials, seed in ((60, 1), (120, 2)):
        cfg = ExperimentConfig(trials=trials, seed=seed, **base)
        frac.append(run_experiment(cfg, threads=0).per_p[0].frac_metastable_hit)
    se = math.sqrt(0.25 / 60 + 0.25 / 120)
    assert abs(frac[0] - frac[1]) <= 3 * se


def test_summarize_requires_complete_records():
    cfg = _cfg(trials=3, t_max=50)
    records = run_trials(cfg)
    records[0.2].pop()
    with pytest.raises(ValidationError):
        summarize(cfg, records)


def test_empirical_hitting_time_matches_exact_chain():
    # Escape of the middle state: sampled mean within 2% of the solver.
    n, p = 4, 0.4
    exact = expected_hitting_time(build_chain(n, p), 2, {0, 1, 3, 4})
    gen = RngStream(7_654_321).gen
    walkers = np.full(1_000_000, 2, dtype=np.int64)
    steps = np.zeros(walkers.size, dtype=np.int64)
    active = np.ones(walkers.size, dtype=bool)
    while active.any():
        current = walkers[active]
        walkers[active] = gen.binomial(n, beta_adoption_prob_3maj(n, current, p))
        steps[active] += 1
        active[active] = walkers[active] == 2
    assert steps.mean() == pytest.approx(exact, rel=0.02)


def test_run_trial_two_choices_and_undecided_modes():
    cfg = _cfg(dynamics=Dynamics.TWO_CHOICES, n=200, p_grid=(0.2,), s0=0, t_max=50)
    rec = run_trial(cfg, 0.2, 0)
    assert rec.first_hit_metastable is None  # band is defined for the majority rule
    assert rec.rounds == 50
    cfg = _cfg(dynamics=Dynamics.UNDECIDED_STATE, n=200, p_grid=(0.2,), s0=200, t_max=50,
               record_mode=RecordMode.FULL_TRAJECTORY)
    rec = run_trial(cfg, 0.2, 0)
    assert rec.trajectory[0] == 200
    assert np.all(np.abs(rec.trajectory) <= 200)


def test_phase_diagram_shape_and_regimes():
    points = phase_diagram(
        n=20_000,
        p_grid=(0.1, 0.5),
        warmup=100,
        horizon=400,
        trials=3,
        seed=31,
        threads=0,
    )
    assert [pt.p for pt in points] == [0.1, 0.5]
    low, high = points
    assert low.mean_abs_bias_over_n > 0.9  # hugging the equilibrium
    assert high.mean_abs_bias_over_n < 0.05  # collapsed
    assert high.switch_rate > 0.01
    assert low.band_residence_frac > 0.9
    assert high.band_residence_frac == 0.0


def test_phase_diagram_rejects_bad_window():
    with pytest.raises(ValidationError):
        phase_diagram(n=100, p_grid=(0.2,), warmup=10, horizon=10, trials=1, seed=1)


def test_regimes_separate_across_the_threshold():
    # Below 1/3 nearly every trial reaches the band; above it nearly none do.
    n = 10_000
    cfg = ExperimentConfig(
        n=n, p_grid=(0.2, 0.5), trials=20, seed=1212,
        s0=theorem_break_adjusted(n), t_max=math.ceil(40 * math.log(n)),
    )
    summary = run_experiment(cfg, threads=0)
    below, above = summary.per_p
    assert below.frac_metastable_hit >= 0.95
    assert above.frac_metastable_hit <= 0.05


def theorem_break_adjusted(n: int) -> int:
    s0 = math.ceil(math.sqrt(n * math.log(n)))
    return s0 if (s0 + n) % 2 == 0 else s0 + 1
