"""Command-line entry points.

Subcommands map one-to-one onto the library's surfaces: `step` runs a single
trial and writes its trajectory, `experiment` runs a configured batch,
`sweep` produces the phase diagram, `oracle` queries the exact chain, and
`verify` runs the cross-validation suites.  Report paths write a rendered
PNG and a standalone plot script next to the delimited output, plus a
manifest that pins everything needed to reproduce the run.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 verify failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import InvalidEpsilon
from .chain import (
    CapExceeded,
    DimensionMismatch,
    Dynamics,
    SingularSystem,
    build_chain,
    evolve,
    expected_hitting_time,
    export_chain_csv,
    point_mass,
)
from .config import ParseError, parse_config
from .dynamics import NonIntegralStubbornSize
from .figures import render_sweep_figure, render_trajectory_figure
from .harness import (
    ExperimentConfig,
    RecordMode,
    ValidationError,
    default_t_max,
    phase_diagram,
    run_experiment,
    run_trial,
)
from .output import (
    RunManifest,
    config_as_document,
    emit_summary,
    emit_sweep,
    emit_trajectory,
    sweep_plot_script,
    trajectory_plot_script,
    write_manifest,
)
from .verification import run_verify_suites

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3

_VALIDATION_ERRORS = (
    ParseError,
    ValidationError,
    InvalidEpsilon,
    NonIntegralStubbornSize,
    CapExceeded,
    DimensionMismatch,
)


def _threads_from(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("NOISY_MAJORITY_THREADS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(
                f"NOISY_MAJORITY_THREADS must be an integer, got {env!r}"
            ) from None
    return 1


def _load_config(args) -> ExperimentConfig:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    cfg = parse_config(text)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _manifest(command: str, invocation: dict, cfg, outputs: list[Path],
              started: float, started_utc: str) -> RunManifest:
    return RunManifest(
        artifact_version=__version__,
        command=command,
        invocation=invocation,
        config=config_as_document(cfg) if cfg is not None else {},
        started_utc=started_utc,
        elapsed_seconds=round(time.perf_counter() - started, 3),
        outputs=[p.name for p in outputs],
    )


def _now_utc() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_step(args) -> int:
    started, started_utc = time.perf_counter(), _now_utc()
    cfg = _load_config(args)
    cfg = dataclasses.replace(cfg, record_mode=RecordMode.FULL_TRAJECTORY)
    p = args.p if args.p is not None else cfg.p_grid[0]
    record = run_trial(cfg, p, args.trial_index)
    out = _out_dir(args)

    outputs = [emit_trajectory(record, out / "trajectory.csv")]
    outputs.append(
        render_trajectory_figure(record.trajectory, cfg.n, p, cfg.gamma,
                                 out / "trajectory.png")
    )
    script = trajectory_plot_script("trajectory.csv", "trajectory.png",
                                    cfg.n, p, cfg.gamma)
    script_path = out / "plot_trajectory.py"
    script_path.write_text(script, encoding="utf-8")
    outputs.append(script_path)

    manifest = _manifest(
        "step",
        {"p": p, "trial_index": args.trial_index, "format": args.format},
        cfg, outputs, started, started_utc,
    )
    write_manifest(manifest, out)
    _say(args, f"wrote {out / 'trajectory.csv'} ({record.rounds} rounds at p={p:g})")
    events = {
        "first_hit_metastable": record.first_hit_metastable,
        "first_hit_symmetry_break": record.first_hit_symmetry_break,
        "first_hit_collapse": record.first_hit_collapse,
        "majority_switches": len(record.majority_switch_rounds),
    }
    _say(args, "events: " + ", ".join(f"{k}={v}" for k, v in events.items()))
    return EXIT_OK


def cmd_experiment(args) -> int:
    started, started_utc = time.perf_counter(), _now_utc()
    cfg = _load_config(args)
    summary = run_experiment(cfg, threads=_threads_from(args))
    out = _out_dir(args)
    outputs = [emit_summary(summary, out / f"summary.{args.format}", args.format)]
    manifest = _manifest(
        "experiment", {"format": args.format}, cfg, outputs, started, started_utc
    )
    write_manifest(manifest, out)
    for row in summary.per_p:
        _say(
            args,
            f"p={row.p:g}: metastable {row.frac_metastable_hit:.2f}, "
            f"break {row.frac_symmetry_break:.2f}, collapse {row.frac_collapse:.2f}, "
            f"switch rate {row.switch_rate:.4f}",
        )
    _say(args, f"wrote {outputs[0]}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    started, started_utc = time.perf_counter(), _now_utc()
    cfg = _load_config(args)
    warmup = args.warmup if args.warmup is not None else default_t_max(cfg.n)
    points = phase_diagram(
        n=cfg.n,
        p_grid=cfg.p_grid,
        warmup=warmup,
        horizon=args.horizon,
        trials=cfg.trials,
        seed=cfg.seed,
        dynamics=cfg.dynamics,
        epsilon=cfg.epsilon,
        threads=_threads_from(args),
    )
    out = _out_dir(args)
    outputs = [emit_sweep(points, out / f"sweep.{args.format}", args.format)]
    outputs.append(render_sweep_figure(points, cfg.n, out / "sweep.png"))
    script_path = out / "plot_sweep.py"
    script_path.write_text(sweep_plot_script("sweep.csv", "sweep.png"), encoding="utf-8")
    outputs.append(script_path)
    manifest = _manifest(
        "sweep",
        {"warmup": warmup, "horizon": args.horizon, "format": args.format},
        cfg, outputs, started, started_utc,
    )
    write_manifest(manifest, out)
    for pt in points:
        _say(args, f"p={pt.p:g}: mean |s|/n = {pt.mean_abs_bias_over_n:.4f}")
    _say(args, f"wrote {outputs[0]}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    started, started_utc = time.perf_counter(), _now_utc()
    chain = build_chain(args.n, args.p, Dynamics(args.dynamics))
    out = _out_dir(args)
    outputs: list[Path] = []
    if args.op == "export":
        path = out / "chain.csv"
        export_chain_csv(chain, path)
        outputs.append(path)
        _say(args, f"wrote {path}")
    elif args.op == "evolve":
        if args.start is None or args.t is None:
            raise ValidationError("evolve requires --start and --t")
        dist = evolve(point_mass(args.n, args.start), chain, args.t)
        path = out / "distribution.csv"
        lines = ["state,prob"] + [f"{b},{w:.17g}" for b, w in enumerate(dist)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append(path)
        _say(args, f"wrote {path}")
    elif args.op == "hitting":
        if args.start is None or not args.target:
            raise ValidationError("hitting requires --start and --target")
        target = [int(x) for x in args.target.split(",")]
        value = expected_hitting_time(chain, args.start, target)
        print(f"{value:.9g}")
    invocation = {
        "n": args.n, "p": args.p, "dynamics": args.dynamics, "op": args.op,
        "start": args.start, "target": args.target, "t": args.t,
    }
    if outputs:
        write_manifest(
            _manifest("oracle", invocation, None, outputs, started, started_utc), out
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_verify_suites(replicas=args.samples)
    failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: {status} ({res.detail})")
        failed = failed or not res.passed
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisy-majority",
        description="Simulate and analyze opinion dynamics under uniform "
                    "communication noise on the complete graph.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, help="configuration document (JSON)")
        sp.add_argument("--out-dir", default=".", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker processes; 0 = auto (default: 1, or "
                             "NOISY_MAJORITY_THREADS)")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("step", help="run one trial and write its trajectory")
    common(sp)
    sp.add_argument("--p", type=float, default=None, help="noise value (default: first on grid)")
    sp.add_argument("--trial-index", type=int, default=0)
    sp.set_defaults(handler=cmd_step)

    sp = sub.add_parser("experiment", help="run the configured experiment")
    common(sp)
    sp.set_defaults(handler=cmd_experiment)

    sp = sub.add_parser("sweep", help="phase diagram over the configured noise grid")
    common(sp)
    sp.add_argument("--warmup", type=int, default=None,
                    help="rounds to discard (default: ceil(40 ln n))")
    sp.add_argument("--horizon", type=int, default=2000, help="total rounds per trial")
    sp.set_defaults(handler=cmd_sweep)

    sp = sub.add_parser("oracle", help="exact-chain queries for small n")
    common(sp, config_required=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--dynamics", choices=("three_majority", "two_choices"),
                    default="three_majority")
    sp.add_argument("--op", choices=("export", "evolve", "hitting"), required=True)
    sp.add_argument("--start", type=int, default=None)
    sp.add_argument("--target", type=str, default=None,
                    help="comma-separated target states for --op hitting")
    sp.add_argument("--t", type=int, default=None, help="rounds for --op evolve")
    sp.set_defaults(handler=cmd_oracle)

    sp = sub.add_parser("verify", help="run the cross-validation suites")
    sp.add_argument("--samples", type=int, default=100_000,
                    help="agent-level replicas for the equivalence suite")
    sp.set_defaults(handler=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SingularSystem as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
