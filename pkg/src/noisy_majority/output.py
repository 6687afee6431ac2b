"""Result serialization: delimited tables, plot scripts and run manifests.

CSV is the canonical output format and JSON is a faithful mirror of the same
fields.  All numbers are written with 9 significant digits; statistics that
are undefined for a row (for example a median hitting time when no trial
hit) serialize as an empty CSV cell and a JSON null.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .analysis import NOISE_THRESHOLD, equilibrium_bias, theorem_thresholds
from .config import serialize_config
from .harness import ExperimentSummary, PhasePoint, TrialRecord

__all__ = [
    "MissingTrajectory",
    "SUMMARY_FIELDS",
    "SWEEP_FIELDS",
    "RunManifest",
    "emit_summary",
    "emit_sweep",
    "emit_trajectory",
    "trajectory_plot_script",
    "sweep_plot_script",
    "write_manifest",
    "config_as_document",
]

SUMMARY_FIELDS = (
    "p",
    "frac_metastable_hit",
    "median_tau1",
    "mean_tau1",
    "frac_symmetry_break",
    "median_tau2",
    "frac_collapse",
    "median_tau3",
    "switch_rate",
    "band_residence_frac",
    "mean_abs_bias_over_n",
)

SWEEP_FIELDS = ("p", "mean_abs_bias_over_n", "switch_rate", "band_residence_frac")


class MissingTrajectory(ValueError):
    """Record was captured in events-only mode; no trajectory to emit."""


def _sig9(value: float | None) -> str:
    return "" if value is None else f"{value:.9g}"


def _sig9_number(value: float | None) -> float | None:
    return None if value is None else float(f"{value:.9g}")


def emit_summary(summary: ExperimentSummary, path: str | Path, fmt: str = "csv") -> Path:
    """Write the per-noise aggregate table as CSV or JSON."""
    path = Path(path)
    rows = [
        {name: getattr(row, name) for name in SUMMARY_FIELDS} for row in summary.per_p
    ]
    if fmt == "csv":
        lines = [",".join(SUMMARY_FIELDS)]
        lines += [",".join(_sig9(row[name]) for name in SUMMARY_FIELDS) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "json":
        payload = {
            "fields": list(SUMMARY_FIELDS),
            "per_p": [
                {name: _sig9_number(row[name]) for name in SUMMARY_FIELDS}
                for row in rows
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    return path


def emit_sweep(points: list[PhasePoint], path: str | Path, fmt: str = "csv") -> Path:
    """Write the phase-diagram table as CSV or JSON."""
    path = Path(path)
    rows = [{name: getattr(pt, name) for name in SWEEP_FIELDS} for pt in points]
    if fmt == "csv":
        lines = [",".join(SWEEP_FIELDS)]
        lines += [",".join(_sig9(row[name]) for name in SWEEP_FIELDS) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "json":
        payload = {
            "fields": list(SWEEP_FIELDS),
            "points": [
                {name: _sig9_number(row[name]) for name in SWEEP_FIELDS} for row in rows
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    return path


def emit_trajectory(record: TrialRecord, path: str | Path) -> Path:
    """Write one trajectory as 'round,bias', one row per simulated round."""
    if record.trajectory is None:
        raise MissingTrajectory(
            "trial was recorded in events-only mode; rerun with full trajectories"
        )
    path = Path(path)
    lines = ["round,bias"]
    lines += [f"{t},{int(s)}" for t, s in enumerate(record.trajectory)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_SCRIPT_HEADER = """\
#!/usr/bin/env python3
# Self-contained plot script; regenerate the figure with: python {name}
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
"""


def sweep_plot_script(csv_name: str, figure_name: str) -> str:
    """Script that draws mean |s|/n against p with the 1/3 threshold marked."""
    return _SCRIPT_HEADER.format(name="plot_sweep.py") + f"""
csv_path = Path(__file__).parent / "{csv_name}"
with open(csv_path, newline="") as fh:
    rows = list(csv.DictReader(fh))
p = [float(r["p"]) for r in rows]
bias = [float(r["mean_abs_bias_over_n"]) for r in rows]

fig, ax = plt.subplots(figsize=(6.0, 4.0))
ax.plot(p, bias, marker="o", color="tab:blue", label="mean |s|/n")
ax.axvline({1.0 / 3.0!r}, color="tab:red", linestyle="--", label="p = 1/3")
ax.set_xlabel("noise probability p")
ax.set_ylabel("mean |s| / n")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig(Path(__file__).parent / "{figure_name}", dpi=150)
"""


def trajectory_plot_script(
    csv_name: str, figure_name: str, n: int, p: float, gamma: float
) -> str:
    """Script that draws the bias trajectory with the event levels marked.

    The equilibrium markers are embedded as numbers at generation time and
    are omitted entirely for p >= 1/3, where no interior equilibrium exists.
    """
    levels = theorem_thresholds(n, p, gamma=gamma)
    s_eq = equilibrium_bias(n, p) if p < NOISE_THRESHOLD else None
    marker_lines = ""
    if s_eq is not None:
        marker_lines += (
            f'ax.axhline({s_eq!r}, color="tab:green", linestyle="-", '
            f'linewidth=0.8, label="equilibrium bias")\n'
            f'ax.axhline({-s_eq!r}, color="tab:green", linestyle="-", linewidth=0.8)\n'
        )
    level = levels.symmetry_break_level
    marker_lines += (
        f'ax.axhline({level!r}, color="tab:orange", linestyle=":", '
        f'linewidth=0.8, label="gamma*sqrt(n ln n)")\n'
        f'ax.axhline({-level!r}, color="tab:orange", linestyle=":", linewidth=0.8)\n'
    )
    return _SCRIPT_HEADER.format(name="plot_trajectory.py") + f"""
csv_path = Path(__file__).parent / "{csv_name}"
with open(csv_path, newline="") as fh:
    rows = list(csv.DictReader(fh))
t = [int(r["round"]) for r in rows]
s = [int(r["bias"]) for r in rows]

fig, ax = plt.subplots(figsize=(7.0, 4.0))
ax.plot(t, s, color="tab:blue", linewidth=0.9, label="bias")
{marker_lines}ax.set_xlabel("round")
ax.set_ylabel("bias s")
ax.legend(loc="best")
fig.tight_layout()
fig.savefig(Path(__file__).parent / "{figure_name}", dpi=150)
"""


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run's outputs with the same build."""

    artifact_version: str
    command: str
    invocation: dict
    config: dict
    started_utc: str
    elapsed_seconds: float
    outputs: list[str]


def write_manifest(manifest: RunManifest, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    return path


def config_as_document(cfg) -> dict:
    """Config echo embedded in manifests (parsed canonical document)."""
    return json.loads(serialize_config(cfg))
