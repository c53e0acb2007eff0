"""Log-log risk/regret figures from harness CSV artifacts.

Consumes the fixed CSV schema written by the experiment harness
(experiment_id, class, estimator, n, rep, kl_loss, hellinger_loss, regret,
lambda_bar, seed, wall_ms) plus, optionally, its summary JSON.  Draws one
line per estimator with 95% CI bands and a fitted-slope annotation, and
overlays any theoretical rate curves found in the summary.

Slopes are taken from the summary JSON when present (single source of
truth); without a summary they are recomputed with the harness convention
(ordinary least squares on logs over the upper half of the n grid).

Output is deterministic for identical inputs: fixed figure geometry, fixed
DPI, and no embedded timestamps.

Usage:
    condest-plot-rates --input risk.csv [--summary risk-summary.json]
                       --out figure.svg [--format svg|png]
                       [--value kl_loss|hellinger_loss|regret]
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXIT_BAD_INPUT = 2

REQUIRED_COLUMNS = ("estimator", "n", "rep")


class InputError(Exception):
    pass


@dataclass
class FigureSpec:
    inputs: list
    out: str
    fmt: str = "svg"
    value: str = "kl_loss"
    summary: str | None = None
    group_key: str = "estimator"
    title: str | None = None
    dpi: int = 150
    size: tuple = (6.4, 4.8)


@dataclass
class Series:
    label: str
    ns: np.ndarray
    means: np.ndarray
    ci: np.ndarray
    slope: float | None = None


def read_rows(path: str) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    return rows, header


def fitted_slope(ns, means) -> float:
    """Harness convention: OLS on logs over the upper half of the grid."""
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    start = len(ns) // 2
    ns, means = ns[start:], means[start:]
    good = np.isfinite(means) & (means > 0)
    ns, means = ns[good], means[good]
    if len(ns) < 2:
        raise InputError("not enough positive points for a slope fit")
    A = np.stack([np.log(ns), np.ones(len(ns))], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(means), rcond=None)
    return float(coef[0])


def collect_series(spec: FigureSpec) -> list:
    """Per-estimator mean curves with 95% CI halfwidths."""
    rows = []
    header = None
    for path in spec.inputs:
        r, h = read_rows(path)
        rows.extend(r)
        header = h if header is None else header
    if not rows:
        raise InputError("no data rows in the input CSV")
    for col in REQUIRED_COLUMNS + (spec.value,):
        if col not in (header or []):
            raise InputError(f"input CSV lacks required column {col!r}")
    groups: dict = {}
    for row in rows:
        if row.get(spec.value, "") == "":
            continue
        key = row[spec.group_key]
        groups.setdefault(key, {}).setdefault(int(row["n"]), []).append(float(row[spec.value]))
    if not groups:
        raise InputError(f"no rows carry a value in column {spec.value!r}")
    summary_slopes = {}
    if spec.summary:
        with open(spec.summary) as fh:
            payload = json.load(fh)
        if "rate_fit" in payload:
            for key in groups:
                summary_slopes[key] = payload["rate_fit"]["slope"]
        for k, v in payload.items():
            if k.endswith("_slope"):
                stem = k.replace("_slope", "").replace("_hellinger", "").replace("_kl", "")
                for key in groups:
                    if key == stem or key.endswith(stem) or stem.endswith(key):
                        summary_slopes[key] = v
    series = []
    for key in sorted(groups):
        ns = np.asarray(sorted(groups[key]))
        means = np.asarray([np.mean(groups[key][n]) for n in ns])
        ci = np.asarray(
            [
                1.96 * np.std(groups[key][n], ddof=1) / math.sqrt(len(groups[key][n]))
                if len(groups[key][n]) > 1
                else 0.0
                for n in ns
            ]
        )
        slope = summary_slopes.get(key)
        if slope is None and len(ns) >= 2:
            try:
                slope = fitted_slope(ns, means)
            except InputError:
                slope = None  # degenerate series still gets a line, no slope
        series.append(Series(key, ns, means, ci, slope))
    return series


def load_overlays(spec: FigureSpec) -> dict:
    if not spec.summary:
        return {}
    with open(spec.summary) as fh:
        payload = json.load(fh)
    out = {}
    for name, ys in payload.get("overlays", {}).items():
        ns = payload.get("rate_fit", {}).get("ns")
        if ns and len(ns) == len(ys):
            out[name] = (np.asarray(ns, dtype=float), np.asarray(ys, dtype=float))
    return out


def plot_rates(spec: FigureSpec) -> str:
    """Render the figure and return the output path."""
    series = collect_series(spec)
    overlays = load_overlays(spec)
    # fixed hash salt keeps SVG element ids reproducible across runs
    matplotlib.rcParams["svg.hashsalt"] = "condest-plots"
    fig, ax = plt.subplots(figsize=spec.size)
    for s in series:
        label = s.label if s.slope is None else f"{s.label} (slope {s.slope:.2f})"
        ax.plot(s.ns, s.means, marker="o", markersize=3.5, linewidth=1.4, label=label)
        lo = np.maximum(s.means - s.ci, 1e-300)
        ax.fill_between(s.ns, lo, s.means + s.ci, alpha=0.2, linewidth=0)
    for name, (ns, ys) in overlays.items():
        ax.plot(ns, ys, linestyle="--", linewidth=1.0, color="gray", label=name)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel(spec.value.replace("_", " "))
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.25, linewidth=0.5)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out, format=spec.fmt, dpi=spec.dpi, metadata=_deterministic_metadata(spec.fmt))
    plt.close(fig)
    return spec.out


def _deterministic_metadata(fmt: str):
    if fmt == "svg":
        return {"Date": None}
    if fmt == "png":
        return {"Software": "condest-plots"}
    return None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="condest-plot-rates", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--input", action="append", required=True, help="harness CSV (repeatable)")
    parser.add_argument("--summary", help="harness summary JSON with slopes/overlays")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--format", default=None, choices=("png", "svg"), help="image format")
    parser.add_argument("--value", default="kl_loss", help="CSV column to plot (default kl_loss)")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    fmt = args.format or ("svg" if args.out.endswith(".svg") else "png")
    spec = FigureSpec(inputs=args.input, out=args.out, fmt=fmt, value=args.value,
                      summary=args.summary, title=args.title)
    try:
        plot_rates(spec)
    except (InputError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
