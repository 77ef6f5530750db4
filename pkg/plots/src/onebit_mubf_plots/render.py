"""Figure builders for the experiment CSVs.

Each figure id owns a column contract (checked before drawing, with the
missing column named on failure) and a builder that arranges the curves the
way the corresponding result plot does: rates vs users on twin axes, rate
CDFs, and log-scale BER sweeps. Rendering is deterministic: fixed style, no
timestamps, metadata stripped from the PNG.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


class SchemaMismatch(Exception):
    """CSV does not carry the columns the requested figure needs."""


PRECODER_LABELS = {
    "opt": "Opt",
    "opt_dummy": "Opt Dummy",
    "zf_opt_pwr": "ZF Opt-Pwr",
    "zf_zf_pwr": "ZF ZF-Pwr",
    "zf_equal_pwr": "ZF Equal-Pwr",
}

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
    "lines.markersize": 5.0,
    "font.size": 10.0,
    "legend.fontsize": 8.5,
    "svg.hashsalt": "onebit-mubf",
}

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_MARKERS = ["o", "s", "^", "v", "D", "x"]


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: figure id, input CSV, output image path."""

    figure: str
    csv_path: str
    out_path: str


def _read_rows(csv_path: str) -> tuple[list[str], list[dict]]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    if not header or not rows:
        raise SchemaMismatch(f"{csv_path}: empty CSV, nothing to draw")
    return header, rows


def _need(header: list[str], column: str, csv_path: str) -> None:
    if column not in header:
        raise SchemaMismatch(f"{csv_path}: missing required column {column!r}")


def _metric_columns(header: list[str], prefix: str, csv_path: str) -> list[str]:
    cols = [c for c in header if c.startswith(prefix)]
    if not cols:
        raise SchemaMismatch(
            f"{csv_path}: missing required column family {prefix + '*'!r}")
    return cols


def _label(column: str, prefix: str) -> str:
    tag = column[len(prefix):]
    return PRECODER_LABELS.get(tag, tag)


def _floats(rows: list[dict], column: str) -> list[float]:
    return [float(r[column]) for r in rows]


# ---------------------------------------------------------------------------
# builders


def _build_fig2(header, rows, csv_path, ax):
    for col in ("K", "d_metric_no_dummy", "d_metric_dummy"):
        _need(header, col, csv_path)
    ks = sorted({int(float(r["K"])) for r in rows})
    for col, label, color in (("d_metric_no_dummy", "no dummy users", _COLORS[0]),
                              ("d_metric_dummy", "with dummy users", _COLORS[1])):
        means = []
        for k in ks:
            vals = [float(r[col]) for r in rows if int(float(r["K"])) == k]
            means.append(sum(vals) / len(vals))
        ax.plot(ks, means, marker="o", color=color, label=label)
    ax.set_xlabel("number of users K")
    ax.set_ylabel("diagonal metric of the distortion covariance")
    ax.set_ylim(0.0, 1.05)
    ax.legend()


def _build_rates_vs_k(header, rows, csv_path, ax):
    _need(header, "K", csv_path)
    sum_cols = _metric_columns(header, "sum_rate_", csv_path)
    min_cols = _metric_columns(header, "min_rate_", csv_path)
    ks = _floats(rows, "K")
    ax_min = ax.twinx()
    for i, col in enumerate(sum_cols):
        ax.plot(ks, _floats(rows, col), color=_COLORS[i % len(_COLORS)],
                marker=_MARKERS[i % len(_MARKERS)],
                label=f"{_label(col, 'sum_rate_')} (sum)")
    for i, col in enumerate(min_cols):
        ax_min.plot(ks, _floats(rows, col), color=_COLORS[i % len(_COLORS)],
                    marker=_MARKERS[i % len(_MARKERS)], linestyle="--",
                    label=f"{_label(col, 'min_rate_')} (min)")
    ax.set_xlabel("number of users K")
    ax.set_ylabel("ergodic sum rate [b/s/Hz]")
    ax_min.set_ylabel("ergodic minimum rate [b/s/Hz]")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax_min.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="upper left")


def _build_fig4(header, rows, csv_path, ax):
    for col in ("precoder", "K", "sum_rate"):
        _need(header, col, csv_path)
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        groups.setdefault((r["precoder"], int(float(r["K"]))), []).append(
            float(r["sum_rate"]))
    ks = sorted({k for _, k in groups})
    precoders = sorted({p for p, _ in groups})
    for i, precoder in enumerate(precoders):
        for j, k in enumerate(ks):
            vals = sorted(groups.get((precoder, k), []))
            if not vals:
                continue
            cdf = [(n + 1) / len(vals) for n in range(len(vals))]
            ax.plot(vals, cdf, color=_COLORS[i % len(_COLORS)],
                    linestyle=["-", "--", ":"][j % 3],
                    label=f"{precoder}, K={k}")
    ax.set_xlabel("ergodic sum rate [b/s/Hz]")
    ax.set_ylabel("CDF")
    ax.legend()


def _build_fig5(header, rows, csv_path, ax):
    for col in ("N", "K"):
        _need(header, col, csv_path)
    sum_cols = _metric_columns(header, "sum_rate_", csv_path)
    ns = sorted({int(float(r["N"])) for r in rows})
    for i, col in enumerate(sum_cols):
        for j, n in enumerate(ns):
            sub = [r for r in rows if int(float(r["N"])) == n]
            ax.plot(_floats(sub, "K"), _floats(sub, col),
                    color=_COLORS[i % len(_COLORS)],
                    linestyle=["-", "--", ":"][j % 3], marker="o",
                    label=f"{_label(col, 'sum_rate_')}, N={n}")
    ax.set_xlabel("number of users K")
    ax.set_ylabel("ergodic sum rate [b/s/Hz]")
    ax.legend()


def _build_ber(sweep_col, xlabel):
    def build(header, rows, csv_path, ax):
        _need(header, sweep_col, csv_path)
        ber_cols = _metric_columns(header, "ber_", csv_path)
        xs = _floats(rows, sweep_col)
        for i, col in enumerate(ber_cols):
            ax.semilogy(xs, _floats(rows, col), color=_COLORS[i % len(_COLORS)],
                        marker=_MARKERS[i % len(_MARKERS)],
                        label=_label(col, "ber_"))
        ax.set_xlabel(xlabel)
        ax.set_ylabel("uncoded BER")
        ax.legend()
    return build


FIGURES = {
    "fig2": _build_fig2,
    "fig3": _build_rates_vs_k,
    "fig4": _build_fig4,
    "fig5": _build_fig5,
    "fig6": _build_ber("K", "number of users K"),
    "fig7": _build_ber("K", "number of users K"),
    "fig8": _build_ber("P_dBm", "total transmit power [dBm]"),
    "fig9": _build_ber("alpha", "channel estimation error alpha"),
}


def build_figure(figure: str, csv_path: str):
    """Validated matplotlib Figure for one figure id (no file output)."""
    if figure not in FIGURES:
        raise SchemaMismatch(f"unknown figure id {figure!r}; "
                             f"pick from {sorted(FIGURES)}")
    header, rows = _read_rows(csv_path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        FIGURES[figure](header, rows, csv_path, ax)
        fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render one figure deterministically; returns the output path."""
    fig = build_figure(spec.figure, spec.csv_path)
    try:
        # strip the version string so identical CSVs give identical bytes
        fig.savefig(spec.out_path, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.out_path
