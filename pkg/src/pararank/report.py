"""Report writers: delimited tables plus matplotlib figures rendered next to them."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import PairStatsReport
from .ranker import TABLE_ROW_ORDER, EvalReport

_PNG_META = {"Software": "pararank"}  # fixed metadata keeps outputs byte-identical


def write_counts_tsv(path: str | Path, counts: Mapping[str, Mapping]) -> None:
    snrs = sorted({k for table in counts.values() for k in table if k != "total"}, reverse=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("subset\ttotal\t" + "\t".join(f"snr{m:+g}" for m in snrs) + "\n")
        for name, table in counts.items():
            cells = [str(table.get("total", 0))] + [str(table.get(m, 0)) for m in snrs]
            handle.write(name + "\t" + "\t".join(cells) + "\n")


def write_summary_tsv(path: str | Path, means: Mapping[float, float], stats_report: PairStatsReport) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("snr_db\tn_pairs\tmean_sent_int\tmean_abs_diff\tt_stat\tp_value\n")
        for snr, snr_stats in stats_report.per_snr.items():
            t = snr_stats.ttest_vs_zero
            handle.write(
                f"{snr:g}\t{snr_stats.n_pairs}\t{means.get(snr, float('nan')):.6f}"
                f"\t{snr_stats.mean_abs_diff:.6f}"
                f"\t{t.statistic:.4f}\t{t.pvalue:.3e}\n"
                if t
                else f"{snr:g}\t{snr_stats.n_pairs}\t{means.get(snr, float('nan')):.6f}"
                f"\t{snr_stats.mean_abs_diff:.6f}\tNA\tNA\n"
            )
        for (high, low), welch in stats_report.welch_adjacent.items():
            handle.write(
                f"# welch snr{low:+g} vs snr{high:+g}: t={welch.statistic:.4f} df={welch.df:.1f} p={welch.pvalue:.3e}\n"
            )


def write_histogram_csv(path: str | Path, stats_report: PairStatsReport) -> None:
    """Plot-ready export of the intelligibility-difference histogram."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("snr_db,bin_low,bin_high,count\n")
        for snr, snr_stats in stats_report.per_snr.items():
            edges = snr_stats.hist_edges
            for low, high, count in zip(edges, edges[1:], snr_stats.hist_counts):
                handle.write(f"{snr:g},{low:.2f},{high:.2f},{count}\n")


def write_oracle_tsv(path: str | Path, gains: Mapping[float, float]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("snr_db\toracle_gain_pct\n")
        for snr, gain in gains.items():
            handle.write(f"{snr:g}\t{gain:.2f}\n")


def save_diff_histogram_png(stats_report: PairStatsReport, path: str | Path) -> None:
    """One panel per SNR: distribution of absolute intelligibility differences."""
    conditions = list(stats_report.per_snr.items())
    fig, axes = plt.subplots(1, max(len(conditions), 1), figsize=(4 * max(len(conditions), 1), 3.2), sharey=True)
    if len(conditions) == 1:
        axes = [axes]
    for ax, (snr, snr_stats) in zip(axes, conditions):
        edges = snr_stats.hist_edges
        widths = [high - low for low, high in zip(edges, edges[1:])]
        ax.bar(edges[:-1], snr_stats.hist_counts, width=widths, align="edge", edgecolor="black", linewidth=0.4)
        ax.set_title(f"SNR {snr:+g} dB")
        ax.set_xlabel("intelligibility difference")
    axes[0].set_ylabel("paraphrase pairs")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def format_eval_cell(report: EvalReport) -> str:
    star = "*" if report.significant else ""
    return f"{report.mean:.1f} +/- {report.ci95_halfwidth:.1f}{star}"


def write_eval_table_tsv(path_or_handle, tables: Mapping[float, Mapping[str, EvalReport]]) -> None:
    """Ranking accuracy table: one row per feature set / baseline, one column per SNR."""
    snrs = sorted(tables, reverse=True)
    lines = ["feature(s)\t" + "\t".join(f"SNR {snr:+g}" for snr in snrs)]
    for row in TABLE_ROW_ORDER:
        cells = []
        for snr in snrs:
            report = tables[snr].get(row)
            cells.append(format_eval_cell(report) if report else "NA")
        lines.append(row + "\t" + "\t".join(cells))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        Path(path_or_handle).write_text(text, encoding="utf-8")


def save_accuracy_png(tables: Mapping[float, Mapping[str, EvalReport]], path: str | Path) -> None:
    """Grouped bars (mean with 95% CI) per feature row, one group per SNR."""
    snrs = sorted(tables, reverse=True)
    rows = [r for r in TABLE_ROW_ORDER if any(r in tables[s] for s in snrs)]
    fig, ax = plt.subplots(figsize=(1.6 * len(rows) + 2, 4))
    width = 0.8 / max(len(snrs), 1)
    for i, snr in enumerate(snrs):
        xs = [j + i * width for j in range(len(rows))]
        means = [tables[snr][r].mean if r in tables[snr] else float("nan") for r in rows]
        errs = [tables[snr][r].ci95_halfwidth if r in tables[snr] else 0.0 for r in rows]
        ax.bar(xs, means, width=width, yerr=errs, capsize=2, label=f"SNR {snr:+g} dB")
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(rows))])
    ax.set_xticklabels(rows, rotation=20, ha="right")
    ax.set_ylabel("ranking accuracy (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)
