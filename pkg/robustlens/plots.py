"""SVG figures for result bundles. Output is byte-stable across runs."""

from __future__ import annotations

import io
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .utils import atomic_write_text, safe_filename  # noqa: E402


_STYLE = {
    "svg.hashsalt": "robustlens",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.5),
}


def _save(fig, path: Path) -> Path:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None}, bbox_inches="tight")
    plt.close(fig)
    return atomic_write_text(path, buf.getvalue())


def _line_plot(df: pd.DataFrame, *, x: str, y: str, series: str, err: str | None, title: str, ylabel: str, path: Path) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name, part in df.sort_values([series, x]).groupby(series, sort=True):
            yerr = part[err] if err and err in part else None
            ax.errorbar(part[x], part[y], yerr=yerr, marker="o", markersize=3, capsize=2, label=str(name))
        ax.set_xlabel(x)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(fontsize=7)
        return _save(fig, path)


def _box_plot(df: pd.DataFrame, *, path: Path, title: str) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        degrees = sorted(df["degree"].unique())
        data = [df.loc[df["degree"] == d, "min_robustness"].to_numpy() for d in degrees]
        if data:
            ax.boxplot(data, labels=[str(d) for d in degrees], showfliers=False)
        ax.set_xlabel("degree")
        ax.set_ylabel("robustness (min over classes)")
        ax.set_title(title)
        return _save(fig, path)


def render_figures(bundle, out_dir: Path) -> List[Path]:
    written: List[Path] = []

    if bundle.cells:
        agg = bundle.seed_aggregate_frame().dropna(subset=["K"])
        for (attack, budget), part in agg.groupby(["attack", "budget"], sort=True):
            name = safe_filename(f"{attack}_{budget}_r_over")
            written.append(
                _line_plot(
                    part,
                    x="K",
                    y="R_over_mean",
                    series="classifier",
                    err="R_over_stderr",
                    title=f"Over-robustness, {attack} {budget}",
                    ylabel="R_over",
                    path=out_dir / f"{name}.svg",
                )
            )

    acc = bundle.tables.get("bayes_accuracy")
    if acc is not None and not acc.empty:
        written.append(
            _line_plot(
                acc,
                x="K",
                y="mean",
                series="mode",
                err="std",
                title="Bayes accuracy",
                ylabel="accuracy",
                path=out_dir / "bayes_accuracy.svg",
            )
        )

    viol = bundle.tables.get("semantic_violation")
    if viol is not None and not viol.empty:
        for attack, part in viol.groupby("attack", sort=True):
            written.append(
                _line_plot(
                    part,
                    x="K",
                    y="mean",
                    series="budget",
                    err="std",
                    title=f"Semantic violations, {attack}",
                    ylabel="fraction of test nodes",
                    path=out_dir / f"{safe_filename(str(attack))}_semantic_violation.svg",
                )
            )

    rewiring = bundle.tables.get("rewiring")
    if rewiring is not None and not rewiring.empty:
        shown = rewiring[rewiring["property"].isin(["homophilic_edges", "dac", "bayes_changed"])]
        for (K, scheme), part in shown.groupby(["K", "scheme"], sort=True):
            written.append(
                _line_plot(
                    part,
                    x="rounds",
                    y="mean",
                    series="property",
                    err="std",
                    title=f"Rewiring ({scheme}), K={K:g}",
                    ylabel="value",
                    path=out_dir / safe_filename(f"rewiring_{scheme}_K{K:g}.svg"),
                )
            )

    nodes = bundle.tables.get("degree_profile_nodes")
    if nodes is not None and not nodes.empty:
        usable = nodes[nodes["eligible"].astype(bool) & ~nodes["censored"].astype(bool) & (nodes["degree"] >= 1)]
        for clf, part in usable.groupby("classifier", sort=True):
            written.append(
                _box_plot(part, path=out_dir / f"{safe_filename(str(clf))}_degree_profile.svg", title=f"Robustness by degree, {clf}")
            )

    return written
