from __future__ import annotations

import argparse
import logging
import random
from pathlib import Path
from typing import List, Optional, Sequence

from .acceptance import Check, check_bundle, check_mean_degree
from .config import ExperimentConfig, load_config
from .errors import ConfigError, FormatError
from .harness import (
    bayes_accuracy_table,
    degree_robustness_profile,
    generate,
    graph_property_table,
    mean_degree_statistics,
    over_robustness_sweep,
    semantic_violation_table,
)
from .plugin_loader import load_plugins
from .report import ResultBundle, emit_results
from .utils import atomic_write_text, safe_filename


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3

_BANNERS = {
    "b1": """ ___  ___  ___ _   _ ___ _____ _    ___ _  _ ___
| _ \\/ _ \\| _ ) | | / __|_   _| |  | __| \\| / __|
|   / (_) | _ \\ |_| \\__ \\ | | | |__| _|| .` \\__ \\
|_|_\\\\___/|___/\\___/|___/ |_| |____|___|_|\\_|___/""",
    "b2": """ROBUSTLENS
==========
Attack. Trace. Compare with the Bayes boundary.""",
    "b3": """┌──────────────────────────────┐
│          ROBUSTLENS          │
│  Semantics-aware robustness  │
└──────────────────────────────┘""",
    "b4": """[ RobustLens ]
> sample graphs, attack nodes
> adversarial vs over-robust""",
    "b5": """ROBUSTLENS :: sample → attack → trace → aggregate""",
}


def _console(stderr: bool = False):
    try:
        from rich.console import Console
    except Exception:
        return None
    return Console(stderr=stderr)


def _print_banner(choice: str) -> None:
    if choice == "none":
        return
    key = random.choice(sorted(_BANNERS)) if choice == "random" else choice
    console = _console(stderr=True)
    if console is None:
        print(_BANNERS[key])
    else:
        console.print(_BANNERS[key], style="bold cyan", markup=False, highlight=False)


def _configure_logging(level: str) -> None:
    logger = logging.getLogger("robustlens")
    logger.setLevel(level.upper())
    logger.handlers.clear()
    try:
        from rich.logging import RichHandler
    except Exception:
        handler: logging.Handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    else:
        handler = RichHandler(show_path=False, markup=False)
    logger.addHandler(handler)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "-" if value != value else f"{value:.4g}"
    return str(value)


def _print_table(df, title: str, max_rows: int = 40) -> None:
    try:
        from rich.console import Console
        from rich.table import Table
    except Exception:
        print(title)
        print(df.head(max_rows).to_string(index=False))
        return

    table = Table(title=title, show_header=True, header_style="bold")
    for col in df.columns:
        table.add_column(str(col), justify="right" if df[col].dtype.kind in "if" else "left")
    for _, row in df.head(max_rows).iterrows():
        table.add_row(*[_fmt(v) for v in row.tolist()])
    if len(df) > max_rows:
        table.add_row(*(["…"] + [""] * (len(df.columns) - 1)))
    Console().print(table)


def _print_summary(*, bundle: ResultBundle, written: Sequence[Path]) -> None:
    try:
        from rich.console import Console
        from rich.panel import Panel
        from rich.table import Table
        from rich.text import Text
    except Exception:
        print(f"{bundle.experiment}: cells={len(bundle.cells)} failures={len(bundle.failures)}")
        for p in written:
            print(f"  wrote: {p}")
        return

    console = Console()
    style = "green" if not bundle.failures else "yellow"
    body = Text.assemble(
        (bundle.experiment, "bold"),
        "\n",
        ("config ", "dim"),
        (str(bundle.provenance.get("config_hash", "-"))[:12], "bold"),
        ("  |  ", "dim"),
        ("cells ", "dim"),
        (str(len(bundle.cells)), "bold"),
        ("  |  ", "dim"),
        ("failures ", "dim"),
        (str(len(bundle.failures)), style + " bold"),
    )
    console.print(Panel.fit(body, border_style=style))

    if bundle.failures:
        table = Table(show_header=True, header_style="bold")
        for col in ("K", "seed", "classifier", "attack", "budget", "error"):
            table.add_column(col)
        for f in bundle.failures[:12]:
            table.add_row(*[_fmt(f.get(c)) for c in ("K", "seed", "classifier", "attack", "budget", "error")])
        console.print(table)

    if written:
        out_table = Table(show_header=True, header_style="bold")
        out_table.add_column(f"Result Files ({len(written)})")
        for p in list(written)[:20]:
            out_table.add_row(str(p))
        if len(written) > 20:
            out_table.add_row(f"(+{len(written) - 20} more)")
        console.print(out_table)


def _print_checks(checks: List[Check]) -> None:
    try:
        from rich.console import Console
        from rich.table import Table
        from rich.text import Text
    except Exception:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: observed={_fmt(c.observed)} expected={c.expected}")
        return

    table = Table(title="Self-check", show_header=True, header_style="bold")
    table.add_column("Result")
    table.add_column("Check")
    table.add_column("Observed", justify="right")
    table.add_column("Expected")
    for c in checks:
        table.add_row(
            Text("PASS", style="green bold") if c.passed else Text("FAIL", style="red bold"),
            c.name,
            _fmt(c.observed),
            c.expected,
        )
    Console().print(table)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="Path to an experiment config JSON (default: built-in CSBM setup)")
    p.add_argument("--out", default=None, help="Output directory (default: the config's output.dir)")
    p.add_argument("--seed", type=int, default=None, help="Base seed overriding the config")
    p.add_argument("--profile", default=None, choices=("full", "quick"), help="Seed and test-node profile")
    p.add_argument("--formats", default=None, help="Comma-separated subset of csv,json,svg")
    p.add_argument("--check", action="store_true", help="Compare results with the reference values; exit 3 on a miss")
    p.add_argument(
        "--plugin",
        action="append",
        default=[],
        help="Path to a Python plugin defining ATTACKS or get_attacks() (can be provided multiple times)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustlens", description="Semantics-aware robustness of node classifiers")
    parser.add_argument(
        "--banner",
        default="none",
        choices=("random", "none", "b1", "b2", "b3", "b4", "b5"),
        help="Banner style (default: none).",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Log level for the robustlens logger",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    gen = sub.add_parser("gen", help="Sample one training graph and print its statistics")
    _add_run_options(gen)
    gen.add_argument("--K", type=float, default=None, help="Feature separability (default: first K of the config)")

    for name, text in (
        ("bayes-table", "Bayes classifier accuracy per K and mode"),
        ("violation-table", "Fraction of test nodes whose semantics change per budget"),
        ("sweep", "Over-robustness sweep over K, classifiers, attacks and budgets"),
        ("degree-profile", "Robustness distribution by node degree"),
        ("graph-properties", "Degree-preserving rewiring and homophily statistics against semantic change"),
    ):
        _add_run_options(sub.add_parser(name, help=text))

    emit = sub.add_parser("emit", help="Re-emit a saved bundle.json in other formats")
    emit.add_argument("bundle", help="Path to a bundle.json written by a previous run")
    emit.add_argument("--out", required=True, help="Output directory")
    emit.add_argument("--formats", default="csv,json,svg", help="Comma-separated subset of csv,json,svg")
    return parser


def _formats(arg: Optional[str], cfg: Optional[ExperimentConfig]) -> List[str]:
    if arg:
        return [f.strip().lower() for f in arg.split(",") if f.strip()]
    return list(cfg.output.formats) if cfg else ["csv", "json"]


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config, profile=args.profile, seed=args.seed)
    if args.plugin:
        from dataclasses import replace

        cfg = replace(cfg, plugins=cfg.plugins + tuple(args.plugin))
    return cfg


def _run_gen(args, cfg: ExperimentConfig, out_dir: Path) -> int:
    g, stats = generate(cfg, args.K)
    root = out_dir / safe_filename(cfg.name)
    written = [atomic_write_text(root / "graph.json", g.to_json())]
    import pandas as pd

    _print_table(pd.DataFrame([stats]), "Graph statistics")
    for p in written:
        print(f"  wrote: {p}")
    if args.check and cfg.model.synthetic:
        K = cfg.ks[0] if args.K is None else args.K
        checks = check_mean_degree(cfg, mean_degree_statistics(cfg, K)["mean"])
        _print_checks(checks)
        if not all(c.passed for c in checks):
            return EXIT_CHECK
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    _configure_logging(args.log_level)
    _print_banner(args.banner)

    if args.cmd == "emit":
        try:
            bundle = ResultBundle.load(args.bundle)
            written = emit_results(bundle, Path(args.out), _formats(args.formats, None))
        except (FileNotFoundError, FormatError, ValueError) as e:
            print(f"error: {e}")
            return EXIT_CONFIG
        _print_summary(bundle=bundle, written=written)
        return EXIT_OK

    try:
        cfg = _load(args)
        if cfg.plugins:
            load_plugins(cfg.plugins)
    except (FileNotFoundError, ValueError, AttributeError, TypeError, ImportError) as e:
        print(f"config error: {e}")
        return EXIT_CONFIG

    out_dir = Path(args.out or cfg.output.dir)
    formats = _formats(args.formats, cfg)
    bad = [f for f in formats if f not in ("csv", "json", "svg")]
    if bad:
        print(f"config error: unknown format(s) {bad}")
        return EXIT_CONFIG

    try:
        if args.cmd == "gen":
            return _run_gen(args, cfg, out_dir)
        runner = {
            "bayes-table": bayes_accuracy_table,
            "violation-table": semantic_violation_table,
            "sweep": over_robustness_sweep,
            "degree-profile": degree_robustness_profile,
            "graph-properties": graph_property_table,
        }[args.cmd]
        bundle = runner(cfg)
    except (ConfigError, FormatError) as e:
        print(f"config error: {e}")
        return EXIT_CONFIG

    written = emit_results(bundle, out_dir, formats)
    for name, df in sorted(bundle.tables.items()):
        if name != "degree_profile_nodes":
            _print_table(df, name)
    _print_summary(bundle=bundle, written=written)

    if args.check:
        checks = check_bundle(bundle, cfg)
        _print_checks(checks)
        if not all(c.passed for c in checks):
            return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
