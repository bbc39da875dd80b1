"""Command-line interface: ``netsectors <command> [options]``.

Every command reads its settings from flags, optionally backed by a flat
``key = value`` config file (``--config``); flags win over the file.
Outputs are plain CSV/JSON files in the ``--out`` directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .graph import WindowError, WindowSpec, window_snapshots
from .ingest import IngestError, build_corpus, emit_jsonl, load_corpus
from .metrics import METRIC_NAMES, metrics_matrix
from .pca import PcaError, aggregate, pca, write_loadings_csv
from .sectioning import (
    COMPOUND_CRITERIA,
    DEFAULT_ETA,
    SIMPLE_CRITERIA,
    TimelineRow,
    classify,
    write_timeline_csv,
    write_vertex_sectors_csv,
)
from .synth import GENERATORS, SynthError, SyntheticSpec, generate
from .timestats import (
    GROUP_WIDTHS,
    SCALES,
    UndefinedMeanError,
    activity_concentration,
    activity_histogram,
    circular_stats,
    grouped_histogram,
    write_histogram_csv,
)

logger = logging.getLogger("netsectors")

FORMATS = ("mbox", "jsonl", "csv")
MIN_PCA_VERTICES = len(METRIC_NAMES) + 1

_CRITERION_ALIASES = {"kin": "k_in", "kout": "k_out", "sin": "s_in", "sout": "s_out"}


class ConfigError(ValueError):
    pass


def parse_criterion(name: str) -> str:
    name = name.strip()
    name = _CRITERION_ALIASES.get(name, name)
    if name not in SIMPLE_CRITERIA and name not in COMPOUND_CRITERIA:
        choices = ", ".join(("k", "kin", "kout", "s", "sin", "sout") + COMPOUND_CRITERIA)
        raise ConfigError(f"unknown criterion {name!r}; expected one of {choices}")
    return name


def _split_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        value = [value]
    out = []
    for item in value:
        out.extend(p.strip() for p in str(item).split(",") if p.strip())
    return out


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, blank lines ignored."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    fmt: str = "jsonl"
    ws: int = 1000
    step: int = 0
    eta: int = DEFAULT_ETA
    criteria: list = field(default_factory=lambda: ["k"])
    scales: list = field(default_factory=lambda: list(SCALES))
    out: Path = Path(".")
    seed: int = 0
    limit: Optional[int] = None

    def validate(self) -> None:
        if self.fmt not in FORMATS:
            raise ConfigError(f"unknown format {self.fmt!r}; expected one of {FORMATS}")
        if self.ws < 1:
            raise ConfigError(f"ws must be >= 1, got {self.ws}")
        if self.step < 0:
            raise ConfigError(f"step must be >= 1, got {self.step}")
        if self.eta < 1:
            raise ConfigError(f"eta must be >= 1, got {self.eta}")
        for s in self.scales:
            if s not in SCALES:
                raise ConfigError(f"unknown timescale {s!r}; expected one of {SCALES}")
        if self.limit is not None and self.limit < 1:
            raise ConfigError(f"limit must be >= 1, got {self.limit}")


def _merged(args, cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def run_config(args) -> RunConfig:
    cfg = read_config(args.config) if args.config else {}
    try:
        limit = _merged(args, cfg, "limit")
        rc = RunConfig(
            inputs=_split_list(_merged(args, cfg, "input")),
            fmt=str(_merged(args, cfg, "format", "jsonl")),
            ws=int(_merged(args, cfg, "ws", 1000)),
            step=int(_merged(args, cfg, "step", 0)),
            eta=int(_merged(args, cfg, "eta", DEFAULT_ETA)),
            criteria=[parse_criterion(c) for c in _split_list(_merged(args, cfg, "criterion", "k"))],
            scales=_split_list(_merged(args, cfg, "scales", ",".join(SCALES))),
            out=Path(_merged(args, cfg, "out", ".")),
            seed=int(_merged(args, cfg, "seed", 0)),
            limit=None if limit in (None, "") else int(limit),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    rc.validate()
    return rc


def _need_inputs(rc: RunConfig) -> None:
    if not rc.inputs:
        raise ConfigError("no input given (use --input)")


def _corpus(rc: RunConfig):
    _need_inputs(rc)
    return load_corpus(rc.inputs, rc.fmt, rc.limit)


def _outdir(rc: RunConfig) -> Path:
    rc.out.mkdir(parents=True, exist_ok=True)
    return rc.out


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# --- commands ---------------------------------------------------------------


def cmd_ingest(rc: RunConfig) -> None:
    corpus = _corpus(rc)
    out = _outdir(rc)
    (out / "messages.jsonl").write_text(emit_jsonl(corpus), encoding="utf-8", newline="\n")
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(corpus.summary(), fh, indent=2)
        fh.write("\n")
    logger.info("ingested %d messages from %d participants", len(corpus), corpus.n_participants)


def cmd_sectors(rc: RunConfig) -> None:
    corpus = _corpus(rc)
    snaps = window_snapshots(corpus, WindowSpec(rc.ws, rc.step))
    out = _outdir(rc)
    vdir = out / "vertex_sectors"
    vdir.mkdir(exist_ok=True)
    rows = []
    flagged = []
    for snap in snaps:
        parts = []
        for crit in rc.criteria:
            part = classify(snap.network, crit, rc.eta)
            f = part.fractions()
            rows.append(
                TimelineRow(
                    snap.window_start, crit, f["hub"], f["intermediary"], f["periphery"], f["extra"],
                    part.degenerate,
                )
            )
            if part.degenerate:
                flagged.append((snap.window_start, crit, part.degenerate))
            parts.append(part)
        write_vertex_sectors_csv(parts, vdir / f"window_{snap.window_start:06d}.csv")
    write_timeline_csv(rows, out / "sectors.csv")
    with open(out / "degenerate.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_start", "criterion", "reason"])
        writer.writerows(flagged)
    if flagged:
        logger.warning("%d window/criterion pairs had no intermediary bin", len(flagged))


def cmd_pca(rc: RunConfig) -> None:
    corpus = _corpus(rc)
    snaps = window_snapshots(corpus, WindowSpec(rc.ws, rc.step))
    results = []
    skipped = []
    for snap in snaps:
        if snap.network.n_vertices < MIN_PCA_VERTICES:
            skipped.append(snap.window_start)
            continue
        _, X = metrics_matrix(snap.network)
        results.append(pca(X))
    for start in skipped:
        logger.warning("skipped window at %d: fewer than %d vertices", start, MIN_PCA_VERTICES)
    if not results:
        raise PcaError(f"all {len(snaps)} windows have fewer than {MIN_PCA_VERTICES} vertices")
    agg = aggregate(results)
    for i in agg.excluded:
        logger.warning("excluded a window whose constant metrics differ from the majority (#%d)", i)
    out = _outdir(rc)
    write_loadings_csv(agg, out / "loadings.csv")


def cmd_timestats(rc: RunConfig) -> None:
    corpus = _corpus(rc)
    ts = [m.timestamp for m in corpus.messages]
    out = _outdir(rc)
    stats_rows = []
    for scale in rc.scales:
        hist = activity_histogram(ts, scale)
        write_histogram_csv(hist, out / f"hist_{scale}.csv")
        if hist.peak_ratio is None:
            logger.warning("%s histogram has empty bins; peak ratio undefined", scale)
        with open(out / f"grouped_{scale}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["width", "group", "percentage"])
            for width, groups in grouped_histogram(hist, GROUP_WIDTHS[scale]).items():
                for g, pct in enumerate(groups):
                    writer.writerow([width, g, _fmt(pct)])
        try:
            st = circular_stats(ts, scale)
            stats_rows.append([scale, _fmt(st.theta_mu_rescaled), _fmt(st.var), _fmt(st.std), _fmt(st.dispersion)])
        except UndefinedMeanError as exc:
            logger.warning("%s: %s", scale, exc)
            stats_rows.append([scale, "nan", _fmt(exc.var), "inf", "inf"])
    with open(out / "stats.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scale", "theta_mu_rescaled", "var", "std", "dispersion"])
        writer.writerows(stats_rows)
    conc = activity_concentration(corpus)
    with open(out / "concentration.json", "w", encoding="utf-8") as fh:
        json.dump({k: float(v) for k, v in vars(conc).items()}, fh, indent=2)
        fh.write("\n")


def cmd_scatter(rc: RunConfig) -> None:
    _need_inputs(rc)
    rows = []
    for path in rc.inputs:
        corpus = load_corpus([path], rc.fmt, rc.limit)
        rows.append([Path(path).stem, len(corpus), corpus.n_participants, corpus.n_threads])
    out = _outdir(rc)
    with open(out / "scatter.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["list", "M", "N", "Gamma"])
        writer.writerows(rows)


def cmd_synth(rc: RunConfig, args) -> None:
    spec = SyntheticSpec(
        generator=args.generator,
        n=args.n,
        p=args.p,
        m=args.m,
        exponent=args.exponent,
        n_messages=args.messages,
        n_authors=args.authors,
        reply_prob=args.reply_prob,
        seed=rc.seed,
    )
    corpus = build_corpus(generate(spec))
    out = _outdir(rc)
    (out / "messages.jsonl").write_text(emit_jsonl(corpus), encoding="utf-8", newline="\n")
    with open(out / "synth.json", "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--input", action="append", help="input file (repeatable or comma-separated)")
    common.add_argument("--format", choices=FORMATS, help="input format (default jsonl)")
    common.add_argument("--ws", type=int, help="window size in messages (default 1000)")
    common.add_argument("--step", type=int, help="shift between windows (default ws)")
    common.add_argument("--eta", type=int, help=f"minimum vertices per bin (default {DEFAULT_ETA})")
    common.add_argument("--criterion", action="append", help="k, kin, kout, s, sin, sout or C1..C6")
    common.add_argument("--scales", help=f"comma-separated subset of {','.join(SCALES)}")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--seed", type=int, help="seed for synthetic generators (default 0)")
    common.add_argument("--limit", type=int, help="keep only the first N messages")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="netsectors",
        description="Interaction networks, Erdős sectors and activity statistics of message archives.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="write canonical JSONL and a corpus summary")
    sub.add_parser("sectors", parents=[common], help="sector fractions per window and criterion")
    sub.add_parser("pca", parents=[common], help="aggregate PCA loadings of the 14 vertex metrics")
    sub.add_parser("timestats", parents=[common], help="activity histograms and circular statistics")
    sub.add_parser("scatter", parents=[common], help="M, N and thread counts of each input")
    sp = sub.add_parser("synth", parents=[common], help="generate a synthetic message corpus")
    sp.add_argument("--generator", choices=GENERATORS, default="reply_process")
    sp.add_argument("--n", type=int, default=1000, help="vertices (graph generators)")
    sp.add_argument("--p", type=float, default=0.01, help="edge probability (erdos_renyi)")
    sp.add_argument("--m", type=int, default=5, help="links per new vertex (preferential_attachment)")
    sp.add_argument("--exponent", type=float, default=1.0, help="attachment exponent")
    sp.add_argument("--messages", type=int, default=20000, help="messages (reply_process)")
    sp.add_argument("--authors", type=int, default=1500, help="author pool (reply_process)")
    sp.add_argument("--reply-prob", type=float, default=0.8, help="mean reply tendency (reply_process)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        rc = run_config(args)
        if args.command == "synth":
            cmd_synth(rc, args)
        else:
            {
                "ingest": cmd_ingest,
                "sectors": cmd_sectors,
                "pca": cmd_pca,
                "timestats": cmd_timestats,
                "scatter": cmd_scatter,
            }[args.command](rc)
    except (ConfigError, IngestError, WindowError, PcaError, SynthError, OSError) as exc:
        print(f"netsectors {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
