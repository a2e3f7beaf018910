"""Command-line entry point.

Subcommands: ingest, synth, stats, distribution, pcr, ctr, train,
predict, evaluate.  All randomness flows from config seeds; every
output directory gets a manifest sufficient to rerun the step.

Exit codes: 0 success, 2 usage, 3 missing file, 4 validation error,
5 runtime failure (e.g. training divergence).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .collaboration import build_collab_graph, top_collaborators
from .competitors import top_competitors
from .config import ConfigError, RunConfig, load_config
from .corpus import CorpusError, EmptyCorpusError, export_corpus, ingest, load_corpus
from .distribution import distribution_matrix
from .evaluation import (
    SplitError,
    baseline_lr,
    baseline_persistence,
    evaluate,
    make_split,
    oracle_forecaster,
)
from .model import TrainingDivergedError, forecast, load_model, save_model, train
from .stats import stats as corpus_stats
from .synth import SynthConfigError, synth_corpus

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5


def _limit_threads(n: int) -> None:
    if n <= 0:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def _write_manifest(outdir: Path, command: str, cfg: RunConfig, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "version": __version__,
    }
    manifest.update(extra or {})
    (outdir / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _emit_rows(rows: list[tuple], fmt: str) -> None:
    if fmt == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerows(rows)
    else:
        widths = [max(len(str(r[c])) for r in rows) for c in range(len(rows[0]))]
        for r in rows:
            print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip())


def _cfg_from_args(args) -> RunConfig:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = int(args.seed)
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = int(args.threads)
    cfg = load_config(args.config, overrides)
    _limit_threads(cfg.threads)
    return cfg


def _cmd_ingest(args) -> int:
    cfg = _cfg_from_args(args)
    level = args.level or cfg.level
    min_patents = args.min_patents if args.min_patents is not None else cfg.min_patents
    index = ingest(args.input, cpc_level=level, min_patents=min_patents)
    outdir = Path(args.out)
    export_corpus(index, outdir)
    _write_manifest(outdir, "ingest", cfg, {"M": index.M, "N": index.N, "T": index.T})
    print(f"ingested {len(index.patents)} patents: M={index.M} N={index.N} T={index.T}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = _cfg_from_args(args)
    index = synth_corpus(cfg.synth_config(), cfg.seed)
    outdir = Path(args.out)
    export_corpus(index, outdir)
    _write_manifest(outdir, "synth", cfg, {"M": index.M, "N": index.N, "T": index.T})
    print(f"generated {len(index.patents)} patents: M={index.M} N={index.N} T={index.T}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    _cfg_from_args(args)
    index = load_corpus(args.corpus)
    report = corpus_stats(index)
    _emit_rows(report.to_rows(), args.format)
    return EXIT_OK


def _cmd_distribution(args) -> int:
    _cfg_from_args(args)
    index = load_corpus(args.corpus)
    rows: list[tuple] = [("company", "technology", "value")]
    companies = [args.company] if args.company else list(index.companies)
    matrix = distribution_matrix(index, args.year)
    for company in companies:
        if company not in index.companies:
            raise KeyError(f"unknown company {company!r}")
        row = matrix.values[index.companies.index(company)]
        for j, tech in enumerate(index.technologies):
            rows.append((company, tech, f"{row[j]:.6f}"))
    _emit_rows(rows, args.format)
    return EXIT_OK


def _cmd_pcr(args) -> int:
    cfg = _cfg_from_args(args)
    index = load_corpus(args.corpus)
    alpha = tuple(float(x) for x in args.alpha.split(",")) if args.alpha else cfg.pcr_alpha
    if len(alpha) != 3:
        raise ConfigError("alpha must have exactly 3 components")
    result = top_competitors(index, args.company, args.year, args.m, alpha)
    rows: list[tuple] = [("competitor", "score", "weight")]
    for comp, score, weight in result.entries:
        rows.append((comp, f"{score:.6f}", f"{weight:.6f}"))
    _emit_rows(rows, args.format)
    return EXIT_OK


def _cmd_ctr(args) -> int:
    _cfg_from_args(args)
    index = load_corpus(args.corpus)
    graph = build_collab_graph(index, args.year)
    if args.format == "edgelist":
        for (a, b), w in sorted(graph.weights.items()):
            print(f"{a}\t{b}\t{w:.6f}")
        return EXIT_OK
    rows: list[tuple] = [("technology", "collaborator", "weight")]
    techs = [args.tech] if args.tech else list(index.technologies)
    for j in techs:
        for other, w in top_collaborators(graph, j, args.n):
            rows.append((j, other, f"{w:.6f}"))
    _emit_rows(rows, args.format)
    return EXIT_OK


def _parse_period(text: str) -> tuple[int, int]:
    try:
        y0, y1 = text.split("-")
        return int(y0), int(y1)
    except ValueError as e:
        raise ConfigError(f"period must look like 1995-2000, got {text!r}") from e


def _cmd_train(args) -> int:
    cfg = _cfg_from_args(args)
    index = load_corpus(args.corpus)
    if args.period:
        split = make_split(index, *_parse_period(args.period))
        input_years, target_year = list(split.train_input_years), split.train_target_year
    else:
        input_years, target_year = list(index.years)[:-1], index.year_max
    model, history = train(index, input_years, target_year, cfg.train_config())
    outdir = Path(args.out)
    save_model(model, outdir)
    _write_manifest(
        outdir,
        "train",
        cfg,
        {"input_years": input_years, "target_year": target_year, "final_loss": history[-1]},
    )
    print(f"trained {cfg.epochs} epochs: loss {history[0]:.6f} -> {history[-1]:.6f}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    _cfg_from_args(args)
    index = load_corpus(args.corpus)
    model = load_model(args.model)
    rankings = forecast(model, index)
    if args.company not in rankings:
        raise KeyError(f"unknown company {args.company!r}")
    for tech, score in rankings[args.company][: args.topk]:
        print(f"{tech}\t{score:.6f}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _cfg_from_args(args)
    index = load_corpus(args.corpus)
    split = make_split(index, *_parse_period(args.period))
    ks = tuple(int(k) for k in args.k.split(",")) if args.k else cfg.ks
    ks = tuple(k for k in ks if k <= index.N) or (min(cfg.ks[0], index.N),)
    if args.model == "persistence":
        forecaster = baseline_persistence
    elif args.model == "lr":
        forecaster = baseline_lr
    elif args.model == "oracle":
        forecaster = oracle_forecaster
    else:
        model_dir = Path(args.model)
        if not model_dir.exists():
            raise FileNotFoundError(f"model directory not found: {model_dir}")
        loaded = load_model(model_dir)

        def forecaster(idx, sp, _model=loaded):
            from .distribution import distribution_matrix as dm
            from .evaluation import RankingResult

            rankings = forecast(_model, idx, list(sp.test_input_years))
            truth = dm(idx, sp.test_target_year).values
            return {
                c: RankingResult(company=c, ranked=tuple(rankings[c]), truth=truth[i])
                for i, c in enumerate(idx.companies)
            }

    report = evaluate(forecaster, index, split, ks)
    if args.format == "json":
        print(
            json.dumps(
                {"macro": {str(k): v for k, v in report.macro.items()}, "excluded": report.excluded},
                sort_keys=True,
            )
        )
    else:
        rows: list[tuple] = [("K", "macro_ndcg")]
        rows += [(k, f"{report.macro[k]:.6f}") for k in report.ks]
        rows.append(("excluded_companies", report.excluded))
        _emit_rows(rows, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="techtrace")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("ingest", help="index a line-delimited patent file")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--level", choices=["section", "class", "subclass", "group"], default=None)
    p.add_argument("--min-patents", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a planted synthetic corpus")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("stats", help="corpus statistics")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("distribution", help="technology distribution rows")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--company", default=None)
    p.add_argument("--format", choices=["table", "csv"], default="csv")
    p.set_defaults(fn=_cmd_distribution)

    p = sub.add_parser("pcr", help="top competitors of a company")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--company", required=True)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--alpha", default=None, help="a1,a2,a3")
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.set_defaults(fn=_cmd_pcr)

    p = sub.add_parser("ctr", help="technology collaboration graph")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--tech", default=None)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--format", choices=["table", "csv", "edgelist"], default="table")
    p.set_defaults(fn=_cmd_ctr)

    p = sub.add_parser("train", help="train the forecasting model")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--period", default=None, help="y0-y1 train window; default all but last year")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("predict", help="rank technologies for one company")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--company", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("evaluate", help="NDCG@K of a model or baseline")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="model dir, or persistence|lr|oracle")
    p.add_argument("--period", required=True, help="y0-y1")
    p.add_argument("--k", default=None, help="comma-separated cutoffs")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.set_defaults(fn=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(f"error: missing-file: {e}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, SynthConfigError, SplitError, EmptyCorpusError, CorpusError, KeyError, ValueError) as e:
        msg = e.args[0] if e.args else e
        print(f"error: validation: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingDivergedError as e:
        print(f"error: runtime: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
