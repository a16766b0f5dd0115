"""Command-line driver.

Exit codes: 0 success, 1 usage or configuration error, 2 partial data error
(the outputs are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional

from . import __version__
from .baselines import P_CORR_SWEEP, run_majority, run_seq_of_sets, upper_bound_evaluation
from .corpus import dataset_fingerprint, ingest, load_normalized, write_normalized
from .devrec import POLICIES, run_devrec
from .featurize import URGENCY_MODES
from .learners.forest import DEFAULT_HYPERPARAMS
from .metrics import mann_whitney_u
from .synth import SynthConfig, neighbor_bug_correlation, synth_corpus
from .urgency import run_urgency

log = logging.getLogger("pkgpulse")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2

URGENCY_DEFAULTS = {"test_distribution": None, "mode": "auto", "K_train": 5, "filter_window": 10,
                    "grid": None, "neighbor_lag": 0, "has_neighbors": False, "k": 25}
DEVREC_DEFAULTS = {"test_distribution": None, "policy": "main", "K": 5, "model": None,
                   "features": None, "epochs": 10, "lr": 0.005, "hidden": 16, "l2": 1e-4,
                   "batch": "pair", "alpha": 1.0, "beta": 0.0}
BASELINE_DEFAULTS = {"test_distribution": None, "baseline": "upper_bound", "policy": "main", "K": 5,
                     "K_maj": 1, "runs": 20, "gamma": 0.5, "history": 5, "p_grid": list(P_CORR_SWEEP)}


class UsageError(Exception):
    pass


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(path: Optional[str], defaults: dict) -> dict:
    cfg = {}
    if path:
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - set(defaults))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return {**defaults, **cfg}


def _load_dataset(path: Optional[str]):
    if not path:
        raise UsageError("--data is required")
    try:
        return load_normalized(path), dataset_fingerprint(path)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc


def _test_index(corpus, name) -> int:
    if name is None:
        return corpus.T
    try:
        return corpus.index_of(name)
    except KeyError:
        known = ", ".join(d.name for d in corpus.distributions)
        raise UsageError(f"unknown distribution {name!r} (known: {known})") from None


def run_dir_for(out: str, cmd: str, config: dict, seed: int, fingerprint: str) -> Path:
    key = sha256_text(canonical({"cmd": cmd, "config": config, "seed": seed, "dataset": fingerprint}))
    return Path(out) / f"{cmd}-{key[:16]}"


def _tsv(header, rows) -> str:
    return "".join("\t".join(str(c) for c in r) + "\n" for r in [header, *rows])


def publish(run_dir: Path, report: dict, tables: dict) -> str:
    """Write report.json plus TSV tables into ``run_dir`` exactly once.

    An existing run directory is never touched; its report hash is returned.
    """
    target = run_dir / "report.json"
    if target.is_file():
        log.info("run %s exists; leaving it untouched", run_dir)
        return hashlib.sha256(target.read_bytes()).hexdigest()
    run_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{run_dir.name}-", dir=run_dir.parent))
    try:
        body = json.dumps(report, sort_keys=True, indent=2) + "\n"
        (tmp / "report.json").write_text(body, encoding="utf-8")
        for name, (header, rows) in tables.items():
            (tmp / name).write_text(_tsv(header, rows), encoding="utf-8")
        os.replace(tmp, run_dir)
    except OSError:
        shutil.rmtree(tmp, ignore_errors=True)
        if not target.is_file():
            raise
    return hashlib.sha256(target.read_bytes()).hexdigest()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x)) if isinstance(x, float) else str(x)


# --------------------------------------------------------------------------
# commands

def cmd_ingest(args) -> int:
    if not args.data or not args.out:
        raise UsageError("ingest needs --data RAW_DIR and --out OUT_DIR")
    try:
        result = ingest(args.data)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(f"bad releases.tsv: {exc}") from exc
    manifest = write_normalized(result.corpus, args.out, result.issues, result.report)
    print(json.dumps(manifest["counts"], sort_keys=True))
    if result.issues:
        log.warning("%d parse issues; see %s", len(result.issues), Path(args.out) / "parse_errors.jsonl")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_synth(args) -> int:
    if not args.out:
        raise UsageError("synth needs --out OUT_DIR")
    cfg = load_config(args.config, {k: v for k, v in vars(SynthConfig()).items() if k != "seed"})
    for key in ("T", "n_packages", "n_devs", "coupling"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["T"] < 8 or cfg["n_packages"] < 20:
        raise UsageError("synth needs T >= 8 and n_packages >= 20")
    corpus = synth_corpus(SynthConfig(seed=args.seed, **cfg))
    report = {"generator": {**cfg, "seed": args.seed},
              "neighbor_bug_correlation": neighbor_bug_correlation(corpus)}
    manifest = write_normalized(corpus, args.out, report={})
    manifest["generator"] = report
    Path(args.out, "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                                               encoding="utf-8")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_urgency(args) -> int:
    cfg = load_config(args.config, URGENCY_DEFAULTS)
    if cfg["mode"] not in URGENCY_MODES:
        raise UsageError(f"mode must be one of {URGENCY_MODES}")
    corpus, fp = _load_dataset(args.data)
    t = _test_index(corpus, cfg["test_distribution"])
    grid = dict(cfg["grid"] or {k: [v] for k, v in DEFAULT_HYPERPARAMS.items()})
    grid["random_state"] = [args.seed]
    try:
        run = run_urgency(corpus, t, cfg["mode"], cfg["K_train"], cfg["filter_window"], grid,
                          cfg["neighbor_lag"], cfg["has_neighbors"], cfg["k"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    g_rank, p_rank = run.ranks()
    errors = run.rank_errors()
    report = {"kind": "urgency", "version": __version__, "config": cfg, "seed": args.seed,
              "dataset": fp, "test_distribution": run.test_distribution.name,
              "feature_names": list(run.feature_names), "hyperparams": run.hyperparams,
              "metrics": run.metrics, "samples": {s: errors[s] for s in run.packages},
              "grid": [{"params": row["params"], "score": None if math.isnan(row["score"]) else row["score"]}
                       for row in run.grid_table]}
    rows = [(s, _fmt(run.predictions[s]), run.gold[s], _fmt(p_rank[s]), _fmt(g_rank[s]))
            for s in sorted(run.packages, key=lambda s: (-run.predictions[s], s))]
    tables = {"predictions.tsv": (("package", "predicted", "gold", "pred_rank", "gold_rank"), rows)}
    return _finish(args, "urgency", cfg, fp, report, tables)


def _ranking_rows(rankings: dict) -> list:
    rows = []
    for s in sorted(rankings):
        ranked = rankings[s]
        scores = getattr(ranked, "scores", None) or [""] * len(ranked)
        for pos, (d, sc) in enumerate(zip(ranked, scores), start=1):
            rows.append((s, pos, d, _fmt(sc)))
    return rows


def _devrec_report(kind, cfg, args, fp, corpus, t, ev, extra) -> tuple:
    report = {"kind": kind, "version": __version__, "config": cfg, "seed": args.seed, "dataset": fp,
              "test_distribution": corpus.at(t).distribution.name,
              "metrics": {"mrr": ev.mrr, "coverage": ev.coverage, "n_packages": ev.n_packages},
              "samples": dict(sorted(ev.reciprocal_ranks.items())), **extra}
    rr = ("rr.tsv", (("package", "reciprocal_rank"), sorted(ev.reciprocal_ranks.items())))
    return report, dict([rr])


def cmd_devrec(args) -> int:
    cfg = load_config(args.config, DEVREC_DEFAULTS)
    if cfg["policy"] not in POLICIES:
        raise UsageError(f"policy must be one of {POLICIES}")
    corpus, fp = _load_dataset(args.data)
    t = _test_index(corpus, cfg["test_distribution"])
    kw = {k: cfg[k] for k in ("model", "features", "epochs", "lr", "hidden", "l2", "batch", "alpha", "beta")}
    try:
        model, recs, ev = run_devrec(corpus, t, cfg["policy"], cfg["K"], seed=args.seed, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report, tables = _devrec_report("devrec", cfg, args, fp, corpus, t, ev,
                                    {"model": model.to_json()})
    tables["rankings.tsv"] = (("package", "rank", "developer", "score"),
                              _ranking_rows({r.package: r.ranked for r in recs}))
    return _finish(args, "devrec", cfg, fp, report, tables)


def cmd_baseline(args) -> int:
    cfg = load_config(args.config, BASELINE_DEFAULTS)
    if cfg["policy"] not in POLICIES:
        raise UsageError(f"policy must be one of {POLICIES}")
    corpus, fp = _load_dataset(args.data)
    t = _test_index(corpus, cfg["test_distribution"])
    if t < 2:
        raise UsageError("baselines need a test distribution after the first")
    name, extra, rankings = cfg["baseline"], {}, {}
    if name == "upper_bound":
        ev = upper_bound_evaluation(corpus, cfg["policy"], cfg["K"], t)
    elif name == "majority":
        rankings, ev = run_majority(corpus, cfg["policy"], cfg["K"], t, cfg["K_maj"])
    elif name == "seq_of_sets":
        sweep = run_seq_of_sets(corpus, t, cfg["runs"], args.seed, cfg["gamma"], cfg["history"], cfg["p_grid"])
        ev, rankings = sweep.evaluation, sweep.rankings
        extra = {"best_p_corr": sweep.best_p, "sweep": {str(p): v for p, v in sweep.table.items()}}
    else:
        raise UsageError(f"unknown baseline {name!r}")
    report, tables = _devrec_report("baseline", cfg, args, fp, corpus, t, ev, extra)
    if rankings:
        tables["rankings.tsv"] = (("package", "rank", "developer", "score"), _ranking_rows(rankings))
    return _finish(args, "baseline", cfg, fp, report, tables)


def _read_report(path: str) -> dict:
    p = Path(path)
    p = p / "report.json" if p.is_dir() else p
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read run report {p}: {exc}") from exc


def compare_reports(a: dict, b: dict) -> dict:
    """Metric deltas (b - a) and a Mann-Whitney U test on the per-package
    samples: absolute rank errors for urgency runs, reciprocal ranks otherwise."""
    family = {"urgency": "urgency", "devrec": "devrec", "baseline": "devrec"}
    if family.get(a.get("kind")) != family.get(b.get("kind")) or a.get("kind") not in family:
        raise UsageError(f"cannot compare {a.get('kind')!r} with {b.get('kind')!r} runs")
    deltas = {}
    for key in sorted(set(a["metrics"]) & set(b["metrics"])):
        va, vb = a["metrics"][key], b["metrics"][key]
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool):
            deltas[key] = {"a": va, "b": vb, "delta": vb - va}
    sa, sb = list(a["samples"].values()), list(b["samples"].values())
    test = None
    if sa and sb:
        u = mann_whitney_u(sa, sb)
        test = {"u": u.u, "p": u.p, "method": u.method, "n_a": len(sa), "n_b": len(sb),
                "sample": "abs_rank_error" if family[a["kind"]] == "urgency" else "reciprocal_rank"}
    return {"kind": "eval", "family": family[a["kind"]], "deltas": deltas, "mann_whitney": test}


def cmd_eval(args) -> int:
    if len(args.runs) != 2:
        raise UsageError("eval needs exactly two run directories")
    a, b = (_read_report(r) for r in args.runs)
    result = compare_reports(a, b)
    result["runs"] = {"a": {"kind": a["kind"], "config": a["config"], "seed": a.get("seed")},
                      "b": {"kind": b["kind"], "config": b["config"], "seed": b.get("seed")}}
    rows = [(k, _fmt(v["a"]), _fmt(v["b"]), _fmt(v["delta"])) for k, v in result["deltas"].items()]
    tables = {"deltas.tsv": (("metric", "a", "b", "delta"), rows)}
    fp = sha256_text(canonical([a, b]))
    return _finish(args, "eval", {}, fp, result, tables)


def _finish(args, cmd, cfg, fp, report, tables) -> int:
    if not args.out:
        print(json.dumps(report.get("metrics") or report.get("deltas"), sort_keys=True))
        return EXIT_OK
    run_dir = run_dir_for(args.out, cmd, cfg, args.seed, fp)
    digest = publish(run_dir, report, tables)
    print(f"{run_dir}\t{digest}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="dataset directory (raw for ingest, normalized otherwise)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pkgpulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)
    sub.add_parser("ingest", parents=[common], help="normalize a raw corpus").set_defaults(fn=cmd_ingest)
    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--T", type=int)
    p.add_argument("--n-packages", dest="n_packages", type=int)
    p.add_argument("--n-devs", dest="n_devs", type=int)
    p.add_argument("--coupling", type=float)
    p.set_defaults(fn=cmd_synth)
    sub.add_parser("urgency", parents=[common], help="bug urgency ranking run").set_defaults(fn=cmd_urgency)
    sub.add_parser("devrec", parents=[common], help="developer recommendation run").set_defaults(fn=cmd_devrec)
    sub.add_parser("baseline", parents=[common], help="devrec baseline run").set_defaults(fn=cmd_baseline)
    p = sub.add_parser("eval", parents=[common], help="compare two run reports")
    p.add_argument("runs", nargs="*", metavar="RUN")
    p.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"pkgpulse {args.cmd}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
