"""Command line entry point: ``covaudit {evaluate,synthetic,calibrate}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import baselines as bl
from .classifiers import KINDS, ClassifierSpec
from .conformal import conformal_quantile
from .data import DataError, Schema, load_csv, make_folds, one_hot_standardize
from .ert import FoldError, clip_predictions, ert_from_predictions, out_of_fold_predictions, prediction_clip
from .scores import ScoreError, get_score
from .seeding import substream
from .synthetic import EXPERIMENTS, SyntheticConfig, run_experiment, write_artifacts

SCHEMA_VERSION = 1
DEFAULT_METRICS = "l1-ert,l2-ert,kl-ert,wcovgap,covgap,fsc,wsc"
BASELINES = ("covgap", "wcovgap", "fsc", "group-coverage", "wsc", "ssc", "eoc", "pearson", "hsic")
METRIC_DEFAULTS = {
    "covgap": {"k": None},
    "wcovgap": {"k": None},
    "fsc": {"k": None},
    "group-coverage": {"k": None},
    "wsc": {"delta": 0.25, "n_directions": 1000},
    "ssc": {"bins": 5},
    "eoc": {"bins": 5},
    "pearson": {},
    "hsic": {"max_points": 2000},
}
CONVENTIONS = {
    "eoc": "maximum absolute per-bin coverage gap over y-quantile bins",
    "pearson": "absolute correlation; 0 when a variable is constant",
    "hsic": "square root of the biased V-statistic, Gaussian kernels, median bandwidth",
}


class UsageError(Exception):
    pass


def _parse_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    return text


def _parse_pairs(items, namespaced: bool):
    out: dict = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        if namespaced:
            metric, dot, opt = key.partition(".")
            if not dot:
                raise UsageError(f"expected METRIC.KEY=VALUE, got {item!r}")
            out.setdefault(metric, {})[opt] = _parse_value(value)
        else:
            out[key] = _parse_value(value)
    return out


def _is_ert(name: str) -> bool:
    return name.endswith("-ert")


def _resolve_metrics(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    if not names:
        raise UsageError("no metrics requested")
    for name in names:
        if _is_ert(name):
            try:
                get_score(name[: -len("-ert")])
            except ScoreError as exc:
                raise UsageError(str(exc)) from None
        elif name not in BASELINES:
            raise UsageError(f"unknown metric {name!r}")
    return names


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.4f}"
    return str(v)


def _dump_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_evaluate(args) -> int:
    schema = Schema(
        z_col=args.z_col,
        y_col=args.y_col,
        size_col=args.size_col,
        alpha_col=args.alpha_col,
        categorical=tuple(args.categorical or ()),
        numeric=tuple(args.numeric or ()),
        ignore=tuple(args.ignore or ()),
    )
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    metrics = _resolve_metrics(args.metrics)
    overrides = _parse_pairs(args.option, namespaced=True)
    for metric, opts in overrides.items():
        if metric not in METRIC_DEFAULTS:
            raise UsageError(f"options given for unknown metric {metric!r}")
        bad = set(opts) - set(METRIC_DEFAULTS[metric])
        if bad:
            raise UsageError(f"unknown option(s) for {metric}: {sorted(bad)}")
    spec = ClassifierSpec(args.classifier, _parse_pairs(args.classifier_param, False), substream(args.seed, "classifier"))

    ds = load_csv(args.data, schema)
    target = 1.0 - args.alpha
    report_metrics: dict = {}
    global_warnings: list[str] = []

    ert_names = [m for m in metrics if _is_ert(m)]
    proxy = None
    fold_seed = substream(args.seed, "folds")
    if ert_names:
        if args.folds < 2 or args.folds > ds.m:
            raise UsageError(f"--folds must lie in 2..{ds.m}")
        folds = make_folds(ds.m, args.folds, fold_seed)
        proxy, infos = out_of_fold_predictions(ds, spec, folds, args.alpha)
        notes = sorted({i["note"] for i in infos if i.get("note")})
        targets = ds.targets(args.alpha)
        for name in ert_names:
            score = get_score(name[: -len("-ert")])
            eps = prediction_clip(spec, score)
            rep = ert_from_predictions(score, clip_predictions(proxy, eps), ds.z, targets, folds)
            entry = rep.to_dict()
            entry["options"] = {
                "score": score.name,
                "per_row_target": ds.alpha_row is not None,
                "prediction_clip": eps,
                "std_err_kind": "iid plug-in: sd(per-sample terms) / sqrt(m)",
            }
            entry["warnings"] = list(notes)
            report_metrics[name] = entry

    design = groups_cache = None
    for name in metrics:
        if _is_ert(name):
            continue
        opts = {**METRIC_DEFAULTS[name], **overrides.get(name, {})}
        entry = {"value": None, "options": opts, "warnings": []}
        if name in CONVENTIONS:
            entry["options"]["convention"] = CONVENTIONS[name]
        if name in ("ssc", "pearson", "hsic") and ds.set_size is None:
            msg = f"{name} skipped: no set-size column"
        elif name == "eoc" and ds.y is None:
            msg = f"{name} skipped: no response column"
        else:
            msg = None
        if msg:
            entry["warnings"].append(msg)
            global_warnings.append(msg)
            report_metrics[name] = entry
            continue
        if design is None:
            design, _ = one_hot_standardize(ds)
            groups_cache = {}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if name in ("covgap", "wcovgap", "fsc", "group-coverage"):
                k = opts["k"]
                if k not in groups_cache:
                    groups_cache[k] = bl.kmeans_groups(design, k, seed=substream(args.seed, "groups"))
                g = groups_cache[k]
                entry["options"]["groups"] = g.group_count
                if name == "covgap":
                    entry["value"] = bl.covgap(ds.z, g, target)
                elif name == "wcovgap":
                    entry["value"] = bl.wcovgap(ds.z, g, target)
                elif name == "fsc":
                    entry["value"] = bl.fsc(ds.z, g)
                else:
                    cov, counts = bl.group_coverages(ds.z, g)
                    entry["value"] = None
                    entry["groups"] = [{"coverage": float(c), "count": int(n)} for c, n in zip(cov, counts)]
            elif name == "wsc":
                entry["value"] = bl.wsc(design, ds.z, opts["delta"], opts["n_directions"], substream(args.seed, "wsc"))
            elif name == "ssc":
                entry["value"] = bl.ssc(ds.z, ds.set_size, target, opts["bins"])
            elif name == "eoc":
                entry["value"] = bl.eoc(ds.z, ds.y, target, opts["bins"])
            elif name == "pearson":
                entry["value"] = bl.pearson(ds.z, ds.set_size)
            elif name == "hsic":
                entry["value"] = bl.hsic(ds.z, ds.set_size, opts["max_points"], substream(args.seed, "subsample"))
        entry["warnings"].extend(str(w.message) for w in caught)
        report_metrics[name] = entry

    report = {
        "schema_version": SCHEMA_VERSION,
        "run": {
            "data": str(args.data),
            "rows": ds.m,
            "alpha": args.alpha,
            "seed": args.seed,
            "folds": args.folds,
            "fold_seed": fold_seed,
            "classifier": spec.to_dict(),
            "metrics": metrics,
        },
        "metrics": report_metrics,
        "warnings": global_warnings,
    }
    if args.out:
        _dump_json(report, Path(args.out))
    if args.proxy_out:
        if proxy is None:
            raise UsageError("--proxy-out needs at least one ERT metric")
        targets = ds.targets(args.alpha)
        path = Path(args.proxy_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "z", "target", "proxy_coverage"])
            for i in range(ds.m):
                w.writerow([i, int(ds.z[i]), repr(float(targets[i])), repr(float(proxy[i]))])

    for msg in global_warnings:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"{'metric':<16}{'value':>10}{'std_err':>10}{'over':>10}{'under':>10}")
    for name, e in report_metrics.items():
        print(f"{name:<16}{_fmt(e.get('value')):>10}{_fmt(e.get('std_err')):>10}{_fmt(e.get('over')):>10}{_fmt(e.get('under')):>10}")
    return 0


def cmd_calibrate(args) -> int:
    path = Path(args.scores)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    try:
        scores = np.array([float(ln) for ln in lines])
    except ValueError as exc:
        raise DataError(f"bad score: {exc}") from None
    cal = conformal_quantile(scores, args.alpha)
    q = "inf" if math.isinf(cal.q_hat) else repr(cal.q_hat)
    print(f"q_hat={q} k={cal.k} n={cal.n_cal}")
    return 0


def cmd_synthetic(args) -> int:
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    kwargs = dict(
        experiment=args.experiment,
        repeats=args.repeats,
        m_test=args.m_test,
        n_cal=args.n_cal,
        alpha=args.alpha,
        seed=args.seed,
        classifier=args.classifier,
        folds=args.folds,
        wsc_directions=args.wsc_directions,
        mc_draws=args.mc_draws,
        compare=tuple(c for c in (args.compare or "").split(",") if c),
    )
    if args.curve_sizes:
        kwargs["curve_sizes"] = tuple(int(s) for s in args.curve_sizes.split(","))
    for c in kwargs["compare"]:
        if c not in KINDS:
            raise UsageError(f"unknown classifier {c!r}")
    try:
        cfg = SyntheticConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_experiment(cfg)
    written = write_artifacts(result, args.out_dir)
    if cfg.experiment == "table3":
        print(f"{'metric':<22}{'standard_cp':>18}{'oracle':>18}")
        for metric, s in result["table"]["standard_cp"].items():
            o = result["table"]["oracle"][metric]
            print(f"{metric:<22}{s['mean']:>10.4f} ({s['std']:.3f}){o['mean']:>10.4f} ({o['std']:.3f})")
    elif cfg.experiment == "fig1":
        for arm, res in result["arms"].items():
            print(arm, " ".join(f"{k}={v:.4f}" for k, v in res["metrics"].items()))
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covaudit", description="Conditional coverage diagnostics")
    sub = parser.add_subparsers(dest="cmd", required=True)

    ev = sub.add_parser("evaluate", help="audit coverage indicators stored in a CSV file")
    ev.add_argument("--data", required=True)
    ev.add_argument("--z-col", required=True)
    ev.add_argument("--y-col")
    ev.add_argument("--size-col")
    ev.add_argument("--alpha-col")
    ev.add_argument("--categorical", nargs="*", help="force these feature columns to be categorical")
    ev.add_argument("--numeric", nargs="*", help="force these feature columns to be numeric")
    ev.add_argument("--ignore", nargs="*", help="columns to drop")
    ev.add_argument("--alpha", type=float, default=0.1)
    ev.add_argument("--metrics", default=DEFAULT_METRICS)
    ev.add_argument("--classifier", choices=KINDS, default="gbdt")
    ev.add_argument("--classifier-param", action="append", metavar="KEY=VALUE")
    ev.add_argument("--option", action="append", metavar="METRIC.KEY=VALUE")
    ev.add_argument("--folds", type=int, default=5)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out")
    ev.add_argument("--proxy-out")
    ev.set_defaults(func=cmd_evaluate)

    syn = sub.add_parser("synthetic", help="run the synthetic benchmarks")
    syn.add_argument("--experiment", choices=EXPERIMENTS, default="table3")
    syn.add_argument("--repeats", type=int, default=10)
    syn.add_argument("--m-test", type=int, default=1500)
    syn.add_argument("--n-cal", type=int, default=3000)
    syn.add_argument("--alpha", type=float, default=0.1)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--classifier", choices=KINDS, default="gbdt")
    syn.add_argument("--folds", type=int, default=5)
    syn.add_argument("--wsc-directions", type=int, default=1000)
    syn.add_argument("--mc-draws", type=int, default=300_000)
    syn.add_argument("--compare", help="extra classifiers for L1-ERT on the same folds, e.g. partition,forest")
    syn.add_argument("--curve-sizes", help="test sizes for the fig4 experiment, e.g. 100,300,1000")
    syn.add_argument("--out-dir", required=True)
    syn.set_defaults(func=cmd_synthetic)

    cal = sub.add_parser("calibrate", help="split-conformal threshold from a score file")
    cal.add_argument("--scores", required=True)
    cal.add_argument("--alpha", type=float, default=0.1)
    cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, UsageError, ScoreError, FoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
