"""Synthetic heteroskedastic benchmarks with known conditional coverage.

Two generators:

* 1-D: ``X ~ U[-1, 1]``, ``Y ~ N(3 sin X + exp X, sigma(X))``
* 8-D: ``X ~ U[-1, 1]^8``, ``Y ~ N(0, sigma(X[:, 0]))``

with ``sigma(x) = 0.5 + |x| + x**2`` a standard deviation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from . import baselines as bl
from .classifiers import ClassifierSpec
from .conformal import conformal_quantile
from .data import Dataset, make_folds, one_hot_standardize
from .ert import clip_predictions, ert_from_predictions, ert_oracle, out_of_fold_predictions, prediction_clip
from .scores import get_score
from .seeding import rng, substream

EXPERIMENTS = ("table3", "fig1", "fig4")
ARMS = ("standard_cp", "oracle")


def sigma(x):
    x = np.asarray(x, dtype=float)
    return 0.5 + np.abs(x) + x**2


def mean_1d(x):
    x = np.asarray(x, dtype=float)
    return 3.0 * np.sin(x) + np.exp(x)


def gen_1d(n: int, seed: int):
    g = np.random.default_rng(seed)
    x = g.uniform(-1.0, 1.0, n)
    y = mean_1d(x) + sigma(x) * g.standard_normal(n)
    return x, y


def gen_8d(n: int, seed: int, d: int = 8):
    g = np.random.default_rng(seed)
    x = g.uniform(-1.0, 1.0, (n, d))
    y = sigma(x[:, 0]) * g.standard_normal(n)
    return x, y


def normal_cdf(x):
    return ndtr(x)


def normal_quantile(p):
    return ndtri(p)


def _first(x):
    x = np.asarray(x, dtype=float)
    return x[:, 0] if x.ndim == 2 else x


def oracle_set_8d(x, alpha: float):
    """True conditional ``alpha/2`` and ``1 - alpha/2`` quantiles of Y given X."""
    c = normal_quantile(1.0 - alpha / 2.0) * sigma(_first(x))
    return -c, c


def true_coverage_standard_cp(q_hat: float, x):
    """P(|Y| <= q_hat | X = x) for the 8-D generator."""
    if np.isinf(q_hat):
        return np.ones(np.shape(_first(x)))
    return 2.0 * normal_cdf(q_hat / sigma(_first(x))) - 1.0


@dataclass(frozen=True)
class SyntheticConfig:
    experiment: str = "table3"
    n_cal: int = 3000
    m_test: int = 1500
    alpha: float = 0.1
    seed: int = 0
    repeats: int = 10
    classifier: str = "gbdt"
    folds: int = 5
    wsc_delta: float = 0.25
    wsc_directions: int = 1000
    bins: int = 5
    hsic_max_points: int = 2000
    mc_draws: int = 300_000
    compare: tuple[str, ...] = ()
    curve_sizes: tuple[int, ...] = (100, 300, 1000, 3000)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for name in ("n_cal", "m_test", "repeats"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


ERT_SCORES = ("l1", "l2", "kl")


@dataclass
class ArmData:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    size: np.ndarray
    true_p: np.ndarray


def table3_arms(cfg: SyntheticConfig, rep_seed: int, m_test: int | None = None) -> tuple[dict[str, ArmData], float]:
    """Draw one calibration + test sample and build both arms on the test rows."""
    m_test = cfg.m_test if m_test is None else m_test
    _, y_cal = gen_8d(cfg.n_cal, substream(rep_seed, "calibration"))
    q_hat = conformal_quantile(np.abs(y_cal), cfg.alpha, "abs").q_hat
    x, y = gen_8d(m_test, substream(rep_seed, "test"))
    lo, hi = oracle_set_8d(x, cfg.alpha)
    arms = {
        "standard_cp": ArmData(
            x, y, (np.abs(y) <= q_hat).astype(np.int64), np.full(m_test, 2.0 * q_hat),
            true_coverage_standard_cp(q_hat, x),
        ),
        "oracle": ArmData(
            x, y, ((y >= lo) & (y <= hi)).astype(np.int64), hi - lo, np.full(m_test, 1.0 - cfg.alpha),
        ),
    }
    return arms, q_hat


def theoretical_erts(cfg: SyntheticConfig, q_hat: float, rep_seed: int) -> dict[str, dict[str, float]]:
    """Monte-Carlo ERT references from the true conditional coverage."""
    x1 = rng(rep_seed, "theory").uniform(-1.0, 1.0, cfg.mc_draws)
    target = 1.0 - cfg.alpha
    p_std = true_coverage_standard_cp(q_hat, x1)
    out = {"standard_cp": {}, "oracle": {}}
    for name in ERT_SCORES:
        score = get_score(name)
        out["standard_cp"][name] = ert_oracle(score, target, p_std)
        out["oracle"][name] = ert_oracle(score, target, np.full(1, target))
    return out


def evaluate_arm(cfg: SyntheticConfig, arm: ArmData, rep_seed: int, with_baselines: bool = True) -> dict:
    """All metrics for one arm of one repeat, plus out-of-fold proxies."""
    target = 1.0 - cfg.alpha
    ds = Dataset(features=arm.x, z=arm.z, y=arm.y, set_size=arm.size)
    folds = make_folds(ds.m, cfg.folds, substream(rep_seed, "folds"))
    metrics: dict[str, float] = {}
    errors: dict[str, float] = {}
    proxies: dict[str, np.ndarray] = {}
    spec = ClassifierSpec(cfg.classifier, seed=substream(rep_seed, "classifier"))
    h, _ = out_of_fold_predictions(ds, spec, folds, cfg.alpha)
    proxies[cfg.classifier] = h
    for name in ERT_SCORES:
        score = get_score(name)
        rep = ert_from_predictions(score, clip_predictions(h, prediction_clip(spec, score)), ds.z, target, folds)
        metrics[f"{name}-ert"] = rep.value
        errors[f"{name}-ert"] = rep.std_err
        metrics[f"{name}-ert-over"] = rep.over
        metrics[f"{name}-ert-under"] = rep.under
    for kind in cfg.compare:
        cspec = ClassifierSpec(kind, seed=substream(rep_seed, "classifier"))
        hc, _ = out_of_fold_predictions(ds, cspec, folds, cfg.alpha)
        proxies[kind] = hc
        rep = ert_from_predictions(get_score("l1"), hc, ds.z, target, folds)
        metrics[f"l1-ert[{kind}]"] = rep.value
        errors[f"l1-ert[{kind}]"] = rep.std_err
    if with_baselines:
        design, _ = one_hot_standardize(ds)
        groups = bl.kmeans_groups(design, seed=substream(rep_seed, "groups"))
        metrics["fsc"] = bl.fsc(ds.z, groups)
        metrics["covgap"] = bl.covgap(ds.z, groups, target)
        metrics["wcovgap"] = bl.wcovgap(ds.z, groups, target)
        metrics["wsc"] = bl.wsc(design, ds.z, cfg.wsc_delta, cfg.wsc_directions, substream(rep_seed, "wsc"))
        metrics["eoc"] = bl.eoc(ds.z, ds.y, target, cfg.bins)
        metrics["ssc"] = bl.ssc(ds.z, ds.set_size, target, cfg.bins)
        metrics["hsic"] = bl.hsic(ds.z, ds.set_size, cfg.hsic_max_points, substream(rep_seed, "subsample"))
        metrics["pearson"] = bl.pearson(ds.z, ds.set_size)
        metrics["coverage"] = float(ds.z.mean())
    return {"metrics": metrics, "std_err": errors, "proxies": proxies}


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
        "values": [float(a) for a in v],
    }


def run_table3(cfg: SyntheticConfig) -> dict:
    """Both arms, every metric, ``cfg.repeats`` seeded repeats (seed + r)."""
    repeats = []
    proxy_rows = []
    for r in range(cfg.repeats):
        rep_seed = cfg.seed + r
        arms, q_hat = table3_arms(cfg, rep_seed)
        theory = theoretical_erts(cfg, q_hat, rep_seed)
        rec = {"repeat": r, "seed": rep_seed, "q_hat": q_hat, "arms": {}}
        for arm_name, arm in arms.items():
            res = evaluate_arm(cfg, arm, rep_seed)
            for name in ERT_SCORES:
                res["metrics"][f"{name}-ert-theory"] = theory[arm_name][name]
            rec["arms"][arm_name] = {"metrics": res["metrics"], "std_err": res["std_err"]}
            if r == 0:
                for i in range(len(arm.y)):
                    row = {"arm": arm_name, "x1": arm.x[i, 0], "y": arm.y[i], "z": int(arm.z[i]), "true_p": arm.true_p[i]}
                    for k, v in res["proxies"].items():
                        row[f"h_{k}"] = v[i]
                    proxy_rows.append(row)
        repeats.append(rec)

    table = {}
    for arm_name in ARMS:
        names = repeats[0]["arms"][arm_name]["metrics"].keys()
        table[arm_name] = {
            n: _summary([rec["arms"][arm_name]["metrics"][n] for rec in repeats]) for n in names
        }
    return {
        "schema_version": 1,
        "experiment": "table3",
        "config": _config_dict(cfg),
        "table": table,
        "repeats": repeats,
        "proxy_rows": proxy_rows,
    }


def run_fig1(cfg: SyntheticConfig) -> dict:
    """1-D example: absolute-residual sets vs conformalized true-quantile sets."""
    seed = cfg.seed
    target = 1.0 - cfg.alpha
    zq = float(normal_quantile(1.0 - cfg.alpha / 2.0))
    x_cal, y_cal = gen_1d(cfg.n_cal, substream(seed, "calibration"))
    x, y = gen_1d(cfg.m_test, substream(seed, "test"))

    q_abs = conformal_quantile(np.abs(y_cal - mean_1d(x_cal)), cfg.alpha, "abs").q_hat
    lo_c = mean_1d(x_cal) - zq * sigma(x_cal)
    hi_c = mean_1d(x_cal) + zq * sigma(x_cal)
    q_cqr = conformal_quantile(np.maximum(lo_c - y_cal, y_cal - hi_c), cfg.alpha, "cqr").q_hat

    f, s = mean_1d(x), sigma(x)
    sets = {
        "standard_cp": (f - q_abs, f + q_abs, 2.0 * normal_cdf(q_abs / s) - 1.0),
        "cqr": (f - zq * s - q_cqr, f + zq * s + q_cqr, 2.0 * normal_cdf(zq + q_cqr / s) - 1.0),
    }
    out_arms, rows = {}, []
    for arm_name, (lo, hi, true_p) in sets.items():
        z = ((y >= lo) & (y <= hi)).astype(np.int64)
        arm = ArmData(x[:, None], y, z, hi - lo, true_p)
        res = evaluate_arm(
            SyntheticConfig(**{**asdict(cfg), "experiment": "table3", "compare": tuple(cfg.compare) or ("partition",)}),
            arm, seed, with_baselines=False,
        )
        x_mc = rng(seed, "theory").uniform(-1.0, 1.0, cfg.mc_draws)
        s_mc = sigma(x_mc)
        p_mc = 2.0 * normal_cdf(q_abs / s_mc) - 1.0 if arm_name == "standard_cp" else 2.0 * normal_cdf(zq + q_cqr / s_mc) - 1.0
        for name in ERT_SCORES:
            res["metrics"][f"{name}-ert-theory"] = ert_oracle(get_score(name), target, p_mc)
        res["metrics"]["coverage"] = float(z.mean())
        out_arms[arm_name] = {"metrics": res["metrics"], "std_err": res["std_err"]}
        for i in np.argsort(x, kind="stable"):
            row = {"arm": arm_name, "x": x[i], "y": y[i], "lower": lo[i], "upper": hi[i], "z": int(z[i]), "true_p": true_p[i]}
            for k, v in res["proxies"].items():
                row[f"h_{k}"] = v[i]
            rows.append(row)
    return {
        "schema_version": 1,
        "experiment": "fig1",
        "config": _config_dict(cfg),
        "q_hat": {"standard_cp": q_abs, "cqr": q_cqr},
        "arms": out_arms,
        "proxy_rows": rows,
    }


def run_curve(cfg: SyntheticConfig) -> dict:
    """Metrics of both 8-D arms as a function of the number of test points."""
    rows = []
    for r in range(cfg.repeats):
        rep_seed = cfg.seed + r
        for m in cfg.curve_sizes:
            arms, q_hat = table3_arms(cfg, rep_seed, m_test=m)
            theory = theoretical_erts(cfg, q_hat, rep_seed)
            for arm_name, arm in arms.items():
                sub = SyntheticConfig(**{**asdict(cfg), "folds": min(cfg.folds, m)})
                res = evaluate_arm(sub, arm, rep_seed, with_baselines=False)
                design, _ = one_hot_standardize(Dataset(features=arm.x, z=arm.z))
                groups = bl.kmeans_groups(design, seed=substream(rep_seed, "groups"))
                rows.append({
                    "repeat": r, "arm": arm_name, "m_test": m,
                    "wsc": bl.wsc(design, arm.z, cfg.wsc_delta, cfg.wsc_directions, substream(rep_seed, "wsc")),
                    "covgap": bl.covgap(arm.z, groups, 1.0 - cfg.alpha),
                    "l1-ert": res["metrics"]["l1-ert"],
                    "l2-ert": res["metrics"]["l2-ert"],
                    "l1-ert-theory": theory[arm_name]["l1"],
                    "l2-ert-theory": theory[arm_name]["l2"],
                })
    return {"schema_version": 1, "experiment": "fig4", "config": _config_dict(cfg), "curve_rows": rows}


def _config_dict(cfg: SyntheticConfig) -> dict:
    d = asdict(cfg)
    d["compare"] = list(cfg.compare)
    d["curve_sizes"] = list(cfg.curve_sizes)
    return d


def run_experiment(cfg: SyntheticConfig) -> dict:
    return {"table3": run_table3, "fig1": run_fig1, "fig4": run_curve}[cfg.experiment](cfg)


# -- artifact writing -------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_rows(path: Path, rows: list[dict]):
    if not rows:
        return
    cols = list(rows[0])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(float(row[c]) if isinstance(row[c], np.floating) else row[c]) for c in cols])


def write_artifacts(result: dict, out_dir) -> list[Path]:
    """Write JSON summary plus plot-ready CSV files; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = result["experiment"]
    written = []
    summary = {k: v for k, v in result.items() if k not in ("proxy_rows", "curve_rows")}
    path = out_dir / f"{exp}.json"
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(path)
    if exp == "table3":
        rows = [
            {"arm": arm, "metric": metric, "mean": s["mean"], "std": s["std"], "n": len(s["values"])}
            for arm, metrics in result["table"].items()
            for metric, s in metrics.items()
        ]
        _write_rows(out_dir / "table3.csv", rows)
        written.append(out_dir / "table3.csv")
    if result.get("proxy_rows"):
        _write_rows(out_dir / f"{exp}_proxy.csv", result["proxy_rows"])
        written.append(out_dir / f"{exp}_proxy.csv")
    if result.get("curve_rows"):
        _write_rows(out_dir / f"{exp}_curve.csv", result["curve_rows"])
        written.append(out_dir / f"{exp}_curve.csv")
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
