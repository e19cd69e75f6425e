"""Experiment drivers: parameter sweeps, showcases, and MLMC benches.

Every experiment writes CSV files whose first lines echo the exact
configuration, so identical configs and seeds reproduce byte-identical
output.  Figures are rendered next to the CSVs unless disabled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import plots
from .coupling import EmpiricalCdf, couple_skeletons, hierarchical_coupling
from .metrics import (CouplingConfig, build_endpoint_cdf, run_replications,
                      summarize_endpoint_rmse, summarize_msmd, sup_distance)
from .mlmc import (LEVEL_COLUMNS, SUPREMUM, decompose_level,
                   estimate_level_stats, mlmc_run)
from .models import LevyModel, annulus_preset, parse_model_spec, stable_preset

EXPERIMENT_NAMES = ("couple", "msmd", "sweep-k", "two-level", "showcase",
                    "limit-regime", "mlmc-bench")

#: The four cutoff combinations of the single-level sweep.
SWEEP_COMBOS = ((0.1, 0.01), (0.1, 0.03), (1.0, 0.01), (1.0, 0.03))
#: Second-level cell counts of the two-level sweep.
TWO_LEVEL_K2 = (1, 4, 16)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; every field maps to one CLI flag."""

    seed: int
    model: Optional[str] = None
    eps1: Optional[float] = None
    eps2: Optional[float] = None
    k: Optional[int] = None
    ks: Optional[tuple] = None
    q: int = 12
    n_reps: int = 1000
    endpoint_samples: int = 30000
    out_dir: Path = Path("out")
    figures: bool = True
    mlmc_levels: tuple = (3, 6)
    deltas: tuple = (0.08, 0.04, 0.02)
    limit_levels: tuple = (1, 8)

    def echo(self, name: str) -> str:
        parts = [f"experiment={name}"]
        for key in ("seed", "model", "eps1", "eps2", "k", "ks", "q", "n_reps",
                    "endpoint_samples", "mlmc_levels", "deltas", "limit_levels"):
            parts.append(f"{key}={getattr(self, key)}")
        return " ".join(parts)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows, echo: str, units: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# config: {echo}\n")
        f.write(f"# units: {units}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
    return path


def _preset(config: ExperimentConfig, default="exp-stable(0.1,0.03)") -> LevyModel:
    if config.model:
        return parse_model_spec(config.model)
    if config.eps1 is not None and config.eps2 is not None:
        return stable_preset(max(config.eps1, config.eps2),
                             min(config.eps1, config.eps2))
    return parse_model_spec(default)


DIST_UNITS = ("dimensionless (processes standardized to unit variance at t=1); "
              "rms = sqrt(mean of squared maximal distances)")


# ---------------------------------------------------------------------------
# Individual experiments
# ---------------------------------------------------------------------------

def run_sweep_k(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    if config.eps1 is not None and config.eps2 is not None:
        combos = [(max(config.eps1, config.eps2), min(config.eps1, config.eps2))]
    else:
        combos = list(SWEEP_COMBOS)
    ks = [2 ** i for i in range(0, 13) if 2 ** i <= 2 ** config.q]
    rows = []
    groups = {}
    for (eps1, eps2), combo_rng in zip(combos, rng.spawn(len(combos))):
        model = stable_preset(eps1, eps2)
        cfg = CouplingConfig(ks=(1,), q=config.q,
                             endpoint_samples=config.endpoint_samples)
        fx = build_endpoint_cdf(model, cfg, combo_rng)
        group = []
        for k in ks:
            batch = run_replications(model, replace(cfg, ks=(k,)), config.n_reps,
                                     combo_rng, fx=fx)
            est = summarize_msmd(batch.sup_distances)
            row = {"eps1": eps1, "eps2": eps2, "k": k, "n_reps": config.n_reps,
                   "rms": est.rms, "rms_se": est.rms_std_error,
                   "mean_sq": est.mean_sq.mean, "mean_sq_se": est.mean_sq.std_error}
            rows.append(row)
            group.append(row)
        groups[f"eps1={eps1}, eps2={eps2}"] = group
    echo = config.echo("sweep-k")
    paths = [write_csv(config.out_dir / "sweep_k.csv",
                       ["eps1", "eps2", "k", "n_reps", "rms", "rms_se",
                        "mean_sq", "mean_sq_se"], rows, echo, DIST_UNITS)]
    if config.figures:
        paths.append(plots.sweep_curves(groups, config.out_dir / "sweep_k.svg",
                                        "RMS maximal distance vs k"))
    return paths


def run_two_level(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    eps1 = config.eps1 if config.eps1 is not None else 0.1
    eps2 = config.eps2 if config.eps2 is not None else 0.03
    model = stable_preset(max(eps1, eps2), min(eps1, eps2))
    cfg = CouplingConfig(ks=(1,), q=config.q,
                         endpoint_samples=config.endpoint_samples)
    fx = build_endpoint_cdf(model, cfg, rng)
    rows = []
    groups = {}
    for k2 in TWO_LEVEL_K2:
        group = []
        for i in range(0, 13):
            k = 2 ** i
            ks = (k,) if k2 == 1 else (k, k2)
            if math.prod(ks) > 2 ** config.q:
                continue
            batch = run_replications(model, replace(cfg, ks=ks), config.n_reps,
                                     rng, fx=fx)
            est = summarize_msmd(batch.sup_distances)
            row = {"eps1": max(eps1, eps2), "eps2": min(eps1, eps2), "k2": k2,
                   "k": k, "n_reps": config.n_reps, "rms": est.rms,
                   "rms_se": est.rms_std_error}
            rows.append(row)
            group.append(row)
        groups[f"k2={k2}"] = group
    echo = config.echo("two-level")
    paths = [write_csv(config.out_dir / "two_level.csv",
                       ["eps1", "eps2", "k2", "k", "n_reps", "rms", "rms_se"],
                       rows, echo, DIST_UNITS)]
    if config.figures:
        paths.append(plots.sweep_curves(groups, config.out_dir / "two_level.svg",
                                        "Second-level reordering"))
    return paths


def run_showcase(config: ExperimentConfig) -> list[Path]:
    # Replication streams come from named seed-sequence children so the
    # quantile replications can be replayed to extract their paths.
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.n_reps + 1)
    model = _preset(config)
    k = config.k or 2 ** 7
    cfg = CouplingConfig(ks=(k,), q=config.q,
                         endpoint_samples=config.endpoint_samples)
    fx = build_endpoint_cdf(model, cfg, np.random.default_rng(children[-1]))
    sups = np.empty(config.n_reps)
    ediffs = np.empty(config.n_reps)
    for i in range(config.n_reps):
        pair = hierarchical_coupling(model, cfg.ks, cfg.q, fx,
                                     np.random.default_rng(children[i]))
        sups[i] = sup_distance(pair)
        ediffs[i] = pair.endpoint_w1 - pair.x.endpoint
    est = summarize_msmd(sups)
    rmse = summarize_endpoint_rmse(ediffs)

    order = np.argsort(sups)
    quantile_pairs = {}
    path_cols = {}
    for qlevel in (0.05, 0.50, 0.95):
        idx = int(order[min(int(math.ceil(qlevel * config.n_reps)) - 1,
                            config.n_reps - 1)])
        pair = hierarchical_coupling(model, cfg.ks, cfg.q, fx,
                                     np.random.default_rng(children[idx]))
        label = f"{qlevel:.2f}"
        quantile_pairs[label] = (pair.x.times, pair.x.values, pair.w.values)
        path_cols[label] = pair

    echo = config.echo("showcase")
    t = np.arange(2 ** config.q + 1) / 2 ** config.q
    path_rows = []
    for j, tv in enumerate(t):
        row = {"t": tv}
        for label, pair in path_cols.items():
            row[f"x_{label}"] = float(pair.x.values[j])
            row[f"w_{label}"] = float(pair.w.values[j])
        path_rows.append(row)
    dist_rows = [{"rep": i, "sup_distance": float(s)} for i, s in enumerate(sups)]
    summary = [{"k": k, "q": config.q, "n_reps": config.n_reps,
                "rms": est.rms, "rms_se": est.rms_std_error,
                "endpoint_rmse": rmse.mean, "endpoint_rmse_se": rmse.std_error}]
    paths = [
        write_csv(config.out_dir / "showcase_distances.csv",
                  ["rep", "sup_distance"], dist_rows, echo, DIST_UNITS),
        write_csv(config.out_dir / "showcase_paths.csv",
                  ["t"] + [f"{c}_{l}" for l in sorted(path_cols) for c in ("x", "w")],
                  path_rows, echo, "paths on the fine grid; t in [0,1]"),
        write_csv(config.out_dir / "showcase_summary.csv",
                  ["k", "q", "n_reps", "rms", "rms_se", "endpoint_rmse",
                   "endpoint_rmse_se"], summary, echo, DIST_UNITS),
    ]
    if config.figures:
        paths.append(plots.showcase_panels(sups, quantile_pairs,
                                           config.out_dir / "showcase.svg"))
    return paths


def run_limit_regime(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    n_lo, n_hi = config.limit_levels
    detail_rows = []
    summary_rows = []
    for n in range(n_lo, n_hi + 1):
        model = annulus_preset(n)
        mu4 = model.moments().mu4
        cfg = CouplingConfig(ks=(1,), q=config.q,
                             endpoint_samples=config.endpoint_samples)
        fx = build_endpoint_cdf(model, cfg, rng)
        best = None
        for i in range(0, 10):
            k = 2 ** i
            if k > 2 ** config.q:
                break
            batch = run_replications(model, replace(cfg, ks=(k,)), config.n_reps,
                                     rng, fx=fx)
            est = summarize_msmd(batch.sup_distances)
            detail_rows.append({"n": n, "mu4": mu4, "k": k, "rms": est.rms,
                                "rms_se": est.rms_std_error})
            if best is None or est.rms < best[1]:
                best = (k, est.rms)
        k_star, d_star = best
        summary_rows.append({
            "n": n, "mu4": mu4, "k_star": k_star, "d_star": d_star,
            "log_d_star": math.log(d_star), "log_k_star": math.log(k_star),
            "theory_log_d": math.log(mu4 * abs(math.log(mu4))) / 4.0,
            "theory_log_k": math.log(abs(math.log(mu4)) / mu4) / 2.0,
        })
    echo = config.echo("limit-regime")
    paths = [
        write_csv(config.out_dir / "limit_regime_detail.csv",
                  ["n", "mu4", "k", "rms", "rms_se"], detail_rows, echo,
                  DIST_UNITS),
        write_csv(config.out_dir / "limit_regime.csv",
                  ["n", "mu4", "k_star", "d_star", "log_d_star", "log_k_star",
                   "theory_log_d", "theory_log_k"], summary_rows, echo,
                  DIST_UNITS + "; logs are natural"),
    ]
    if config.figures:
        paths.append(plots.limit_regime_panels(summary_rows,
                                               config.out_dir / "limit_regime.svg"))
    return paths


def run_mlmc_bench(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    base = parse_model_spec(config.model) if config.model \
        else parse_model_spec("stable-base")
    n_lo, n_hi = config.mlmc_levels
    g = SUPREMUM
    level_rows = []
    for mode in ("independent", "reordering"):
        for n in range(n_lo, n_hi + 1):
            decomp = decompose_level(base, n)
            stats = estimate_level_stats(decomp, mode, g, config.n_reps, rng,
                                         endpoint_samples=config.endpoint_samples)
            level_rows.append({
                "mode": mode, "level": n, "eps": decomp.spec.eps,
                "k_prime": decomp.spec.k_prime, "m_n": decomp.spec.m_n,
                "mean_diff": stats.mean_diff, "var_diff": stats.var_diff,
                "cost": stats.cost, "n_samples": stats.n_samples,
            })
    complexity_rows = []
    for mode in ("independent", "reordering"):
        for delta in config.deltas:
            res = mlmc_run(base, g, mode, delta, max_level=n_hi, rng=rng,
                           endpoint_samples=config.endpoint_samples)
            complexity_rows.append({
                "mode": mode, "delta": delta, "estimate": res.estimate,
                "std_error": res.std_error, "total_cost": res.total_cost,
                "n_levels": len(res.levels),
                "bias_converged": res.bias_converged,
            })
    echo = config.echo("mlmc-bench")
    paths = [
        write_csv(config.out_dir / "mlmc_levels.csv",
                  ["mode"] + list(LEVEL_COLUMNS), level_rows, echo,
                  "work units: 1/jump + 1/grid point + k log2 k per sort"),
        write_csv(config.out_dir / "mlmc_complexity.csv",
                  ["mode", "delta", "estimate", "std_error", "total_cost",
                   "n_levels", "bias_converged"], complexity_rows, echo,
                  "target RMS error delta; cost in work units"),
    ]
    if config.figures:
        paths.append(plots.mlmc_variance_panel(level_rows,
                                               config.out_dir / "mlmc_levels.svg"))
    return paths


def run_couple(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    model = _preset(config, default="fig1-gamma")
    k = config.k or 40
    fx = model.endpoint_cdf()
    if fx is None:
        fx = EmpiricalCdf.from_model(model, config.endpoint_samples, rng)
    if (2 ** config.q) % k == 0:
        pair = hierarchical_coupling(model, config.ks or (k,), config.q, fx, rng)
        times, xv, wpv, wv = (pair.x.times, pair.x.values,
                              pair.w_prime.values, pair.w.values)
    else:
        skel = couple_skeletons(model, k, rng, endpoint=fx)
        times, xv, wpv, wv = skel.times, skel.x, skel.w_prime, skel.w
    rows = [{"t": float(t), "x": float(a), "w_prime": float(b), "w": float(c)}
            for t, a, b, c in zip(times, xv, wpv, wv)]
    echo = config.echo("couple")
    paths = [write_csv(config.out_dir / "couple.csv",
                       ["t", "x", "w_prime", "w"], rows, echo,
                       "paths standardized to unit variance at t=1")]
    if config.figures:
        paths.append(plots.coupled_paths_panel(
            times, xv, wpv, wv, config.out_dir / "couple.svg",
            f"coupled skeletons, k={k}"))
    return paths


def run_msmd(config: ExperimentConfig) -> list[Path]:
    rng = np.random.default_rng(config.seed)
    model = _preset(config)
    ks = config.ks or ((config.k or 2 ** 7),)
    cfg = CouplingConfig(ks=ks, q=config.q,
                         endpoint_samples=config.endpoint_samples)
    batch = run_replications(model, cfg, config.n_reps, rng)
    est = summarize_msmd(batch.sup_distances)
    rmse = summarize_endpoint_rmse(batch.endpoint_diffs)
    rows = [{"ks": "x".join(str(k) for k in ks), "q": config.q,
             "n_reps": config.n_reps, "rms": est.rms, "rms_se": est.rms_std_error,
             "mean_sq": est.mean_sq.mean, "mean_sq_se": est.mean_sq.std_error,
             "endpoint_rmse": rmse.mean, "endpoint_rmse_se": rmse.std_error}]
    echo = config.echo("msmd")
    print(f"rms={est.rms:.6f} (se {est.rms_std_error:.6f})  "
          f"endpoint_rmse={rmse.mean:.6f} (se {rmse.std_error:.6f})")
    return [write_csv(config.out_dir / "msmd.csv",
                      ["ks", "q", "n_reps", "rms", "rms_se", "mean_sq",
                       "mean_sq_se", "endpoint_rmse", "endpoint_rmse_se"],
                      rows, echo, DIST_UNITS)]


RUNNERS = {
    "couple": run_couple,
    "msmd": run_msmd,
    "sweep-k": run_sweep_k,
    "two-level": run_two_level,
    "showcase": run_showcase,
    "limit-regime": run_limit_regime,
    "mlmc-bench": run_mlmc_bench,
}


def run_experiment(name: str, config: ExperimentConfig) -> list[Path]:
    """Run one named experiment; returns the written file paths."""
    if name not in RUNNERS:
        raise ValueError(f"unknown experiment: {name!r}")
    return RUNNERS[name](config)
