"""Command-line front end for the coupling experiments.

Flags can also be supplied through a flat key=value config file
(--config); explicit flags override file entries.  Exit codes: 0 on
success, 2 on configuration errors, 3 when a numerical guard trips.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import EXPERIMENT_NAMES, ExperimentConfig, run_experiment
from .models import NumericalGuardError

CONFIG_KEYS = {
    "model": str,
    "eps1": float,
    "eps2": float,
    "k": int,
    "ks": str,
    "q": int,
    "reps": int,
    "endpoint-samples": int,
    "seed": int,
    "out": str,
    "no-figures": bool,
    "mlmc-levels": str,
    "deltas": str,
    "limit-levels": str,
}


class ConfigError(ValueError):
    pass


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.replace("x", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc


def _parse_float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated float list, got {text!r}") from exc


def read_config_file(path: Path) -> dict:
    """Flat key=value file; '#' starts a comment, blank lines ignored."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levybridge",
        description="Couple Levy process paths to Brownian paths by "
                    "increment reordering; reproduce the coupling and "
                    "multilevel Monte Carlo experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENT_NAMES:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--model", help="model preset, e.g. exp-stable(0.1,0.03), "
                                       "fig1-gamma, annulus(3), perturbed(0.5)")
        p.add_argument("--eps1", type=float, help="outer jump cutoff")
        p.add_argument("--eps2", type=float, help="inner jump cutoff")
        p.add_argument("--k", type=int, help="cell count for single-level runs")
        p.add_argument("--ks", help="comma-separated hierarchy cell counts, e.g. 64,16")
        p.add_argument("--q", type=int, help="dyadic fine-grid exponent (default 12)")
        p.add_argument("--reps", type=int, help="replications (default 1000)")
        p.add_argument("--endpoint-samples", type=int,
                       help="draws behind the empirical endpoint CDF (default 30000)")
        p.add_argument("--seed", type=int, help="random seed (mandatory)")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--no-figures", action="store_true",
                       help="emit CSV only, skip figure rendering")
        p.add_argument("--mlmc-levels", help="level range for mlmc-bench, e.g. 3,6")
        p.add_argument("--deltas", help="target errors for mlmc-bench, e.g. 0.08,0.04")
        p.add_argument("--limit-levels", help="level range for limit-regime, e.g. 1,8")
    return parser


def merge_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values = read_config_file(Path(args.config)) if args.config else {}

    def pick(flag_value, file_key, cast, default=None):
        if flag_value is not None and flag_value is not False:
            return flag_value
        if file_key in file_values:
            raw = file_values[file_key]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes")
            return cast(raw)
        return default

    seed = pick(args.seed, "seed", int)
    if seed is None:
        raise ConfigError("--seed is mandatory (no wall-clock seeding)")
    ks = pick(args.ks, "ks", str)
    mlmc_levels = pick(args.mlmc_levels, "mlmc-levels", str)
    deltas = pick(args.deltas, "deltas", str)
    limit_levels = pick(args.limit_levels, "limit-levels", str)
    config = ExperimentConfig(
        seed=seed,
        model=pick(args.model, "model", str),
        eps1=pick(args.eps1, "eps1", float),
        eps2=pick(args.eps2, "eps2", float),
        k=pick(args.k, "k", int),
        ks=_parse_int_list(ks) if ks else None,
        q=pick(args.q, "q", int, 12),
        n_reps=pick(args.reps, "reps", int, 1000),
        endpoint_samples=pick(args.endpoint_samples, "endpoint-samples", int, 30000),
        out_dir=Path(pick(args.out, "out", str, "out")),
        figures=not pick(args.no_figures, "no-figures", bool, False),
        mlmc_levels=_parse_int_list(mlmc_levels) if mlmc_levels else (3, 6),
        deltas=_parse_float_list(deltas) if deltas else (0.08, 0.04, 0.02),
        limit_levels=_parse_int_list(limit_levels) if limit_levels else (1, 8),
    )
    if config.q < 1:
        raise ConfigError("q must be >= 1")
    if config.n_reps < 2:
        raise ConfigError("reps must be >= 2")
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = merge_config(args)
        config.out_dir.mkdir(parents=True, exist_ok=True)
        probe = config.out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: output path not writable: {exc}", file=sys.stderr)
        return 2
    try:
        written = run_experiment(args.experiment, config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
