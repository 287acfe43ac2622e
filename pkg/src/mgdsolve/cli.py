"""``mgdsolve`` command line.

Exit codes: 0 when every solve was attempted and the report written, 2 for
configuration errors, 3 when a ``--verify`` suite fails.
"""

import argparse
import logging
import re
import sys
from pathlib import Path

from .amg import AmgParams
from .bench import BenchConfig, ConfigError, ProblemSpec, run_bench, write_csv
from .blocks import IndicatorConfig, save_block_system
from .generate import PRESETS
from .krylov import GmresParams
from .precond import PRECOND_NAMES, PrecondConfig
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

#: Settings with their defaults; each maps to ``--<name with dashes>``.
DEFAULTS = {
    "preset": "smooth",
    "grid": ["16x16"],
    "groups": ["1"],
    "seed": 0,
    "manifest": [],
    "precond": [],
    "restart": 30,
    "tol": 1e-7,
    "maxit": 1000,
    "theta_wd": 0.9,
    "theta_wc": 1e-2,
    "sigma_wc": 0.5,
    "inner_tol": 1e-2,
    "sweeps_radiation": 3,
    "sweeps_ei": 1,
    "schur_mode": "diag",
    "jobs": 1,
    "output": None,
}
_LIST_KEYS = {"grid", "groups", "manifest", "precond"}


def build_parser():
    p = argparse.ArgumentParser(
        prog="mgdsolve",
        description="Benchmark block preconditioners for multi-group radiation diffusion systems.",
    )
    src = p.add_argument_group("problem")
    src.add_argument("--preset", choices=PRESETS, help="generated problem family (default smooth)")
    src.add_argument("--grid", action="append", metavar="NXxNY", help="grid size, repeatable (default 16x16)")
    src.add_argument("--groups", action="append", metavar="G", help="group count(s), repeatable or comma separated")
    src.add_argument("--seed", type=int, help="generator seed (default 0)")
    src.add_argument("--manifest", action="append", metavar="PATH", help="load a saved system instead")
    src.add_argument("--save-manifest", metavar="DIR", help="also save each generated system under DIR")

    pc = p.add_argument_group("preconditioners")
    pc.add_argument("--precond", action="append", choices=PRECOND_NAMES, help="repeatable")
    pc.add_argument("--theta-wd", type=float)
    pc.add_argument("--theta-wc", type=float)
    pc.add_argument("--sigma-wc", type=float)
    pc.add_argument("--inner-tol", type=float)
    pc.add_argument("--sweeps-radiation", type=int)
    pc.add_argument("--sweeps-ei", type=int)
    pc.add_argument("--schur-mode", choices=("diag", "iterative"))

    gm = p.add_argument_group("GMRES")
    gm.add_argument("--restart", type=int, help="Krylov dimension per cycle (default 30)")
    gm.add_argument("--tol", type=float, help="relative residual tolerance (default 1e-7)")
    gm.add_argument("--maxit", type=int, help="iteration cap (default 1000)")

    run = p.add_argument_group("run")
    run.add_argument("--config", metavar="FILE", help="key=value file; command-line flags win")
    run.add_argument("--output", metavar="PATH", help="CSV destination (default stdout)")
    run.add_argument("--jobs", type=int, help="solve independent pairs concurrently")
    run.add_argument("--no-timings", action="store_true", help="leave timing columns empty")
    run.add_argument("--verify", choices=sorted(SUITES), metavar="SUITE", help="run a self-check suite")
    run.add_argument("--verbose", action="store_true")
    return p


def read_config(path):
    """Parse a flat ``key=value`` file; repeated list keys accumulate."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _LIST_KEYS:
            out.setdefault(key, []).append(value)
        else:
            out[key] = value
    return out


def _settings(args):
    """Defaults, overridden by the config file, overridden by flags."""
    settings = dict(DEFAULTS)
    if args.config:
        try:
            settings.update(read_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _parse_grid(text):
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(text))
    if not m:
        raise ConfigError(f"grid must look like NXxNY, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _parse_groups(values):
    out = []
    for v in values:
        for part in str(v).split(","):
            try:
                out.append(int(part))
            except ValueError:
                raise ConfigError(f"invalid group count {part!r}") from None
    return out


def _typed(settings, key, kind):
    try:
        return kind(settings[key])
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {settings[key]!r}") from None


def bench_config_from_settings(settings, record_timings=True, verbose=False):
    if settings["manifest"]:
        problems = [ProblemSpec(manifest=m) for m in settings["manifest"]]
    else:
        seed = _typed(settings, "seed", int)
        problems = [
            ProblemSpec(settings["preset"], nx, ny, G, seed)
            for nx, ny in map(_parse_grid, settings["grid"])
            for G in _parse_groups(settings["groups"])
        ]
    try:
        indicators = IndicatorConfig(
            _typed(settings, "theta_wd", float),
            _typed(settings, "theta_wc", float),
            _typed(settings, "sigma_wc", float),
        )
        base = dict(
            indicators=indicators,
            sweeps_radiation=_typed(settings, "sweeps_radiation", int),
            sweeps_ei=_typed(settings, "sweeps_ei", int),
            inner_tol=_typed(settings, "inner_tol", float),
            schur_mode=settings["schur_mode"],
            amg=AmgParams(),
        )
        if base["schur_mode"] not in ("diag", "iterative"):
            raise ConfigError(f"invalid schur_mode {base['schur_mode']!r}")
        for name in settings["precond"]:
            if name not in PRECOND_NAMES:
                raise ConfigError(f"unknown preconditioner {name!r}; choose from {PRECOND_NAMES}")
        preconds = [PrecondConfig.from_name(n, **base) for n in settings["precond"]]
        gmres = GmresParams(
            _typed(settings, "restart", int),
            _typed(settings, "tol", float),
            _typed(settings, "maxit", int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return BenchConfig(
        problems=problems,
        preconditioners=preconds,
        gmres=gmres,
        output=settings["output"],
        verbose=verbose,
        jobs=_typed(settings, "jobs", int),
        record_timings=record_timings,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    if args.verify:
        return EXIT_OK if run_suite(args.verify) else EXIT_VERIFY
    try:
        cfg = bench_config_from_settings(_settings(args), not args.no_timings, args.verbose)
    except ConfigError as exc:
        print(f"mgdsolve: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.save_manifest:
        for prob in cfg.problems:
            if prob.manifest is None:
                save_block_system(prob.build(), Path(args.save_manifest) / prob.name)
    rows = run_bench(cfg)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            write_csv(rows, fh, cfg.record_timings)
    else:
        write_csv(rows, sys.stdout, cfg.record_timings)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
