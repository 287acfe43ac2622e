"""Benchmark driver: every (problem, preconditioner) pair solved by GMRES(m)."""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .blocks import load_block_system
from .generate import PRESETS, capsule_profile, generate
from .krylov import GmresParams
from .precond import PrecondConfig
from .solver import GMRESSolver

__all__ = [
    "CSV_COLUMNS",
    "BenchConfig",
    "ConfigError",
    "ProblemSpec",
    "format_rows",
    "run_bench",
    "write_csv",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "problem",
    "preconditioner",
    "G",
    "N",
    "iterations",
    "converged",
    "setup_seconds",
    "solve_seconds",
    "matrix_inverse_count",
    "inner_cycles_total",
    "final_relative_residual",
    "error",
)


class ConfigError(ValueError):
    """Invalid benchmark configuration."""


@dataclass(frozen=True)
class ProblemSpec:
    """A generated problem (preset, grid, groups, seed) or a saved manifest."""

    preset: str = "smooth"
    nx: int = 16
    ny: int = 16
    G: int = 1
    seed: int = 0
    manifest: str = None

    def __post_init__(self):
        if self.manifest is None:
            if self.preset not in PRESETS:
                raise ConfigError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
            if self.nx < 2 or self.ny < 2 or self.G < 1:
                raise ConfigError("grid sizes must be >= 2 and G >= 1")
        elif not Path(self.manifest).exists():
            raise ConfigError(f"manifest {self.manifest!r} does not exist")

    @property
    def name(self):
        if self.manifest is not None:
            return Path(self.manifest).name
        return f"{self.preset}-{self.nx}x{self.ny}-G{self.G}-s{self.seed}"

    def build(self):
        if self.manifest is not None:
            return load_block_system(self.manifest)
        return generate(capsule_profile(self.preset, self.nx, self.ny, self.G), self.seed)


@dataclass
class BenchConfig:
    problems: list
    preconditioners: list
    gmres: GmresParams = field(default_factory=GmresParams)
    output: str = None
    verbose: bool = False
    jobs: int = 1
    record_timings: bool = True

    def __post_init__(self):
        if not self.problems:
            raise ConfigError("no problem given")
        if not self.preconditioners:
            raise ConfigError("at least one preconditioner is required")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for p in self.preconditioners:
            if not isinstance(p, PrecondConfig):
                raise ConfigError(f"expected PrecondConfig, got {type(p).__name__}")


def _solve_one(system, problem, pcfg, gmres):
    row = {
        "problem": problem.name,
        "preconditioner": pcfg.name,
        "G": system.G,
        "N": system.N,
        "iterations": "",
        "converged": False,
        "setup_seconds": math.nan,
        "solve_seconds": math.nan,
        "matrix_inverse_count": "",
        "inner_cycles_total": "",
        "final_relative_residual": math.nan,
        "error": "",
    }
    solver = GMRESSolver(pcfg, gmres.restart, gmres.rel_tol, gmres.max_iters)
    try:
        solver.fit(system)
    except Exception as exc:
        row["error"] = f"setup failed: {type(exc).__name__}: {exc}"
        return row
    row["setup_seconds"] = solver.setup_seconds_
    try:
        solver.solve()
    except Exception as exc:
        row["error"] = f"solve failed: {type(exc).__name__}: {exc}"
        return row
    rep = solver.report_
    solve = rep.counters["solve"]
    row.update(
        iterations=rep.iterations,
        converged=rep.converged,
        solve_seconds=rep.solve_seconds,
        matrix_inverse_count=solve["matrix_inverse"],
        inner_cycles_total=sum(solve["inner_cycles"].values()),
        final_relative_residual=rep.final_relative_residual,
    )
    return row


def run_bench(cfg):
    """Solve every problem with every preconditioner; rows come back in input order.

    Failures are recorded in the row (``converged`` false, ``error`` set)
    and never abort the run.
    """
    tasks = []
    for problem in cfg.problems:
        system = problem.build()
        for pcfg in cfg.preconditioners:
            tasks.append((system, problem, pcfg))

    def work(task):
        row = _solve_one(*task, cfg.gmres)
        if cfg.verbose:
            log.info(
                "%s %s: %s iterations, converged=%s, residual=%.3e %s",
                row["problem"],
                row["preconditioner"],
                row["iterations"],
                row["converged"],
                row["final_relative_residual"],
                row["error"],
            )
        return row

    if cfg.jobs == 1:
        return [work(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(work, tasks))


def _fmt(key, value, record_timings):
    if key in ("setup_seconds", "solve_seconds"):
        if not record_timings or (isinstance(value, float) and math.isnan(value)):
            return ""
        return f"{value:.6f}"
    if key == "final_relative_residual":
        return "" if math.isnan(value) else f"{value:.6e}"
    if key == "converged":
        return "true" if value else "false"
    return str(value)


def format_rows(rows, record_timings=True):
    return [[_fmt(k, row[k], record_timings) for k in CSV_COLUMNS] for row in rows]


def write_csv(rows, fh, record_timings=True):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(format_rows(rows, record_timings))
