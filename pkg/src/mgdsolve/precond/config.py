from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..amg import AmgParams
from ..blocks import IndicatorConfig
from .base import BlockDiagonalPreconditioner
from .mono import AMGPreconditioner, IdentityPreconditioner
from .pctl import PCTLPreconditioner
from .schur import Schur1Preconditioner, Schur2Preconditioner

__all__ = [
    "PRECOND_NAMES",
    "PrecondConfig",
    "adaptive_wrap",
    "build_bdiag",
    "build_mono",
    "build_pctl",
    "build_schur1",
    "build_schur2",
    "implied_preconditioner_dense",
    "make_preconditioner",
]

KINDS = ("none", "amg", "pctl", "schur1", "schur2", "bdiag")
BLOCK_KINDS = ("pctl", "schur1", "schur2", "bdiag")
#: Names accepted on the command line; an ``a`` prefix selects the adaptive form.
PRECOND_NAMES = ("none", "amg", "pctl", "schur1", "schur2", "apctl", "aschur1", "aschur2")

_BLOCK_CLASSES = {
    "pctl": PCTLPreconditioner,
    "schur1": Schur1Preconditioner,
    "schur2": Schur2Preconditioner,
    "bdiag": BlockDiagonalPreconditioner,
}


@dataclass(frozen=True)
class PrecondConfig:
    """Everything needed to build one preconditioner.

    `kind` is ``"none"``, ``"amg"`` (monolithic), ``"pctl"``, ``"schur1"``,
    ``"schur2"`` or ``"bdiag"`` (block diagonal).
    """

    kind: str = "pctl"
    adaptive: bool = False
    indicators: IndicatorConfig = field(default_factory=IndicatorConfig)
    sweeps_radiation: int = 3
    sweeps_ei: int = 1
    inner_tol: float = 1e-2
    max_inner_cycles: int = 200
    schur_mode: str = "diag"
    schur_sweeps: int = 3
    exact_inner: bool = False
    amg: AmgParams = field(default_factory=AmgParams)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown preconditioner kind {self.kind!r}")
        if self.adaptive and self.kind not in ("pctl", "schur1", "schur2"):
            raise ValueError(f"{self.kind!r} has no adaptive form")
        for name in ("sweeps_radiation", "sweeps_ei", "max_inner_cycles", "schur_sweeps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")

    @classmethod
    def from_name(cls, name, **overrides):
        """Config for a command-line name such as ``"aschur2"``."""
        if name not in PRECOND_NAMES and name != "bdiag":
            raise ValueError(f"unknown preconditioner {name!r}; choose from {PRECOND_NAMES}")
        adaptive = name.startswith("a") and name != "amg"
        kind = name[1:] if adaptive else name
        return cls(kind=kind, adaptive=adaptive, **overrides)

    @property
    def name(self):
        return ("a" if self.adaptive else "") + self.kind

    def with_kind(self, kind, adaptive=None):
        return replace(self, kind=kind, adaptive=self.adaptive if adaptive is None else adaptive)


def make_preconditioner(cfg):
    """Unfitted estimator for `cfg`."""
    if cfg.kind == "none":
        return IdentityPreconditioner()
    if cfg.kind == "amg":
        return AMGPreconditioner(**asdict(cfg.amg))
    params = dict(
        adaptive=cfg.adaptive,
        theta_wd=cfg.indicators.theta_wd,
        theta_wc=cfg.indicators.theta_wc,
        sigma_wc=cfg.indicators.sigma_wc,
        sweeps_radiation=cfg.sweeps_radiation,
        sweeps_ei=cfg.sweeps_ei,
        inner_tol=cfg.inner_tol,
        max_inner_cycles=cfg.max_inner_cycles,
        exact_inner=cfg.exact_inner,
        amg_params=cfg.amg,
    )
    if cfg.kind in ("schur1", "schur2"):
        params.update(schur_mode=cfg.schur_mode, schur_sweeps=cfg.schur_sweeps)
    return _BLOCK_CLASSES[cfg.kind](**params)


def build_mono(A, p=None):
    """Monolithic AMG preconditioner for a `CsrMatrix` (or `BlockSystem`)."""
    return AMGPreconditioner(**asdict(p or AmgParams())).fit(A)


def _build(kind, s, cfg, adaptive=None):
    cfg = (cfg or PrecondConfig()).with_kind(kind, adaptive)
    return make_preconditioner(cfg).fit(s)


def build_pctl(s, cfg=None):
    return _build("pctl", s, cfg)


def build_schur1(s, cfg=None):
    return _build("schur1", s, cfg)


def build_schur2(s, cfg=None):
    return _build("schur2", s, cfg)


def build_bdiag(s, cfg=None):
    return _build("bdiag", s, cfg, adaptive=False)


def adaptive_wrap(kind, s, cfg=None):
    """Adaptive form of ``"pctl"``, ``"schur1"`` or ``"schur2"`` fitted to `s`."""
    if kind not in ("pctl", "schur1", "schur2"):
        raise ValueError(f"{kind!r} has no adaptive form")
    return _build(kind, s, cfg, adaptive=True)


def implied_preconditioner_dense(p, n):
    """Dense matrix of a linear preconditioner, built column by column from ``apply(e_j)``."""
    if n > 2000:
        raise ValueError("implied_preconditioner_dense is meant for small systems")
    M = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        M[:, j] = p.apply(e)
        e[j] = 0.0
    return M
