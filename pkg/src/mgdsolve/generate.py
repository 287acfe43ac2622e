"""Synthetic multi-group radiation diffusion block systems.

One backward-Euler step of a frozen-coefficient, linearized MGD model is
discretized with cell-centered finite volumes on a uniform ``nx x ny`` grid
of square cells (side ``h``, cell area ``V = h^2``).  The diffusion operator
``K(D)`` is the 5-point two-point-flux stencil with harmonic-mean face
coefficients and homogeneous Neumann boundaries.  With ``M = V I``:

    A_g = M / dt        + K(D_g) + c sigma_P,g M
    A_E = rho_c_E M / dt + K(D_E) + sum_g c sigma_B,g beta_g M + omega M
    A_I = rho_c_I M / dt + K(D_I) + omega M
    D_gE = -c sigma_B,g beta_g M      D_Eg = -c sigma_P,g M
    D_EI = D_IE = -omega M

``beta_g`` is a linearized emission slope drawn per cell from
``[0.5, 1.5]``.  Every column of the monolithic matrix then sums to its
time-derivative term, so the matrix is column diagonally dominant with a
positive diagonal and all eigenvalues have positive real part.

The scheme is a stand-in: no opacity tables or equation of state are
modelled, only the structure of the real systems (diagonal couplings,
``D_EI = D_IE``, ``D_gE != D_Eg``, material jumps, weakly and strongly
coupled groups).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import BlockSystem
from .sparse import CsrMatrix, add_to_diagonal, spmv

__all__ = [
    "PRESETS",
    "MgdCoefficients",
    "capsule_profile",
    "diffusion_operator",
    "generate",
    "manufactured_solution",
]

PRESETS = ("smooth", "layered", "stiff")


def _tuple(v):
    return tuple(float(x) for x in np.atleast_1d(v))


@dataclass(frozen=True)
class MgdCoefficients:
    """Coefficients of one generated system.

    Per-group quantities (`d_rad`, `sigma_p`, `sigma_b`) are tuples of length
    `G`.  Material layers split the x-extent at `layer_bounds` (fractions in
    (0, 1)); layer ``l`` multiplies every diffusion coefficient by
    ``diffusion_scale[l]`` and every opacity by ``opacity_scale[l]``.
    ``dt = inf`` drops the time-derivative terms.
    """

    nx: int
    ny: int
    G: int
    dt: float = 1.0
    length: float = 1.0
    c: float = 1.0
    d_rad: tuple = (1.0,)
    sigma_p: tuple = (1.0,)
    sigma_b: tuple = (1.0,)
    d_e: float = 1.0
    d_i: float = 1.0
    rho_c_e: float = 1.0
    rho_c_i: float = 1.0
    omega_ie: float = 1.0
    layer_bounds: tuple = ()
    diffusion_scale: tuple = (1.0,)
    opacity_scale: tuple = (1.0,)
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        for attr in ("d_rad", "sigma_p", "sigma_b", "layer_bounds", "diffusion_scale", "opacity_scale"):
            object.__setattr__(self, attr, _tuple(getattr(self, attr)))
        if self.nx < 2 or self.ny < 2:
            raise ValueError("nx and ny must be >= 2")
        if self.G < 1:
            raise ValueError("G must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for attr in ("d_rad", "sigma_p", "sigma_b"):
            if len(getattr(self, attr)) != self.G:
                raise ValueError(f"{attr} needs one value per group ({self.G})")
        for attr in ("length", "c", "d_e", "d_i", "rho_c_e", "rho_c_i"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{attr} must be positive")
        if min(self.d_rad) <= 0:
            raise ValueError("d_rad must be positive")
        if min(self.sigma_p) < 0 or min(self.sigma_b) < 0 or self.omega_ie < 0:
            raise ValueError("opacities and the exchange coefficient must be non-negative")
        b = np.array(self.layer_bounds)
        if b.size and (b[0] <= 0 or b[-1] >= 1 or np.any(np.diff(b) <= 0)):
            raise ValueError("layer_bounds must be strictly increasing inside (0, 1)")
        n_layers = b.size + 1
        for attr in ("diffusion_scale", "opacity_scale"):
            v = getattr(self, attr)
            if len(v) != n_layers or min(v) <= 0:
                raise ValueError(f"{attr} needs {n_layers} positive values")

    @property
    def N(self):
        return self.nx * self.ny

    @property
    def h(self):
        return self.length / self.nx

    def layer_of_cell(self):
        """Material layer index of every cell (x-major within a row of cells)."""
        xc = (np.arange(self.nx) + 0.5) / self.nx
        layer_x = np.searchsorted(np.array(self.layer_bounds), xc, side="right")
        return np.tile(layer_x, self.ny)

    def with_grid(self, nx, ny, G=None):
        """Same material description on another grid or group count."""
        if G is None or G == self.G:
            return replace(self, nx=nx, ny=ny)
        return capsule_profile(self.name, nx, ny, G, dt=self.dt)


def diffusion_operator(nx, ny, coef):
    """Neumann 5-point operator ``K`` for a per-cell diffusion coefficient.

    Cell ``(i, j)`` has index ``j * nx + i``.  On square cells the face
    transmissibility reduces to the harmonic mean of the two cell values.
    """
    coef = np.asarray(coef, dtype=np.float64).reshape(ny, nx)
    N = nx * ny
    idx = np.arange(N).reshape(ny, nx)
    rows, cols, vals = [], [], []
    diag = np.zeros(N)

    def faces(a, b, ca, cb):
        t = 2.0 * ca * cb / (ca + cb)
        a, b, t = a.ravel(), b.ravel(), t.ravel()
        rows.extend([a, b])
        cols.extend([b, a])
        vals.extend([-t, -t])
        np.add.at(diag, a, t)
        np.add.at(diag, b, t)

    faces(idx[:, :-1], idx[:, 1:], coef[:, :-1], coef[:, 1:])
    faces(idx[:-1, :], idx[1:, :], coef[:-1, :], coef[1:, :])
    rows.append(np.arange(N))
    cols.append(np.arange(N))
    vals.append(diag)
    return CsrMatrix.from_coo(N, N, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _manufactured(nx, ny, rng):
    x = (np.arange(nx) + 0.5) / nx
    y = (np.arange(ny) + 0.5) / ny
    phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
    amp = rng.uniform(0.2, 0.5)
    field_ = 1.0 + amp * np.outer(np.cos(np.pi * y + phase[1]), np.sin(np.pi * x + phase[0]))
    return field_.ravel()


def generate(coef, seed=0):
    """Assemble the block system for `coef`; `seed` fixes ``beta_g`` and the exact solution.

    The right-hand side is ``A x*`` for a smooth, positive, seeded ``x*``.
    """
    beta, x_star = _draws(coef, seed)
    G, N = coef.G, coef.N
    V = coef.h * coef.h
    layer = coef.layer_of_cell()
    dscale = np.array(coef.diffusion_scale)[layer]
    oscale = np.array(coef.opacity_scale)[layer]
    inv_dt = 0.0 if np.isinf(coef.dt) else 1.0 / coef.dt
    omega = coef.omega_ie * V * np.ones(N)

    blocks = []
    d_gE = np.empty((G, N))
    d_Eg = np.empty((G, N))
    emission_total = np.zeros(N)
    for g in range(G):
        K = diffusion_operator(coef.nx, coef.ny, coef.d_rad[g] * dscale)
        absorb = coef.c * coef.sigma_p[g] * oscale * V
        emit = coef.c * coef.sigma_b[g] * oscale * beta[g] * V
        blocks.append(add_to_diagonal(K, inv_dt * V + absorb))
        d_gE[g] = -emit
        d_Eg[g] = -absorb
        emission_total += emit
    K_E = diffusion_operator(coef.nx, coef.ny, coef.d_e * dscale)
    K_I = diffusion_operator(coef.nx, coef.ny, coef.d_i * dscale)
    blocks.append(add_to_diagonal(K_E, coef.rho_c_e * inv_dt * V + emission_total + omega))
    blocks.append(add_to_diagonal(K_I, coef.rho_c_i * inv_dt * V + omega))

    s = BlockSystem(blocks, d_gE, d_Eg, -omega)
    rhs = np.empty_like(x_star)
    for k in range(G + 2):
        rhs[k] = spmv(blocks[k], x_star[k])
    for g in range(G):
        rhs[g] += d_gE[g] * x_star[-2]
        rhs[-2] += d_Eg[g] * x_star[g]
    rhs[-2] += s.d_EI * x_star[-1]
    rhs[-1] += s.d_IE * x_star[-2]
    return BlockSystem(blocks, d_gE, d_Eg, -omega, rhs=rhs)


def _draws(coef, seed):
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0.5, 1.5, size=(coef.G, coef.N))
    x_star = np.stack([_manufactured(coef.nx, coef.ny, rng) for _ in range(coef.G + 2)])
    return beta, x_star


def manufactured_solution(coef, seed=0):
    """The ``x*`` used by `generate` for the same arguments, shape ``(G + 2, N)``."""
    return _draws(coef, seed)[1]


def _group_profile(G, base, exponent):
    """``base * (g + 1)^(-exponent)``: opacity falls off toward high groups."""
    return tuple(base * (np.arange(G) + 1.0) ** (-exponent))


def capsule_profile(preset, nx=32, ny=32, G=1, dt=None):
    """Coefficients for one of the named presets.

    ``smooth``
        uniform material, moderate opacities;
    ``layered``
        three material layers whose diffusion coefficients jump by 1e3;
    ``stiff``
        the layered material plus a 1e6 opacity contrast between layers and a
        short time step: strongly coupled low groups and optically thick
        regions next to nearly transparent ones, with weakly coupled high
        groups.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    common = dict(nx=nx, ny=ny, G=G, name=preset)
    if preset == "smooth":
        sig = _group_profile(G, 10.0, 1.0)
        return MgdCoefficients(
            dt=1.0 if dt is None else dt,
            d_rad=tuple(1.0 / (3.0 * s) for s in sig),
            sigma_p=sig,
            sigma_b=sig,
            d_e=0.1,
            d_i=0.05,
            omega_ie=5.0,
            **common,
        )
    bounds = (1.0 / 3.0, 2.0 / 3.0)
    if preset == "layered":
        sig = _group_profile(G, 10.0, 1.5)
        return MgdCoefficients(
            dt=1.0 if dt is None else dt,
            d_rad=tuple(1.0 / (3.0 * s) for s in sig),
            sigma_p=sig,
            sigma_b=sig,
            d_e=0.1,
            d_i=0.05,
            omega_ie=5.0,
            layer_bounds=bounds,
            diffusion_scale=(1.0, 1e-3, 1.0),
            opacity_scale=(1.0, 1.0, 1.0),
            **common,
        )
    sig = _group_profile(G, 1e3, 5.0)
    return MgdCoefficients(
        dt=1.0 if dt is None else dt,
        d_rad=tuple(1.0 / (3.0 * s) for s in sig),
        sigma_p=sig,
        sigma_b=tuple(1e3 * s for s in sig),
        d_e=1.0,
        d_i=0.1,
        rho_c_e=1e2,
        rho_c_i=1e2,
        omega_ie=1e3,
        layer_bounds=bounds,
        diffusion_scale=(1.0, 1e-3, 1.0),
        opacity_scale=(1.0, 1e3, 1e-3),
        **common,
    )
