"""Parameters, grids and field containers shared by the solver modules.

Fields are stored on cell centres without ghost layers.  Scalars have shape
``grid.shape``; vectors carry all three Cartesian components and have shape
``(3,) + grid.shape``.  Boundary conditions are never stored in the arrays:
:mod:`heliumgl.gridops` rebuilds ghost layers by reflection whenever a
stencil needs them, so every state satisfies the discrete boundary
conditions by construction.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np


class StateError(ValueError):
    """Raised when a field violates a positivity or finiteness invariant."""


@dataclass(frozen=True)
class ModelParams:
    """Constitutive constants and source terms (all dimensionless)."""

    tau: float = 1.0
    kappa: float = 1.0
    nu: float = 0.0
    lam: float = 0.1
    theta_lambda: float = 2.17
    c0: float = 1.0
    k0_const: float = 1.0
    k0_slope: float = 0.0
    eps_reg: float = 1e-10
    g: tuple = (0.0, 0.0, 0.0)
    r: float = 0.0
    omega_bc: tuple = (0.0, 0.0, 0.0)

    def k0(self, theta):
        """Thermal conductivity ``k0_const + k0_slope * theta``."""
        return self.k0_const + self.k0_slope * np.asarray(theta)

    def body_force(self, grid: "Grid") -> np.ndarray:
        g = np.asarray(self.g, dtype=float)
        if g.ndim == 1:
            return np.broadcast_to(g.reshape((3,) + (1,) * grid.dim), (3,) + grid.shape)
        return g

    def heat_supply(self, grid: "Grid") -> np.ndarray:
        return np.broadcast_to(np.asarray(self.r, dtype=float), grid.shape)


def validate_params(params: ModelParams, theta_range=(1.0, 3.0)) -> list[str]:
    """Return the list of violated admissibility constraints (empty if none).

    ``theta_range`` is the closed temperature interval over which the affine
    conductivity law must stay nonnegative.
    """
    lo, hi = theta_range
    if not (0 < lo <= hi):
        raise ValueError("theta_range must be a nonempty positive interval")
    out = []
    if not params.tau > 0:
        out.append("tau nonpositive")
    if not params.kappa > 0:
        out.append("kappa nonpositive")
    if not params.theta_lambda > 0:
        out.append("theta_lambda nonpositive")
    if not params.c0 > 0:
        out.append("c0 nonpositive")
    if params.nu < 0:
        out.append("nu negative")
    if params.lam < 0:
        out.append("lambda negative")
    if params.eps_reg < 0:
        out.append("eps_reg negative")
    # affine law: the minimum sits at an endpoint
    for th in (lo, hi):
        if params.k0(th) < 0:
            out.append(f"k0 negative at θ={th:g}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred lattice on ``[0, nx*hx] x [0, ny*hy]``.

    ``dim=1`` uses ``ny=1``; every y-derivative then vanishes.  The z
    direction is never resolved (2D-slab fields are independent of z).
    """

    dim: int
    nx: int
    ny: int = 1
    hx: float = 1.0
    hy: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.nx < 4 or (self.dim == 2 and self.ny < 4):
            raise ValueError("need at least 4 cells per resolved axis")
        if self.dim == 1 and self.ny != 1:
            raise ValueError("1D grids have ny=1")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("grid spacings must be positive")

    @classmethod
    def line(cls, nx: int, length: float = 1.0) -> "Grid":
        return cls(1, nx, 1, length / nx, 1.0)

    @classmethod
    def slab(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        return cls(2, nx, ny, lx / nx, ly / ny)

    @property
    def shape(self) -> tuple:
        return (self.nx,) if self.dim == 1 else (self.nx, self.ny)

    @property
    def spacing(self) -> tuple:
        return (self.hx, self.hy)[: self.dim]

    @property
    def extent(self) -> tuple:
        return (self.nx * self.hx, self.ny * self.hy)[: self.dim]

    @property
    def cell_volume(self) -> float:
        return self.hx if self.dim == 1 else self.hx * self.hy

    def coords(self):
        """Cell-centre coordinate arrays ``(X, Y)`` broadcast to ``shape``."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        if self.dim == 1:
            return x, np.zeros_like(x)
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def integrate(self, f) -> float:
        return float(np.sum(f) * self.cell_volume)


SCALARS = ("phi", "phi_s", "p", "rho", "theta")
VECTORS = ("v_s", "v_n")


@dataclass
class FieldState:
    """Unknowns of the real formulation on the cell centres of ``grid``."""

    grid: Grid
    phi: np.ndarray
    v_s: np.ndarray
    phi_s: np.ndarray
    v_n: np.ndarray
    p: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def copy(self) -> "FieldState":
        return dataclasses.replace(
            self, **{k: getattr(self, k).copy() for k in SCALARS + VECTORS}
        )

    def replace(self, **kw) -> "FieldState":
        return dataclasses.replace(self, **kw)

    def check(self, tol_phase: float = 1e-6) -> list[str]:
        """Raise on nonpositive/nonfinite rho, theta; return soft warnings."""
        for name in SCALARS + VECTORS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise StateError(f"{name} not finite")
        if np.any(self.rho <= 0):
            raise StateError("rho nonpositive")
        if np.any(self.theta <= 0):
            raise StateError("theta nonpositive")
        excess = float(np.max(self.phi**2)) - 1.0
        return [f"phi^2 exceeds 1 by {excess:.3g}"] if excess > tol_phase else []

    def max_diff(self, other: "FieldState") -> float:
        return max(
            float(np.max(np.abs(getattr(self, k) - getattr(other, k))))
            for k in SCALARS + VECTORS
        )


@dataclass
class ComplexState:
    """Gauge-transformed unknowns ``(psi, A, phi_pot)`` plus shared fields.

    ``chi`` is the gauge the complex variables are expressed in; the stepper
    needs its material rate and gradient (see :mod:`heliumgl.gauge`).
    """

    grid: Grid
    psi: np.ndarray
    A: np.ndarray
    phi_pot: np.ndarray
    v_n: np.ndarray
    p: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    chi: object = None
    t: float = 0.0

    def copy(self) -> "ComplexState":
        names = ("psi", "A", "phi_pot", "v_n", "p", "rho", "theta")
        return dataclasses.replace(self, **{k: getattr(self, k).copy() for k in names})

    def replace(self, **kw) -> "ComplexState":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------- initialisers

def _tanh_interface(grid, width=None, centre=None, amplitude=1.0):
    X, _ = grid.coords()
    L = grid.extent[0]
    width = 0.1 * L if width is None else width
    centre = 0.5 * L if centre is None else centre
    return 0.5 * amplitude * (1.0 + np.tanh((X - centre) / width))


def _cosine(grid, mean=0.0, amplitude=0.1, mode=1):
    X, _ = grid.coords()
    return mean + amplitude * np.cos(mode * np.pi * X / grid.extent[0])


def _random_smooth(grid, seed=0, mean=0.0, amplitude=0.1, modes=4):
    """Sum of low cosine modes with seeded random coefficients, scaled so
    the deviation from ``mean`` never exceeds ``amplitude``."""
    rng = np.random.default_rng(int(seed))
    X, Y = grid.coords()
    lx = grid.extent[0]
    ly = grid.extent[1] if grid.dim == 2 else 1.0
    modes = int(modes)
    out = np.zeros(grid.shape)
    ky_range = range(modes + 1) if grid.dim == 2 else [0]
    for kx in range(modes + 1):
        for ky in ky_range:
            if kx == 0 and ky == 0:
                continue
            c = rng.normal() / (1.0 + kx * kx + ky * ky)
            out += c * np.cos(kx * np.pi * X / lx) * np.cos(ky * np.pi * Y / ly)
    peak = float(np.max(np.abs(out)))
    if peak > 0:
        out *= amplitude / peak
    return mean + out


PROFILES: dict[str, Callable] = {
    "tanh-interface": _tanh_interface,
    "cosine": _cosine,
    "random-smooth": _random_smooth,
}

DEFAULTS = {"phi": 0.0, "v_s": 0.0, "phi_s": 0.0, "v_n": 0.0, "p": 0.0,
            "rho": 1.0, "theta": 2.5}


def _build(grid, name, spec):
    shape = (3,) + grid.shape if name in VECTORS else grid.shape
    if isinstance(spec, str):
        spec = {"profile": spec}
    if isinstance(spec, Mapping):
        kw = dict(spec)
        prof = PROFILES[kw.pop("profile")]
        val = prof(grid, **kw)
        if name in VECTORS:
            out = np.zeros(shape)
            out[0] = val
            return out
        return np.asarray(val, dtype=float).copy()
    if callable(spec):
        X, Y = grid.coords()
        val = np.asarray(spec(X, Y), dtype=float)
    else:
        val = np.asarray(spec, dtype=float)
    if name in VECTORS and val.ndim == 1 and val.shape == (3,):
        val = val.reshape((3,) + (1,) * grid.dim)
    return np.array(np.broadcast_to(val, shape), dtype=float)


def new_state(grid: Grid, init: Mapping | None = None, snapshot=None,
              t: float = 0.0) -> FieldState:
    """Build a :class:`FieldState`.

    ``init`` maps field names to a constant, an array, a callable ``f(X, Y)``
    or a profile name from :data:`PROFILES` (optionally as a dict with
    profile keyword arguments).  Missing fields take :data:`DEFAULTS`.
    ``snapshot`` loads a file written by :func:`write_snapshot` instead.
    """
    if snapshot is not None:
        return read_snapshot(snapshot)
    init = dict(init or {})
    unknown = set(init) - set(DEFAULTS)
    if unknown:
        raise KeyError(f"unknown fields: {sorted(unknown)}")
    vals = {k: _build(grid, k, init.get(k, DEFAULTS[k])) for k in DEFAULTS}
    if grid.dim == 1:
        # only the x component of a vector is meaningful in 1D
        for k in VECTORS:
            vals[k][1:] = 0.0
    state = FieldState(grid=grid, t=t, **vals)
    state.check()
    return state


# ------------------------------------------------------------------ snapshots

_HEADER = "helium-gl snapshot v1; dim={dim}; nx={nx}; ny={ny}; hx={hx!r}; hy={hy!r}"
_COLUMNS = ["ix", "iy", "phi", "vsx", "vsy", "vsz", "phis",
            "vnx", "vny", "vnz", "p", "rho", "theta"]


def write_snapshot(state: FieldState, path) -> None:
    g = state.grid
    with open(path, "w", newline="") as fh:
        fh.write(_HEADER.format(dim=g.dim, nx=g.nx, ny=g.ny, hx=g.hx, hy=g.hy) + "\n")
        w = csv.writer(fh)
        w.writerow(_COLUMNS)
        phi, vs, phs, vn, p, rho, th = (
            np.reshape(a, a.shape[: a.ndim - g.dim] + (g.nx, g.ny))
            for a in (state.phi, state.v_s, state.phi_s, state.v_n, state.p,
                      state.rho, state.theta)
        )
        for ix in range(g.nx):
            for iy in range(g.ny):
                row = [phi[ix, iy], *vs[:, ix, iy], phs[ix, iy], *vn[:, ix, iy],
                       p[ix, iy], rho[ix, iy], th[ix, iy]]
                w.writerow([ix, iy] + [repr(float(v)) for v in row])


def read_snapshot(path) -> FieldState:
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("helium-gl snapshot v1"):
            raise ValueError(f"{path}: not a helium-gl snapshot")
        meta = dict(item.strip().split("=") for item in header.split(";")[1:])
        grid = Grid(int(meta["dim"]), int(meta["nx"]), int(meta["ny"]),
                    float(meta["hx"]), float(meta["hy"]))
        rows = list(csv.DictReader(fh))
    nx, ny = grid.nx, grid.ny
    cols = {c: np.zeros((nx, ny)) for c in _COLUMNS[2:]}
    for row in rows:
        ix, iy = int(row["ix"]), int(row["iy"])
        for c in _COLUMNS[2:]:
            cols[c][ix, iy] = float(row[c])

    def s(c):
        return cols[c].reshape(grid.shape)

    def v(a, b, c):
        return np.stack([s(a), s(b), s(c)])

    return FieldState(grid=grid, phi=s("phi"), v_s=v("vsx", "vsy", "vsz"),
                      phi_s=s("phis"), v_n=v("vnx", "vny", "vnz"), p=s("p"),
                      rho=s("rho"), theta=s("theta"))


__all__ = ["ModelParams", "Grid", "FieldState", "ComplexState", "StateError",
           "validate_params", "new_state", "write_snapshot", "read_snapshot",
           "PROFILES"]
