"""Gauss-Legendre x equiangular quadrature grid and spherical harmonic transforms.

``synthesize`` maps real-basis coefficients to grid values and ``analyze``
maps grid values back to coefficients by quadrature.  The grid for design
degree ``kappa`` carries enough nodes that the pointwise product of two
degree-``kappa`` fields is projected onto degree ``kappa`` without aliasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from os import PathLike

import numpy as np

from .fields import SpectralField
from .harmonics import n_modes, normalized_legendre_table

__all__ = [
    "GridError",
    "QuadratureGrid",
    "GridField",
    "gauss_legendre",
    "build_grid",
    "synthesize",
    "analyze",
    "grid_inner",
]

SQRT2 = math.sqrt(2.0)


class GridError(ValueError):
    """Truncation does not fit the grid, or grid shapes disagree."""


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    pn, pnm1 = (p1, p0) if n > 1 else (x, np.ones_like(x))
    return pn, n * (x * pn - pnm1) / (x * x - 1.0)


def gauss_legendre(n: int, tol: float = 1e-14, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes (strictly decreasing) and weights on ``[-1, 1]``.

    Newton iteration on ``P_n`` from the initial guess
    ``cos(pi (i - 1/4) / (n + 1/2))``.
    """
    if n < 1:
        raise ValueError("need at least one node")
    i = np.arange(1, n + 1)
    x = np.cos(math.pi * (i - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        pn, dp = _legendre_and_derivative(n, x)
        dx = pn / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Immutable quadrature grid; transform tables are built lazily once."""

    x: np.ndarray
    weights: np.ndarray
    nlon: int
    kappa: int

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(self.x)

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.nlon) / self.nlon

    @property
    def nlat(self) -> int:
        return self.x.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nlat, self.nlon)

    @cached_property
    def legendre(self) -> np.ndarray:
        """``L_{l,m}(theta_j)`` indexed ``[j, m, l]``."""
        table = normalized_legendre_table(self.kappa, self.x)
        table.setflags(write=False)
        return table

    @cached_property
    def _trig(self) -> tuple[np.ndarray, np.ndarray]:
        ang = np.outer(np.arange(self.kappa + 1), self.phi)
        c, s = np.cos(ang), np.sin(ang)
        c.setflags(write=False)
        s.setflags(write=False)
        return c, s

    def __getstate__(self):
        # drop cached tables when shipped to worker processes
        return {k: self.__dict__[k] for k in ("x", "weights", "nlon", "kappa")}

    def __setstate__(self, state):
        self.__dict__.update(state)


@lru_cache(maxsize=32)
def build_grid(kappa: int) -> QuadratureGrid:
    """Grid able to analyze products of two degree-``kappa`` fields exactly."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    nlat = max(1, math.ceil((3 * kappa + 2) / 2))
    nlon = 3 * kappa + 1
    x, w = gauss_legendre(nlat)
    for arr in (x, w):
        arr.setflags(write=False)
    return QuadratureGrid(x=x, weights=w, nlon=nlon, kappa=kappa)


@dataclass(frozen=True, eq=False)
class GridField:
    values: np.ndarray
    grid: QuadratureGrid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def to_csv(self, path: str | PathLike) -> None:
        """Write ``theta,phi,value`` rows, row-major over (node, longitude)."""
        th = np.repeat(self.grid.theta, self.grid.nlon)
        ph = np.tile(self.grid.phi, self.grid.nlat)
        data = np.column_stack([th, ph, self.values.ravel()])
        np.savetxt(path, data, delimiter=",", header="theta,phi,value", comments="", fmt="%.17g")


@lru_cache(maxsize=64)
def _order_indices(kappa: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # per m: flat indices of (l, m) and (l, -m) for l = m..kappa
    out = []
    for m in range(kappa + 1):
        ls = np.arange(m, kappa + 1)
        pos = ls * ls + ls + m
        neg = ls * ls + ls - m
        out.append((pos, neg))
    return tuple(out)


def _check_fits(kappa: int, grid: QuadratureGrid) -> None:
    if kappa > grid.kappa:
        raise GridError(f"truncation {kappa} exceeds grid design degree {grid.kappa}")


def synthesize(field: SpectralField, grid: QuadratureGrid) -> GridField:
    """Evaluate a real-basis expansion on the grid."""
    kappa = field.kappa
    _check_fits(kappa, grid)
    c = field.coeffs
    leg = grid.legendre
    a = np.zeros((grid.nlat, kappa + 1))
    b = np.zeros((grid.nlat, kappa + 1))
    for m, (pos, neg) in enumerate(_order_indices(kappa)):
        lm = leg[:, m, m : kappa + 1]
        if m == 0:
            a[:, 0] = lm @ c[pos]
        else:
            a[:, m] = SQRT2 * (lm @ c[pos])
            b[:, m] = SQRT2 * (lm @ c[neg])
    cos_t, sin_t = grid._trig
    values = a @ cos_t[: kappa + 1] + b @ sin_t[: kappa + 1]
    return GridField(values, grid)


def analyze(field: GridField, kappa: int) -> SpectralField:
    """Project grid values onto the real basis up to degree ``kappa``."""
    grid = field.grid
    _check_fits(kappa, grid)
    cos_t, sin_t = grid._trig
    dphi = 2.0 * math.pi / grid.nlon
    wv = field.values * (grid.weights[:, None] * dphi)
    fc = wv @ cos_t[: kappa + 1].T
    fs = wv @ sin_t[: kappa + 1].T
    leg = grid.legendre
    out = np.zeros(n_modes(kappa))
    for m, (pos, neg) in enumerate(_order_indices(kappa)):
        lm = leg[:, m, m : kappa + 1]
        if m == 0:
            out[pos] = fc[:, 0] @ lm
        else:
            out[pos] = SQRT2 * (fc[:, m] @ lm)
            out[neg] = SQRT2 * (fs[:, m] @ lm)
    return SpectralField(kappa, out)


def grid_inner(f: GridField, g: GridField) -> float:
    """Quadrature value of the L2 inner product of two grid fields."""
    grid = f.grid
    dphi = 2.0 * math.pi / grid.nlon
    return float(np.sum(grid.weights[:, None] * f.values * g.values) * dphi)

