"""Associated Legendre functions and spherical harmonics on the unit sphere.

Conventions
-----------
* ``P_{l,m}`` carries the Condon-Shortley phase ``(-1)^m``.
* ``L_{l,m}(theta) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_{l,m}(cos theta)``.
* Complex harmonics ``Y_{l,m} = L_{l,m}(theta) exp(i m phi)`` for ``m >= 0`` and
  ``Y_{l,m} = (-1)^m conj(Y_{l,-m})`` for ``m < 0``.
* The real orthonormal basis used for all spectral storage is
  ``Y_{l,0}``, ``sqrt(2) Re Y_{l,m}`` (``m > 0``) and ``sqrt(2) Im Y_{l,|m|}``
  (``m < 0``).

Coefficients of a band-limited field of degree ``kappa`` are stored in a flat
array of length ``(kappa+1)**2``; mode ``(l, m)`` lives at ``l*l + m + l``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "HarmonicIndex",
    "SphericalPoint",
    "mode_index",
    "n_modes",
    "mode_degrees",
    "mode_orders",
    "assoc_legendre",
    "normalized_legendre",
    "normalized_legendre_table",
    "sph_harm_complex",
    "sph_harm_real",
]

FOUR_PI = 4.0 * math.pi

# below this degree the closed normalisation constant is cheap and exact enough
_DIRECT_NORMALISATION_MAX_L = 30


class HarmonicIndex(NamedTuple):
    l: int
    m: int

    def validate(self) -> "HarmonicIndex":
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid harmonic index (l={self.l}, m={self.m}): need |m| <= l")
        return self


class SphericalPoint(NamedTuple):
    theta: float
    phi: float

    def validate(self) -> "SphericalPoint":
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"colatitude {self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise ValueError(f"longitude {self.phi} outside [0, 2 pi)")
        return self

    def to_cartesian(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def mode_index(l: int, m: int) -> int:
    """Flat storage index of mode ``(l, m)``."""
    return l * l + m + l


def n_modes(kappa: int) -> int:
    return (kappa + 1) ** 2


@lru_cache(maxsize=64)
def _degree_order_tables(kappa: int) -> tuple[np.ndarray, np.ndarray]:
    ls = np.repeat(np.arange(kappa + 1), 2 * np.arange(kappa + 1) + 1)
    ms = np.arange(n_modes(kappa)) - ls * ls - ls
    ls.setflags(write=False)
    ms.setflags(write=False)
    return ls, ms


def mode_degrees(kappa: int) -> np.ndarray:
    """Degree ``l`` of every flat index up to truncation ``kappa`` (read-only)."""
    return _degree_order_tables(kappa)[0]


def mode_orders(kappa: int) -> np.ndarray:
    """Order ``m`` of every flat index up to truncation ``kappa`` (read-only)."""
    return _degree_order_tables(kappa)[1]


def _check_lm(l: int, m: int) -> None:
    if l < 0 or m < 0 or m > l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")


def assoc_legendre(l: int, m: int, x):
    """Associated Legendre function ``P_{l,m}(x)`` with Condon-Shortley phase.

    Uses the upward recurrence in ``l`` started from the diagonal
    ``P_{m,m} = (-1)^m (2m-1)!! (1-x^2)^{m/2}``.  Accepts scalar or array ``x``.
    """
    _check_lm(l, m)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("assoc_legendre requires |x| <= 1")
    somx2 = np.sqrt((1.0 - xa) * (1.0 + xa))
    pmm = np.ones_like(xa)
    fact = 1.0
    for _ in range(m):
        pmm = -pmm * fact * somx2
        fact += 2.0
    if l == m:
        out = pmm
    else:
        pmmp1 = xa * (2 * m + 1) * pmm
        if l == m + 1:
            out = pmmp1
        else:
            for ll in range(m + 2, l + 1):
                pll = (xa * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
                pmm, pmmp1 = pmmp1, pll
            out = pmmp1
    return float(out) if np.ndim(x) == 0 else out


def normalized_legendre_table(lmax: int, x) -> np.ndarray:
    """Table of ``L_{l,m}`` at the points ``x = cos(theta)``.

    Returns an array of shape ``(len(x), lmax+1, lmax+1)`` indexed
    ``[point, m, l]``; entries with ``l < m`` are zero.  Normalised
    recurrences are used throughout, so no factorials are formed.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0):
        raise ValueError("normalized_legendre_table requires |x| <= 1")
    s = np.sqrt((1.0 - x) * (1.0 + x))
    out = np.zeros((x.size, lmax + 1, lmax + 1))
    diag = np.full(x.size, 1.0 / math.sqrt(FOUR_PI))
    for m in range(lmax + 1):
        if m > 0:
            diag = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * diag
        out[:, m, m] = diag
        if m + 1 <= lmax:
            out[:, m, m + 1] = math.sqrt(2 * m + 3) * x * diag
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[:, m, l] = a * (x * out[:, m, l - 1] - b * out[:, m, l - 2])
    return out


def _normalisation(l: int, m: int) -> float:
    # (l-m)!/(l+m)! accumulated in log space
    log_ratio = math.lgamma(l - m + 1) - math.lgamma(l + m + 1)
    return math.sqrt((2 * l + 1) / FOUR_PI * math.exp(log_ratio))


def normalized_legendre(l: int, m: int, theta):
    """``L_{l,m}(theta)`` for ``0 <= m <= l``, scalar or array ``theta``."""
    _check_lm(l, m)
    th = np.asarray(theta, dtype=float)
    if np.any((th < 0.0) | (th > math.pi)):
        raise ValueError("colatitude must lie in [0, pi]")
    x = np.clip(np.cos(th), -1.0, 1.0)
    if l <= _DIRECT_NORMALISATION_MAX_L:
        out = _normalisation(l, m) * np.asarray(assoc_legendre(l, m, x))
    else:
        out = _normalized_column(l, m, x.ravel()).reshape(x.shape)
    return float(out) if np.ndim(theta) == 0 else out


def _normalized_column(l: int, m: int, x: np.ndarray) -> np.ndarray:
    s = np.sqrt((1.0 - x) * (1.0 + x))
    diag = np.full(x.shape, 1.0 / math.sqrt(FOUR_PI))
    for k in range(1, m + 1):
        diag = -math.sqrt((2 * k + 1) / (2.0 * k)) * s * diag
    if l == m:
        return diag
    prev, cur = diag, math.sqrt(2 * m + 3) * x * diag
    for ll in range(m + 2, l + 1):
        a = math.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m))
        b = math.sqrt(((ll - 1.0) ** 2 - m * m) / (4.0 * (ll - 1.0) ** 2 - 1.0))
        prev, cur = cur, a * (x * cur - b * prev)
    return cur


def sph_harm_complex(l: int, m: int, theta, phi):
    """Complex spherical harmonic ``Y_{l,m}(theta, phi)``."""
    HarmonicIndex(l, m).validate()
    if m >= 0:
        return normalized_legendre(l, m, theta) * np.exp(1j * m * np.asarray(phi, dtype=float))
    return (-1) ** m * np.conj(sph_harm_complex(l, -m, theta, phi))


def sph_harm_real(l: int, m: int, theta, phi):
    """Real orthonormal basis function indexed by signed order ``m``."""
    HarmonicIndex(l, m).validate()
    if m == 0:
        return normalized_legendre(l, 0, theta) * np.ones_like(np.asarray(phi, dtype=float))
    leg = normalized_legendre(l, abs(m), theta)
    phi = np.asarray(phi, dtype=float)
    if m > 0:
        return math.sqrt(2.0) * leg * np.cos(m * phi)
    return math.sqrt(2.0) * leg * np.sin(-m * phi)
