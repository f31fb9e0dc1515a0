"""Mode-by-mode action of the wave group and its trigonometric building blocks.

Each harmonic mode of degree ``l`` evolves under the 2x2 matrix
``[[cos wt, sin(wt)/w], [-w sin wt, cos wt]]`` with ``w = sqrt(l(l+1))``;
the null mode ``l = 0`` is free motion ``[[1, t], [0, 1]]``.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .fields import ProductState, SpectralField
from .harmonics import mode_degrees

__all__ = [
    "ModeMatrix",
    "TrigKind",
    "group_mode_matrix",
    "si_mode_matrix",
    "group_degree_entries",
    "si_degree_entries",
    "apply_mode_matrices",
    "apply_group",
    "apply_trig",
    "apply_si_resolvent",
]


class ModeMatrix(NamedTuple):
    a11: float
    a12: float
    a21: float
    a22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def __matmul__(self, other: "ModeMatrix") -> "ModeMatrix":
        return ModeMatrix(*(self.as_array() @ other.as_array()).ravel())


class TrigKind(str, Enum):
    COSINE = "cosine"
    SCALED_SINE = "scaled-sine"
    DERIV_SINE = "deriv-sine"


def group_mode_matrix(l: int, t: float) -> ModeMatrix:
    if l == 0:
        return ModeMatrix(1.0, t, 0.0, 1.0)
    w = math.sqrt(l * (l + 1.0))
    c, s = math.cos(w * t), math.sin(w * t)
    return ModeMatrix(c, s / w, -w * s, c)


def si_mode_matrix(l: int, h: float) -> ModeMatrix:
    """Resolvent ``(I - h A_l)^{-1}`` of the semi-implicit Euler step."""
    if h <= 0:
        raise ValueError("step size must be positive")
    lam = l * (l + 1.0)
    d = 1.0 / (1.0 + h * h * lam)
    return ModeMatrix(d, h * d, -h * lam * d, d)


def group_degree_entries(kappa: int, t: float) -> tuple[np.ndarray, ...]:
    """Entries of the group matrix for every degree ``0..kappa``."""
    ls = np.arange(kappa + 1, dtype=float)
    w = np.sqrt(ls * (ls + 1.0))
    c = np.cos(w * t)
    s = np.sin(w * t)
    a12 = np.empty_like(w)
    a12[0] = t
    a12[1:] = s[1:] / w[1:]
    return c, a12, -w * s, c.copy()


def si_degree_entries(kappa: int, h: float) -> tuple[np.ndarray, ...]:
    if h <= 0:
        raise ValueError("step size must be positive")
    ls = np.arange(kappa + 1, dtype=float)
    lam = ls * (ls + 1.0)
    d = 1.0 / (1.0 + h * h * lam)
    return d, h * d, -h * lam * d, d.copy()


def expand_to_modes(kappa: int, per_degree: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
    ls = mode_degrees(kappa)
    return tuple(np.take(e, ls) for e in per_degree)


def apply_mode_matrices(X: ProductState, entries: tuple[np.ndarray, ...]) -> ProductState:
    """Apply per-mode 2x2 matrices given as flat entry arrays."""
    a11, a12, a21, a22 = entries
    u, v = X.u.coeffs, X.v.coeffs
    return ProductState(
        SpectralField(X.kappa, a11 * u + a12 * v),
        SpectralField(X.kappa, a21 * u + a22 * v),
    )


def _mode_entries_from(matrix_fn: Callable[[int, float], ModeMatrix], kappa: int, t: float):
    per_degree = np.array([tuple(matrix_fn(l, t)) for l in range(kappa + 1)]).T
    return expand_to_modes(kappa, tuple(per_degree))


def apply_group(X: ProductState, t: float, matrix_fn: Callable[[int, float], ModeMatrix] | None = None) -> ProductState:
    """``E(t) X``.  ``matrix_fn`` substitutes the per-degree matrix (for checks)."""
    if matrix_fn is None:
        entries = expand_to_modes(X.kappa, group_degree_entries(X.kappa, t))
    else:
        entries = _mode_entries_from(matrix_fn, X.kappa, t)
    return apply_mode_matrices(X, entries)


def apply_si_resolvent(X: ProductState, h: float) -> ProductState:
    return apply_mode_matrices(X, expand_to_modes(X.kappa, si_degree_entries(X.kappa, h)))


def apply_trig(kind: TrigKind | str, u: SpectralField, t: float) -> SpectralField:
    """Cosine ``C(t)``, scaled sine ``(-Delta)^{-1/2} S(t)`` or ``(-Delta)^{1/2} S(t)``."""
    kind = TrigKind(kind)
    ls = np.arange(u.kappa + 1, dtype=float)
    w = np.sqrt(ls * (ls + 1.0))
    if kind is TrigKind.COSINE:
        fac = np.cos(w * t)
    elif kind is TrigKind.SCALED_SINE:
        fac = np.empty_like(w)
        fac[0] = t
        fac[1:] = np.sin(w[1:] * t) / w[1:]
    else:
        fac = w * np.sin(w * t)
    return SpectralField(u.kappa, np.take(fac, mode_degrees(u.kappa)) * u.coeffs)
