"""Band-limited fields on the sphere, the product state ``(u, v)`` and Sobolev norms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .harmonics import mode_degrees, mode_index, mode_orders, n_modes

__all__ = [
    "TruncationMismatch",
    "SpectralField",
    "ProductState",
    "sobolev_weights",
    "sobolev_norm",
    "product_norm",
    "project",
    "linear_combine",
    "to_complex",
    "from_complex",
]


class TruncationMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real orthonormal-basis coefficients of a degree-``kappa`` field.

    ``coeffs[l*l + m + l]`` holds the coefficient of mode ``(l, m)``.  The
    field takes ownership of the array and marks it read-only; operations
    return new fields.
    """

    kappa: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (n_modes(self.kappa),):
            raise ValueError(f"expected {n_modes(self.kappa)} coefficients for kappa={self.kappa}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, kappa: int) -> "SpectralField":
        return cls(kappa, np.zeros(n_modes(kappa)))

    @classmethod
    def unit(cls, kappa: int, l: int, m: int) -> "SpectralField":
        c = np.zeros(n_modes(kappa))
        c[mode_index(l, m)] = 1.0
        return cls(kappa, c)

    @classmethod
    def from_dict(cls, kappa: int, entries: dict[tuple[int, int], float]) -> "SpectralField":
        c = np.zeros(n_modes(kappa))
        for (l, m), val in entries.items():
            c[mode_index(l, m)] = val
        return cls(kappa, c)

    def __getitem__(self, lm: tuple[int, int]) -> float:
        l, m = lm
        if l > self.kappa or abs(m) > l:
            raise KeyError(lm)
        return float(self.coeffs[mode_index(l, m)])

    def _check(self, other: "SpectralField") -> None:
        if other.kappa != self.kappa:
            raise TruncationMismatch(f"truncations differ: {self.kappa} vs {other.kappa}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.kappa, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.kappa, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.kappa, a * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.kappa, -self.coeffs)

    def project(self, kappa: int) -> "SpectralField":
        return project(self, kappa)

    def to_csv(self, path: str | PathLike) -> None:
        """Dump as ``l,m,value`` rows in storage order."""
        with open(path, "w") as fh:
            fh.write("l,m,value\n")
            for l, m, val in zip(mode_degrees(self.kappa), mode_orders(self.kappa), self.coeffs):
                fh.write(f"{l},{m},{val:.17g}\n")

    @classmethod
    def from_csv(cls, path: str | PathLike) -> "SpectralField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        kappa = int(data[:, 0].max()) if data.size else 0
        c = np.zeros(n_modes(kappa))
        idx = (data[:, 0] * data[:, 0] + data[:, 1] + data[:, 0]).astype(int)
        c[idx] = data[:, 2]
        return cls(kappa, c)


@dataclass(frozen=True, eq=False)
class ProductState:
    """Position/velocity pair ``X = (u, v)`` sharing one truncation."""

    u: SpectralField
    v: SpectralField

    def __post_init__(self):
        if self.u.kappa != self.v.kappa:
            raise TruncationMismatch("position and velocity truncations differ")

    @property
    def kappa(self) -> int:
        return self.u.kappa

    @classmethod
    def zeros(cls, kappa: int) -> "ProductState":
        z = SpectralField.zeros(kappa)
        return cls(z, z)

    def __add__(self, other: "ProductState") -> "ProductState":
        return ProductState(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "ProductState") -> "ProductState":
        return ProductState(self.u - other.u, self.v - other.v)

    def project(self, kappa: int) -> "ProductState":
        return ProductState(project(self.u, kappa), project(self.v, kappa))


def sobolev_weights(kappa: int, s: float) -> np.ndarray:
    """Per-mode weights ``(1 + l(l+1))**s``."""
    ls = mode_degrees(kappa)
    return (1.0 + ls * (ls + 1.0)) ** s


def sobolev_norm(u: SpectralField, s: float) -> float:
    return math.sqrt(float(np.sum(sobolev_weights(u.kappa, s) * u.coeffs**2)))


def product_norm(X: ProductState, s: float = 0.0) -> float:
    """Norm on ``H^s x H^{s-1}``; ``s = 0`` is the energy-type norm used for errors."""
    return math.sqrt(sobolev_norm(X.u, s) ** 2 + sobolev_norm(X.v, s - 1.0) ** 2)


def project(u: SpectralField, kappa: int) -> SpectralField:
    """Truncate to degree ``kappa`` or zero-pad up to it."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == u.kappa:
        return u
    if kappa < u.kappa:
        return SpectralField(kappa, u.coeffs[: n_modes(kappa)])
    c = np.zeros(n_modes(kappa))
    c[: u.coeffs.size] = u.coeffs
    return SpectralField(kappa, c)


def linear_combine(a: float, u: SpectralField, b: float, w: SpectralField) -> SpectralField:
    if u.kappa != w.kappa:
        raise TruncationMismatch(f"truncations differ: {u.kappa} vs {w.kappa}")
    return SpectralField(u.kappa, a * u.coeffs + b * w.coeffs)


def to_complex(u: SpectralField) -> np.ndarray:
    """Complex-basis coefficients ``u^{l,m}`` in flat storage order.

    With ``c`` the coefficient of ``sqrt(2) Re Y_{l,m}`` and ``s`` that of
    ``sqrt(2) Im Y_{l,m}`` (``m > 0``), ``u^{l,m} = (c - i s)/sqrt(2)`` and
    ``u^{l,-m} = (-1)^m conj(u^{l,m})``.
    """
    ls = mode_degrees(u.kappa)
    ms = mode_orders(u.kappa)
    c = u.coeffs
    out = c.astype(complex)
    pos = ms > 0
    ip = np.flatnonzero(pos)
    ineg = ls[pos] * ls[pos] + ls[pos] - ms[pos]
    zp = (c[ip] - 1j * c[ineg]) / math.sqrt(2.0)
    out[ip] = zp
    out[ineg] = np.where(ms[pos] % 2 == 0, 1.0, -1.0) * np.conj(zp)
    return out


def from_complex(z: np.ndarray, kappa: int) -> SpectralField:
    """Inverse of :func:`to_complex`; only the ``m >= 0`` entries are read."""
    ls = mode_degrees(kappa)
    ms = mode_orders(kappa)
    out = np.zeros(n_modes(kappa))
    zero = ms == 0
    out[zero] = z[zero].real
    pos = ms > 0
    ip = np.flatnonzero(pos)
    ineg = ls[pos] * ls[pos] + ls[pos] - ms[pos]
    out[ip] = math.sqrt(2.0) * z[ip].real
    out[ineg] = -math.sqrt(2.0) * z[ip].imag
    return SpectralField(kappa, out)
