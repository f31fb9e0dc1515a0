"""Isotropic Q-Wiener increments in the real spherical-harmonic basis.

Paths are lazy: an increment is regenerated on demand from a counter-based
Philox stream keyed by ``(base_seed, sample)`` with the time step in the
counter, so any step of any sample can be produced independently of the
order in which work is scheduled.  Coarse paths (fewer modes, longer steps)
are views on the same fine stream, which couples every resolution to one
realisation of the noise.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Iterator

import numpy as np

from .fields import SpectralField
from .harmonics import mode_degrees, mode_orders, n_modes

__all__ = [
    "AngularPowerSpectrum",
    "NoisePath",
    "power_spectrum",
    "trace_q",
    "sample_path",
    "restrict_modes",
    "coarsen_time",
    "path_digest",
]

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class AngularPowerSpectrum:
    """Eigenvalues ``A_l`` of the covariance operator, ``l = 0..kappa``."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d array")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("angular power spectrum must be finite and nonnegative")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def kappa(self) -> int:
        return self.values.size - 1

    def __getitem__(self, l: int) -> float:
        return float(self.values[l])

    def mode_std(self, kappa: int) -> np.ndarray:
        """Per-mode standard deviation ``sqrt(A_l)`` for flat indices up to ``kappa``."""
        if kappa > self.kappa:
            raise ValueError(f"spectrum only defined up to degree {self.kappa}")
        return np.sqrt(self.values)[mode_degrees(kappa)]


def power_spectrum(alpha: float, kappa: int) -> AngularPowerSpectrum:
    """``A_0 = 1`` and ``A_l = l**-alpha`` for ``l >= 1``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    ls = np.arange(kappa + 1, dtype=float)
    a = np.ones(kappa + 1)
    a[1:] = ls[1:] ** (-alpha)
    return AngularPowerSpectrum(a)


def trace_q(A: AngularPowerSpectrum, kappa: int) -> float:
    """``sum_{l <= kappa} (2l + 1) A_l``."""
    ls = np.arange(kappa + 1)
    return float(np.sum((2 * ls + 1) * A.values[: kappa + 1]))


def _philox_key(base: int, sample: int) -> np.ndarray:
    ss = np.random.SeedSequence([base & _SEED_MASK, sample])
    return ss.generate_state(2, np.uint64)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Wiener coefficient increments over ``n_ref`` steps of size ``h_ref``.

    ``kappa`` and ``factors`` describe the view: modes above ``kappa`` are
    dropped and successive coarsenings group consecutive increments.
    """

    base_seed: int
    sample: int
    spectrum: AngularPowerSpectrum
    kappa_ref: int
    h_ref: float
    n_ref: int
    kappa: int = -1
    factors: tuple[int, ...] = ()
    _key: np.ndarray = field(init=False, repr=False)
    _std: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.h_ref <= 0 or self.n_ref <= 0 or self.kappa_ref < 0:
            raise ValueError("step size, step count and truncation must be positive")
        if self.kappa < 0:
            object.__setattr__(self, "kappa", self.kappa_ref)
        object.__setattr__(self, "_key", _philox_key(self.base_seed, self.sample))
        # per-mode standard deviation sqrt(A_l h_ref)
        object.__setattr__(self, "_std", self.spectrum.mode_std(self.kappa_ref) * math.sqrt(self.h_ref))

    @property
    def factor(self) -> int:
        return math.prod(self.factors)

    @property
    def h(self) -> float:
        return self.h_ref * self.factor

    @property
    def n_steps(self) -> int:
        return self.n_ref // self.factor

    def fine_increment(self, step: int) -> np.ndarray:
        """Full-resolution increment ``step`` of the underlying fine path."""
        if not 0 <= step < self.n_ref:
            raise IndexError(f"step {step} outside [0, {self.n_ref})")
        bitgen = np.random.Philox(key=self._key, counter=np.array([0, step, 0, 0], dtype=np.uint64))
        z = np.random.Generator(bitgen).standard_normal(n_modes(self.kappa_ref))
        z *= self._std
        return z

    def _coarse(self, level: int, step: int) -> np.ndarray:
        if level == 0:
            return self.fine_increment(step)
        f = self.factors[level - 1]
        total = self._coarse(level - 1, step * f).copy()
        for j in range(1, f):
            total += self._coarse(level - 1, step * f + j)
        return total

    def increment_array(self, step: int) -> np.ndarray:
        if not 0 <= step < self.n_steps:
            raise IndexError(f"step {step} outside [0, {self.n_steps})")
        return self._coarse(len(self.factors), step)[: n_modes(self.kappa)]

    def increment(self, step: int) -> SpectralField:
        return SpectralField(self.kappa, self.increment_array(step))

    def increments(self) -> Iterator[SpectralField]:
        for n in range(self.n_steps):
            yield self.increment(n)

    def to_array(self) -> np.ndarray:
        """All increments stacked, shape ``(n_steps, (kappa+1)**2)``."""
        return np.stack([self.increment_array(n) for n in range(self.n_steps)])

    def to_csv(self, path: str | PathLike) -> None:
        """Dump increments as ``step,l,m,value`` rows."""
        ls = mode_degrees(self.kappa)
        ms = mode_orders(self.kappa)
        with open(path, "w") as fh:
            fh.write("step,l,m,value\n")
            for n in range(self.n_steps):
                for l, m, val in zip(ls, ms, self.increment_array(n)):
                    fh.write(f"{n},{l},{m},{val:.17g}\n")


def sample_path(
    seed: tuple[int, int],
    A: AngularPowerSpectrum,
    kappa_ref: int,
    h_ref: float,
    n_ref: int,
) -> NoisePath:
    """Noise path for ``seed = (base, sample)``.

    Each real-basis coefficient increment of mode ``(l, m)`` is drawn from
    ``N(0, A_l h_ref)`` independently of all others.
    """
    base, sample = seed
    return NoisePath(int(base), int(sample), A, kappa_ref, h_ref, n_ref)


def restrict_modes(path: NoisePath, kappa: int) -> NoisePath:
    if kappa < 0 or kappa > path.kappa:
        raise ValueError(f"cannot restrict a degree-{path.kappa} path to {kappa}")
    return replace(path, kappa=kappa)


def coarsen_time(path: NoisePath, factor: int) -> NoisePath:
    """Group ``factor`` consecutive increments, summed in ascending time order."""
    if factor < 1 or path.n_steps % factor:
        raise ValueError(f"factor {factor} does not divide {path.n_steps} steps")
    if factor == 1:
        return path
    return replace(path, factors=path.factors + (factor,))


def path_digest(path: NoisePath) -> str:
    """SHA-256 over the raw increment bytes, for coupling checks."""
    h = hashlib.sha256()
    for n in range(path.n_steps):
        h.update(path.increment_array(n).tobytes())
    return h.hexdigest()
