"""Problem definitions: nonlinearities, initial data and experiment presets."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .fields import ProductState, SpectralField, from_complex, project, to_complex
from .grid import GridError, GridField, QuadratureGrid, analyze, build_grid, synthesize
from .harmonics import mode_degrees, mode_orders, n_modes
from .noise import AngularPowerSpectrum, power_spectrum

__all__ = [
    "Nonlinearity",
    "ProblemSpec",
    "PRESETS",
    "preset",
    "scalar_map",
    "eval_f",
    "coef_sine_complex",
    "apply_g_increment",
    "initial_state",
    "default_gamma",
    "default_alpha",
]

# offset used to sit just above the admissibility thresholds
THRESHOLD_OFFSET = 1e-6
_SQRT2 = float(np.sqrt(2.0))


class Nonlinearity(str, Enum):
    ZERO = "zero"
    COEF_SINE = "coef-sine"
    SINE = "sine"
    RATIONAL = "rational"
    IDENTITY = "identity"

    @property
    def pointwise(self) -> bool:
        return self in (Nonlinearity.SINE, Nonlinearity.RATIONAL)

    @classmethod
    def parse(cls, name: "str | Nonlinearity") -> "Nonlinearity":
        if isinstance(name, cls):
            return name
        aliases = {
            "coefficientwise-sine": cls.COEF_SINE,
            "pointwise-sine": cls.SINE,
            "sin": cls.SINE,
            "pointwise-rational": cls.RATIONAL,
            "additive": cls.IDENTITY,
        }
        key = str(name).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


def default_gamma(beta: float) -> float:
    return beta + 0.5 + THRESHOLD_OFFSET


def default_alpha(delta: float) -> float:
    return 2.0 * delta + THRESHOLD_OFFSET


@dataclass(frozen=True)
class ProblemSpec:
    """Semilinear stochastic wave equation ``u_tt = Delta u + f(u) + g(u) dW``.

    ``gamma`` and ``alpha`` default to just above ``beta + 1/2`` and
    ``2 delta`` respectively.  The quadrature grid is built on demand when a
    pointwise nonlinearity needs it.
    """

    kappa: int
    T: float = 1.0
    f: Nonlinearity = Nonlinearity.COEF_SINE
    g: Nonlinearity = Nonlinearity.IDENTITY
    beta: float = 1.0
    delta: float = 1.0
    gamma: float | None = None
    alpha: float | None = None
    grid: QuadratureGrid | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "f", Nonlinearity.parse(self.f))
        object.__setattr__(self, "g", Nonlinearity.parse(self.g))
        if self.gamma is None:
            object.__setattr__(self, "gamma", default_gamma(self.beta))
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.delta))
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not self.gamma > self.beta + 0.5:
            raise ValueError(f"gamma={self.gamma} must exceed beta + 1/2 = {self.beta + 0.5}")
        if not self.alpha > 2.0 * self.delta:
            raise ValueError(f"alpha={self.alpha} must exceed 2*delta = {2.0 * self.delta}")
        if self.f is Nonlinearity.IDENTITY:
            raise ValueError("identity is only valid as the noise coefficient g")
        if self.g is Nonlinearity.COEF_SINE:
            raise ValueError("coefficientwise sine is only defined as a drift f")
        if self.grid is None and (self.f.pointwise or self.g.pointwise):
            object.__setattr__(self, "grid", build_grid(self.kappa))

    def spectrum(self, kappa: int | None = None) -> AngularPowerSpectrum:
        return power_spectrum(self.alpha, self.kappa if kappa is None else kappa)

    def with_kappa(self, kappa: int) -> "ProblemSpec":
        return ProblemSpec(kappa, self.T, self.f, self.g, self.beta, self.delta, self.gamma, self.alpha)


def scalar_map(kind: Nonlinearity, x: np.ndarray) -> np.ndarray:
    if kind is Nonlinearity.SINE:
        return np.sin(x)
    if kind is Nonlinearity.RATIONAL:
        return (1.0 + x) / (1.0 + x * x)
    if kind is Nonlinearity.ZERO:
        return np.zeros_like(x)
    raise ValueError(f"{kind.value} has no scalar form")


def _grid_for(u: SpectralField, grid: QuadratureGrid | None) -> QuadratureGrid:
    if grid is None:
        return build_grid(u.kappa)
    if u.kappa > grid.kappa:
        raise GridError(f"field of degree {u.kappa} does not fit grid of degree {grid.kappa}")
    return grid


def coef_sine_complex(u: SpectralField) -> SpectralField:
    """Coefficientwise sine applied to the complex coefficients ``u^{l,m}``.

    ``sin`` acts on real and imaginary parts separately; ``m = 0`` entries are
    real.  :func:`eval_f` uses the equivalent real-basis form.
    """
    z = to_complex(u)
    ms = mode_orders(u.kappa)
    w = np.where(ms == 0, np.sin(z.real), np.sin(z.real) + 1j * np.sin(z.imag))
    return from_complex(w, u.kappa)


def _coef_sine(c: np.ndarray, kappa: int) -> np.ndarray:
    # (c -+ i s)/sqrt2 maps back to sqrt2 sin(c/sqrt2) and sqrt2 sin(s/sqrt2) since sin is odd
    zonal = mode_orders(kappa) == 0
    out = _SQRT2 * np.sin(c / _SQRT2)
    out[zonal] = np.sin(c[zonal])
    return out


def eval_f(f: Nonlinearity, u: SpectralField, grid: QuadratureGrid | None = None) -> SpectralField:
    """Projected drift ``P_kappa f(u)``."""
    f = Nonlinearity.parse(f)
    if f is Nonlinearity.ZERO:
        return SpectralField.zeros(u.kappa)
    if f is Nonlinearity.COEF_SINE:
        return SpectralField(u.kappa, _coef_sine(u.coeffs, u.kappa))
    if f.pointwise:
        grid = _grid_for(u, grid)
        vals = synthesize(u, grid).values
        return analyze(GridField(scalar_map(f, vals), grid), u.kappa)
    raise ValueError(f"{f.value} is not a drift")


def apply_g_increment(
    g: Nonlinearity, u: SpectralField, dW: SpectralField, grid: QuadratureGrid | None = None
) -> SpectralField:
    """Projected noise term ``P_kappa (g(u) dW)``."""
    g = Nonlinearity.parse(g)
    if g is Nonlinearity.IDENTITY:
        return project(dW, u.kappa)
    if g is Nonlinearity.ZERO:
        return SpectralField.zeros(u.kappa)
    if not g.pointwise:
        raise ValueError(f"{g.value} is not a noise coefficient")
    grid = _grid_for(u, grid)
    if dW.kappa > grid.kappa:
        raise GridError(f"noise of degree {dW.kappa} does not fit grid of degree {grid.kappa}")
    gu = scalar_map(g, synthesize(u, grid).values)
    prod = synthesize(dW, grid)
    return analyze(GridField(gu * prod.values, grid), u.kappa)


def initial_state(gamma: float, kappa: int) -> ProductState:
    """Zonal initial data with ``u_0^{l,0} = l^-gamma`` and ``v_0^{l,0} = l^-(gamma-1)``."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    ls = mode_degrees(kappa)
    zonal = (mode_orders(kappa) == 0) & (ls >= 1)
    u = np.zeros(n_modes(kappa))
    v = np.zeros(n_modes(kappa))
    lz = ls[zonal].astype(float)
    u[zonal] = lz ** (-gamma)
    v[zonal] = lz ** (-(gamma - 1.0))
    return ProductState(SpectralField(kappa, u), SpectralField(kappa, v))


@dataclass(frozen=True)
class Preset:
    """Experiment configuration at desk scale with paper-scale overrides."""

    name: str
    study: str
    problem: dict
    desk: dict
    paper: dict
    description: str = ""

    def settings(self, scale: str = "desk") -> dict:
        if scale not in ("desk", "paper"):
            raise ValueError(f"unknown scale {scale!r}")
        out = dict(self.problem)
        out.update(self.desk if scale == "desk" else self.paper)
        return out


def _pow2(lo: int, hi: int, sign: int = 1) -> list:
    return [2.0 ** (sign * j) if sign < 0 else 2 ** j for j in range(lo, hi + 1)]


PRESETS: dict[str, Preset] = {
    "fig1": Preset(
        "fig1",
        "space",
        dict(T=1.0, f="coef-sine", g="identity", beta=1.0, delta=1.0),
        desk=dict(kappa=_pow2(1, 5), kappa_ref=2**7, h=2.0**-8, samples=20, sim_kappa=2**5, sim_h=2.0**-8),
        paper=dict(kappa=_pow2(1, 7), kappa_ref=2**9, h=2.0**-10, samples=100, sim_kappa=2**7, sim_h=2.0**-14),
        description="additive noise, spatial rates",
    ),
    "fig4": Preset(
        "fig4",
        "time",
        dict(T=1.0, f="coef-sine", g="identity", beta=1.0, delta=1.0, stepper="STM,SI"),
        desk=dict(kappa=2**5, h=_pow2(2, 7, -1), h_ref=2.0**-10, samples=20),
        paper=dict(kappa=2**9, h=_pow2(2, 8, -1), h_ref=2.0**-12, samples=100, reference_stepper="SI"),
        description="additive noise, STM against SI",
    ),
    "fig5": Preset(
        "fig5",
        "time",
        dict(T=1.0, f="coef-sine", g="identity", beta=1.0, delta=0.25, stepper="STM"),
        desk=dict(kappa=2**9, h=_pow2(1, 6, -1), h_ref=2.0**-10, samples=20),
        paper=dict(kappa=2**9, h=_pow2(2, 8, -1), h_ref=2.0**-11, samples=100),
        description="additive noise, pathwise temporal errors",
    ),
    "fig6": Preset(
        "fig6",
        "time",
        dict(T=1.0, f="sine", g="identity", beta=1.0, delta=1.0, stepper="STM"),
        desk=dict(kappa=2**4, h=_pow2(2, 6, -1), h_ref=2.0**-8, samples=20),
        paper=dict(kappa=2**7, h=_pow2(2, 6, -1), h_ref=2.0**-8, samples=100),
        description="pointwise drift without spectral expansion",
    ),
    "fig7": Preset(
        "fig7",
        "time",
        dict(T=1.0, f="coef-sine", g="sine", beta=1.0, delta=1.0, stepper="STM"),
        desk=dict(kappa=2**5, h=_pow2(2, 7, -1), h_ref=2.0**-10, samples=20, sim_kappa=2**5, sim_h=2.0**-8),
        paper=dict(kappa=2**7, h=_pow2(2, 8, -1), h_ref=2.0**-10, samples=100, sim_kappa=2**7, sim_h=2.0**-10),
        description="multiplicative noise g = sin",
    ),
    "fig8": Preset(
        "fig8",
        "time",
        dict(T=1.0, f="sine", g="rational", beta=1.0, delta=1.0, stepper="STM"),
        desk=dict(kappa=2**4, h=_pow2(2, 7, -1), h_ref=2.0**-10, samples=20),
        paper=dict(kappa=2**7, h=_pow2(2, 9, -1), h_ref=2.0**-11, samples=100),
        description="multiplicative noise g = (1+u)/(1+u^2), drift sin",
    ),
}


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

