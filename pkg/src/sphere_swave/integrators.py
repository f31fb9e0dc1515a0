"""Time steppers for the spectrally truncated system.

STM, the stochastic trigonometric method, propagates the previous state plus
the frozen drift and noise contributions exactly through the wave group::

    X_n = E(h) (X_{n-1} + (0, h f(u_{n-1}) + g(u_{n-1}) dW_{n-1}))

SI, the semi-implicit Euler-Maruyama method, replaces ``E(h)`` by the
resolvent ``(I - h A)^{-1}``.
"""
from __future__ import annotations

from enum import Enum
from typing import Sequence

from .fields import ProductState, SpectralField, project
from .model import Nonlinearity, ProblemSpec, apply_g_increment, eval_f
from .noise import NoisePath
from .propagator import (
    apply_group,
    apply_mode_matrices,
    apply_si_resolvent,
    expand_to_modes,
    group_degree_entries,
    si_degree_entries,
)

__all__ = ["StepperKind", "Stepper", "stm_step", "si_step", "evolve", "steps_for_time"]


class StepperKind(str, Enum):
    STM = "STM"
    SI = "SI"

    @classmethod
    def parse(cls, name: "str | StepperKind") -> "StepperKind":
        return name if isinstance(name, cls) else cls(str(name).strip().upper())


def _forcing(X: ProductState, h: float, spec: ProblemSpec, dW: SpectralField) -> SpectralField:
    """Velocity kick ``h P f(u) + P g(u) dW`` accumulated over one step."""
    u = X.u
    if dW.kappa > u.kappa:
        dW = project(dW, u.kappa)
    kick = apply_g_increment(spec.g, u, dW, spec.grid)
    if spec.f is not Nonlinearity.ZERO:
        kick = kick + h * eval_f(spec.f, u, spec.grid)
    return kick


def stm_step(X: ProductState, h: float, spec: ProblemSpec, dW: SpectralField) -> ProductState:
    Y = ProductState(X.u, X.v + _forcing(X, h, spec, dW))
    return apply_group(Y, h)


def si_step(X: ProductState, h: float, spec: ProblemSpec, dW: SpectralField) -> ProductState:
    R = ProductState(X.u, X.v + _forcing(X, h, spec, dW))
    return apply_si_resolvent(R, h)


class Stepper:
    """One-step map for fixed ``(kind, spec, h)`` with the mode matrices precomputed."""

    def __init__(self, kind: StepperKind | str, spec: ProblemSpec, h: float):
        if h <= 0:
            raise ValueError("step size must be positive")
        self.kind = StepperKind.parse(kind)
        self.spec = spec
        self.h = h
        per_degree = (
            group_degree_entries(spec.kappa, h) if self.kind is StepperKind.STM else si_degree_entries(spec.kappa, h)
        )
        self._entries = expand_to_modes(spec.kappa, per_degree)

    def __call__(self, X: ProductState, dW: SpectralField) -> ProductState:
        Y = ProductState(X.u, X.v + _forcing(X, self.h, self.spec, dW))
        return apply_mode_matrices(Y, self._entries)


def steps_for_time(t: float, h: float) -> int:
    """Step count ``n`` with ``n h = t``; raises if ``t`` is not on the grid."""
    n = round(t / h)
    if n < 0 or abs(n * h - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not a multiple of the step size {h}")
    return n


def evolve(
    X0: ProductState,
    path: NoisePath,
    spec: ProblemSpec,
    kind: StepperKind | str = StepperKind.STM,
    record_times: Sequence[float] | None = None,
) -> list[ProductState]:
    """Run the stepper driven by ``path`` and return states at ``record_times``.

    ``record_times`` defaults to ``[spec.T]``; each must be a multiple of the
    path step size.  Output order follows ``record_times``.
    """
    if path.kappa < X0.kappa:
        raise ValueError(f"noise path has degree {path.kappa} < state degree {X0.kappa}")
    if X0.kappa != spec.kappa:
        raise ValueError("initial state truncation differs from the problem truncation")
    h = path.h
    times = [spec.T] if record_times is None else list(record_times)
    targets = [steps_for_time(t, h) for t in times]
    last = max(targets, default=0)
    if last > path.n_steps:
        raise ValueError(f"record time needs {last} steps but the path has {path.n_steps}")
    wanted = set(targets)
    saved = {0: X0} if 0 in wanted else {}
    step = Stepper(kind, spec, h) if last else None
    X = X0
    for n in range(last):
        X = step(X, path.increment(n))
        if n + 1 in wanted:
            saved[n + 1] = X
    return [saved[n] for n in targets]
