"""Fast invariant checks run by ``sphere-swave validate``."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .fields import ProductState, SpectralField, sobolev_norm
from .grid import analyze, build_grid, grid_inner, synthesize
from .harmonics import mode_degrees, n_modes
from .noise import power_spectrum, sample_path
from .propagator import ModeMatrix, TrigKind, apply_group, apply_trig, group_mode_matrix

__all__ = ["CheckResult", "run_checks", "CHECKS"]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_field(rng, kappa, decay=1.0):
    ls = mode_degrees(kappa)
    return SpectralField(kappa, rng.standard_normal(n_modes(kappa)) / (1.0 + ls) ** decay)


def check_orthonormality(kappa, rng, **_):
    grid = build_grid(kappa)
    fields = [synthesize(_unit(kappa, i), grid) for i in range(n_modes(kappa))]
    gram = np.array([[grid_inner(a, b) for b in fields] for a in fields])
    err = float(np.max(np.abs(gram - np.eye(len(fields)))))
    return err < 1e-10, f"max |G - I| = {err:.2e}"


def _unit(kappa, i):
    c = np.zeros(n_modes(kappa))
    c[i] = 1.0
    return SpectralField(kappa, c)


def check_round_trip(kappa, rng, **_):
    u = _random_field(rng, kappa)
    back = analyze(synthesize(u, build_grid(kappa)), kappa)
    err = float(np.max(np.abs(back.coeffs - u.coeffs)))
    return err < 1e-10, f"max coefficient error = {err:.2e}"


def check_group_law(kappa, rng, matrix_fn: Callable[[int, float], ModeMatrix] | None = None, **_):
    """``E(s)E(t) = E(s+t)``, ``det E(t) = 1`` and ``E'(0) = A`` per degree."""
    fn = matrix_fn or group_mode_matrix
    worst = 0.0
    for s, t in ((0.3, 0.5), (1.25, -0.4), (0.0, 2.0)):
        X = ProductState(_random_field(rng, kappa), _random_field(rng, kappa))
        lhs = apply_group(apply_group(X, t, fn), s, fn)
        rhs = apply_group(X, s + t, fn)
        worst = max(worst, float(np.max(np.abs((lhs - rhs).u.coeffs))), float(np.max(np.abs((lhs - rhs).v.coeffs))))
    det = max(abs(fn(l, t).det() - 1.0) for l in range(kappa + 1) for t in (0.1, 0.7, 3.0))
    # central difference of E at 0 against the generator [[0, 1], [-l(l+1), 0]]
    eps = 1e-6
    gen = 0.0
    for l in range(kappa + 1):
        d = (fn(l, eps).as_array() - fn(l, -eps).as_array()) / (2 * eps)
        A = np.array([[0.0, 1.0], [-l * (l + 1.0), 0.0]])
        gen = max(gen, float(np.max(np.abs(d - A))) / (1.0 + l * (l + 1.0)))
    ok = worst < 1e-12 * max(1, kappa) ** 2 and det < 1e-12 and gen < 1e-6
    return ok, f"composition {worst:.2e}, det {det:.2e}, generator {gen:.2e}"


def check_noise_variance(kappa, rng, draws: int = 20000, **_):
    k = min(kappa, 4)
    A = power_spectrum(2.0 + 1e-6, k)
    h = 0.25
    path = sample_path((12345, 0), A, k, h, draws)
    x = path.to_array()
    var = np.mean(x * x, axis=0)
    expect = A.values[mode_degrees(k)] * h
    se = expect * math.sqrt(2.0 / draws)
    z = float(np.max(np.abs(var - expect) / se))
    return z < 5.0, f"max |var - A_l h| / SE = {z:.2f} over {draws} draws"


def check_operator_bounds(kappa, rng, n_fields: int = 100, **_):
    ts = (0.0, 0.1, 0.5, 1.0, 3.0)
    worst = -math.inf
    for _ in range(n_fields):
        u = _random_field(rng, kappa, decay=0.5)
        for s in (-1.0, 0.0, 1.0):
            for t in ts:
                worst = max(
                    worst,
                    sobolev_norm(apply_trig(TrigKind.COSINE, u, t), s) - sobolev_norm(u, s),
                    sobolev_norm(apply_trig(TrigKind.SCALED_SINE, u, t), s)
                    - max(abs(t), math.sqrt(1.5)) * sobolev_norm(u, s - 1.0),
                    sobolev_norm(apply_trig(TrigKind.DERIV_SINE, u, t), s - 1.0) - sobolev_norm(u, s),
                    sobolev_norm(apply_trig(TrigKind.COSINE, u, t) - u, s) - 2.0 * t * sobolev_norm(u, s + 1.0),
                )
    return worst <= 1e-12, f"largest bound excess {worst:.2e} over {n_fields} fields"


CHECKS: dict[str, Callable] = {
    "orthonormality": check_orthonormality,
    "round-trip": check_round_trip,
    "group-law": check_group_law,
    "noise-variance": check_noise_variance,
    "operator-bounds": check_operator_bounds,
}


def run_checks(kappa: int = 8, seed: int = 0, matrix_fn=None, **options) -> list[CheckResult]:
    """Run every check; ``matrix_fn`` replaces the per-degree group matrix."""
    out = []
    for name, fn in CHECKS.items():
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(kappa, rng, matrix_fn=matrix_fn, **options)
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
