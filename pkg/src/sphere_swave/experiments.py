"""Monte Carlo convergence studies in space and time.

Every sample draws one fine noise path.  The reference run and all coarse
runs are stepped in lockstep so that each fine increment is generated once:
coarse-in-space runs see its leading modes, coarse-in-time runs sum
consecutive increments in ascending order (bit-identical to
:func:`noise.coarsen_time`).  Errors are taken at the times both runs share,
including ``t = 0``, and reduced to per-sample maxima over time before the
moments are formed.  Samples are reduced in ascending sample order, so the
output does not depend on how the work was scheduled.
"""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .fields import ProductState, SpectralField, sobolev_weights
from .harmonics import n_modes
from .integrators import Stepper, StepperKind, steps_for_time
from .model import ProblemSpec, initial_state
from .noise import sample_path

__all__ = [
    "StudyConfig",
    "ErrorRecord",
    "RateEstimate",
    "run_space_study",
    "run_time_study",
    "run_study",
    "aggregate",
    "fit_rate",
    "fit_loglog",
    "empirical_time_regularity",
    "time_increments",
    "default_workers",
    "write_error_table",
    "write_pathwise_table",
    "write_rates",
    "ERROR_COLUMNS",
    "PATHWISE_COLUMNS",
    "RATE_COLUMNS",
]

ERROR_COLUMNS = ("resolution", "err_pos", "se_pos", "err_vel", "se_vel", "err_state", "se_state", "err_path_max")
PATHWISE_COLUMNS = ("resolution", "sample", "err_path")
RATE_COLUMNS = ("table", "metric", "slope", "intercept", "residual", "points")
METRICS = ("position", "velocity", "state", "pathwise-max")


@dataclass(frozen=True)
class StudyConfig:
    """Parameters of one convergence study.

    ``resolutions`` are truncation degrees for ``kind="space"`` and step
    sizes for ``kind="time"``; ``reference`` is ``kappa_ref`` or ``h_ref``
    and ``fixed`` the complementary resolution (``h`` or ``kappa``).
    ``problem.kappa`` is ignored; each run uses ``problem.with_kappa``.
    """

    kind: str
    problem: ProblemSpec
    resolutions: tuple
    reference: float
    fixed: float
    samples: int = 20
    seed: int = 0
    p: int = 1
    stepper: StepperKind = StepperKind.STM
    reference_stepper: StepperKind | None = None
    instrument: bool = False

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(self.resolutions))
        object.__setattr__(self, "stepper", StepperKind.parse(self.stepper))
        if self.reference_stepper is not None:
            object.__setattr__(self, "reference_stepper", StepperKind.parse(self.reference_stepper))
        if self.kind not in ("space", "time"):
            raise ValueError(f"study kind must be 'space' or 'time', got {self.kind!r}")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.p < 1:
            raise ValueError("moment order p must be a positive integer")
        if not self.resolutions:
            raise ValueError("at least one resolution is required")
        if self.kind == "space":
            self._check_space()
        else:
            self._check_time()

    def _check_space(self):
        kref = int(self.reference)
        if kref != self.reference or kref < 0:
            raise ValueError("kappa_ref must be a nonnegative integer")
        for k in self.resolutions:
            if int(k) != k or k < 0:
                raise ValueError(f"truncation {k} is not a nonnegative integer")
            if k > kref:
                raise ValueError(f"tested truncation {k} exceeds kappa_ref = {kref}")
        if self.fixed <= 0:
            raise ValueError("step size h must be positive")
        steps_for_time(self.problem.T, self.fixed)

    def _check_time(self):
        href = float(self.reference)
        if href <= 0:
            raise ValueError("h_ref must be positive")
        if int(self.fixed) != self.fixed or self.fixed < 0:
            raise ValueError("kappa must be a nonnegative integer")
        n_ref = steps_for_time(self.problem.T, href)
        for h in self.resolutions:
            ratio = h / href
            k = round(ratio)
            if k < 1 or abs(k - ratio) > 1e-9 * ratio:
                raise ValueError(f"step {h} is not an integer multiple of h_ref = {href}")
            if n_ref % k:
                raise ValueError(f"step {h} does not divide T = {self.problem.T}")

    @property
    def ref_stepper(self) -> StepperKind:
        return self.stepper if self.reference_stepper is None else self.reference_stepper


@dataclass(frozen=True)
class ErrorRecord:
    """Aggregated errors at one resolution.

    ``err_path`` holds the per-sample ``max_n ||X_ref(t_n) - X(t_n)||``
    in sample order; ``err_path_max`` is its maximum.
    """

    resolution: float
    err_pos: float
    se_pos: float
    err_vel: float
    se_vel: float
    err_state: float
    se_state: float
    err_path: tuple = ()
    err_path_max: float = 0.0
    noise_digest: str | None = field(default=None, compare=False)

    def metric(self, which: str) -> float:
        key = {"position": "err_pos", "velocity": "err_vel", "state": "err_state", "pathwise-max": "err_path_max"}
        if which not in key:
            raise ValueError(f"unknown metric {which!r}; choose from {METRICS}")
        return getattr(self, key[which])

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in ERROR_COLUMNS)


class RateEstimate(NamedTuple):
    slope: float
    intercept: float
    residual: float
    points: int


class _SampleErrors(NamedTuple):
    # per resolution maxima over time, shape (n_res,)
    pos: np.ndarray
    vel: np.ndarray
    state: np.ndarray
    digests: tuple


def aggregate(values: Sequence[float], p: int = 1) -> tuple[float, float]:
    """``((1/M) sum e_i^{2p})^{1/(2p)}`` and its delta-method standard error."""
    e = np.asarray(values, dtype=float)
    q = 2 * p
    powers = e**q
    # explicit ascending-order sum keeps the result independent of numpy's pairwise blocking
    total = 0.0
    for x in powers:
        total += float(x)
    mean = total / e.size
    est = mean ** (1.0 / q)
    if e.size < 2:
        return est, math.nan
    se_mean = float(np.std(powers, ddof=1)) / math.sqrt(e.size)
    if mean == 0.0:
        return est, 0.0
    return est, est / (q * mean) * se_mean


class _ErrorNorms:
    """Squared component errors between a coarse state and the reference."""

    def __init__(self, kappa_ref: int):
        self.kappa_ref = kappa_ref
        self.w_vel = sobolev_weights(kappa_ref, -1.0)

    def __call__(self, ref: ProductState, X: ProductState) -> tuple[float, float]:
        nm = n_modes(X.kappa)
        du = ref.u.coeffs.copy()
        dv = ref.v.coeffs.copy()
        du[:nm] -= X.u.coeffs
        dv[:nm] -= X.v.coeffs
        return float(du @ du), float(np.sum(self.w_vel * dv * dv))


def _finish(sq_pos: np.ndarray, sq_vel: np.ndarray, sq_state: np.ndarray, digests=()) -> _SampleErrors:
    return _SampleErrors(np.sqrt(sq_pos), np.sqrt(sq_vel), np.sqrt(sq_state), tuple(digests))


def _space_sample(cfg: StudyConfig, sample: int) -> _SampleErrors:
    kref = int(cfg.reference)
    h = float(cfg.fixed)
    kappas = [int(k) for k in cfg.resolutions]
    ref_spec = cfg.problem.with_kappa(kref)
    n_steps = steps_for_time(cfg.problem.T, h)
    nres = len(kappas)
    sq = np.zeros((3, nres))
    hashes = [hashlib.sha256() for _ in kappas] if cfg.instrument else []
    if n_steps == 0:
        return _finish(*sq)
    path = sample_path((cfg.seed, sample), ref_spec.spectrum(), kref, h, n_steps)
    ref_step = Stepper(cfg.ref_stepper, ref_spec, h)
    specs = {k: (ref_spec if k == kref else cfg.problem.with_kappa(k)) for k in set(kappas)}
    steps = [Stepper(cfg.stepper, specs[k], h) for k in kappas]
    X_ref = initial_state(ref_spec.gamma, kref)
    states = [X_ref.project(k) for k in kappas]
    norms = _ErrorNorms(kref)

    def record():
        for i, X in enumerate(states):
            ep, ev = norms(X_ref, X)
            sq[0, i] = max(sq[0, i], ep)
            sq[1, i] = max(sq[1, i], ev)
            sq[2, i] = max(sq[2, i], ep + ev)

    record()
    for n in range(n_steps):
        dW = path.increment(n)
        X_ref = ref_step(X_ref, dW)
        for i, (k, step) in enumerate(zip(kappas, steps)):
            if hashes:
                hashes[i].update(dW.coeffs[: n_modes(k)].tobytes())
            states[i] = step(states[i], dW)
        record()
    return _finish(*sq, digests=[hh.hexdigest() for hh in hashes])


def _time_sample(cfg: StudyConfig, sample: int) -> _SampleErrors:
    kappa = int(cfg.fixed)
    h_ref = float(cfg.reference)
    spec = cfg.problem.with_kappa(kappa)
    n_ref = steps_for_time(cfg.problem.T, h_ref)
    factors = [round(h / h_ref) for h in cfg.resolutions]
    nres = len(factors)
    sq = np.zeros((3, nres))
    hashes = [hashlib.sha256() for _ in factors] if cfg.instrument else []
    if n_ref == 0:
        return _finish(*sq)
    path = sample_path((cfg.seed, sample), spec.spectrum(), kappa, h_ref, n_ref)
    ref_step = Stepper(cfg.ref_stepper, spec, h_ref)
    steps = [Stepper(cfg.stepper, spec, h_ref * k) for k in factors]
    X_ref = initial_state(spec.gamma, kappa)
    states = [X_ref] * nres
    acc: list = [None] * nres
    norms = _ErrorNorms(kappa)

    def record(i):
        ep, ev = norms(X_ref, states[i])
        sq[0, i] = max(sq[0, i], ep)
        sq[1, i] = max(sq[1, i], ev)
        sq[2, i] = max(sq[2, i], ep + ev)

    for i in range(nres):
        record(i)
    for n in range(n_ref):
        dw = path.increment_array(n)
        X_ref = ref_step(X_ref, SpectralField(kappa, dw))
        for i, k in enumerate(factors):
            if n % k == 0:
                acc[i] = dw.copy()
            else:
                acc[i] += dw
            if (n + 1) % k == 0:
                if hashes:
                    hashes[i].update(acc[i].tobytes())
                states[i] = steps[i](states[i], SpectralField(kappa, acc[i]))
                acc[i] = None
                record(i)
    return _finish(*sq, digests=[hh.hexdigest() for hh in hashes])


def _run_sample(args) -> _SampleErrors:
    cfg, sample = args
    fn = _space_sample if cfg.kind == "space" else _time_sample
    return fn(cfg, sample)


def default_workers() -> int:
    return os.cpu_count() or 1


def _map_jobs(fn: Callable, jobs: list, workers: int | None) -> list:
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        # map preserves submission order, which is ascending sample order
        return list(pool.map(fn, jobs))


def _collect(cfg: StudyConfig, per_sample: list[_SampleErrors]) -> list[ErrorRecord]:
    records = []
    for i, res in enumerate(cfg.resolutions):
        pos = [s.pos[i] for s in per_sample]
        vel = [s.vel[i] for s in per_sample]
        state = [s.state[i] for s in per_sample]
        ep, sp = aggregate(pos, cfg.p)
        ev, sv = aggregate(vel, cfg.p)
        es, ss = aggregate(state, cfg.p)
        digest = None
        if cfg.instrument:
            h = hashlib.sha256()
            for s in per_sample:
                h.update(s.digests[i].encode())
            digest = h.hexdigest()
        records.append(
            ErrorRecord(
                res, ep, sp, ev, sv, es, ss,
                err_path=tuple(float(x) for x in state),
                err_path_max=float(max(state)),
                noise_digest=digest,
            )
        )
    return records


def run_study(cfg: StudyConfig, workers: int | None = 1) -> list[ErrorRecord]:
    per_sample = _map_jobs(_run_sample, [(cfg, m) for m in range(cfg.samples)], workers)
    return _collect(cfg, per_sample)


def run_space_study(cfg: StudyConfig, workers: int | None = 1) -> list[ErrorRecord]:
    if cfg.kind != "space":
        raise ValueError("configuration is not a space study")
    return run_study(cfg, workers)


def run_time_study(cfg: StudyConfig, workers: int | None = 1) -> list[ErrorRecord]:
    if cfg.kind != "time":
        raise ValueError("configuration is not a time study")
    return run_study(cfg, workers)


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> RateEstimate:
    """Least-squares line through ``(log2 x, log2 y)`` over points with ``y > 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > 0) & (x > 0)
    if keep.sum() < 3:
        raise ValueError(f"need at least 3 positive points to fit a rate, got {int(keep.sum())}")
    lx, ly = np.log2(x[keep]), np.log2(y[keep])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return RateEstimate(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))), int(keep.sum()))


def fit_rate(records: Sequence[ErrorRecord], which: str = "state") -> RateEstimate:
    """Slope of ``log2 error`` against ``log2 resolution``.

    For space studies the resolution is ``kappa`` (first-order convergence
    gives slope -1); for time studies it is ``h`` (slope +1).
    """
    return fit_loglog([r.resolution for r in records], [r.metric(which) for r in records])


def _regularity_sample(args) -> np.ndarray:
    spec, h, starts, taus, seed, sample = args
    n_steps = steps_for_time(spec.T, h)
    path = sample_path((seed, sample), spec.spectrum(), spec.kappa, h, n_steps)
    wanted = sorted({steps_for_time(s, h) for s in starts} | {steps_for_time(s + t, h) for s in starts for t in taus})
    step = Stepper(StepperKind.STM, spec, h)
    X = initial_state(spec.gamma, spec.kappa)
    saved = {0: X.u.coeffs} if wanted[0] == 0 else {}
    for n in range(wanted[-1]):
        X = step(X, path.increment(n))
        if n + 1 in wanted:
            saved[n + 1] = X.u.coeffs
    out = np.zeros(len(taus))
    for j, t in enumerate(taus):
        for s in starts:
            d = saved[steps_for_time(s + t, h)] - saved[steps_for_time(s, h)]
            out[j] += float(d @ d)
    return out / len(starts)


def time_increments(
    spec: ProblemSpec,
    kappa: int,
    taus: Sequence[float],
    samples: int,
    h: float | None = None,
    starts: Sequence[float] | None = None,
    seed: int = 0,
    workers: int | None = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of ``E||u(s+tau) - u(s)||^2`` in ``L^2`` for each lag.

    The semi-discrete solution is approximated by STM with a fine step ``h``
    (default ``min(taus)/8``); the mean is also averaged over start times
    ``s`` in the second half of ``[0, T]``.  Returns sorted lags and means.
    """
    taus = sorted(float(t) for t in taus)
    if not taus or taus[0] <= 0:
        raise ValueError("lags must be positive")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    spec = spec.with_kappa(kappa)
    h = taus[0] / 8 if h is None else h
    tmax = taus[-1]
    if starts is None:
        s0, starts = spec.T / 2, []
        while s0 + tmax <= spec.T + 1e-12:
            starts.append(s0)
            s0 += tmax / 2
    if not starts or max(starts) + tmax > spec.T + 1e-12:
        raise ValueError("start times plus the largest lag must stay within [0, T]")
    jobs = [(spec, h, tuple(starts), tuple(taus), seed, m) for m in range(samples)]
    rows = _map_jobs(_regularity_sample, jobs, workers)
    total = np.zeros(len(taus))
    for r in rows:
        total += r
    return np.array(taus), total / samples


def empirical_time_regularity(
    spec: ProblemSpec,
    kappa: int,
    taus: Sequence[float],
    samples: int,
    h: float | None = None,
    starts: Sequence[float] | None = None,
    seed: int = 0,
    workers: int | None = 1,
) -> RateEstimate:
    """Fitted slope of ``log E||u(s+tau) - u(s)||^2`` against ``log tau``.

    Expected near ``2 min(1, beta, delta)``; see :func:`time_increments`.
    """
    if len(taus) < 3:
        raise ValueError("need at least 3 lag values to fit a regularity exponent")
    return fit_loglog(*time_increments(spec, kappa, taus, samples, h, starts, seed, workers))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_error_table(records: Sequence[ErrorRecord], path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(ERROR_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in r.row()) + "\n")


def write_pathwise_table(records: Sequence[ErrorRecord], path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(PATHWISE_COLUMNS) + "\n")
        for r in records:
            for m, e in enumerate(r.err_path):
                fh.write(f"{_fmt(r.resolution)},{m},{_fmt(e)}\n")


def write_rates(rows: Sequence[tuple[str, str, RateEstimate]], path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(RATE_COLUMNS) + "\n")
        for table, metric, est in rows:
            fh.write(f"{table},{metric},{_fmt(est.slope)},{_fmt(est.intercept)},{_fmt(est.residual)},{est.points}\n")
