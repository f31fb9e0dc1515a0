import hashlib
import math

import numpy as np
import pytest

from sphere_swave.experiments import (
    ErrorRecord,
    StudyConfig,
    aggregate,
    empirical_time_regularity,
    fit_loglog,
    fit_rate,
    run_space_study,
    run_time_study,
    write_error_table,
    write_pathwise_table,
    write_rates,
)
from sphere_swave.fields import sobolev_weights
from sphere_swave.harmonics import n_modes
from sphere_swave.model import ProblemSpec, initial_state
from sphere_swave.noise import coarsen_time, restrict_modes, sample_path
from sphere_swave.propagator import apply_group


def space_cfg(**kw):
    base = dict(kind="space", problem=ProblemSpec(0, T=0.5), resolutions=[1, 2, 4], reference=8, fixed=0.125, samples=3)
    base.update(kw)
    return StudyConfig(**base)


def time_cfg(**kw):
    base = dict(kind="time", problem=ProblemSpec(0, T=0.5), resolutions=[0.25, 0.125, 0.0625], reference=2.0**-5, fixed=4, samples=3)
    base.update(kw)
    return StudyConfig(**base)


def test_space_identical_resolution_gives_zero():
    recs = run_space_study(space_cfg(resolutions=[8]))
    r = recs[0]
    assert r.err_pos == r.err_vel == r.err_state == r.err_path_max == 0.0
    assert all(e == 0.0 for e in r.err_path)


def test_time_identical_step_gives_zero():
    r = run_time_study(time_cfg(resolutions=[2.0**-5]))[0]
    assert r.err_state == 0.0 and r.err_path_max == 0.0


def test_space_linear_deterministic_tail_oracle():
    # f = g = 0: the coarse run is the truncation of the reference, so the
    # error is the discarded tail of E(t_n) X0, maximised over t_n
    problem = ProblemSpec(0, T=1.0, f="zero", g="zero", gamma=2.5)
    h, kref = 0.125, 12
    recs = run_space_study(space_cfg(problem=problem, resolutions=[1, 3, 6], reference=kref, fixed=h, samples=2))
    X0 = initial_state(2.5, kref)
    w = sobolev_weights(kref, -1.0)
    for r in recs:
        nm = n_modes(int(r.resolution))
        pos, vel = [], []
        for n in range(9):
            X = apply_group(X0, n * h)
            pos.append(math.sqrt(np.sum(X.u.coeffs[nm:] ** 2)))
            vel.append(math.sqrt(np.sum(w[nm:] * X.v.coeffs[nm:] ** 2)))
        assert r.err_pos == pytest.approx(max(pos), rel=1e-10)
        assert r.err_vel == pytest.approx(max(vel), rel=1e-10)
        assert r.se_pos == pytest.approx(0.0, abs=1e-12)


def test_time_linear_stm_exact_si_not():
    problem = ProblemSpec(0, T=0.5, f="zero", g="zero")
    stm = run_time_study(time_cfg(problem=problem, stepper="STM"))
    si = run_time_study(time_cfg(problem=problem, stepper="SI"))
    assert max(r.err_state for r in stm) < 1e-12
    assert min(r.err_state for r in si) > 1e-4


def test_monotone_tail_linear_additive():
    problem = ProblemSpec(0, T=0.5, f="zero", g="identity")
    recs = run_space_study(space_cfg(problem=problem, resolutions=[1, 2, 3, 5, 8], reference=10))
    pos = [r.err_pos for r in recs]
    assert all(a >= b for a, b in zip(pos, pos[1:]))
    paths = np.array([r.err_path for r in recs])
    assert np.all(np.diff(paths, axis=0) <= 1e-15)


def test_strong_error_bounded_by_pathwise_max():
    for r in run_time_study(time_cfg(samples=5)) + run_space_study(space_cfg(samples=5)):
        assert r.err_state <= r.err_path_max + 1e-15
        assert len(r.err_path) == 5
        assert min(r.err_pos, r.err_vel, r.err_state) >= 0


def test_space_coupling_digest():
    cfg = space_cfg(instrument=True, samples=2)
    recs = run_space_study(cfg)
    spec = cfg.problem.with_kappa(8)
    for r in recs:
        outer = hashlib.sha256()
        for m in range(2):
            path = restrict_modes(sample_path((cfg.seed, m), spec.spectrum(), 8, 0.125, 4), int(r.resolution))
            inner = hashlib.sha256()
            for n in range(path.n_steps):
                inner.update(path.increment_array(n).tobytes())
            outer.update(inner.hexdigest().encode())
        assert r.noise_digest == outer.hexdigest()


def test_time_coupling_digest():
    cfg = time_cfg(instrument=True, samples=2)
    recs = run_time_study(cfg)
    spec = cfg.problem.with_kappa(4)
    for r in recs:
        outer = hashlib.sha256()
        for m in range(2):
            fine = sample_path((cfg.seed, m), spec.spectrum(), 4, 2.0**-5, 16)
            path = coarsen_time(fine, round(r.resolution / 2.0**-5))
            inner = hashlib.sha256()
            for n in range(path.n_steps):
                inner.update(path.increment_array(n).tobytes())
            outer.update(inner.hexdigest().encode())
        assert r.noise_digest == outer.hexdigest()


def test_worker_count_does_not_change_records():
    cfg = time_cfg(samples=4, stepper="SI")
    a = run_time_study(cfg, workers=1)
    b = run_time_study(cfg, workers=3)
    assert a == b


def test_reference_stepper_override():
    problem = ProblemSpec(0, T=0.5, f="zero", g="zero")
    r = run_time_study(time_cfg(problem=problem, resolutions=[2.0**-5], stepper="STM", reference_stepper="SI"))[0]
    assert r.err_state > 0


def test_config_validation():
    with pytest.raises(ValueError, match="multiple"):
        time_cfg(resolutions=[0.3])
    with pytest.raises(ValueError, match="divide"):
        time_cfg(resolutions=[3 * 2.0**-5])
    with pytest.raises(ValueError, match="exceeds"):
        space_cfg(resolutions=[9])
    with pytest.raises(ValueError):
        space_cfg(fixed=0.3)
    with pytest.raises(ValueError):
        space_cfg(samples=0)
    with pytest.raises(ValueError):
        space_cfg(kind="both")
    with pytest.raises(ValueError):
        run_space_study(time_cfg())


def test_aggregate():
    est, se = aggregate([3.0, 4.0])
    assert est == pytest.approx(math.sqrt(12.5))
    assert se > 0
    assert math.isnan(aggregate([2.0])[1])
    assert aggregate([1.0, 1.0, 1.0], p=2) == (1.0, 0.0)
    assert aggregate([0.0, 0.0]) == (0.0, 0.0)
    # (mean e^4)^(1/4)
    assert aggregate([1.0, 2.0], p=2)[0] == pytest.approx((8.5) ** 0.25)


def test_delta_method_se_against_bootstrap():
    rng = np.random.default_rng(3)
    e = rng.gamma(2.0, 1.0, 400)
    est, se = aggregate(e)
    boot = [aggregate(rng.choice(e, e.size))[0] for _ in range(400)]
    assert se == pytest.approx(np.std(boot), rel=0.2)


def _records(xs, ys):
    return [ErrorRecord(x, y, 0, y, 0, y, 0, (y,), y) for x, y in zip(xs, ys)]


def test_fit_rate_exact_lines():
    ks = [2, 4, 8, 16, 32]
    assert fit_rate(_records(ks, [3.0 / k for k in ks]), "position").slope == pytest.approx(-1.0, abs=1e-12)
    hs = [2.0**-j for j in range(2, 7)]
    assert fit_rate(_records(hs, [h**0.5 for h in hs]), "velocity").slope == pytest.approx(0.5, abs=1e-12)
    assert fit_rate(_records(hs, [0.7] * 5), "pathwise-max").slope == pytest.approx(0.0, abs=1e-12)
    est = fit_rate(_records(ks, [2.0 / k**2 for k in ks]), "state")
    assert est.intercept == pytest.approx(1.0) and est.residual < 1e-12 and est.points == 5


def test_fit_rate_excludes_degenerate_points():
    est = fit_rate(_records([1, 2, 4, 8], [0.0, 1.0, 0.5, 0.25]), "state")
    assert est.points == 3 and est.slope == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        fit_rate(_records([1, 2, 4], [0.0, 1.0, 0.5]), "state")
    with pytest.raises(ValueError):
        fit_rate(_records([1, 2, 4], [1, 1, 1]), "energy")
    with pytest.raises(ValueError):
        fit_loglog([1, 2], [1, 2])


def test_error_table_golden(tmp_path):
    recs = [
        ErrorRecord(2, 0.1, 0.01, 0.2, 0.02, 1 / 3, float("nan"), (0.5, 0.25), 0.5),
        ErrorRecord(0.125, 1e-20, 0.0, 2.0, 0.5, 3.0, 0.25, (1.0, 3.0), 3.0),
    ]
    p = tmp_path / "e.csv"
    write_error_table(recs, p)
    assert p.read_text() == (
        "resolution,err_pos,se_pos,err_vel,se_vel,err_state,se_state,err_path_max\n"
        "2,0.10000000000000001,0.01,0.20000000000000001,0.02,0.33333333333333331,nan,0.5\n"
        "0.125,9.9999999999999995e-21,0,2,0.5,3,0.25,3\n"
    )
    q = tmp_path / "p.csv"
    write_pathwise_table(recs, q)
    assert q.read_text() == "resolution,sample,err_path\n2,0,0.5\n2,1,0.25\n0.125,0,1\n0.125,1,3\n"
    r = tmp_path / "r.csv"
    write_rates([("space", "state", fit_loglog([1, 2, 4], [1, 0.5, 0.25]))], r)
    lines = r.read_text().splitlines()
    assert lines[0] == "table,metric,slope,intercept,residual,points"
    assert lines[1].startswith("space,state,-1,") and lines[1].endswith(",3")


def test_csv_round_trips_exactly(tmp_path):
    recs = run_space_study(space_cfg())
    p = tmp_path / "e.csv"
    write_error_table(recs, p)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 5], [r.err_state for r in recs])


def test_regularity_deterministic_smooth_is_lipschitz():
    problem = ProblemSpec(0, T=1.0, f="zero", g="zero", gamma=4.0)
    est = empirical_time_regularity(problem, 8, [2.0**-j for j in range(5, 9)], 1, h=2.0**-11)
    assert est.slope == pytest.approx(2.0, abs=0.05)


def test_regularity_needs_three_lags():
    with pytest.raises(ValueError):
        empirical_time_regularity(ProblemSpec(0), 4, [0.1], 2)
    with pytest.raises(ValueError):
        empirical_time_regularity(ProblemSpec(0), 4, [0.25, 0.5, 0.75], 2, h=0.125)
