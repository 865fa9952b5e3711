import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmlayers.energy import energy, l1_distance, trapezoid_weights
from pmlayers.errors import BackwardRegimeError, ConfigError
from pmlayers.evolution import (
    State,
    StepperConfig,
    evolve,
    explicit_dt,
    geometric_checkpoints,
    jacobian,
    read_diagnostics_csv,
    rhs,
    step,
    weighted_sq_norm,
    write_diagnostics_csv,
)
from pmlayers.layers import collapse_times
from pmlayers.stationary import Profile, compacton, transition_layer_datum, uniform_grid

from conftest import model

SIX = [-3.4, -2, 0, 0.9, 2.2, 3.2]


@pytest.mark.parametrize("c", [-1.0, -0.5, 0.0, 0.3, 1.0])
def test_constant_rhs(c):
    m = model(0.1, -1, 1)
    u = np.full(51, c)
    r = rhs(m, u, 0.04)
    np.testing.assert_array_equal(r, np.full(51, -float(m.potential.df(c))))
    assert np.all(r == 0) == (c in (-1.0, 0.0, 1.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.2, 1.2), min_size=3, max_size=80))
def test_weighted_mass_identity(vals):
    # the flux differences telescope against the trapezoid (half end volume) weights
    m = model(0.1, -1, 1)
    u = np.asarray(vals)
    h = 2.0 / (len(u) - 1)
    w = trapezoid_weights(len(u)) * h
    lhs = float(np.sum(w * rhs(m, u, h)))
    rhs_ = -float(np.sum(w * m.potential.df(u)))
    assert lhs == pytest.approx(rhs_, abs=1e-10 * (1 + np.sum(np.abs(w * m.potential.df(u)))) + 1e-9)


def test_rhs_is_energy_gradient():
    m = model(0.1, -1, 1)
    rng = np.random.default_rng(0)
    u = np.tanh(uniform_grid(-1, 1, 41) / 0.2) + 0.01 * rng.standard_normal(41)
    h = 0.05
    w = trapezoid_weights(41)
    g = np.empty(41)
    for i in range(41):
        d = np.zeros(41)
        d[i] = 1e-6
        g[i] = (energy(m, u + d, h).total - energy(m, u - d, h).total) / 2e-6
    np.testing.assert_allclose(rhs(m, u, h), -m.eps * g / (h * w), rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("kind", ["rational", "gaussian"])
def test_jacobian_matches_finite_differences(kind):
    m = model(0.1, -1, 1, kind=kind)
    rng = np.random.default_rng(1)
    u = np.tanh(uniform_grid(-1, 1, 31) / 0.3) + 0.05 * rng.standard_normal(31)
    h = 2 / 30
    J = jacobian(m, u, h)
    fd = np.empty_like(J)
    for j in range(31):
        d = np.zeros(31)
        d[j] = 1e-7
        fd[:, j] = (rhs(m, u + d, h) - rhs(m, u - d, h)) / 2e-7
    np.testing.assert_allclose(J, fd, rtol=1e-5, atol=1e-4)
    assert np.all(np.triu(J, 2) == 0) and np.all(np.tril(J, -2) == 0)


def test_compacton_rhs_second_order():
    m = model(0.1, -4, 4, theta=1.5)
    res = []
    for n in (1025, 2049, 4097):
        p = compacton(m, [-2, 0, 2], n_points=n)
        res.append(np.abs(rhs(m, p.u, p.h)).max())
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5


def test_zero_is_stationary():
    m = model(0.1, -1, 1)
    x = uniform_grid(-1, 1, 101)
    s = State(0.0, Profile(x, np.zeros_like(x)))
    for _ in range(20):
        s = step(m, StepperConfig(), s)
        assert np.all(s.u.u == 0.0)
    assert s.t > 0


def test_plus_one_exits_immediately():
    m = model(0.1, -1, 1)
    x = uniform_grid(-1, 1, 101)
    recs, s = evolve(m, StepperConfig(), Profile(x, np.ones_like(x)), 1e6)
    assert len(recs) == 1 and s.t == 0.0


@pytest.mark.parametrize("zeros", [[0.0], [-2, 0, 2], SIX])
def test_compacton_stays_put(zeros):
    m = model(0.1, -4, 4, theta=1.5)
    p = compacton(m, zeros, n_points=2049)
    recs, s = evolve(m, StepperConfig(), p, 1e4)
    assert s.t == 1e4
    assert l1_distance(s.u, p) < 1e-4
    assert collapse_times(recs) == []


@pytest.fixture(scope="module")
def exp1_short():
    m = model(0.1, -4, 4)
    p = transition_layer_datum(m, SIX, 2049)
    recs, s = evolve(m, StepperConfig(), p, 10.0, checkpoints=np.linspace(0, 10, 101), keep_states=True)
    return m, p, recs, s


def test_energy_nonincreasing(exp1_short):
    m, _, recs, s = exp1_short
    E = np.array([r.E for r in recs])
    steps = np.array([r.steps for r in recs])
    assert np.all(np.diff(E) <= StepperConfig().energy_drift_tol * np.maximum(np.diff(steps), 1))


#: smoke-run settings for the integrated identity; backward Euler is first order in time,
#: so the default step control leaves a ~1% quadrature gap over the initial transient
SMOKE = StepperConfig(err_tol=1e-9, rate_tol=0.01, dt_init=1e-6)


def test_lyapunov_identity_smoke():
    # E(0) - E(T) = eps^-1 int ||u_t||^2 dt with u_t = du / dt accumulated per step
    m = model(0.1, -4, 4)
    p = transition_layer_datum(m, SIX, 2049)
    recs, s = evolve(m, SMOKE, p, 10.0, checkpoints=[0.0, 10.0])
    drop = recs[0].E - recs[-1].E
    assert drop > 0
    assert abs(s.stats.dissipation / drop - 1) < 1e-3


def test_lyapunov_identity_converges_with_tolerance(exp1_short):
    m, _, recs, s = exp1_short
    coarse = abs(s.stats.dissipation / (recs[0].E - recs[-1].E) - 1)
    assert coarse < 0.05
    # dissipation never exceeds the energy drop: backward Euler dissipates at least the rate
    assert s.stats.dissipation < recs[0].E - recs[-1].E


def test_lyapunov_rate(exp1_short):
    # dE/dt = -||u_t||^2 / eps from central differences of the checkpoint series
    m, _, recs, _ = exp1_short
    t = np.array([r.t for r in recs])
    E = np.array([r.E for r in recs])
    ut = np.array([r.ut_l2sq for r in recs])
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    dev = np.abs(dEdt + ut[1:-1] / m.eps)
    assert np.all(dev <= 1e-3 * (1 + ut[1:-1] / m.eps))


def test_max_principle(exp1_short):
    _, _, recs, _ = exp1_short
    for r in recs:
        assert np.all(np.abs(r.state.u.u) <= 1 + 1e-8)
        assert r.max_grad <= 1.0


def test_scheme_equivalence(exp1_short):
    m, p, _, s_imp = exp1_short
    _, s_exp = evolve(m, StepperConfig(scheme="explicit"), p, 10.0, checkpoints=[10.0])
    n_imp = math.sqrt(weighted_sq_norm(s_imp.u.u, s_imp.u.h))
    n_exp = math.sqrt(weighted_sq_norm(s_exp.u.u, s_exp.u.h))
    assert abs(n_imp - n_exp) < 1e-3


def test_explicit_dt_limits():
    m = model(0.1, -1, 1)
    u = np.zeros(201)
    h = 0.01
    assert explicit_dt(m, u, h) == pytest.approx(min(0.4 * h * h / (m.eps**2 * 1.0), 0.4 / 1.0))


def test_two_layers_collapse_to_none():
    m = model(0.1, -1, 1)
    p = transition_layer_datum(m, [-0.1, 0.1], 513)
    recs, s = evolve(m, StepperConfig(), p, 1e4)
    counts = [r.n_zeros for r in recs]
    assert counts[0] == 2 and counts[-1] == 0
    k = counts.index(0)
    assert all(c == 2 for c in counts[:k])
    assert s.t < 1e4  # converged to the well and exited


def test_backward_regime_policies():
    m = model(0.1, -1, 1)
    x = uniform_grid(-1, 1, 101)
    steep = Profile(x, np.where(x < 0, -1.0, 1.0))
    s = State(0.0, steep)
    with pytest.raises(BackwardRegimeError):
        step(m, StepperConfig(backward_regime_policy="error"), s)
    with pytest.warns(RuntimeWarning):
        out = step(m, StepperConfig(backward_regime_policy="warn"), s)
    assert out.stats.backward_steps == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        step(m, StepperConfig(backward_regime_policy="clamp"), s)


def test_config_validation():
    with pytest.raises(ConfigError):
        StepperConfig(scheme="rk4")
    with pytest.raises(ConfigError):
        StepperConfig(dt_init=1e4, dt_max=1e3)
    with pytest.raises(ConfigError):
        StepperConfig(backward_regime_policy="ignore")


def test_geometric_checkpoints():
    cps = geometric_checkpoints(1e3, 1e-2, 10)
    assert cps[0] == 0 and cps[-1] == 1e3 and np.all(np.diff(cps) > 0)
    assert len(cps) == 52


def test_diagnostics_csv_round_trip(tmp_path, exp1_short):
    _, _, recs, _ = exp1_short
    path = tmp_path / "d.csv"
    write_diagnostics_csv(recs, path)
    back = read_diagnostics_csv(path)
    assert [r.t for r in back] == [r.t for r in recs]
    assert [r.E for r in back] == [r.E for r in recs]
    assert [r.zero_positions for r in back] == [r.zero_positions for r in recs]


@pytest.mark.slow
def test_grid_sanity_exp1_first_collapse():
    times = []
    for n in (2049, 4097):
        m = model(0.1, -4, 4)
        p = transition_layer_datum(m, SIX, n)
        cfg = StepperConfig()
        recs, _ = evolve(m, cfg, p, 2e4, stop_when=lambda r: r.n_zeros < 6)
        ev = collapse_times(recs, m, cfg)
        assert ev and (ev[0].zeros_before, ev[0].zeros_after) == (6, 4)
        times.append(ev[0].t)
    assert abs(times[1] / times[0] - 1) < 0.1
