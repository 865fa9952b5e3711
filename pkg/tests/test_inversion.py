import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmlayers.errors import DomainError
from pmlayers.inversion import InversionContext, j_eps, j_eps_asymptotic, p_eps
from pmlayers.model import FluxSpec

EPS = (0.05, 0.1, 0.5)


def ctxs():
    return [InversionContext(e, FluxSpec(k)) for k in ("rational", "gaussian") for e in EPS]


def test_p_eps_endpoints():
    for ctx in ctxs():
        assert p_eps(ctx, 0.0) == 0.0
        assert float(p_eps(ctx, ctx.s_max)) == pytest.approx(ctx.xi_max, rel=1e-12)


def test_p_eps_closed_form_value():
    ctx = InversionContext(1.0, FluxSpec.rational())
    assert float(p_eps(ctx, 1.0)) == pytest.approx(0.5 - 0.5 * math.log(2.0), rel=1e-15)
    assert float(p_eps(ctx, 1.0)) == pytest.approx(0.153426, abs=1e-6)


def test_p_eps_is_even():
    for ctx in ctxs():
        s = np.linspace(0, ctx.s_max, 101)
        np.testing.assert_array_equal(p_eps(ctx, -s), p_eps(ctx, s))


def test_p_eps_matches_integral_definition():
    # P_eps(s) = int_0^s eps^2 z Q'(eps^2 z) dz, checked by quadrature
    from scipy.integrate import quad

    for ctx in ctxs():
        e2 = ctx.eps**2
        for s in (0.1 * ctx.s_max, 0.5 * ctx.s_max, ctx.s_max):
            val, _ = quad(lambda z: e2 * z * float(ctx.flux.dq(e2 * z)), 0.0, s, epsrel=1e-13)
            assert float(p_eps(ctx, s)) == pytest.approx(val, rel=1e-10)


def test_scale_identity():
    fl = FluxSpec.rational()
    s = np.linspace(0, 1, 51)
    for e in (0.1, 0.3):
        ctx = InversionContext(e, fl)
        np.testing.assert_allclose(p_eps(ctx, s / e**2), fl.h(s) / e**2, rtol=1e-15)


def test_p_eps_increasing():
    for ctx in ctxs():
        s = np.linspace(0, ctx.s_max, 5001)
        assert np.all(np.diff(p_eps(ctx, s)) > 0)


def test_j_eps_endpoints_exact():
    for ctx in ctxs():
        assert j_eps(ctx, 0.0) == 0.0
        assert j_eps(ctx, ctx.xi_max) == ctx.s_max
        # clamp band just above xi_max
        assert j_eps(ctx, ctx.xi_max * (1 + 5e-13)) == ctx.s_max


def test_j_eps_domain_errors():
    ctx = InversionContext(0.1, FluxSpec.rational())
    with pytest.raises(DomainError):
        j_eps(ctx, -1e-12)
    with pytest.raises(DomainError):
        j_eps(ctx, ctx.xi_max * (1 + 1e-10))
    with pytest.raises(DomainError):
        j_eps(ctx, math.nan)


def test_round_trip_100_points():
    rng = np.random.default_rng(0)
    for ctx in ctxs():
        s = rng.uniform(0, ctx.s_max, 100)
        np.testing.assert_allclose(j_eps(ctx, p_eps(ctx, s)), s, rtol=1e-8)


def test_residual_within_root_tolerance():
    for ctx in ctxs():
        xi = np.linspace(0, ctx.xi_max, 1001)
        res = np.abs(p_eps(ctx, j_eps(ctx, xi)) - xi)
        assert np.all(res <= ctx.root_tol * np.maximum(1.0, xi))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from(["rational", "gaussian"]), st.sampled_from(EPS))
def test_j_eps_monotone(a, b, kind, eps):
    ctx = InversionContext(eps, FluxSpec(kind))
    x1, x2 = sorted((a, b))
    if x2 - x1 < 1e-9:
        return
    assert j_eps(ctx, x1 * ctx.xi_max) < j_eps(ctx, x2 * ctx.xi_max)


def test_asymptotic():
    ctx = InversionContext(0.1, FluxSpec.rational())
    assert j_eps_asymptotic(ctx, 0.0) == 0.0
    xi = 1e-6 / ctx.eps**2
    rel = abs(j_eps(ctx, xi) - j_eps_asymptotic(ctx, xi)) / j_eps(ctx, xi)
    assert rel < 1e-2


@pytest.mark.parametrize("kind", ["rational", "gaussian"])
@pytest.mark.parametrize("eps", EPS)
def test_remainder_is_little_o(kind, eps):
    ctx = InversionContext(eps, FluxSpec(kind))
    ratios = []
    for z in (1e-2, 1e-3, 1e-4):
        xi = z / eps**2
        ratios.append(eps**2 * (j_eps(ctx, xi) - j_eps_asymptotic(ctx, xi)) / z)
    assert ratios[0] > ratios[1] > ratios[2] > 0
