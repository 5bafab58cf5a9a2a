import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mmv2v.errors import DomainError, NoCrossingError, UndefinedEstimateError
from mmv2v.models import Unavailable
from mmv2v.shadowing import (INV_E, DecorrelationKey, ShadowingProcess, autocorrelation,
                             crossing_lag, decorrelation_registry,
                             estimate_decorrelation_time)


def _lagged_corr(x, k):
    x = x - x.mean()
    return float(x[:-k] @ x[k:] / (x @ x))


def test_rho_at_decorrelation_time():
    assert ShadowingProcess(3.0, 2.0, 2.0, state=0.0).rho == pytest.approx(INV_E, abs=1e-12)
    assert math.isclose(INV_E, 0.36788, abs_tol=1e-5)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_rho_in_unit_interval(t_d, dt):
    assume(1e-12 < dt / t_d < 700)  # outside this exp() rounds to 1 or underflows
    assert 0 < ShadowingProcess(1.0, t_d, dt, state=0.0).rho < 1


def test_zero_sigma_is_zero():
    rng = np.random.default_rng(0)
    proc = ShadowingProcess(0.0, 5.0, 0.73, rng=rng)
    assert proc.state == 0
    assert all(proc.step(rng) == 0 for _ in range(20))
    assert not np.any(proc.generate(100, rng))


def test_invalid_parameters():
    for args in ((-1, 5, 1), (1, 0, 1), (1, 5, 0), (1, math.inf, 1)):
        with pytest.raises(DomainError):
            ShadowingProcess(*args, state=0.0)


def test_step_recursion():
    rng = np.random.default_rng(11)
    proc = ShadowingProcess(4.0, 5.0, 0.73, state=1.5)
    z = np.random.default_rng(11).standard_normal()
    expected = proc.rho * 1.5 + math.sqrt(1 - proc.rho ** 2) * 4.0 * z
    assert proc.step(rng) == pytest.approx(expected, abs=1e-12)
    assert proc.state == pytest.approx(expected, abs=1e-12)


def test_generate_matches_stepping():
    a = ShadowingProcess(3.0, 5.0, 0.73, rng=5)
    b = ShadowingProcess(3.0, 5.0, 0.73, rng=5)
    ra, rb = np.random.default_rng(9), np.random.default_rng(9)
    stepped = np.array([a.step(ra) for _ in range(500)])
    batch = b.generate(500, rb)
    np.testing.assert_allclose(batch, stepped, rtol=0, atol=1e-10)
    assert a.state == pytest.approx(b.state, abs=1e-10)
    assert ra.standard_normal() == rb.standard_normal()


@pytest.fixture(scope="module")
def series_5s():
    rng = np.random.default_rng(20240501)
    return ShadowingProcess(1.0, 5.0, 0.73, rng=rng).generate(100_000, rng)


def test_generated_autocorrelation(series_5s):
    assert abs(_lagged_corr(series_5s, 1) - math.exp(-0.73 / 5)) < 0.01
    assert abs(_lagged_corr(series_5s, math.ceil(5 / 0.73)) - INV_E) < 0.05


def test_generated_marginal(series_5s):
    assert abs(series_5s.var() - 1.0) < 0.05
    assert abs(series_5s.mean()) < 0.1


def test_autocorrelation_matches_direct_sum(series_5s):
    x = series_5s[:300]
    r = autocorrelation(x)
    xc = x - x.mean()
    direct = np.array([xc[: x.size - k] @ xc[k:] for k in range(x.size)]) / (xc @ xc)
    np.testing.assert_allclose(r, direct, atol=1e-12)
    assert r[0] == pytest.approx(1.0)


def test_white_noise_decorrelates_within_one_lag():
    x = np.random.default_rng(1).standard_normal(5000)
    assert estimate_decorrelation_time(x, 1.0) < 1.0


@pytest.mark.parametrize("t_d", [1.0, 5.0, 20.0])
def test_round_trip(t_d):
    rng = np.random.default_rng(int(t_d * 100))
    x = ShadowingProcess(2.5, t_d, 0.73, rng=rng).generate(100_000, rng)
    assert 0.8 * t_d <= estimate_decorrelation_time(x, 0.73) <= 1.2 * t_d


def test_interpolation_between_lags():
    x = np.random.default_rng(3).standard_normal(200)
    r = autocorrelation(np.cumsum(x))
    k = int(np.flatnonzero(r < INV_E)[0])
    lag = crossing_lag(np.cumsum(x))
    assert k - 1 <= lag <= k
    assert np.interp(lag, [k - 1, k], [r[k - 1], r[k]]) == pytest.approx(INV_E)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_scale_invariance(scale):
    x = np.random.default_rng(8).standard_normal(400).cumsum()
    assert estimate_decorrelation_time(scale * x, 0.73) == pytest.approx(
        estimate_decorrelation_time(x, 0.73), rel=1e-9)


def test_estimator_errors():
    with pytest.raises(UndefinedEstimateError):
        estimate_decorrelation_time(np.full(50, -80.0), 1.0)
    with pytest.raises(DomainError):
        estimate_decorrelation_time(np.arange(5.0), 1.0)
    with pytest.raises(DomainError):
        estimate_decorrelation_time(np.arange(50.0), 0)
    slow = np.cumsum(np.random.default_rng(4).standard_normal(2000))
    with pytest.raises(NoCrossingError) as info:
        crossing_lag(slow, max_lag=3)
    assert info.value.max_lag == 3


def test_registry_examples():
    assert decorrelation_registry(DecorrelationKey("rooftop", 0, 0)) == 14.57
    assert decorrelation_registry(DecorrelationKey("bumper", 0, 0)) == 128.02
    assert isinstance(decorrelation_registry(DecorrelationKey("rooftop", 0, 2)), Unavailable)


def test_registry_golden(decorrelation_times):
    assert len(decorrelation_times) == 18
    for row in decorrelation_times:
        got = decorrelation_registry(DecorrelationKey(
            row["mounting"], int(row["v_rx_mps"]), int(row["v_rel_mps"])))
        if row["t_d_s"]:
            assert got == float(row["t_d_s"])
        else:
            assert not got


@pytest.mark.parametrize("mounting,v_rx,v_rel", [
    ("rooftop", 5, 0), ("rooftop", 0, 3), ("underchassis", 0, 0)])
def test_registry_off_grid(mounting, v_rx, v_rel):
    with pytest.raises(DomainError):
        DecorrelationKey(mounting, v_rx, v_rel)
