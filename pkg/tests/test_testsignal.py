import numpy as np
import pytest

from hffeatures.errors import ParameterError
from hffeatures.features import hf_feature
from hffeatures.testsignal import (
    DEFAULT_DT_HOURS,
    TestSignalParams,
    benchmark_params,
    generate,
    lj_potential,
    lj_trend,
    oscillation,
)


def test_defaults():
    p = TestSignalParams()
    assert (p.c1, p.c2, p.c3, p.c4, p.p, p.q) == (0.4, 2.0, 2.0, 2.0, 6.0, 3.0)
    assert (p.j0, p.j1, p.c_a, p.c_f, p.sigma) == (1700, 3400, 0.05, 10.0, 0.025)
    assert p.j0 * p.dt_hours == pytest.approx(1.43)
    # default splice at the zero of the bracket, t = 2 * 2^(-1/3) h
    assert p.j_connect * p.dt_hours == pytest.approx(2 * 2 ** (-1 / 3), abs=DEFAULT_DT_HOURS)


def test_flat_tail_when_c1_zero():
    p = TestSignalParams(n=5000, c1=0.0)
    t = lj_trend(p)
    assert np.all(t[p.j_connect + 1:] == p.c4)


def test_potential_root():
    p = TestSignalParams()
    root = p.c2 * p.c3 ** (-1 / (p.p - p.q))
    assert lj_potential(root, p) == pytest.approx(p.c4, abs=1e-12)


def test_trend_shape():
    p = TestSignalParams()
    t = lj_trend(p)
    hours = np.arange(p.n) * p.dt_hours
    lo = int(np.argmin(t))
    # stationary point: (c2/t)^(p-q) = q c3 / p = 1, so t = c2 = 2 h and T = c4 - c1
    assert hours[lo] == pytest.approx(2.0, abs=2 * p.dt_hours)
    assert t[lo] == pytest.approx(p.c4 - p.c1, abs=1e-6)
    assert np.all(np.diff(t[p.j_connect + 1: lo + 1]) < 0)
    assert np.all(np.diff(t[lo:]) > 0)
    assert t[-1] == pytest.approx(p.c4, abs=1e-3)


def test_ramp_formula():
    p = TestSignalParams(n=3000, j_connect=500, j0=1000, j1=2000)
    t = lj_trend(p)
    pj, pj1 = lj_potential(np.array([500, 501]) * p.dt_hours, p)
    i = np.arange(501)
    assert np.allclose(t[:501], (pj1 - pj) / 501 * i + pj, rtol=1e-14)
    assert t[501] == pytest.approx(pj1)


def test_oscillation_envelope():
    p = TestSignalParams(n=6000)
    o = oscillation(p)
    assert np.all(o[: p.j0] == 0) and np.all(o[p.j1 + 1:] == 0)
    assert o[p.j0] == 0 and o[p.j1] == 0
    assert np.max(np.abs(o)) <= p.c_a
    assert np.max(np.abs(o)) >= p.c_a * 0.999
    assert np.all(oscillation(TestSignalParams(n=6000, c_a=0.0)) == 0)


def test_midpoint_envelope_exact():
    # choose the phase so the sine is 1 at the midpoint
    j0, j1 = 100, 300
    dt = 1.0 / (4 * 200 * 1.0)  # c_f = 1: t_mid = 200 dt = 1/4 cycle
    p = TestSignalParams(n=1000, j0=j0, j1=j1, c_f=1.0, dt_hours=dt, j_connect=10)
    assert oscillation(p)[200] == pytest.approx(p.c_a, rel=1e-12)


def test_noise_free_signal_is_trend():
    p = TestSignalParams(n=4000, sigma=0.0, c_a=0.0)
    sig, trend, _ = generate(p, return_parts=True)
    assert np.array_equal(sig.samples, trend)


def test_noise_variance():
    p = TestSignalParams()
    sig, trend, osc = generate(p, return_parts=True)
    resid = sig.samples - trend - osc
    assert abs(resid.var() - p.sigma ** 2) <= 0.05 * p.sigma ** 2


def test_deterministic():
    p = TestSignalParams(n=2048, seed=9, j0=300, j1=600)
    assert np.array_equal(generate(p).samples, generate(p).samples)
    other = TestSignalParams(n=2048, seed=10, j0=300, j1=600)
    assert not np.array_equal(generate(p).samples, generate(other).samples)


def test_validation():
    with pytest.raises(ParameterError):
        TestSignalParams(j_connect=0)
    with pytest.raises(ParameterError):
        TestSignalParams(j0=500, j1=400)
    with pytest.raises(ParameterError):
        TestSignalParams(p=3.0, q=6.0)
    with pytest.raises(ParameterError):
        TestSignalParams(dt_hours=-1.0)


def test_rescaling_keeps_time_axis():
    p = benchmark_params(2 ** 14)
    base = TestSignalParams()
    assert p.record_hours == pytest.approx(base.record_hours)
    assert p.j0 * p.dt_hours == pytest.approx(1.43, abs=p.dt_hours)
    assert p.oscillation_bin == pytest.approx(base.oscillation_bin)
    assert p.dt_seconds == pytest.approx(3600 * p.dt_hours)


def test_spike_at_oscillation_bin():
    p = benchmark_params(2 ** 14, sigma=0.0)
    sig, _, osc = generate(p, return_parts=True)
    target = round(p.oscillation_bin)
    for m in range(0, 8):
        assert abs(hf_feature(sig, m).b_index - target) <= 2
        # without the trend the burst peaks exactly at its bin
        assert hf_feature(sig.replace(osc + 2.0), m).b_index == target
