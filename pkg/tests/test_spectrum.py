import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hffeatures.errors import InputError, ParameterError
from hffeatures.spectrum import (
    OFFSET_MARGIN,
    Signal,
    amplitude_spectrum,
    dft,
    enforce_offset,
    enforced_dft,
    order_stats,
    regularize,
    spectrum_from_theta,
)

from oracles import dft_direct, windowed_rms


def test_constant_signal():
    theta = dft(Signal(np.full(16, 3.0)))
    assert theta[0] == pytest.approx(48.0)
    assert np.max(np.abs(theta[1:])) <= 1e-12


def test_cosine_harmonic():
    n, k0, amp = 64, 5, 1.7
    i = np.arange(n)
    theta = dft(Signal(amp * np.cos(2 * np.pi * k0 * i / n)))
    mag = np.abs(theta)
    assert mag[k0] == pytest.approx(n * amp / 2)
    assert mag[n - k0] == pytest.approx(n * amp / 2)
    others = np.delete(mag, [k0, n - k0])
    assert others.max() <= 1e-10


def test_parseval_against_direct(rng):
    for _ in range(100):
        x = rng.normal(size=64)
        theta = dft_direct(x)
        lhs = np.sum(np.abs(theta) ** 2)
        assert abs(lhs - 64 * np.sum(x * x)) <= 1e-9 * lhs
        assert np.max(np.abs(dft(Signal(x)) - theta)) <= 1e-10 * np.max(np.abs(theta))


def test_nonfinite_rejected():
    with pytest.raises(InputError):
        dft(np.array([1.0, np.nan, 2.0, 3.0]))
    with pytest.raises(InputError):
        Signal([1.0, 2.0, np.inf, 0.0])


def test_signal_validation():
    with pytest.raises(InputError):
        Signal([1.0, 2.0, 3.0])
    with pytest.raises(InputError):
        Signal(np.zeros(8), dt=0.0)
    s = Signal(np.arange(8.0), dt=0.5)
    with pytest.raises(ValueError):
        s.samples[0] = 1.0


def test_offset_sine():
    n = 1024
    x = np.sin(2 * np.pi * 7 * np.arange(n) / n)
    theta = dft(enforce_offset(Signal(x)))
    mag = np.abs(theta)
    assert mag[0] >= OFFSET_MARGIN * mag[1:].max()
    assert mag[0] >= n * (1 - 1e-9)


def test_offset_already_satisfied_unchanged():
    s = Signal(10.0 + np.sin(np.arange(32.0)))
    assert enforce_offset(s) is s


def test_offset_alternating():
    x = np.array([-1.0, 1.0] * 4)
    before = np.abs(dft_direct(x))
    assert before[4] == pytest.approx(8.0) and before[0] == pytest.approx(0.0)
    after = np.abs(dft_direct(enforce_offset(Signal(x)).samples))
    assert after[0] >= 2 * after[1:].max()
    assert after[4] == pytest.approx(before[4])


def test_enforced_dft_matches_retransform(rng):
    s = Signal(rng.normal(size=200))
    shifted, theta = enforced_dft(s)
    assert np.allclose(theta, dft(shifted), rtol=0, atol=1e-9)


def test_regularize_m0_exact(rng):
    theta = rng.normal(size=33) + 1j * rng.normal(size=33)
    assert np.array_equal(regularize(theta, 0), np.abs(theta))


def test_regularize_constant_magnitude():
    theta = 2.5 * np.exp(1j * np.linspace(0, 6, 40))
    for m in range(0, 10):
        assert np.allclose(regularize(theta, m), 2.5, rtol=1e-12)


def test_regularize_matches_loop(rng):
    theta = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.allclose(regularize(theta, 3), windowed_rms(theta, 3), rtol=1e-12, atol=0)


def test_regularize_range():
    with pytest.raises(ParameterError):
        regularize(np.ones(10), 5)
    with pytest.raises(ParameterError):
        regularize(np.ones(10), -1)
    assert regularize(np.ones(11), 5).size == 1


def test_order_stats_examples(rng):
    assert list(order_stats([3, 1, 2])) == [1, 2, 3]
    assert list(order_stats([1, 2, 2, 5])) == [1, 2, 2, 5]
    for _ in range(100):
        v = rng.normal(size=rng.integers(1, 30))
        out = order_stats(v)
        assert np.all(np.diff(out) >= 0)
        assert sorted(v.tolist()) == out.tolist()


def test_spectrum_lengths(rng):
    s = Signal(rng.normal(size=50), dt=0.1)
    for m in range(0, 10):
        full = amplitude_spectrum(s, m, one_sided=False)
        assert full.smoothed.size == 50 - 2 * m
        assert full.mu.size == 50 - 2 * m
        half = amplitude_spectrum(s, m)
        assert half.smoothed.size == 26 - 2 * m
        assert half.last == 25 - m
    assert half.bin_to_hz(5) == pytest.approx(5 / (50 * 0.1))
    assert amplitude_spectrum(Signal(np.ones(8)), 0).bin_to_hz(1) is None


def test_spectrum_from_theta_keeps_length(rng):
    spec = spectrum_from_theta(rng.normal(size=20), 2)
    assert spec.smoothed.size == 16 and spec.n == 20 and not spec.one_sided


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(4, 40), elements=st.floats(-1e3, 1e3)), st.integers(0, 8))
def test_regularize_properties(x, m):
    theta = dft(x)
    n = x.size
    if 2 * m > n - 1:
        return
    s = regularize(theta, m)
    assert s.size == n - 2 * m
    assert np.all(s >= 0)
    mu = order_stats(s)
    assert np.all(np.diff(mu) >= 0)
    # a constant shift only touches theta_0, i.e. the first smoothed value
    s2 = regularize(dft(x + 17.0), m)
    scale = max(1.0, np.abs(theta).max())
    assert np.allclose(s2[1:], s[1:], rtol=0, atol=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(4, 64), elements=st.floats(-1e3, 1e3)))
def test_offset_property(x):
    shifted = enforce_offset(Signal(x))
    mag = np.abs(dft(shifted))
    if mag[1:].max() > 0:
        assert mag[0] >= OFFSET_MARGIN * mag[1:].max() * (1 - 1e-9)
    assert np.allclose(mag[1:], np.abs(dft(x))[1:], rtol=0, atol=1e-9 * max(1.0, mag[0]))
