"""Signals, amplitude spectra and their smoothed order statistics."""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError
from .fft import fft

__all__ = [
    "Signal",
    "AmplitudeSpectrum",
    "dft",
    "enforce_offset",
    "enforced_dft",
    "regularize",
    "order_stats",
    "amplitude_spectrum",
    "spectrum_from_theta",
    "OFFSET_MARGIN",
]

#: |theta_0| is pushed to at least this multiple of max_{k>=1} |theta_k|.
OFFSET_MARGIN = 2.0


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled real series.

    ``dt`` is the sampling interval in seconds; ``None`` means unknown, in
    which case nothing can be reported in Hz.
    """

    samples: np.ndarray
    dt: float | None = None
    label: str = ""

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).ravel()
        if x.size < 4:
            raise InputError(f"signal needs at least 4 samples, got {x.size}")
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise InputError(f"non-finite sample at index {bad}")
        if self.dt is not None and not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"sampling interval must be positive, got {self.dt}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def n(self):
        return self.samples.size

    def replace(self, samples):
        return Signal(samples, dt=self.dt, label=self.label)


@dataclass(frozen=True)
class AmplitudeSpectrum:
    """DFT coefficients with their 2m-regularised magnitudes.

    ``theta`` may be the full DFT or its single-sided half; ``n`` is always
    the length of the underlying signal so bins convert to Hz as
    ``k / (n * dt)``. ``smoothed[j]`` is the regularised value at frequency
    index ``k = m + j``.
    """

    theta: np.ndarray
    m: int
    smoothed: np.ndarray
    mu: np.ndarray
    n: int
    dt: float | None = None
    one_sided: bool = True

    @property
    def first(self):
        """Smallest frequency index carried by ``smoothed``."""
        return self.m

    @property
    def last(self):
        """Largest frequency index carried by ``smoothed``."""
        return self.m + self.smoothed.size - 1

    def bin_to_hz(self, k):
        if self.dt is None:
            return None
        return float(k) / (self.n * self.dt)


def dft(signal):
    """DFT coefficients ``theta_k = sum_i x_i exp(-2j pi k i / n)``, k = 0..n-1."""
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite sample in signal")
    return fft(x)


def _offset_shift(x, theta, margin):
    n = x.size
    top = np.max(np.abs(theta[1:])) if n > 1 else 0.0
    target = margin * top
    t0 = theta[0].real  # imaginary part of theta_0 is zero for real input
    if top == 0.0 or abs(t0) >= target:
        return 0.0
    sign = 1.0 if t0 >= 0 else -1.0
    # the small relative overshoot absorbs rounding in the re-transform
    return (sign * target * (1 + 1e-9) - t0) / n


def enforce_offset(signal, margin=OFFSET_MARGIN):
    """Shift the signal by a constant so that the zero-frequency coefficient dominates.

    After the call ``|theta_0| >= margin * max_{k>=1} |theta_k|``. Adding a
    constant only moves ``theta_0`` (by ``n * C``), so the rest of the
    spectrum is untouched. Signals already satisfying the condition are
    returned unchanged.
    """
    x = signal.samples
    shift = _offset_shift(x, dft(signal), margin)
    if shift == 0.0:
        return signal
    return signal.replace(x + shift)


def enforced_dft(signal, margin=OFFSET_MARGIN):
    """Offset-enforced signal and its DFT from a single transform.

    The shift only moves the zero-frequency coefficient, so it is applied to
    ``theta_0`` directly instead of transforming the shifted samples again.
    """
    x = signal.samples
    theta = dft(signal)
    shift = _offset_shift(x, theta, margin)
    if shift == 0.0:
        return signal, theta
    theta[0] += x.size * shift
    return signal.replace(x + shift), theta


def regularize(theta, m):
    """2m-regularised magnitudes.

    Returns ``sqrt(mean(|theta_l|^2 for l in k-m..k+m))`` for
    ``k = m .. len(theta)-m-1``; a sequence of ``len(theta) - 2m`` values.
    With ``m = 0`` this is exactly ``|theta|``.
    """
    theta = np.asarray(theta)
    n = theta.shape[-1]
    m = int(m)
    if m < 0 or 2 * m > n - 1:
        raise ParameterError(f"smoothing half-width m={m} outside [0, {(n - 1) // 2}]")
    mag = np.abs(theta)
    if m == 0:
        return mag
    power = mag * mag
    width = 2 * m + 1
    # direct windowed sums; a running cumsum loses the small bins next to a
    # dominant theta_0
    total = np.convolve(power, np.ones(width), mode="valid")
    return np.sqrt(total / width)


def order_stats(smoothed):
    """Values sorted into a nondecreasing sequence."""
    return np.sort(np.asarray(smoothed, dtype=np.float64), kind="stable")


def amplitude_spectrum(signal, m, one_sided=True, theta=None):
    """Build the :class:`AmplitudeSpectrum` of ``signal`` at smoothing ``m``.

    The peak search runs on the single-sided spectrum (k = 0..n//2) by
    default. For a real signal the upper half mirrors the lower one, and
    keeping it would put a copy of the low-frequency trend at the top of
    every search zone.
    """
    if theta is None:
        theta = dft(signal)
    n = signal.n
    if one_sided:
        theta = theta[: n // 2 + 1]
    smoothed = regularize(theta, m)
    return AmplitudeSpectrum(
        theta=theta,
        m=int(m),
        smoothed=smoothed,
        mu=order_stats(smoothed),
        n=n,
        dt=signal.dt,
        one_sided=one_sided,
    )


def spectrum_from_theta(theta, m, n=None, dt=None):
    """Wrap an arbitrary coefficient sequence (no halving) as a spectrum."""
    theta = np.asarray(theta)
    smoothed = regularize(theta, m)
    return AmplitudeSpectrum(
        theta=theta,
        m=int(m),
        smoothed=smoothed,
        mu=order_stats(smoothed),
        n=theta.size if n is None else int(n),
        dt=dt,
        one_sided=False,
    )
