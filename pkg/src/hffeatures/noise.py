"""Noise level estimation and wavelet shrinkage.

Uses the periodised orthogonal wavelet transform, so for dyadic lengths the
analysis matrix is exactly orthogonal. The noise standard deviation is the
median absolute finest-scale coefficient over the normal third quartile;
VisuShrink soft-thresholds every level from ``j0`` up at the universal
threshold ``sigma * sqrt(2 log n)``.
"""

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import InputError, ParameterError
from .fft import next_pow2
from .spectrum import Signal

__all__ = [
    "SYMMLET8",
    "Q75",
    "WaveletDecomposition",
    "NoiseEstimate",
    "wavelet_transform",
    "inverse_wavelet_transform",
    "estimate_sigma",
    "soft_threshold",
    "visushrink",
    "DEFAULT_J0",
]

#: Least-asymmetric Daubechies ("Symmlet 8") scaling filter, 16 taps.
SYMMLET8 = np.array([
    0.0018899503327594609,
    -0.0003029205147213668,
    -0.01495225833704823,
    0.003808752013890615,
    0.049137179673607506,
    -0.027219029917056003,
    -0.05194583810770904,
    0.3644418948353314,
    0.7771857517005235,
    0.4813596512583722,
    -0.061273359067658524,
    -0.1432942383508097,
    0.007607487324917605,
    0.03169508781149298,
    -0.0005421323317911481,
    -0.0033824159510061256,
])

#: Standard normal third quartile, Phi^{-1}(3/4).
Q75 = NormalDist().inv_cdf(0.75)

DEFAULT_J0 = 4


def _highpass(h):
    k = np.arange(h.size)
    return ((-1.0) ** k) * h[::-1]


@dataclass(frozen=True)
class WaveletDecomposition:
    """Periodised DWT coefficients.

    ``coeffs`` holds the scaling coefficients of the coarsest level followed
    by detail levels ``coarsest..J``; detail level ``j`` has ``2**j``
    entries. The analysed length is ``2**(J+1)`` (after padding when the
    input was not dyadic); ``n_orig`` is the input length.
    """

    coeffs: np.ndarray
    J: int
    coarsest: int
    n_orig: int
    filter_id: str = "symmlet8"

    @property
    def n(self):
        return self.coeffs.size

    def level(self, j):
        """Detail coefficients ``w_{j, .}``."""
        if not self.coarsest <= j <= self.J:
            raise ParameterError(f"level {j} outside [{self.coarsest}, {self.J}]")
        start = 2 ** j
        return self.coeffs[start: 2 * start]

    @property
    def scaling(self):
        return self.coeffs[: 2 ** self.coarsest]


@dataclass(frozen=True)
class NoiseEstimate:
    sigma_hat: float
    n_used: int


def _indices(length, taps):
    return (2 * np.arange(length // 2)[:, None] + np.arange(taps)[None, :]) % length


def _analysis_step(x, h, g):
    idx = _indices(x.size, h.size)
    blocks = x[idx]
    return blocks @ h, blocks @ g


def _synthesis_step(a, d, h, g):
    length = 2 * a.size
    idx = _indices(length, h.size)
    out = np.zeros(length)
    np.add.at(out, idx, a[:, None] * h[None, :] + d[:, None] * g[None, :])
    return out


def _pad_length(n):
    size = next_pow2(n)
    if size < 8:
        size = 8
    return size


def wavelet_transform(signal, coarsest=0, h=SYMMLET8):
    """Orthogonal periodised wavelet transform.

    Inputs whose length is not a power of two are extended by symmetric
    reflection to the next power of two.
    """
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if x.size < 8:
        raise InputError(f"wavelet analysis needs at least 8 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite sample in signal")
    size = _pad_length(x.size)
    if size != x.size:
        x = np.pad(x, (0, size - x.size), mode="symmetric")
    J = size.bit_length() - 2
    if not 0 <= coarsest <= J:
        raise ParameterError(f"coarsest level {coarsest} outside [0, {J}]")
    g = _highpass(h)
    details = []
    a = x
    while a.size > 2 ** coarsest:
        a, d = _analysis_step(a, h, g)
        details.append(d)
    coeffs = np.concatenate([a] + details[::-1])
    return WaveletDecomposition(coeffs=coeffs, J=J, coarsest=coarsest, n_orig=signal.n if isinstance(signal, Signal) else len(signal))


def inverse_wavelet_transform(decomp, h=SYMMLET8):
    """Inverse of :func:`wavelet_transform`; returns the (padded) samples."""
    g = _highpass(h)
    c = decomp.coeffs
    a = c[: 2 ** decomp.coarsest]
    for j in range(decomp.coarsest, decomp.J + 1):
        a = _synthesis_step(a, c[2 ** j: 2 ** (j + 1)], h, g)
    return a


def _interior_finest(decomp, taps):
    w = decomp.level(decomp.J)
    if decomp.n_orig == decomp.n:
        return w
    # coefficient k of the finest level sees padded samples 2k .. 2k+taps-1
    k = np.arange(w.size)
    inside = 2 * k + taps - 1 < decomp.n_orig
    if inside.sum() >= 8:
        return w[inside]
    return w[: max(8, decomp.n_orig // 2)]


def estimate_sigma(decomp, taps=SYMMLET8.size):
    """Median absolute deviation estimate of the noise standard deviation.

    ``sigma_hat = median(|w_{J,.}|) / Phi^{-1}(3/4)`` over finest-scale
    coefficients; when the signal was padded only coefficients whose
    support lies inside the original samples are used.
    """
    w = _interior_finest(decomp, taps)
    return NoiseEstimate(sigma_hat=float(np.median(np.abs(w)) / Q75), n_used=decomp.n)


def soft_threshold(w, t):
    """``sign(w) * max(|w| - t, 0)``."""
    w = np.asarray(w, dtype=np.float64)
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def visushrink(signal, j0=DEFAULT_J0, sigma=None):
    """VisuShrink denoised signal.

    Levels below ``j0`` are kept; levels ``j0..J`` are soft-thresholded at
    ``sigma_hat * sqrt(2 log n)``, with ``n`` the analysed (padded) length.

    Returns
    -------
    denoised : Signal
        Same length, ``dt`` and label as the input.
    estimate : NoiseEstimate
        The noise level used for the threshold.
    """
    decomp = wavelet_transform(signal)
    if not 0 <= j0 <= decomp.J:
        raise ParameterError(f"j0={j0} outside [0, {decomp.J}]")
    est = estimate_sigma(decomp) if sigma is None else NoiseEstimate(float(sigma), decomp.n)
    thr = est.sigma_hat * np.sqrt(2.0 * np.log(decomp.n))
    c = decomp.coeffs.copy()
    c[2 ** j0:] = soft_threshold(c[2 ** j0:], thr)
    shrunk = WaveletDecomposition(c, decomp.J, decomp.coarsest, decomp.n_orig, decomp.filter_id)
    x = inverse_wavelet_transform(shrunk)[: decomp.n_orig]
    dt = signal.dt if isinstance(signal, Signal) else None
    label = signal.label if isinstance(signal, Signal) else ""
    return Signal(x, dt=dt, label=label), est
