"""Fast discrete Fourier transform for arbitrary lengths.

Power-of-two lengths use an iterative radix-2 decimation-in-time transform;
every other length goes through Bluestein's chirp-z reformulation, which
re-expresses the DFT as a circular convolution of power-of-two size.

All transforms act on the last axis, so a ``(batch, n)`` array is transformed
row by row with exactly the same floating-point operations as a single row.
Sign convention: ``X[k] = sum_i x[i] * exp(-2j*pi*k*i/n)``.
"""

import numpy as np

__all__ = ["fft", "ifft", "next_pow2"]


def next_pow2(n):
    """Smallest power of two >= n (n >= 1)."""
    return 1 << max(int(n) - 1, 0).bit_length()


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


def _bit_reverse(x, levels):
    # viewing the index as `levels` binary digits, reversing the axes
    # reverses the bits
    if levels <= 1:
        return x
    batch = x.shape[:-1]
    nb = len(batch)
    y = x.reshape(batch + (2,) * levels)
    axes = tuple(range(nb)) + tuple(range(nb + levels - 1, nb - 1, -1))
    return y.transpose(axes).reshape(x.shape)


def _radix2(x):
    n = x.shape[-1]
    levels = n.bit_length() - 1
    y = _bit_reverse(x, levels)
    batch = x.shape[:-1]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = y.reshape(batch + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        y = np.concatenate((even + odd, even - odd), axis=-1).reshape(x.shape)
        size *= 2
    return y


def _bluestein(x):
    n = x.shape[-1]
    k = np.arange(n, dtype=np.int64)
    # k^2 mod 2n keeps the chirp phase argument small for large n
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    size = next_pow2(2 * n - 1)
    a = np.zeros(x.shape[:-1] + (size,), dtype=complex)
    a[..., :n] = x * chirp
    b = np.zeros(size, dtype=complex)
    b[:n] = np.conj(chirp)
    b[size - n + 1:] = np.conj(chirp[1:])[::-1]
    conv = _ifft_pow2(_radix2(a) * _radix2(b))
    return conv[..., :n] * chirp


def _ifft_pow2(X):
    n = X.shape[-1]
    return np.conj(_radix2(np.conj(X))) / n


def fft(x):
    """Discrete Fourier transform along the last axis.

    Parameters
    ----------
    x : array_like
        Real or complex samples; any length >= 1.

    Returns
    -------
    numpy.ndarray
        Complex coefficients, same shape as ``x``.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty sequence")
    if n == 1:
        return x.copy()
    if _is_pow2(n):
        return _radix2(x)
    return _bluestein(x)


def ifft(X):
    """Inverse of :func:`fft` (includes the 1/n normalisation)."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[-1]
    return np.conj(fft(np.conj(X))) / n
