"""Synthetic benchmark: Lennard-Jones trend, localized sine burst, Gaussian noise.

``S_i = T_i + O_i + sigma * xi_i`` on ``i = 0..n-1``. The potential and the
sine are evaluated at the sample times ``t_i = i * dt_hours`` (hours); the
burst window and the splice point are sample indices.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import ParameterError
from .spectrum import Signal

__all__ = [
    "TestSignalParams",
    "lj_potential",
    "lj_trend",
    "oscillation",
    "generate",
    "benchmark_params",
    "DEFAULT_DT_HOURS",
]

#: Sample spacing that places the burst start (index 1700) at 1.43 h.
DEFAULT_DT_HOURS = 1.43 / 1700


@dataclass(frozen=True)
class TestSignalParams:
    """Parameters of the benchmark signal.

    Indices ``j_connect``, ``j0`` and ``j1`` are sample positions; ``c_f`` is
    in cycles per hour and ``dt_hours`` is the sample spacing in hours.
    ``j_connect=None`` splices at the zero of the bracket,
    ``t = c2 * c3^(-1/(p-q))``, where the potential equals its plateau level
    ``c4``.
    """

    __test__ = False  # keep pytest from collecting this class

    n: int = 100_000
    c1: float = 0.4
    c2: float = 2.0
    c3: float = 2.0
    c4: float = 2.0
    p: float = 6.0
    q: float = 3.0
    j_connect: int | None = None
    j0: int = 1700
    j1: int = 3400
    c_a: float = 0.05
    c_f: float = 10.0
    sigma: float = 0.025
    dt_hours: float = DEFAULT_DT_HOURS
    seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise ParameterError(f"n must be at least 4, got {self.n}")
        if not 0 < self.j0 < self.j1 < self.n - 1:
            raise ParameterError(f"need 0 < j0 < j1 < n-1, got j0={self.j0}, j1={self.j1}")
        if not self.p > self.q > 0:
            raise ParameterError(f"need p > q > 0, got p={self.p}, q={self.q}")
        if not (math.isfinite(self.dt_hours) and self.dt_hours > 0):
            raise ParameterError(f"dt_hours must be positive, got {self.dt_hours}")
        if self.j_connect is None:
            root = self.c2 * self.c3 ** (-1.0 / (self.p - self.q)) if self.c3 > 0 else self.c2
            object.__setattr__(self, "j_connect", max(1, round(root / self.dt_hours)))
        if self.j_connect < 1 or self.j_connect >= self.n - 1:
            raise ParameterError(
                f"j_connect must lie in [1, n-2] (the potential is undefined at t = 0), got {self.j_connect}"
            )
        if self.sigma < 0 or self.c_a < 0 or self.c_f < 0:
            raise ParameterError("sigma, c_a and c_f must be nonnegative")

    @property
    def dt_seconds(self):
        return self.dt_hours * 3600.0

    @property
    def record_hours(self):
        return self.n * self.dt_hours

    @property
    def oscillation_bin(self):
        """Frequency index of the sine: cycles completed over the record."""
        return self.c_f * self.record_hours


def benchmark_params(n, base=None, **overrides):
    """Rescale a parameter set to length ``n`` keeping the time axis.

    Window and splice indices scale by ``n / base.n`` and the sample spacing
    by ``base.n / n``, so every event keeps its time in hours and the
    oscillation keeps its frequency bin.
    """
    base = TestSignalParams() if base is None else base
    ratio = n / base.n
    scaled = replace(
        base,
        n=int(n),
        j_connect=max(1, round(base.j_connect * ratio)),
        j0=round(base.j0 * ratio),
        j1=round(base.j1 * ratio),
        dt_hours=base.dt_hours / ratio,
    )
    return replace(scaled, **overrides) if overrides else scaled


def lj_potential(t, params):
    """``c1 [(c2/t)^p - c3 (c2/t)^q] + c4``."""
    r = params.c2 / np.asarray(t, dtype=np.float64)
    return params.c1 * (r ** params.p - params.c3 * r ** params.q) + params.c4


def lj_trend(params):
    """The trend ``T``: the potential for ``i > j``, a short ramp before it.

    For ``i <= j`` the ramp is ``(P_{j+1} - P_j) / (j + 1) * i + P_j``.
    """
    j = params.j_connect
    i = np.arange(params.n, dtype=np.float64)
    out = np.empty(params.n)
    tail = i[j + 1:]
    out[j + 1:] = lj_potential(tail * params.dt_hours, params)
    pj, pj1 = lj_potential(np.array([j, j + 1]) * params.dt_hours, params)
    out[: j + 1] = (pj1 - pj) / (j + 1) * i[: j + 1] + pj
    return out


def oscillation(params):
    """Parabolic-envelope sine burst, zero outside ``[j0, j1]``.

    The envelope ``4 (i - j0)(j1 - i) / (j1 - j0)^2`` peaks at exactly 1 in
    the middle of the window.
    """
    out = np.zeros(params.n)
    if params.c_a == 0:
        return out
    i = np.arange(params.j0, params.j1 + 1, dtype=np.float64)
    envelope = (i - params.j0) * (params.j1 - i) * (4.0 / (params.j1 - params.j0) ** 2)
    phase = 2.0 * np.pi * params.c_f * (i * params.dt_hours)
    out[params.j0: params.j1 + 1] = params.c_a * envelope * np.sin(phase)
    return out


def generate(params, return_parts=False):
    """Noisy benchmark signal with ``dt`` in seconds.

    With ``return_parts`` the trend and the oscillation are returned too, as
    ``(signal, trend, oscillation)``.
    """
    trend = lj_trend(params)
    osc = oscillation(params)
    x = trend + osc
    if params.sigma > 0:
        rng = np.random.default_rng(params.seed)
        x = x + params.sigma * rng.standard_normal(params.n)
    sig = Signal(x, dt=params.dt_seconds, label="benchmark")
    if return_parts:
        return sig, trend, osc
    return sig
