"""HF-feature extraction from a regularised amplitude spectrum.

For an energy level ``x`` the search zone starts at ``a(x)``, the first
frequency where the smoothed spectrum falls to ``x`` or below; ``b(x)`` is
the last position of the maximum over that zone. Levels that are attained at
their own ``b`` and sit strictly to the right of ``a`` are spikes; among them
the one with the largest drop ``d(x)`` down to the preceding minimum is the
HF feature, reported as the pair ``(G, D) = (b - a, d)``.

All indices are frequency indices ``k`` (``spectrum.m <= k <= spectrum.last``).
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, ParameterError
from .spectrum import amplitude_spectrum, enforced_dft

__all__ = [
    "HFFeature",
    "hf_feature",
    "CandidateSets",
    "SmoothingSchedule",
    "a_index",
    "b_index",
    "d_value",
    "candidate_sets",
    "extract",
    "default_schedule",
    "g_profile",
    "select_m",
]


@dataclass(frozen=True)
class HFFeature:
    g_index: int
    g_hz: float | None
    d_value: float
    iota: float
    a_index: int
    b_index: int
    m_used: int

    def as_dict(self):
        out = {
            "G_bins": self.g_index,
            "D": self.d_value,
            "iota": self.iota,
            "a_index": self.a_index,
            "b_index": self.b_index,
            "m": self.m_used,
        }
        if self.g_hz is not None:
            out["G_hz"] = self.g_hz
        return out


@dataclass(frozen=True)
class CandidateSets:
    setA: frozenset
    setS: frozenset


@dataclass(frozen=True)
class SmoothingSchedule:
    """Increasing smoothing half-widths ``m_1 = 1 < m_2 < ... < m_K``."""

    m_seq: tuple

    def __post_init__(self):
        seq = tuple(int(v) for v in self.m_seq)
        if not seq or seq[0] != 1:
            raise ParameterError("smoothing schedule must start at m_1 = 1")
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ParameterError("smoothing schedule must be strictly increasing")
        object.__setattr__(self, "m_seq", seq)

    @property
    def K(self):
        return len(self.m_seq)


def default_schedule(n, K=None):
    """``m_i = i`` for ``i = 1..K``; K defaults to ceil(sqrt(n)).

    ``n`` is the number of coefficients the peak search sees; K is capped so
    that every ``m_i <= (n - 1) / 2``.
    """
    if K is None:
        K = math.ceil(math.sqrt(n))
    K = min(int(K), (n - 1) // 2)
    if K < 1:
        raise ParameterError(f"no admissible smoothing for n={n}")
    return SmoothingSchedule(tuple(range(1, K + 1)))


def _check_level(x, s):
    if not x >= s.min():
        raise DomainError(f"level {x!r} lies below the spectrum minimum {s.min()!r}")


def a_index(x, spectrum):
    """First frequency index whose smoothed value is <= x."""
    s = spectrum.smoothed
    _check_level(x, s)
    return spectrum.m + int(np.argmax(s <= x))


def b_index(x, spectrum):
    """Largest index attaining the maximum of the smoothed spectrum on [a(x), last]."""
    s = spectrum.smoothed
    start = a_index(x, spectrum) - spectrum.m
    zone = s[start:]
    top = zone.max()
    return spectrum.m + start + int(np.flatnonzero(zone == top)[-1])


def d_value(x, spectrum):
    """Drop from level x to the smallest smoothed value on [m, b(x)]."""
    s = spectrum.smoothed
    stop = b_index(x, spectrum) - spectrum.m
    return x - s[: stop + 1].min()


def _level_table(s):
    """a, b (array offsets), d and membership flags for every distinct level of s."""
    levels = np.unique(s)
    prefix_min = np.minimum.accumulate(s)
    # prefix_min is nonincreasing: a(x) is the first slot with prefix_min <= x
    a = np.searchsorted(-prefix_min, -levels, side="left")
    # b for a zone starting at j is the end of the run of equal suffix maxima
    # containing j
    suffix_max = np.maximum.accumulate(s[::-1])[::-1]
    run_ends = np.flatnonzero(np.append(suffix_max[:-1] != suffix_max[1:], True))
    zone_end = run_ends[np.searchsorted(run_ends, np.arange(s.size))]
    b = zone_end[a]
    in_a = s[b] == levels
    in_s = in_a & (b > a)
    d = levels - prefix_min[b]
    return levels, a, b, d, in_a, in_s


def candidate_sets(spectrum):
    """The candidate levels A and the spike levels S."""
    levels, _, _, _, in_a, in_s = _level_table(spectrum.smoothed)
    return CandidateSets(
        setA=frozenset(levels[in_a].tolist()),
        setS=frozenset(levels[in_s].tolist()),
    )


def extract(spectrum):
    """Return the :class:`HFFeature` of a spectrum.

    When there is no spike the feature is ``(G, D) = (0, 0)`` with
    ``iota = 0`` and ``a_index = b_index = m``. The same holds when no spike
    rises above the preceding minimum (largest drop 0): on a flat plateau
    the ``b`` of a level is merely the last of many equal values.
    """
    m = spectrum.m
    levels, a, b, d, _, in_s = _level_table(spectrum.smoothed)
    idx = np.flatnonzero(in_s)
    if idx.size == 0 or not d[idx].max() > 0:
        return HFFeature(0, 0.0 if spectrum.dt is not None else None, 0.0, 0.0, m, m, m)
    best = d[idx].max()
    # levels are sorted ascending, so the last maximiser is the highest level
    pick = idx[np.flatnonzero(d[idx] == best)[-1]]
    g = int(b[pick] - a[pick])
    return HFFeature(
        g_index=g,
        g_hz=spectrum.bin_to_hz(g),
        d_value=float(d[pick]),
        iota=float(levels[pick]),
        a_index=m + int(a[pick]),
        b_index=m + int(b[pick]),
        m_used=m,
    )


def hf_feature(signal, m, one_sided=True):
    """HF feature of the offset-enforced signal at smoothing ``m``."""
    shifted, theta = enforced_dft(signal)
    return extract(amplitude_spectrum(shifted, m, one_sided=one_sided, theta=theta))


def g_profile(signal, schedule, one_sided=True):
    """Frequency gaps ``G`` of the offset-enforced signal for every m in the schedule."""
    shifted, theta = enforced_dft(signal)
    return [
        extract(amplitude_spectrum(shifted, m, one_sided=one_sided, theta=theta)).g_index
        for m in schedule.m_seq
    ]


def select_m(signal, schedule=None, one_sided=True):
    """Data-driven smoothing: the m at the largest jump of G between consecutive m_i.

    With ``i*`` the first index (i >= 2) maximising ``|G(m_i) - G(m_{i-1})|``,
    returns ``m_{i*}`` if G increased there and ``m_{i*-1}`` otherwise.
    """
    if schedule is None:
        n_eff = signal.n // 2 + 1 if one_sided else signal.n
        schedule = default_schedule(n_eff, K=math.ceil(math.sqrt(signal.n)))
    if schedule.K < 2:
        raise ParameterError("data-driven m selection needs a schedule with K >= 2")
    g = np.asarray(g_profile(signal, schedule, one_sided=one_sided))
    jumps = np.abs(np.diff(g))
    i_star = int(np.argmax(jumps)) + 1  # argmax returns the first maximiser
    seq = schedule.m_seq
    return seq[i_star] if g[i_star] > g[i_star - 1] else seq[i_star - 1]
