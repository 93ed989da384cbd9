"""Monte Carlo test for the presence of an HF feature.

Under the null the data are a slowly varying trend plus Gaussian noise. The
null is simulated ``N`` times from a trend proxy and a noise level, each
replicate is reduced to its HF feature ``(G, D)``, and the observed feature
is compared with this cloud through the joint exceedance probability

    P(g, d) = #{k : G_k >= g and D_k >= d} / N.

The p-value proxy is the smallest ``P`` over the cloud points the observed
feature dominates (1 when it dominates none), and the null is rejected when
it reaches ``alpha* = min_k P(G_k, D_k)``, the smallest attainable level.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import HFError, ParameterError
from .features import HFFeature, default_schedule, hf_feature, select_m
from .noise import estimate_sigma, wavelet_transform
from .spectrum import Signal
from .trend import LAMBDA_PRESETS, l1_trend_filter

__all__ = [
    "NullCloud",
    "TestReport",
    "TestConfig",
    "replicate_rng",
    "simulate_null",
    "empirical_P",
    "point_probabilities",
    "p_value_proxy",
    "decide",
    "run_full_test",
    "REJECT",
    "ACCEPT",
]

REJECT = "reject-null"
ACCEPT = "accept-null"

_CHUNK = 64  # replicates per task handed to a worker process
_PAIR_BLOCK = 2048  # rows per block in the all-pairs dominance count


@dataclass(frozen=True)
class NullCloud:
    """HF features of ``N`` simulated null replicates.

    ``g`` is in frequency bins, ``d`` in amplitude units.
    """

    g: np.ndarray
    d: np.ndarray
    seed: int
    m_used: int
    sigma: float
    trend_source: str = "given"
    sigma_source: str = "given"
    dt: float | None = None
    n: int | None = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.int64).ravel()
        d = np.asarray(self.d, dtype=np.float64).ravel()
        if g.size == 0 or g.size != d.size:
            raise ParameterError("a cloud needs N >= 1 points with matching G and D")
        if (g < 0).any() or (d < 0).any():
            raise ParameterError("cloud coordinates must be nonnegative")
        g.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "d", d)

    @property
    def N(self):
        return self.g.size

    @property
    def points(self):
        return np.column_stack([self.g.astype(np.float64), self.d])

    def g_hz(self):
        """G in Hz, or None when the sampling interval is unknown."""
        if self.dt is None or self.n is None:
            return None
        return self.g / (self.n * self.dt)


@dataclass(frozen=True)
class TestReport:
    """Outcome of the test on one signal."""

    __test__ = False

    statistic: HFFeature
    p_value: float
    alpha_star: float
    decision: str
    N: int
    seed: int
    m_used: int
    sigma: float
    sigma_source: str
    trend_source: str
    thresholds_hit: tuple | None = None
    lam: float | None = None

    def as_dict(self):
        out = {
            "statistic": self.statistic.as_dict(),
            "p_value_proxy": self.p_value,
            "alpha_star": self.alpha_star,
            "decision": self.decision,
            "N": self.N,
            "seed": self.seed,
            "m": self.m_used,
            "sigma": self.sigma,
            "sigma_source": self.sigma_source,
            "trend_source": self.trend_source,
            "lambda": self.lam,
        }
        if self.thresholds_hit is not None:
            out["thresholds_hit"] = {"G_bins": self.thresholds_hit[0], "D": self.thresholds_hit[1]}
        return out


@dataclass(frozen=True)
class TestConfig:
    """Settings of :func:`run_full_test`.

    Parameters
    ----------
    lam : float or str
        Trend penalty, or a preset name from ``LAMBDA_PRESETS``.
    N : int
        Number of null replicates.
    seed : int
        Master seed; replicate ``k`` draws from a stream keyed by (seed, k).
    K : int, optional
        Length of the smoothing schedule for the data-driven choice of m.
    m : int, optional
        Fixed smoothing half-width; skips the data-driven choice.
    trend : array_like, optional
        Known trend used instead of the l1 estimate.
    sigma : float, optional
        Known noise level used instead of the MAD estimate.
    workers : int
        Worker processes for the replicates; the result does not depend on it.
    """

    __test__ = False

    lam: float | str = "synth301"
    N: int = 200
    seed: int = 0
    K: int | None = None
    m: int | None = None
    trend: np.ndarray | None = field(default=None, repr=False)
    sigma: float | None = None
    workers: int = 1
    one_sided: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError(f"N must be at least 1, got {self.N}")
        if self.workers < 1:
            raise ParameterError(f"workers must be at least 1, got {self.workers}")
        if self.sigma is not None and not self.sigma >= 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if isinstance(self.lam, str) and self.lam not in LAMBDA_PRESETS:
            raise ParameterError(f"unknown lambda preset {self.lam!r}; choose from {sorted(LAMBDA_PRESETS)}")

    @property
    def lam_value(self):
        return LAMBDA_PRESETS[self.lam] if isinstance(self.lam, str) else float(self.lam)


def replicate_rng(seed, k):
    """Counter-based generator for replicate ``k`` of master ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def _replicates(trend, sigma, m, seed, ks, one_sided):
    g = np.empty(len(ks), dtype=np.int64)
    d = np.empty(len(ks))
    for row, k in enumerate(ks):
        noise = replicate_rng(seed, k).standard_normal(trend.size)
        feat = hf_feature(Signal(trend + sigma * noise), m, one_sided=one_sided)
        g[row] = feat.g_index
        d[row] = feat.d_value
    return g, d


def simulate_null(trend, sigma, N, m, seed, workers=1, one_sided=True, dt=None,
                  trend_source="given", sigma_source="given"):
    """Cloud of HF features of ``trend + sigma * noise`` over ``N`` replicates.

    Every replicate is offset-enforced, transformed, smoothed at ``m`` and
    reduced to its HF feature. Replicate ``k`` (1-based) uses its own random
    stream, so the cloud is the same for any number of workers.
    """
    trend = np.asarray(trend, dtype=np.float64).ravel()
    if N < 1:
        raise ParameterError(f"N must be at least 1, got {N}")
    if not sigma >= 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    ks = list(range(1, N + 1))
    chunks = [ks[i: i + _CHUNK] for i in range(0, N, _CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_replicates(trend, sigma, m, seed, c, one_sided) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_replicates, trend, sigma, m, seed, c, one_sided) for c in chunks]
            parts = [f.result() for f in futures]
    g = np.concatenate([p[0] for p in parts])
    d = np.concatenate([p[1] for p in parts])
    return NullCloud(g=g, d=d, seed=seed, m_used=int(m), sigma=float(sigma),
                     trend_source=trend_source, sigma_source=sigma_source,
                     dt=dt, n=trend.size)


def empirical_P(cloud, g, d):
    """Fraction of cloud points with ``G >= g`` and ``D >= d``."""
    count = int(np.count_nonzero((cloud.g >= g) & (cloud.d >= d)))
    return count / cloud.N


def _dominance_counts(g, d):
    # counts[i] = #{k : g_k >= g_i and d_k >= d_i}, in blocks to bound memory
    counts = np.empty(g.size, dtype=np.int64)
    for start in range(0, g.size, _PAIR_BLOCK):
        stop = min(start + _PAIR_BLOCK, g.size)
        hit = (g[None, :] >= g[start:stop, None]) & (d[None, :] >= d[start:stop, None])
        counts[start:stop] = hit.sum(axis=1)
    return counts


def point_probabilities(cloud):
    """``P(G_k, D_k)`` for every cloud point."""
    return _dominance_counts(cloud.g, cloud.d) / cloud.N


def _min_dominated(cloud, g, d, probs):
    dominated = np.flatnonzero((cloud.g <= g) & (cloud.d <= d))
    if dominated.size == 0:
        return 1.0, None
    best = dominated[np.argmin(probs[dominated])]
    return float(probs[best]), (int(cloud.g[best]), float(cloud.d[best]))


def p_value_proxy(cloud, stat):
    """Smallest ``P`` over cloud points dominated by the statistic; 1 if there are none."""
    g, d = _stat_pair(stat)
    return _min_dominated(cloud, g, d, point_probabilities(cloud))[0]


def _stat_pair(stat):
    if isinstance(stat, HFFeature):
        return stat.g_index, stat.d_value
    g, d = stat
    return g, d


def decide(cloud, stat, lam=None):
    """Build the :class:`TestReport`: reject iff the p-value proxy is at most alpha*."""
    if not isinstance(stat, HFFeature):
        g, d = stat
        stat = HFFeature(int(g), None, float(d), math.nan, 0, int(g), cloud.m_used)
    probs = point_probabilities(cloud)
    alpha_star = float(probs.min())
    p, hit = _min_dominated(cloud, stat.g_index, stat.d_value, probs)
    return TestReport(
        statistic=stat,
        p_value=p,
        alpha_star=alpha_star,
        decision=REJECT if p <= alpha_star else ACCEPT,
        N=cloud.N,
        seed=cloud.seed,
        m_used=cloud.m_used,
        sigma=cloud.sigma,
        sigma_source=cloud.sigma_source,
        trend_source=cloud.trend_source,
        thresholds_hit=hit,
        lam=lam,
    )


class StageError(HFError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineResult:
    report: TestReport
    cloud: NullCloud
    trend: np.ndarray = field(repr=False)
    sigma_hat: float = math.nan


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except HFError as exc:
        raise StageError(name, exc) from exc


def run_full_test(signal, config=None):
    """Full pipeline: choose m, extract the statistic, simulate the null, decide.

    The trend defaults to the l1 estimate and the noise level to the MAD
    estimate; ``config.trend`` and ``config.sigma`` substitute known values.
    The same m is used for the statistic and every replicate.
    """
    config = TestConfig() if config is None else config
    if config.m is not None:
        m = int(config.m)
    else:
        n_eff = signal.n // 2 + 1 if config.one_sided else signal.n
        k = config.K if config.K is not None else math.ceil(math.sqrt(signal.n))
        schedule = _stage("select_m", default_schedule, n_eff, K=k)
        m = _stage("select_m", select_m, signal, schedule, one_sided=config.one_sided)
    stat = _stage("extract", hf_feature, signal, m, one_sided=config.one_sided)

    lam = None
    if config.trend is not None:
        trend = np.asarray(config.trend, dtype=np.float64).ravel()
        if trend.size != signal.n:
            raise StageError("trend", ParameterError(
                f"true trend has {trend.size} samples, signal has {signal.n}"))
        trend_source = "true"
    else:
        lam = config.lam_value
        trend = _stage("trend", l1_trend_filter, signal, lam).values
        trend_source = "l1"

    if config.sigma is not None:
        sigma, sigma_source = float(config.sigma), "true"
    else:
        sigma = _stage("noise", lambda s: estimate_sigma(wavelet_transform(s)).sigma_hat, signal)
        sigma_source = "mad"

    cloud = _stage("simulate_null", simulate_null, trend, sigma, config.N, m, config.seed,
                   workers=config.workers, one_sided=config.one_sided, dt=signal.dt,
                   trend_source=trend_source, sigma_source=sigma_source)
    report = decide(cloud, stat, lam=lam)
    return PipelineResult(report=report, cloud=cloud, trend=trend, sigma_hat=sigma)
