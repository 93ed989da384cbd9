"""Detection and significance testing of transient high-frequency features.

The HF feature of a signal is read off its smoothed Fourier amplitude
spectrum as a pair ``(G, D)``: the gap between the start of the search zone
and the dominant spike, and the spike's height above the preceding minimum.
A Monte Carlo test compares it with features of trend-plus-noise replicates.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, HFError, InputError, ParameterError
from .spectrum import Signal, AmplitudeSpectrum, dft, enforce_offset, regularize, amplitude_spectrum
from .features import HFFeature, extract, hf_feature, select_m, default_schedule
from .trend import l1_trend_filter, lambda_max, LAMBDA_PRESETS
from .noise import estimate_sigma, visushrink, wavelet_transform, inverse_wavelet_transform
from .nulltest import TestConfig, TestReport, NullCloud, simulate_null, run_full_test, decide
from .testsignal import TestSignalParams, benchmark_params, generate
