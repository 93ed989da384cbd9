"""Command-line front end.

Subcommands::

    gen      synthetic benchmark signal (signal.csv, truth.csv)
    trend    l1 trend estimate (trend.csv, knots.csv)
    noise    MAD noise level and VisuShrink denoising (noise.json, denoised.csv)
    extract  HF feature of a signal (feature.json, spectrum.csv)
    test     full Monte Carlo test (report.json, cloud.csv, trend.csv, denoised.csv)

Every flag can also come from a flat ``key = value`` file passed with
``--config``; flags given on the command line win.
"""

import argparse
from dataclasses import asdict, replace
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .errors import HFError, InputError, ParameterError
from .features import default_schedule, extract, select_m
from .noise import DEFAULT_J0, estimate_sigma, visushrink, wavelet_transform
from .nulltest import StageError, TestConfig, run_full_test
from .spectrum import Signal, amplitude_spectrum, enforced_dft
from .testsignal import TestSignalParams, benchmark_params, generate
from .trend import LAMBDA_PRESETS, l1_trend_filter

__all__ = ["main", "ingest_csv", "read_column", "parse_config", "build_parser"]

JITTER_TOL = 1e-3  # allowed relative deviation of a time step from the median step


def _fmt(x):
    # repr of a Python float is the shortest string that parses back exactly
    return repr(float(x))


def _cell(c):
    if isinstance(c, str):
        return c
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    return _fmt(c)


def _split(line):
    if "," in line:
        return [c.strip() for c in line.split(",")]
    if ";" in line:
        return [c.strip() for c in line.split(";")]
    return line.split()


def _read_table(path):
    """Rows of floats and the header (or None) of a delimited text file."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    header = None
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = _split(line)
        try:
            values = [float(c) for c in cells]
        except ValueError:
            if header is None and not rows:
                header = [c.strip().strip('"') for c in cells]
                continue
            raise InputError(f"{path}, line {lineno}: cannot parse {line!r} as numbers") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InputError(f"{path}, line {lineno}: expected {width} columns, found {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"{path}, line {lineno}: non-finite value")
        rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def ingest_csv(path, dt=None, label=None):
    """Read a signal from a one- or two-column CSV file.

    One column holds the values and needs ``dt`` for Hz output. Two columns
    are ``time (s), value``; the sampling interval is the mean time step
    and every step must be within 0.1% of it.
    """
    header, table = _read_table(path)
    ncol = table.shape[1]
    if ncol == 1:
        values = table[:, 0]
    elif ncol == 2:
        times, values = table[:, 0], table[:, 1]
        if times.size < 2:
            raise InputError(f"{path}: need at least two samples to infer the time step")
        steps = np.diff(times)
        # the end-to-end span averages out the rounding of individual stamps
        step = float((times[-1] - times[0]) / (times.size - 1))
        if not step > 0:
            raise InputError(f"{path}: time column must be increasing")
        bad = np.flatnonzero(np.abs(steps - step) > JITTER_TOL * step)
        if bad.size:
            # +2: one for 1-based rows, one because steps[i] ends at row i+1
            raise InputError(
                f"{path}: nonuniform time spacing at data row {int(bad[0]) + 2} "
                f"(step {steps[bad[0]]!r} vs mean {step!r})"
            )
        if dt is not None and abs(dt - step) > JITTER_TOL * step:
            raise InputError(f"{path}: --dt {dt!r} disagrees with the time column step {step!r}")
        dt = step
    else:
        raise InputError(f"{path}: expected 1 or 2 columns, found {ncol}")
    return Signal(values, dt=dt, label=label or os.path.basename(path))


def read_column(path, name=None):
    """One column of a CSV: the one named ``name`` if given, else the last."""
    header, table = _read_table(path)
    if name is not None and header is not None and name in header:
        return table[:, header.index(name)]
    if name is not None and header is not None:
        raise InputError(f"{path}: no column named {name!r} (have {header})")
    return table[:, -1]


def parse_config(path):
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config {path}, line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


class _Outputs:
    """Atomic file writer that can roll back everything it wrote."""

    def __init__(self, directory):
        self.directory = directory
        self.written = []

    def path(self, name):
        return os.path.join(self.directory, name)

    def write(self, name, text):
        os.makedirs(self.directory, exist_ok=True)
        final = self.path(name)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.written.append(final)
        return final

    def csv(self, name, columns, rows):
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(c) for c in row))
        return self.write(name, "\n".join(lines) + "\n")

    def json(self, name, obj):
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def rollback(self):
        for path in self.written:
            try:
                os.unlink(path)
            except FileNotFoundError:
                pass
        self.written.clear()


def _signal_columns(signal):
    i = np.arange(signal.n)
    if signal.dt is None:
        return ["index"], [i]
    return ["time_s"], [i * signal.dt]


def _load(args):
    return ingest_csv(args.input, dt=args.dt)


def _lambda(args):
    if args.lambda_ is not None and args.lambda_preset is not None:
        raise ParameterError("give either --lambda or --lambda-preset, not both")
    if args.lambda_ is not None:
        return float(args.lambda_)
    return LAMBDA_PRESETS[args.lambda_preset or "synth301"]


def cmd_gen(args, out):
    base = TestSignalParams()
    n = args.n or base.n
    params = benchmark_params(n) if n != base.n else base
    overrides = {}
    for key in ("sigma", "c_a", "c_f", "seed"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.dt_hours is not None:
        # re-derive the splice point on the new time axis
        overrides.update(dt_hours=args.dt_hours, j_connect=None)
    if overrides:
        params = replace(params, **overrides)
    sig, trend, osc = generate(params, return_parts=True)
    t = np.arange(params.n) * params.dt_seconds
    out.csv("signal.csv", ["time_s", "value"], zip(t, sig.samples))
    out.csv("truth.csv", ["time_s", "trend", "oscillation"], zip(t, trend, osc))
    meta = asdict(params)
    meta["dt_seconds"] = params.dt_seconds
    meta["oscillation_bin"] = params.oscillation_bin
    out.json("params.json", meta)
    return {"n": params.n, "dt_seconds": params.dt_seconds}


def cmd_trend(args, out):
    sig = _load(args)
    lam = _lambda(args)
    est = _stage("trend", l1_trend_filter, sig, lam)
    head, cols = _signal_columns(sig)
    out.csv("trend.csv", head + ["value", "trend"], zip(*cols, sig.samples, est.values))
    out.csv("knots.csv", ["index"], ([int(k)] for k in est.knots))
    return {"lambda": lam, "knots": int(est.knots.size), "objective": est.objective,
            "dual_gap": est.dual_gap}


def cmd_noise(args, out):
    sig = _load(args)
    j0 = DEFAULT_J0 if args.j0_wavelet is None else args.j0_wavelet
    denoised, est = _stage("noise", visushrink, sig, j0=j0)
    head, cols = _signal_columns(sig)
    out.csv("denoised.csv", head + ["value", "denoised"], zip(*cols, sig.samples, denoised.samples))
    summary = {"sigma_hat": est.sigma_hat, "n_used": est.n_used, "j0": j0,
               "threshold": est.sigma_hat * math.sqrt(2.0 * math.log(est.n_used))}
    out.json("noise.json", summary)
    return summary


def _choose_m(args, sig):
    if args.m is not None:
        return int(args.m)
    k = args.K if args.K is not None else math.ceil(math.sqrt(sig.n))
    schedule = _stage("select_m", default_schedule, sig.n // 2 + 1, K=k)
    return _stage("select_m", select_m, sig, schedule)


def cmd_extract(args, out):
    sig = _load(args)
    m = _choose_m(args, sig)
    shifted, theta = enforced_dft(sig)
    spec = _stage("extract", amplitude_spectrum, shifted, m, theta=theta)
    feat = extract(spec)
    k = np.arange(spec.m, spec.last + 1)
    marker = np.full(k.size, "", dtype=object)
    if feat.iota > 0 or feat.g_index > 0:
        marker[feat.a_index - spec.m] = "a"
        marker[feat.b_index - spec.m] = "b;iota" if not marker[feat.b_index - spec.m] else "a;b;iota"
    amp = np.abs(spec.theta[spec.m: spec.last + 1])
    if sig.dt is not None:
        hz = k / (sig.n * sig.dt)
        out.csv("spectrum.csv", ["k", "freq_hz", "amplitude", "smoothed", "marker"],
                zip(k.tolist(), hz, amp, spec.smoothed, marker))
    else:
        out.csv("spectrum.csv", ["k", "amplitude", "smoothed", "marker"],
                zip(k.tolist(), amp, spec.smoothed, marker))
    payload = feat.as_dict()
    payload["n"] = sig.n
    if sig.dt is not None:
        payload["dt"] = sig.dt
    out.json("feature.json", payload)
    return payload


def cmd_test(args, out):
    sig = _load(args)
    started = time.perf_counter()
    trend = None
    if args.true_trend is not None:
        trend = read_column(args.true_trend, "trend")
    lam = _lambda(args)
    workers = args.workers if args.workers is not None else 1
    if workers == 0:
        workers = os.cpu_count() or 1
    config = TestConfig(
        lam=lam,
        N=args.N if args.N is not None else 200,
        seed=args.seed if args.seed is not None else 0,
        K=args.K,
        m=args.m,
        trend=trend,
        sigma=args.sigma,
        workers=workers,
    )
    result = run_full_test(sig, config)
    j0 = DEFAULT_J0 if args.j0_wavelet is None else args.j0_wavelet
    denoised, est = _stage("noise", visushrink, sig, j0=j0)
    elapsed = time.perf_counter() - started

    cloud = result.cloud
    g_hz = cloud.g_hz()
    if g_hz is not None:
        out.csv("cloud.csv", ["G_bins", "G_hz", "D"], zip(cloud.g.tolist(), g_hz, cloud.d))
    else:
        out.csv("cloud.csv", ["G_bins", "D"], zip(cloud.g.tolist(), cloud.d))
    head, cols = _signal_columns(sig)
    out.csv("trend.csv", head + ["value", "trend"], zip(*cols, sig.samples, result.trend))
    out.csv("denoised.csv", head + ["value", "denoised"], zip(*cols, sig.samples, denoised.samples))

    payload = result.report.as_dict()
    payload["input"] = {"path": os.path.basename(args.input), "n": sig.n, "dt": sig.dt}
    payload["sigma_hat_mad"] = est.sigma_hat
    payload["cloud_summary"] = {
        "N": cloud.N,
        "G_bins_min": int(cloud.g.min()),
        "G_bins_median": float(np.median(cloud.g)),
        "G_bins_max": int(cloud.g.max()),
        "D_min": float(cloud.d.min()),
        "D_median": float(np.median(cloud.d)),
        "D_max": float(cloud.d.max()),
    }
    meta = {"version": __version__, "timing": {"seconds": elapsed}, "workers": workers}
    out.json("report.json", {"payload": payload, "meta": meta})
    return payload


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except StageError:
        raise
    except HFError as exc:
        raise StageError(name, exc) from exc


def _common(p, lam=False, smoothing=False):
    p.add_argument("--input", help="CSV file: values, or time (s), value")
    p.add_argument("--dt", type=float, help="sampling interval in seconds (one-column input)")
    if lam:
        g = p.add_argument_group("trend penalty")
        g.add_argument("--lambda", dest="lambda_", type=float, help="l1 trend penalty weight")
        g.add_argument("--lambda-preset", choices=sorted(LAMBDA_PRESETS), help="named penalty weight")
    if smoothing:
        p.add_argument("--K", type=int, help="length of the smoothing schedule m = 1..K")
        p.add_argument("--m", type=int, help="fixed smoothing half-width (skips the data-driven choice)")


def build_parser():
    parser = argparse.ArgumentParser(prog="hffeatures", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default=None, help="output directory (default: current)")
        p.add_argument("--config", help="key = value file supplying defaults for any flag")
        return p

    p = add("gen", "generate the synthetic benchmark signal")
    p.add_argument("--n", type=int, help="number of samples (time axis kept, indices rescaled)")
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--c-a", dest="c_a", type=float, help="oscillation amplitude")
    p.add_argument("--c-f", dest="c_f", type=float, help="oscillation frequency, cycles per hour")
    p.add_argument("--dt-hours", type=float, help="sample spacing in hours")
    p.add_argument("--seed", type=int, help="noise seed")
    p.set_defaults(handler=cmd_gen)

    p = add("trend", "l1 trend filtering")
    _common(p, lam=True)
    p.set_defaults(handler=cmd_trend)

    p = add("noise", "noise level and wavelet denoising")
    _common(p)
    p.add_argument("--j0-wavelet", type=int, help=f"lowest thresholded level (default {DEFAULT_J0})")
    p.set_defaults(handler=cmd_noise)

    p = add("extract", "HF feature of a signal")
    _common(p, smoothing=True)
    p.set_defaults(handler=cmd_extract)

    p = add("test", "Monte Carlo test for an HF feature")
    _common(p, lam=True, smoothing=True)
    p.add_argument("--N", type=int, help="number of null replicates (default 200)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--j0-wavelet", type=int, help=f"lowest thresholded level (default {DEFAULT_J0})")
    p.add_argument("--true-trend", help="CSV whose 'trend' (or last) column replaces the l1 estimate")
    p.add_argument("--sigma", type=float, help="known noise level replacing the MAD estimate")
    p.add_argument("--workers", type=int, help="worker processes for the replicates (0: all cores)")
    p.set_defaults(handler=cmd_test)
    return parser


def _apply_config(parser, args):
    if not getattr(args, "config", None):
        return
    values = parse_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    aliases = {"lambda": "lambda_"}
    for key, raw in values.items():
        dest = aliases.get(key, key)
        if dest not in actions or dest in ("help", "config"):
            raise InputError(f"config {args.config}: unknown key {key!r} for '{args.command}'")
        if getattr(args, dest) is not None:
            continue  # command-line flag wins
        action = actions[dest]
        try:
            value = action.type(raw) if action.type is not None else raw
        except ValueError:
            raise InputError(f"config {args.config}: bad value {raw!r} for {key!r}") from None
        if action.choices is not None and value not in action.choices:
            raise InputError(f"config {args.config}: {key} must be one of {sorted(action.choices)}")
        setattr(args, dest, value)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = None
    try:
        _apply_config(parser, args)
        if getattr(args, "input", None) is None and args.command != "gen":
            raise InputError("--input is required")
        out = _Outputs(args.out or os.getcwd())
        args.handler(args, out)
    except StageError as exc:
        if out is not None:
            out.rollback()
        print(f"hffeatures {args.command}: stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return 1
    except HFError as exc:
        if out is not None:
            out.rollback()
        stage = "input" if isinstance(exc, InputError) else "parameters"
        print(f"hffeatures {args.command}: stage {stage} failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        if out is not None:
            out.rollback()
        print(f"hffeatures {args.command}: output failed: {exc}", file=sys.stderr)
        return 1
    for path in out.written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
