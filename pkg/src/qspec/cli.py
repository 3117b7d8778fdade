"""Command-line interface: ``qspec simulate|estimate|benchmark|window-features``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import json
import os
import sys
from importlib import metadata

import numpy as np

from . import metrics, simulate
from ._parallel import pmap, resolve_threads
from .errors import QSpecError, WindowTooLong
from .estimator import METHODS, estimate
from .qperiodogram import QuantileGrid, write_long_csv
from .signal import detrend_spline, read_series_csv, validate, write_series_csv

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
DEFAULT_QUANTILES = "0.05:0.95:0.01"


class ConfigError(Exception):
    pass


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _atomic_write(path, writer):
    """Write through ``writer(tmp_path)`` then rename into place."""
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write_json(path, payload):
    def w(p):
        with open(p, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _atomic_write(path, w)


def _sidecar(command, args, **extra):
    # output locations are left out so reruns into other directories match byte for byte
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "out", "out_dir")}
    return {"command": command, "version": _version(), "seed": getattr(args, "seed", None),
            "options": opts, **extra}


def _grid(spec):
    try:
        return QuantileGrid.parse(spec)
    except ValueError as exc:
        raise ConfigError(f"invalid --quantiles {spec!r}: {exc}") from exc


def _read_series(path):
    try:
        return validate(read_series_csv(path))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read series from {path}: {exc}") from exc


def _estimator_options(args):
    method = args.method.replace("-", "_")
    if method == "parametric":
        return method, {"order_mode": args.order_mode, "p_max": args.p_max,
                        "pacf_criterion": args.criterion}
    opts = {"criterion": args.criterion}
    if method == "kernel2d":
        if not (args.bw_freq > 0 and args.bw_tau > 0):
            raise ConfigError("kernel bandwidths must be positive")
        opts = {"bw_freq": args.bw_freq, "bw_tau": args.bw_tau}
    return method, opts


def save_estimate(path, est, extra):
    _atomic_write(path, lambda p: write_long_csv(p, est.freqs, est.grid.levels, est.values))
    _write_json(path + ".json", {**extra, "estimate": est.sidecar()})


# ---------------------------------------------------------------------------
# PNG heatmaps


def heatmap_png(path, values, colormap="gray", text=None):
    """Frequency-by-quantile heatmap (one pixel per cell, linear colour scale)."""
    from PIL import Image, PngImagePlugin

    V = np.asarray(values, dtype=float)
    lo, hi = float(V.min()), float(V.max())
    scaled = (V - lo) / (hi - lo) if hi > lo else np.zeros_like(V)
    if colormap == "gray":
        img = Image.fromarray(np.rint(scaled * 255).astype(np.uint8), mode="L")
    elif colormap == "viridis":
        from matplotlib import colormaps

        rgb = colormaps["viridis"](scaled)[..., :3]
        img = Image.fromarray(np.rint(rgb * 255).astype(np.uint8), mode="RGB")
    else:
        raise ConfigError(f"unknown colormap {colormap!r}")
    info = PngImagePlugin.PngInfo()
    info.add_text("scale", f"linear min={lo:.17g} max={hi:.17g} colormap={colormap}")
    info.add_text("layout", "rows=frequency (ascending), columns=quantile level (ascending)")
    if text:
        info.add_text("source", text)
    _atomic_write(path, lambda p: img.save(p, format="PNG", pnginfo=info))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    try:
        spec = simulate.ModelSpec(args.model, args.n, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    y = simulate.generate(spec)
    _atomic_write(args.out, lambda p: write_series_csv(p, y))
    _write_json(args.out + ".json", _sidecar("simulate", args,
                                             spec={"kind": spec.kind, "n": spec.n, "seed": spec.seed}))
    return EXIT_OK


def cmd_estimate(args):
    grid = _grid(args.quantiles)
    y = _read_series(args.input)
    method, opts = _estimator_options(args)
    est = estimate(y, grid, method, normalize=args.normalize, threads=args.threads, **opts)
    save_estimate(args.out, est, _sidecar("estimate", args))
    return EXIT_OK


def cmd_benchmark(args):
    grid = _grid(args.quantiles)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    ests = [e.strip().replace("-", "_") for e in args.estimators.split(",") if e.strip()]
    bad = [m for m in models if m not in simulate.MODEL_KINDS]
    if bad:
        raise ConfigError(f"unknown model(s) {bad}; valid kinds: {', '.join(simulate.MODEL_KINDS)}")
    bad = [e for e in ests if e not in metrics.ESTIMATORS]
    if bad:
        raise ConfigError(f"unknown estimator(s) {bad}; valid: {', '.join(metrics.ESTIMATORS)}")
    if args.runs < 1 or args.truth_reps < 1:
        raise ConfigError("--runs and --truth-reps must be positive")
    reports = []
    for n in args.n:
        if n < 8:
            raise ConfigError(f"--n must be at least 8, got {n}")
        reports += metrics.benchmark(models, ests, n, args.runs, args.truth_reps, grid,
                                     args.seed, threads=args.threads)
    _atomic_write(args.out + ".csv", lambda p: metrics.write_report_csv(p, reports))
    _write_json(args.out + ".json", {**_sidecar("benchmark", args),
                                     "reports": [vars(r) for r in reports]})
    return EXIT_OK


def window_starts(length, width, step):
    if width < 1 or step < 1:
        raise ConfigError("window width and step must be positive")
    if width > length:
        raise WindowTooLong(f"window width {width} exceeds series length {length}")
    return [k * step for k in range((length - width) // step + 1)]


def cmd_window_features(args):
    grid = _grid(args.quantiles)
    y = _read_series(args.input)
    try:
        starts = window_starts(y.size, args.width, args.step)
    except WindowTooLong as exc:
        raise ConfigError(str(exc)) from exc
    os.makedirs(args.out_dir, exist_ok=True)
    threads = resolve_threads(args.threads)

    def one(k):
        seg = y[starts[k]: starts[k] + args.width]
        seg = detrend_spline(seg, args.stiffness)
        est = estimate(seg, grid, "parametric", normalize=True, threads=1)
        stem = os.path.join(args.out_dir, f"window_{k:05d}")
        save_estimate(stem + ".csv", est, _sidecar("window-features", args, window=k,
                                                   start=starts[k], stop=starts[k] + args.width))
        if args.png != "none":
            heatmap_png(stem + ".png", est.values, args.png, text=f"window {k} start {starts[k]}")
        return {"window": k, "start": starts[k], "stop": starts[k] + args.width,
                "csv": os.path.basename(stem + ".csv")}

    entries = pmap(one, range(len(starts)), threads)
    _write_json(os.path.join(args.out_dir, "index.json"),
                {**_sidecar("window-features", args), "windows": entries, "count": len(entries)})
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="qspec", description="Quantile spectral analysis by AR approximation.")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--quantiles", default=DEFAULT_QUANTILES, help="start:stop:step or comma list")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env QSPEC_THREADS)")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("simulate", help="simulate a benchmark model")
    s.add_argument("--model", required=True, help=f"one of {', '.join(simulate.MODEL_KINDS)}")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="series.csv")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate the quantile spectrum of a series")
    e.add_argument("--input", required=True)
    e.add_argument("--out", default="estimate.csv")
    e.add_argument("--method", default="parametric", choices=[m.replace("_", "-") for m in METHODS])
    e.add_argument("--normalize", action="store_true")
    e.add_argument("--order-mode", default="aic", choices=["aic", "common"])
    e.add_argument("--p-max", type=int, default=None)
    e.add_argument("--criterion", default="loocv", choices=["loocv", "gcv"])
    e.add_argument("--bw-freq", type=float, default=2.0)
    e.add_argument("--bw-tau", type=float, default=3.0)
    common(e)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("benchmark", help="simulation benchmark against Monte-Carlo ground truth")
    b.add_argument("--models", default=",".join(simulate.MODEL_KINDS))
    b.add_argument("--estimators", default="parametric,spline,gamma-gcv,kernel2d")
    b.add_argument("--n", type=int, nargs="+", default=[500])
    b.add_argument("--runs", type=int, default=200)
    b.add_argument("--truth-reps", type=int, default=2000)
    b.add_argument("--out", default="benchmark")
    common(b)
    b.set_defaults(func=cmd_benchmark)

    w = sub.add_parser("window-features", help="windowed normalized quantile spectra")
    w.add_argument("--input", required=True)
    w.add_argument("--width", type=int, required=True)
    w.add_argument("--step", type=int, required=True)
    w.add_argument("--out-dir", required=True)
    w.add_argument("--stiffness", type=float, default=None, help="detrending spline penalty")
    w.add_argument("--png", default="none", choices=["none", "gray", "viridis"])
    common(w)
    w.set_defaults(func=cmd_window_features)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qspec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QSpecError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"qspec {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
