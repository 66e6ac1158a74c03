"""Batch command-line front end.

Subcommands: simulate, correlate, fit, geometry, pipeline.  Every run writes
plot-ready CSV plus JSON sidecars/reports so any output is reproducible from
its config alone.  Exit codes: 0 ok, 2 invalid configuration or input,
3 I/O failure, 4 fit did not converge (report still written).

The default output directory is the current directory, overridable with the
FIBERPHOTON_OUTDIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import correlate as corr
from . import fit as fitmod
from . import geometry as geom
from . import io as fio
from .emitter import EmitterParams, PulseParams
from .errors import FiberPhotonError
from .sim import SimConfig, simulate_streams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4


def _outdir(args) -> Path:
    base = args.out or os.environ.get("FIBERPHOTON_OUTDIR") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _build_sim_config(args) -> SimConfig:
    emitter = EmitterParams(w_p=args.wp, gamma=args.gamma)
    pulse = None
    if args.pulsed:
        if args.tau_o is None or args.period is None:
            raise FiberPhotonError("--pulsed requires --tau-o and --period")
        pulse = PulseParams(tau_o=args.tau_o, period=args.period)
    return SimConfig(
        emitter=emitter,
        pulse=pulse,
        duration=args.duration,
        seed=args.seed,
        detection_efficiency=args.efficiency,
        dark_rate_per_channel=args.dark_rate,
        background_rate=args.background_rate,
        jitter_sigma=args.jitter,
        pulse_shape=args.pulse_shape,
    )


def cmd_simulate(args) -> int:
    cfg = _build_sim_config(args)
    streams = simulate_streams(cfg)
    out = _outdir(args)
    stream_path = out / f"{args.prefix}.csv"
    fio.write_stream_csv(stream_path, streams)
    fio.write_sim_sidecar(fio.sidecar_path(stream_path), cfg)
    print(f"wrote {stream_path} ({streams[0].times.size} + "
          f"{streams[1].times.size} events)")
    return EXIT_OK


def _load_streams(paths):
    if len(paths) == 1:
        return fio.read_stream_csv(paths[0])
    a = fio.read_stream_csv(paths[0])
    b = fio.read_stream_csv(paths[1])
    if abs(a[0].duration - b[1].duration) > 1e-9 * max(a[0].duration, b[1].duration):
        raise FiberPhotonError(
            f"stream durations differ: {a[0].duration} vs {b[1].duration}"
        )
    return a[0], b[1]


def cmd_correlate(args) -> int:
    s1, s2 = _load_streams(args.streams)
    h = corr.cross_correlate(s1, s2, window=args.window, bin_width=args.bin,
                             n_chunks=args.workers)
    if h.total_pairs == 0:
        print("warning: no coincidences in window", file=sys.stderr)
    if args.normalize == "cw" and s1.times.size and s2.times.size:
        h = corr.normalize_cw(h, s1.rate, s2.rate)
    out = _outdir(args)
    hist_path = out / f"{args.prefix}.csv"
    fio.write_histogram_csv(hist_path, h)
    print(f"wrote {hist_path} ({h.total_pairs} pairs)")
    if args.integrate_peaks:
        if args.period is None:
            raise FiberPhotonError("--integrate-peaks requires --period")
        peaks = corr.integrate_peaks(h, period=args.period,
                                     peak_halfwidth=args.peak_halfwidth,
                                     background_per_bin=args.background_per_bin)
        report = {
            "g2_int": peaks.g2_int,
            "g2_int_sigma": peaks.g2_int_sigma,
            "zero_peak_sum": peaks.zero_peak_sum,
            "side_peak_sums": peaks.side_peak_sums,
            "background_per_bin": peaks.background_per_bin,
            "peak_halfwidth": peaks.peak_window,
            "period": peaks.period,
        }
        peaks_path = out / f"{args.prefix}.peaks.json"
        peaks_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        print(f"g2_int = {peaks.g2_int:.4f} +- {peaks.g2_int_sigma:.4f} "
              f"-> {peaks_path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    out = _outdir(args)
    if args.model == "saturation":
        data = fio.read_saturation_csv(args.input)
        result = fitmod.fit_saturation(data)
    else:
        h = fio.read_histogram_csv(args.input)
        if args.model == "cw":
            result = fitmod.fit_g2_cw(h, fit_halfwidth=args.fit_halfwidth)
        else:
            if args.tau_o is None:
                raise FiberPhotonError("--model pulsed requires --tau-o")
            result = fitmod.fit_g2_pulsed(h, tau_o_fixed=args.tau_o,
                                          fit_halfwidth=args.fit_halfwidth)
    report_path = out / f"{args.prefix}.json"
    fio.write_fit_report(report_path, result)
    summary = ", ".join(f"{k}={v:.4g}" for k, v in result.params.items())
    print(f"{summary} -> {report_path}")
    if not result.converged:
        return _fail(EXIT_NO_CONVERGENCE, "fit did not converge")
    return EXIT_OK


def cmd_geometry(args) -> int:
    if args.geom_cmd == "channeling":
        print(f"{geom.channeling_efficiency(args.n):.6f}")
        return EXIT_OK
    if args.geom_cmd == "modes":
        g = geom.FiberGeometry(a=args.a, n=args.n, r=0.0, wavelength=args.wavelength)
        modes = geom.wgm_mode_numbers(g)
        if modes:
            print(f"m={modes[0]}..{modes[-1]} count={len(modes)}")
        else:
            print("m=none count=0")
        return EXIT_OK
    # confinement
    if args.sweep:
        ratios, eta = geom.confinement_sweep(args.n)
        out = _outdir(args)
        path = out / "confinement_sweep.csv"
        with path.open("w") as fh:
            fh.write("x,value\n")
            for x, v in zip(ratios, eta):
                fh.write(f"{x:.6f},{v:.9f}\n")
        print(f"wrote {path}")
    else:
        g = geom.FiberGeometry(a=1.0, n=args.n, r=args.r_over_a,
                               wavelength=args.wavelength)
        print(f"{geom.confinement_efficiency(g):.6f}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = json.loads(Path(args.config).read_text())
    out = _outdir(args)

    sim_cfg = config["simulate"]
    emitter = EmitterParams(**sim_cfg["emitter"])
    pulse = PulseParams(**sim_cfg["pulse"]) if sim_cfg.get("pulse") else None
    cfg = SimConfig(
        emitter=emitter, pulse=pulse,
        duration=sim_cfg["duration"], seed=sim_cfg["seed"],
        detection_efficiency=sim_cfg.get("detection_efficiency", 1.0),
        dark_rate_per_channel=sim_cfg.get("dark_rate_per_channel", 0.0),
        background_rate=sim_cfg.get("background_rate", 0.0),
        jitter_sigma=sim_cfg.get("jitter_sigma", 0.0),
        pulse_shape=sim_cfg.get("pulse_shape", "exponential"),
    )
    streams = simulate_streams(cfg)
    stream_path = out / "stream.csv"
    fio.write_stream_csv(stream_path, streams)
    fio.write_sim_sidecar(fio.sidecar_path(stream_path), cfg)

    cor_cfg = config.get("correlate", {})
    h = corr.cross_correlate(
        streams[0], streams[1],
        window=cor_cfg.get("window", corr.DEFAULT_CW_WINDOW),
        bin_width=cor_cfg.get("bin_width", corr.DEFAULT_BIN_WIDTH),
        n_chunks=args.workers,
    )
    if streams[0].times.size and streams[1].times.size:
        h = corr.normalize_cw(h, streams[0].rate, streams[1].rate)
    fio.write_histogram_csv(out / "histogram.csv", h)

    fit_cfg = config.get("fit")
    code = EXIT_OK
    if fit_cfg:
        model = fit_cfg.get("model", "cw")
        if model == "cw":
            result = fitmod.fit_g2_cw(h, fit_halfwidth=fit_cfg.get("fit_halfwidth"))
        elif model == "pulsed":
            result = fitmod.fit_g2_pulsed(h, tau_o_fixed=fit_cfg["tau_o"],
                                          fit_halfwidth=fit_cfg.get("fit_halfwidth"))
        else:
            raise FiberPhotonError(f"unknown pipeline fit model {model!r}")
        fio.write_fit_report(out / "fit.json", result)
        if not result.converged:
            code = EXIT_NO_CONVERGENCE
    print(f"pipeline outputs in {out}")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberphoton",
        description="Simulate, correlate, fit and analyze single-photon "
                    "emitter statistics in a tapered fiber.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate detection timestamp streams")
    p.add_argument("--wp", type=float, required=True, help="pump rate (1/ns)")
    p.add_argument("--gamma", type=float, default=1e-6, help="decay rate (1/ns)")
    p.add_argument("--duration", type=float, required=True, help="acquisition (ns)")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--pulsed", action="store_true", help="pulsed pumping")
    p.add_argument("--tau-o", type=float, dest="tau_o", help="pulse width (ns)")
    p.add_argument("--period", type=float, help="pulse period (ns)")
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--dark-rate", type=float, default=0.0,
                   help="dark events/ns per channel")
    p.add_argument("--background-rate", type=float, default=0.0,
                   help="total background events/ns")
    p.add_argument("--jitter", type=float, default=0.0, help="jitter sigma (ns)")
    p.add_argument("--pulse-shape", choices=["exponential", "rectangular"],
                   default="exponential")
    p.add_argument("--out", help="output directory")
    p.add_argument("--prefix", default="stream")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlate", help="build a coincidence histogram")
    p.add_argument("streams", nargs="+", help="one two-channel CSV or two CSVs")
    p.add_argument("--window", type=float, default=corr.DEFAULT_CW_WINDOW)
    p.add_argument("--bin", type=float, default=corr.DEFAULT_BIN_WIDTH)
    p.add_argument("--normalize", choices=["cw", "none"], default="cw")
    p.add_argument("--integrate-peaks", action="store_true")
    p.add_argument("--period", type=float, help="pulse period (ns)")
    p.add_argument("--peak-halfwidth", type=float,
                   default=corr.DEFAULT_PEAK_HALFWIDTH)
    p.add_argument("--background-per-bin", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.add_argument("--prefix", default="histogram")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fit", help="fit a histogram or saturation curve")
    p.add_argument("input", help="histogram CSV or saturation CSV")
    p.add_argument("--model", choices=["cw", "pulsed", "saturation"],
                   required=True)
    p.add_argument("--tau-o", type=float, dest="tau_o",
                   help="fixed pulse width for the pulsed model (ns)")
    p.add_argument("--fit-halfwidth", type=float,
                   help="restrict the fit to |tau| below this (ns)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--prefix", default="fit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("geometry", help="ray-optics calculators")
    gsub = p.add_subparsers(dest="geom_cmd", required=True)
    g = gsub.add_parser("channeling")
    g.add_argument("--n", type=float, required=True)
    g.set_defaults(func=cmd_geometry)
    g = gsub.add_parser("confinement")
    g.add_argument("--n", type=float, required=True)
    g.add_argument("--r-over-a", type=float, dest="r_over_a", default=0.9)
    g.add_argument("--lambda", type=float, dest="wavelength", default=1.0)
    g.add_argument("--sweep", action="store_true")
    g.add_argument("--out", help="output directory")
    g.set_defaults(func=cmd_geometry)
    g = gsub.add_parser("modes")
    g.add_argument("--a", type=float, required=True)
    g.add_argument("--lambda", type=float, dest="wavelength", required=True)
    g.add_argument("--n", type=float, required=True)
    g.set_defaults(func=cmd_geometry)

    p = sub.add_parser("pipeline",
                       help="simulate -> correlate -> fit from one JSON config")
    p.add_argument("--config", required=True, help="pipeline JSON config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FiberPhotonError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (KeyError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, f"bad configuration: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))


if __name__ == "__main__":
    sys.exit(main())
