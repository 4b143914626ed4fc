"""Command line entry point: ``twinlab <subcommand> [options]``.

Each subcommand writes plot-ready CSV plus a JSON summary into ``--out-dir``
and prints the summary on stdout. Failures print a JSON error object on
stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments as ex
from .analysis import HistogramSpec
from .config import load_config, with_overrides
from .exceptions import TwinlabError
from .source import FilterBank
from .tags import IDLER, SIGNAL, read_tags, write_tags

EXIT_ERROR = 2


class _JsonArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_ERROR, json.dumps({"error": "UsageError", "message": message}) + "\n")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p, seed=True, duration=True):
    p.add_argument("--config", default=None, help="configuration file (default: shipped paper.cfg)")
    p.add_argument("--out-dir", default=None, help="output directory (default: [run] output_dir)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="master seed (default: [run] seed)")
    if duration:
        p.add_argument("--duration", type=float, default=None, help="virtual seconds per simulated point")
    p.add_argument("--bin-width", type=int, default=None, help="histogram bin width, ps")
    p.add_argument("--window", type=int, default=None, help="coincidence window, ps")


def build_parser():
    parser = _JsonArgumentParser(prog="twinlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_JsonArgumentParser)

    p = sub.add_parser("shg-scan", help="second-harmonic spectrum with facet fringes")
    _add_common(p, seed=False, duration=False)
    p = sub.add_parser("tuning-curve", help="signal/idler wavelengths versus temperature")
    _add_common(p, seed=False, duration=False)
    p = sub.add_parser("spdc-spectrum", help="SPDC spectral density at the operating temperature")
    _add_common(p, seed=False, duration=False)

    p = sub.add_parser("simulate", help="write a simulated signal/idler tag file")
    _add_common(p)
    p.add_argument("--power", type=float, default=None, help="pump power, mW")
    p.add_argument("--bandwidth", type=float, default=None, help="filter bandwidth, GHz")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--output", default=None, help="tag file path (default: <out-dir>/tags.<format>)")

    p = sub.add_parser("g2", help="cross-correlation histogram of a tag file")
    _add_common(p, seed=False, duration=False)
    p.add_argument("tags", help="tag file (binary or CSV)")
    p.add_argument("--half-range", type=int, default=None, help="histogram half range, ps")
    p.add_argument("--channel-a", type=int, default=SIGNAL)
    p.add_argument("--channel-b", type=int, default=IDLER)

    p = sub.add_parser("sweep-power", help="pair rate versus pump power")
    _add_common(p)
    p.add_argument("--power", type=_floats, default=None, help="comma-separated pump powers, mW")
    p.add_argument("--bandwidth", type=float, default=None, help="filter bandwidth, GHz")

    p = sub.add_parser("sweep-bandwidth", help="pair rate versus filter bandwidth")
    _add_common(p)
    p.add_argument("--bandwidth", type=_floats, default=None, help="comma-separated bandwidths, GHz")
    p.add_argument("--power", type=float, default=None, help="pump power, mW")

    p = sub.add_parser("car", help="coincidence-to-accidental ratio versus pair rate")
    _add_common(p)
    p.add_argument("--power", type=_floats, default=None, help="comma-separated pump powers, mW")

    p = sub.add_parser("heralded", help="heralded and unheralded g2(0) in the HBT configuration")
    _add_common(p)
    p.add_argument("--power", type=_floats, default=None, help="comma-separated pump powers, mW")

    p = sub.add_parser("reproduce-all", help="run every experiment into one output directory")
    _add_common(p, duration=False)
    p.add_argument("--scale", type=float, default=1.0, help="multiply every simulated duration")
    return parser


def _configure(args):
    cfg = load_config(args.config)
    hist = {}
    if getattr(args, "bin_width", None) is not None:
        hist["bin_width"] = args.bin_width
    if getattr(args, "window", None) is not None:
        hist["window"] = args.window
    if getattr(args, "half_range", None) is not None:
        hist["half_range"] = args.half_range
    if hist:
        cfg = with_overrides(cfg, histogram=HistogramSpec(**{**cfg.histogram.__dict__, **hist}))
    run = {}
    if getattr(args, "seed", None) is not None:
        run["seed"] = args.seed
    if args.out_dir is not None:
        run["output_dir"] = args.out_dir
    if run:
        cfg = with_overrides(cfg, run=run)
    return cfg


def _emit(result, out_dir):
    result.write(out_dir)
    sys.stdout.write(ex.to_json(result.summary))


def _cmd_phase(fn):
    def run(args, cfg):
        _emit(fn(cfg), cfg.run.output_dir)
    return run


def _cmd_simulate(args, cfg):
    filters = FilterBank.symmetric(cfg.filters.signal.center_offset, args.bandwidth) if args.bandwidth else None
    stream = ex.simulate(cfg, ex.sub_seed(cfg.run.seed, ex._SIMULATE), args.power, args.duration, filters)
    path = args.output or os.path.join(cfg.run.output_dir, f"tags.{args.format}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    write_tags(path, stream, format=args.format)
    summary = {"path": path, "format": args.format, "tags": len(stream), "duration_ps": stream.duration,
               "counts": {str(ch): stream.count(ch) for ch in stream.channel_ids}}
    sys.stdout.write(ex.to_json(summary))


def _cmd_g2(args, cfg):
    stream = read_tags(args.tags)
    _emit(ex.analyze_g2(stream, cfg, channel_a=args.channel_a, channel_b=args.channel_b), cfg.run.output_dir)


def _cmd_sweep_power(args, cfg):
    changes = {}
    if args.power is not None:
        changes["powers"] = args.power
    if args.duration is not None:
        changes["duration"] = args.duration
    if changes:
        cfg = with_overrides(cfg, power_sweep=changes)
    if args.bandwidth is not None:
        cfg = with_overrides(cfg, filters=FilterBank.symmetric(cfg.filters.signal.center_offset, args.bandwidth))
    _emit(ex.run_power_sweep(cfg, cfg.run.seed), cfg.run.output_dir)


def _cmd_sweep_bandwidth(args, cfg):
    changes = {}
    if args.bandwidth is not None:
        changes["bandwidths"] = args.bandwidth
    if args.power is not None:
        changes["pump_power"] = args.power
    if args.duration is not None:
        changes["duration"] = args.duration
    if changes:
        cfg = with_overrides(cfg, bandwidth_sweep=changes)
    _emit(ex.run_bandwidth_sweep(cfg, cfg.run.seed), cfg.run.output_dir)


def _points(powers, durations, override_powers, override_duration):
    powers = override_powers if override_powers is not None else powers
    if override_duration is not None:
        durations = (override_duration,) * len(powers)
    elif len(durations) != len(powers):
        durations = (max(durations),) * len(powers)
    return {"powers": tuple(powers), "durations": tuple(durations)}


def _cmd_car(args, cfg):
    sweep = cfg.car_sweep
    if args.power is not None or args.duration is not None:
        cfg = with_overrides(cfg, car_sweep=_points(sweep.powers, sweep.durations, args.power, args.duration))
    _emit(ex.run_car(cfg, cfg.run.seed), cfg.run.output_dir)


def _cmd_heralded(args, cfg):
    sweep = cfg.heralded
    if args.power is not None or args.duration is not None:
        cfg = with_overrides(cfg, heralded=_points(sweep.powers, sweep.durations, args.power, args.duration))
    _emit(ex.run_heralded(cfg, cfg.run.seed), cfg.run.output_dir)


def _cmd_reproduce_all(args, cfg):
    _, summary = ex.reproduce_all(cfg, cfg.run.output_dir, cfg.run.seed, scale=args.scale)
    sys.stdout.write(ex.to_json(summary))


COMMANDS = {
    "shg-scan": _cmd_phase(ex.run_shg_scan),
    "tuning-curve": _cmd_phase(ex.run_tuning_curve),
    "spdc-spectrum": _cmd_phase(ex.run_spdc_spectrum),
    "simulate": _cmd_simulate,
    "g2": _cmd_g2,
    "sweep-power": _cmd_sweep_power,
    "sweep-bandwidth": _cmd_sweep_bandwidth,
    "car": _cmd_car,
    "heralded": _cmd_heralded,
    "reproduce-all": _cmd_reproduce_all,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _configure(args)
        COMMANDS[args.command](args, cfg)
    except TwinlabError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "IOError", "message": str(exc),
                                     "path": getattr(exc, "filename", None)}) + "\n")
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
