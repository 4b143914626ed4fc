"""Experiment configuration: an INI-style file with one section per type.

``parse_config`` reports every violation at once. ``dump_config`` writes a
file that parses back to an identical ExperimentConfig.
"""
from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field, fields
from importlib import resources

from .analysis import HistogramSpec
from .dispersion import DispersionModel
from .exceptions import ParseError, TwinlabError, ValidationError
from .phasematch import WaveguideSpec
from .presets import PRESETS, get_preset
from .source import (ChannelParams, DetectorParams, FilterBank, FilterSpec, SourceParams,
                     filter_overlap_violation)
from .tags import IDLER, IDLER1, IDLER2, SIGNAL

PAPER_CONFIG = "paper.cfg"


@dataclass(frozen=True)
class DispersionConfig:
    preset: str | None = "calibrated"
    coefficients: tuple | None = None
    wavelength_range: tuple | None = None
    temperature_range: tuple | None = None
    label: str = "inline"

    def model(self):
        if self.preset:
            return get_preset(self.preset)
        return DispersionModel(self.coefficients, self.wavelength_range, self.temperature_range, self.label)


@dataclass(frozen=True)
class PhaseMatchConfig:
    pump: float = 780.0                 # nm
    temperature: float = 53.0           # C
    shg_min: float = 1545.0             # nm
    shg_max: float = 1575.0
    shg_step: float = 0.002
    t_min: float = 20.0                 # C
    t_max: float = 120.0
    t_step: float = 1.0
    spdc_span: float = 60.0             # THz, full span around degeneracy
    spdc_points: int = 2401


@dataclass(frozen=True)
class PowerSweep:
    powers: tuple = (0.05, 0.1, 0.2, 0.3, 0.4)
    duration: float = 1.0


@dataclass(frozen=True)
class BandwidthSweep:
    pump_power: float = 0.18
    bandwidths: tuple = (25.0, 50.0, 100.0, 200.0, 400.0)
    offset: float = 800.0
    duration: float = 1.0


@dataclass(frozen=True)
class CarSweep:
    powers: tuple = (0.025, 0.05, 0.1, 0.2, 0.4)
    durations: tuple = (60.0, 30.0, 15.0, 8.0, 4.0)
    half_range: int = 6000


@dataclass(frozen=True)
class HeraldedSweep:
    reference_power: float = 0.385
    powers: tuple = (0.1925, 0.385, 0.77)
    durations: tuple = (60.0, 30.0, 15.0)
    control_rate: float = 1e6           # Hz per channel, uncorrelated control
    control_window: int = 20000         # ps
    control_duration: float = 2.0


@dataclass(frozen=True)
class EfficiencySweep:
    pump_power: float = 0.2
    duration: float = 1.0
    seeds: int = 10


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    output_dir: str = "out"
    duration: float = 1.0
    pump_power: float = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    dispersion: DispersionConfig = field(default_factory=DispersionConfig)
    waveguide: WaveguideSpec = field(default_factory=WaveguideSpec)
    source: SourceParams = field(default_factory=SourceParams)
    filters: FilterBank = field(default_factory=FilterBank)
    channels: dict = field(default_factory=lambda: {SIGNAL: ChannelParams(0.08), IDLER: ChannelParams(0.09)})
    detectors: dict = field(default_factory=dict)
    histogram: HistogramSpec = field(default_factory=HistogramSpec)
    phasematch: PhaseMatchConfig = field(default_factory=PhaseMatchConfig)
    power_sweep: PowerSweep = field(default_factory=PowerSweep)
    bandwidth_sweep: BandwidthSweep = field(default_factory=BandwidthSweep)
    car_sweep: CarSweep = field(default_factory=CarSweep)
    heralded: HeraldedSweep = field(default_factory=HeraldedSweep)
    efficiency: EfficiencySweep = field(default_factory=EfficiencySweep)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def pair_detectors(self):
        return {SIGNAL: self.detectors["signal"], IDLER: self.detectors["idler"]}

    @property
    def hbt_detectors(self):
        return {SIGNAL: self.detectors["herald"], IDLER1: self.detectors["idler1"],
                IDLER2: self.detectors["idler2"]}


# section -> (target, [(key, attribute, kind)])
_SCHEMA = {
    "waveguide": (WaveguideSpec, [
        ("poling_period_um", "poling_period", float),
        ("poled_length_mm", "poled_length", float),
        ("physical_length_mm", "physical_length", float),
        ("facet_reflectivity", "facet_reflectivity", float)]),
    "source": (SourceParams, [
        ("brightness", "brightness", float),
        ("pump_power_mw", "pump_power", float),
        ("pair_coherence_ps", "pair_coherence_width", "optional_float")]),
    "histogram": (HistogramSpec, [
        ("bin_width_ps", "bin_width", int),
        ("half_range_ps", "half_range", int),
        ("window_ps", "window", int)]),
    "phasematch": (PhaseMatchConfig, [
        ("pump_nm", "pump", float),
        ("temperature_c", "temperature", float),
        ("shg_min_nm", "shg_min", float),
        ("shg_max_nm", "shg_max", float),
        ("shg_step_nm", "shg_step", float),
        ("t_min_c", "t_min", float),
        ("t_max_c", "t_max", float),
        ("t_step_c", "t_step", float),
        ("spdc_span_thz", "spdc_span", float),
        ("spdc_points", "spdc_points", int)]),
    "sweep.power": (PowerSweep, [
        ("powers_mw", "powers", "floats"),
        ("duration_s", "duration", float)]),
    "sweep.bandwidth": (BandwidthSweep, [
        ("pump_power_mw", "pump_power", float),
        ("bandwidths_ghz", "bandwidths", "floats"),
        ("offset_ghz", "offset", float),
        ("duration_s", "duration", float)]),
    "sweep.car": (CarSweep, [
        ("powers_mw", "powers", "floats"),
        ("durations_s", "durations", "floats"),
        ("half_range_ps", "half_range", int)]),
    "sweep.heralded": (HeraldedSweep, [
        ("reference_power_mw", "reference_power", float),
        ("powers_mw", "powers", "floats"),
        ("durations_s", "durations", "floats"),
        ("control_rate_hz", "control_rate", float),
        ("control_window_ps", "control_window", int),
        ("control_duration_s", "control_duration", float)]),
    "sweep.efficiency": (EfficiencySweep, [
        ("pump_power_mw", "pump_power", float),
        ("duration_s", "duration", float),
        ("seeds", "seeds", int)]),
    "run": (RunConfig, [
        ("seed", "seed", int),
        ("output_dir", "output_dir", str),
        ("duration_s", "duration", float),
        ("pump_power_mw", "pump_power", float)]),
}

_FILTER_KEYS = [("center_offset_ghz", "center_offset", float), ("bandwidth_ghz", "bandwidth", float),
                ("shape", "shape", str)]
_CHANNEL_KEYS = [("transmission", "transmission", float)]
_DETECTOR_KEYS = [("quantum_efficiency", "quantum_efficiency", float), ("jitter_ps", "jitter_sigma", float),
                  ("dead_time_ns", "dead_time", float), ("dark_rate_hz", "dark_rate", float)]
DETECTOR_ROLES = ("signal", "idler", "herald", "idler1", "idler2")
_CHANNEL_ROLES = {"signal": SIGNAL, "idler": IDLER}

_ATTR_TO_SECTION = {
    "waveguide": "waveguide", "source": "source", "histogram": "histogram", "phasematch": "phasematch",
    "power_sweep": "sweep.power", "bandwidth_sweep": "sweep.bandwidth", "car_sweep": "sweep.car",
    "heralded": "sweep.heralded", "efficiency": "sweep.efficiency", "run": "run",
}


def _convert(kind, raw):
    raw = raw.strip()
    if kind is float:
        return float(raw)
    if kind is int:
        value = float(raw)
        if value != int(value):
            raise ValueError(f"{raw!r} is not an integer")
        return int(value)
    if kind is str:
        return raw
    if kind == "optional_float":
        return None if raw.lower() in ("", "none", "auto") else float(raw)
    if kind == "floats":
        return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
    raise AssertionError(kind)


def _format(kind, value):
    if value is None:
        return "auto"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind is float or kind == "optional_float":
        return repr(float(value))
    return str(value)


def _key_line(parser_lines, section, key):
    return parser_lines.get((section, key))


def _index_lines(text):
    """(section, key) -> line number, for error messages."""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            out[(section, None)] = lineno
        elif section and "=" in stripped and not stripped.startswith(("#", ";")):
            out[(section, stripped.split("=", 1)[0].strip())] = lineno
    return out


def _build(cls, section, keys, parser, lines, problems, defaults=None):
    kwargs = {}
    if parser.has_section(section):
        known = {k for k, _, _ in keys}
        for key in parser[section]:
            if key not in known:
                problems.append(f"[{section}] line {_key_line(lines, section, key)}: unknown key {key!r}")
        for key, attr, kind in keys:
            if key in parser[section]:
                try:
                    kwargs[attr] = _convert(kind, parser[section][key])
                except ValueError as exc:
                    problems.append(f"[{section}] line {_key_line(lines, section, key)}: {key}: {exc}")
    base = dict(defaults or {})
    base.update(kwargs)
    try:
        return cls(**base)
    except ValidationError as exc:
        problems.extend(f"[{section}] {v}" for v in exc.violations)
    except TwinlabError as exc:
        problems.append(f"[{section}] {exc}")
    except TypeError as exc:
        problems.append(f"[{section}] {exc}")
    return None


def _parse_dispersion(parser, lines, problems):
    if not parser.has_section("dispersion"):
        return DispersionConfig()
    sec = parser["dispersion"]
    for key in sec:
        if key not in ("preset", "coefficients", "wavelength_range_nm", "temperature_range_c", "label"):
            problems.append(f"[dispersion] line {_key_line(lines, 'dispersion', key)}: unknown key {key!r}")
    preset = sec.get("preset", "").strip() or None
    if preset:
        if preset not in PRESETS:
            problems.append(f"[dispersion] unknown preset {preset!r} (known: {', '.join(sorted(PRESETS))})")
            return None
        return DispersionConfig(preset=preset)
    try:
        coefficients = tuple(tuple(float(v) for v in row) for row in json.loads(sec["coefficients"]))
        wl = tuple(float(v) for v in sec["wavelength_range_nm"].split(","))
        tr = tuple(float(v) for v in sec["temperature_range_c"].split(","))
    except (KeyError, ValueError, TypeError) as exc:
        problems.append(f"[dispersion] inline model needs coefficients, wavelength_range_nm, "
                        f"temperature_range_c: {exc}")
        return None
    cfg = DispersionConfig(None, coefficients, wl, tr, sec.get("label", "inline").strip())
    try:
        cfg.model()
    except ValidationError as exc:
        problems.extend(f"[dispersion] {v}" for v in exc.violations)
        return None
    return cfg


def parse_config_text(text, source="<string>"):
    if not text.strip():
        raise ParseError(1, f"{source}: configuration is empty")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.lineno, "content before the first [section] header") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError(lineno, f"malformed line {exc.errors[0][1] if exc.errors else ''}".strip()) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(exc.lineno, f"duplicate section [{exc.section}]") from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(exc.lineno, f"duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.Error as exc:
        raise ParseError(None, str(exc)) from None
    if not parser.sections():
        raise ParseError(1, f"{source}: no sections found")

    lines = _index_lines(text)
    problems = []
    known_sections = set(_SCHEMA) | {"dispersion"} | {f"filter.{r}" for r in _CHANNEL_ROLES} \
        | {f"channel.{r}" for r in _CHANNEL_ROLES} | {f"detector.{r}" for r in DETECTOR_ROLES}
    for section in parser.sections():
        if section not in known_sections:
            problems.append(f"line {lines.get((section, None))}: unknown section [{section}]")

    values = {"dispersion": _parse_dispersion(parser, lines, problems)}
    defaults = ExperimentConfig.__dataclass_fields__
    for attr, section in _ATTR_TO_SECTION.items():
        cls, keys = _SCHEMA[section]
        values[attr] = _build(cls, section, keys, parser, lines, problems)

    default_filters = FilterBank()
    filt = {}
    for role in _CHANNEL_ROLES:
        base = getattr(default_filters, role)
        filt[role] = _build(FilterSpec, f"filter.{role}", _FILTER_KEYS, parser, lines, problems,
                            defaults={f.name: getattr(base, f.name) for f in fields(FilterSpec)})
    if filt["signal"] and filt["idler"]:
        msg = filter_overlap_violation(filt["signal"], filt["idler"])
        if msg:
            problems.append(f"[filter] {msg}")
        else:
            values["filters"] = FilterBank(filt["signal"], filt["idler"])

    default_channels = defaults["channels"].default_factory()
    channels = {}
    for role, ch in _CHANNEL_ROLES.items():
        channels[ch] = _build(ChannelParams, f"channel.{role}", _CHANNEL_KEYS, parser, lines, problems,
                              defaults={"transmission": default_channels[ch].transmission})
    values["channels"] = channels

    detectors = {}
    for role in DETECTOR_ROLES:
        detectors[role] = _build(DetectorParams, f"detector.{role}", _DETECTOR_KEYS, parser, lines, problems,
                                 defaults=_default_detector(role))
    values["detectors"] = detectors

    for name, sweep in (("sweep.car", values.get("car_sweep")), ("sweep.heralded", values.get("heralded"))):
        if sweep is not None and len(sweep.powers) != len(sweep.durations):
            problems.append(f"[{name}] powers_mw and durations_s must have the same length")
    for name, seq in (("sweep.power", getattr(values.get("power_sweep"), "powers", ())),
                      ("sweep.bandwidth", getattr(values.get("bandwidth_sweep"), "bandwidths", ()))):
        if any(v < 0 for v in seq):
            problems.append(f"[{name}] sweep values must be >= 0")
    hist = values.get("histogram")
    if hist is not None and values.get("car_sweep") is not None and values["car_sweep"].half_range < hist.window / 2:
        problems.append("[sweep.car] half_range_ps must be >= window_ps / 2")

    if problems:
        raise ValidationError(problems)
    return ExperimentConfig(**values)


def _default_detector(role):
    return {"quantum_efficiency": 0.3 if role == "herald" else 0.7,
            "jitter_sigma": 30.0, "dead_time": 20.0, "dark_rate": 100.0}


def parse_config(path):
    """Read and validate a configuration file."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, source=path)


def paper_config_text():
    return resources.files("twinlab").joinpath(PAPER_CONFIG).read_text(encoding="utf-8")


def paper_config():
    return parse_config_text(paper_config_text(), source=PAPER_CONFIG)


def load_config(path=None):
    """``path`` or the shipped paper preset when ``path`` is None / 'paper'."""
    if path is None or path in ("paper", PAPER_CONFIG):
        return paper_config()
    return parse_config(path)


def dump_config(cfg):
    """Serialize to INI text that parses back to an equal ExperimentConfig."""
    out = []

    def section(name, pairs):
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in pairs)
        out.append("")

    d = cfg.dispersion
    if d.preset:
        section("dispersion", [("preset", d.preset)])
    else:
        section("dispersion", [("coefficients", json.dumps([list(r) for r in d.coefficients])),
                               ("wavelength_range_nm", ", ".join(repr(v) for v in d.wavelength_range)),
                               ("temperature_range_c", ", ".join(repr(v) for v in d.temperature_range)),
                               ("label", d.label)])
    for attr, name in _ATTR_TO_SECTION.items():
        _, keys = _SCHEMA[name]
        obj = getattr(cfg, attr)
        section(name, [(k, _format(kind, getattr(obj, a))) for k, a, kind in keys])
    for role in _CHANNEL_ROLES:
        f = getattr(cfg.filters, role)
        section(f"filter.{role}", [(k, _format(kind, getattr(f, a))) for k, a, kind in _FILTER_KEYS])
    for role, ch in _CHANNEL_ROLES.items():
        c = cfg.channels[ch]
        section(f"channel.{role}", [(k, _format(kind, getattr(c, a))) for k, a, kind in _CHANNEL_KEYS])
    for role in DETECTOR_ROLES:
        det = cfg.detectors[role]
        section(f"detector.{role}", [(k, _format(kind, getattr(det, a))) for k, a, kind in _DETECTOR_KEYS])
    return "\n".join(out)


def with_overrides(cfg, **changes):
    """Copy of ``cfg`` with nested dataclass fields replaced, e.g. ``run={'seed': 1}``."""
    from dataclasses import replace
    values = {}
    for attr, update in changes.items():
        current = getattr(cfg, attr)
        values[attr] = replace(current, **update) if isinstance(update, dict) else update
    return replace(cfg, **values)
