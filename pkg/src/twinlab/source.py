"""Seeded Monte Carlo generation of SPDC time-tag streams.

Pipeline: pair emission (homogeneous Poisson) -> relative emission spread ->
channel transmission -> [HBT split] -> detector efficiency -> jitter ->
dark counts -> per-channel dead time -> merged, time-sorted stream.

Randomness comes from counter-based Philox generators. Each physical process
draws from its own sub-stream keyed by (master seed, process, index), so the
output is a pure function of the inputs and the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import dead_time_mask
from .exceptions import NonPositiveDuration, OverlappingFilters, UnknownChannel, ValidationError
from .tags import IDLER, IDLER1, IDLER2, PS_PER_S, SIGNAL, TagStream, check_stream, merge_sorted

# degeneracy frequency, THz
F0_THZ = 192.113

# emission is generated in fixed-length segments so that any parallel
# evaluation of segments reproduces the same stream
SEGMENT_PS = 10 ** 11

_EMIT, _DETECT, _DARK, _SPLIT, _THIN, _POISSON = range(6)

GAUSS_FWHM = 2 * math.sqrt(2 * math.log(2))


def _rng(seed, *key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


@dataclass(frozen=True)
class SourceParams:
    """brightness in pairs/s/mW/GHz, pump_power in mW, pair_coherence_width
    (relative signal-idler emission-time spread, standard deviation) in ps.
    ``None`` derives the width from the filter bandwidth."""

    brightness: float = 2.3e5
    pump_power: float = 1.0
    pair_coherence_width: float | None = None

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self):
        out = []
        if not self.brightness > 0:
            out.append("SourceParams: brightness must be > 0")
        if not self.pump_power >= 0:
            out.append("SourceParams: pump_power must be >= 0")
        if self.pair_coherence_width is not None and not self.pair_coherence_width >= 0:
            out.append("SourceParams: pair_coherence_width must be >= 0")
        return out


@dataclass(frozen=True)
class FilterSpec:
    """Flat-top band-pass; offset from the degeneracy frequency and width in GHz."""

    center_offset: float
    bandwidth: float = 100.0
    shape: str = "flat-top"

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self):
        out = []
        if not self.bandwidth > 0:
            out.append("FilterSpec: bandwidth must be > 0")
        if self.shape != "flat-top":
            out.append(f"FilterSpec: unsupported shape {self.shape!r}")
        return out

    @property
    def band(self):
        return self.center_offset - self.bandwidth / 2, self.center_offset + self.bandwidth / 2


def filter_overlap_violation(signal, idler):
    if abs(signal.center_offset - idler.center_offset) <= (signal.bandwidth + idler.bandwidth) / 2:
        return ("FilterSpec: signal and idler passbands overlap "
                f"(|{signal.center_offset:g} - {idler.center_offset:g}| <= "
                f"({signal.bandwidth:g} + {idler.bandwidth:g}) / 2)")
    return None


@dataclass(frozen=True)
class FilterBank:
    signal: FilterSpec = field(default_factory=lambda: FilterSpec(400.0))
    idler: FilterSpec = field(default_factory=lambda: FilterSpec(-400.0))

    def __post_init__(self):
        msg = filter_overlap_violation(self.signal, self.idler)
        if msg:
            raise OverlappingFilters(msg)

    @property
    def matched_bandwidth(self):
        """Width (GHz) of signal frequencies whose energy-conserving twin passes the idler filter."""
        s_lo, s_hi = self.signal.band
        i_lo, i_hi = self.idler.band
        return max(0.0, min(s_hi, -i_lo) - max(s_lo, -i_hi))

    @classmethod
    def symmetric(cls, offset, bandwidth):
        return cls(FilterSpec(offset, bandwidth), FilterSpec(-offset, bandwidth))


@dataclass(frozen=True)
class ChannelParams:
    transmission: float

    def __post_init__(self):
        if not 0 <= self.transmission <= 1:
            raise ValidationError(["ChannelParams: transmission must be in [0, 1]"])


@dataclass(frozen=True)
class DetectorParams:
    """quantum_efficiency in [0, 1], jitter_sigma in ps, dead_time in ns, dark_rate in Hz."""

    quantum_efficiency: float = 0.7
    jitter_sigma: float = 30.0
    dead_time: float = 20.0
    dark_rate: float = 100.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self):
        out = []
        if not 0 <= self.quantum_efficiency <= 1:
            out.append("DetectorParams: quantum_efficiency must be in [0, 1]")
        for name in ("jitter_sigma", "dead_time", "dark_rate"):
            if not getattr(self, name) >= 0:
                out.append(f"DetectorParams: {name} must be >= 0")
        return out

    @property
    def dead_time_ps(self):
        return int(round(self.dead_time * 1000))


IDEAL_DETECTOR = DetectorParams(1.0, 0.0, 0.0, 0.0)


def pair_rate(source, filter_bandwidth):
    """Pair rate in Hz: brightness * pump power * bandwidth."""
    return source.brightness * source.pump_power * filter_bandwidth


def coherence_sigma(bandwidth_ghz):
    """Gaussian sigma (ps) whose FWHM is the Fourier limit 0.44 / bandwidth."""
    if bandwidth_ghz <= 0:
        return 0.0
    return 440.0 / bandwidth_ghz / GAUSS_FWHM


def mean_pairs_per_window(source, filters, window_ps):
    """Mean pair number in one coincidence window; |epsilon|^2 in the weak regime."""
    return pair_rate(source, filters.matched_bandwidth) * window_ps / PS_PER_S


def _duration_ps(duration):
    if not duration > 0:
        raise NonPositiveDuration(f"duration must be > 0 s, got {duration}")
    return int(round(duration * PS_PER_S))


def _segments(duration_ps):
    start = 0
    index = 0
    while start < duration_ps:
        stop = min(start + SEGMENT_PS, duration_ps)
        yield index, start, stop
        start = stop
        index += 1


def _generate(source, filters, survival, duration_ps, seed):
    """Surviving photon arrival times per channel, before any detector effect.

    A pair yields a signal with probability ``survival[SIGNAL]`` and an idler
    with probability ``survival[IDLER]``, independently. By Poisson splitting
    the four outcomes are independent Poisson processes, so only pairs with at
    least one surviving photon are drawn.
    """
    matched = filters.matched_bandwidth
    rate = pair_rate(source, matched)
    spare_s = source.brightness * source.pump_power * (filters.signal.bandwidth - matched)
    spare_i = source.brightness * source.pump_power * (filters.idler.bandwidth - matched)
    ps, pi = survival[SIGNAL], survival[IDLER]
    sigma = source.pair_coherence_width
    if sigma is None:
        sigma = coherence_sigma(matched)
    half = sigma / math.sqrt(2)

    rate_both = rate * ps * pi
    rate_s = rate * ps * (1 - pi) + spare_s * ps
    rate_i = rate * pi * (1 - ps) + spare_i * pi

    sig, idl = [], []
    for index, start, stop in _segments(duration_ps):
        rng = _rng(seed, _EMIT, index)
        span = stop - start
        seconds = span / PS_PER_S
        n = rng.poisson(rate_both * seconds)
        t = start + rng.random(n) * span
        if half > 0:
            sig.append(t + rng.normal(0.0, half, n))
            idl.append(t + rng.normal(0.0, half, n))
        else:
            sig.append(t)
            idl.append(t.copy())
        sig.append(start + rng.random(rng.poisson(rate_s * seconds)) * span)
        idl.append(start + rng.random(rng.poisson(rate_i * seconds)) * span)
    return {SIGNAL: np.concatenate(sig), IDLER: np.concatenate(idl)}


def _to_stream(times, duration_ps, detectors=None):
    chans, stamps = [], []
    for ch, t in times.items():
        t = np.rint(t).astype(np.int64)
        t = t[(t >= 0) & (t < duration_ps)]
        stamps.append(t)
        chans.append(np.full(len(t), ch, dtype=np.uint8))
    if not chans:
        return TagStream(np.empty(0, np.uint8), np.empty(0, np.int64), duration_ps, dict(detectors or {}))
    ch, ts = merge_sorted(np.concatenate(chans), np.concatenate(stamps))
    return TagStream(ch, ts, duration_ps, dict(detectors or {}))


def emit_photons(source, filters, channels, duration, seed):
    """Photon arrival stream at the detector inputs (channel losses only).

    ``channels`` maps SIGNAL and IDLER to ChannelParams.
    """
    duration_ps = _duration_ps(duration)
    survival = {ch: channels[ch].transmission for ch in (SIGNAL, IDLER)}
    return _to_stream(_generate(source, filters, survival, duration_ps, seed), duration_ps)


def detect(stream, detectors, seed, apply_efficiency=True, keep_probability=None):
    """Apply the detector model per channel: efficiency, jitter, darks, dead time.

    Every channel present in ``stream`` needs an entry in ``detectors``.
    Channels listed in ``detectors`` but absent from the stream still get dark
    counts. ``keep_probability`` overrides the per-channel thinning
    probability (used when part of the efficiency was applied upstream).
    """
    for ch in np.unique(stream.channels).tolist():
        if ch not in detectors:
            raise UnknownChannel(f"no detector parameters for channel {ch}")
    duration_ps = stream.duration
    chans, stamps = [], []
    for ch in sorted(detectors):
        det = detectors[ch]
        rng = _rng(seed, _DETECT, ch)
        t = stream.channel(ch).astype(np.float64)
        keep = det.quantum_efficiency if keep_probability is None else keep_probability[ch]
        if apply_efficiency and keep < 1:
            t = t[rng.random(len(t)) < keep]
        if det.jitter_sigma > 0:
            t = t + rng.normal(0.0, det.jitter_sigma, len(t))
        t = np.rint(t).astype(np.int64)
        if det.dark_rate > 0:
            dark_rng = _rng(seed, _DARK, ch)
            n_dark = dark_rng.poisson(det.dark_rate * duration_ps / PS_PER_S)
            t = np.concatenate([t, dark_rng.integers(0, duration_ps, n_dark)])
        t = t[(t >= 0) & (t < duration_ps)]
        stamps.append(t)
        chans.append(np.full(len(t), ch, dtype=np.uint8))
    if chans:
        ch_all, ts_all = merge_sorted(np.concatenate(chans), np.concatenate(stamps))
    else:
        ch_all, ts_all = np.empty(0, np.uint8), np.empty(0, np.int64)
    dead = np.zeros(256, dtype=np.int64)
    for ch, det in detectors.items():
        dead[ch] = det.dead_time_ps
    if dead.any() and len(ts_all):
        keep = dead_time_mask(ch_all, ts_all, dead)
        ch_all, ts_all = ch_all[keep], ts_all[keep]
    return TagStream(ch_all, ts_all, duration_ps, dict(detectors))


def simulate_stream(source, filters, channels, detectors, duration, seed):
    """Detected signal/idler stream.

    ``filters`` is a FilterBank, ``channels`` and ``detectors`` map SIGNAL and
    IDLER to ChannelParams / DetectorParams, ``duration`` is in seconds.
    Identical inputs and seed give a bitwise-identical stream.
    """
    if not isinstance(filters, FilterBank):
        filters = FilterBank(*filters)
    duration_ps = _duration_ps(duration)
    survival = {ch: channels[ch].transmission * detectors[ch].quantum_efficiency
                for ch in (SIGNAL, IDLER)}
    photons = _to_stream(_generate(source, filters, survival, duration_ps, seed), duration_ps)
    return detect(photons, {ch: detectors[ch] for ch in (SIGNAL, IDLER)}, seed, apply_efficiency=False)


def hbt_split(stream, channel, seed, outputs=(IDLER1, IDLER2)):
    """Route each tag of ``channel`` to one of two outputs with probability 1/2.

    Other channels pass unchanged. Dead time is not re-applied: in hardware
    the split precedes detection.
    """
    check_stream(stream, [channel])
    rng = _rng(seed, _SPLIT, channel)
    chans = stream.channels.copy()
    mask = chans == channel
    route = rng.random(int(mask.sum())) < 0.5
    chans[mask] = np.where(route, outputs[0], outputs[1]).astype(np.uint8)
    ch, ts = merge_sorted(chans, stream.timestamps)
    detectors = {k: v for k, v in stream.detectors.items() if k != channel}
    return TagStream(ch, ts, stream.duration, detectors)


def asymmetric_detectors(stream, efficiencies, seed):
    """Thin each listed channel by its efficiency (float or DetectorParams)."""
    keep = np.ones(len(stream), dtype=bool)
    for ch in sorted(efficiencies):
        eff = efficiencies[ch]
        eff = eff.quantum_efficiency if isinstance(eff, DetectorParams) else float(eff)
        if not 0 <= eff <= 1:
            raise ValidationError([f"efficiency for channel {ch} must be in [0, 1]"])
        idx = np.nonzero(stream.channels == ch)[0]
        if eff < 1 and len(idx):
            rng = _rng(seed, _THIN, ch)
            keep[idx[rng.random(len(idx)) >= eff]] = False
    return TagStream(stream.channels[keep], stream.timestamps[keep], stream.duration, dict(stream.detectors))


def simulate_hbt_stream(source, filters, channels, detectors, duration, seed):
    """Heralding configuration: signal detector plus a 50:50 split idler arm.

    ``detectors`` maps SIGNAL, IDLER1 and IDLER2 to DetectorParams. The
    efficiency common to both idler detectors is applied before the split
    (thinning commutes with random routing), the remainder per output.
    """
    if not isinstance(filters, FilterBank):
        filters = FilterBank(*filters)
    duration_ps = _duration_ps(duration)
    eta_1, eta_2 = detectors[IDLER1].quantum_efficiency, detectors[IDLER2].quantum_efficiency
    common = max(eta_1, eta_2)
    survival = {SIGNAL: channels[SIGNAL].transmission * detectors[SIGNAL].quantum_efficiency,
                IDLER: channels[IDLER].transmission * common}
    photons = _to_stream(_generate(source, filters, survival, duration_ps, seed), duration_ps)
    split = hbt_split(photons, IDLER, seed)
    keep = {SIGNAL: 1.0,
            IDLER1: eta_1 / common if common > 0 else 0.0,
            IDLER2: eta_2 / common if common > 0 else 0.0}
    return detect(split, {ch: detectors[ch] for ch in (SIGNAL, IDLER1, IDLER2)}, seed, keep_probability=keep)


def poisson_stream(rates, duration, seed):
    """Independent homogeneous Poisson tags, ``rates`` maps channel to Hz."""
    duration_ps = _duration_ps(duration)
    times = {}
    for ch in sorted(rates):
        rng = _rng(seed, _POISSON, ch)
        times[ch] = rng.integers(0, duration_ps, rng.poisson(rates[ch] * duration_ps / PS_PER_S))
    return _to_stream(times, duration_ps)
