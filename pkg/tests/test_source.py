import math

import numpy as np
import pytest

from twinlab.analysis import pair_coincidences
from twinlab.exceptions import NonPositiveDuration, OverlappingFilters, UnknownChannel, ValidationError
from twinlab.source import (IDEAL_DETECTOR, ChannelParams, DetectorParams, FilterBank, FilterSpec, SourceParams,
                            asymmetric_detectors, coherence_sigma, detect, emit_photons, hbt_split,
                            mean_pairs_per_window, pair_rate, poisson_stream, simulate_hbt_stream,
                            simulate_stream)
from twinlab.tags import IDLER, IDLER1, IDLER2, SIGNAL, TagStream

NO_DEAD = DetectorParams(0.7, 30.0, 0.0, 0.0)


def _channels(ts=0.08, ti=0.09):
    return {SIGNAL: ChannelParams(ts), IDLER: ChannelParams(ti)}


def _within(observed, expected, sigma, k=3.0):
    return abs(observed - expected) <= k * sigma


def test_pair_rate_examples():
    assert pair_rate(SourceParams(2.3e5, 1.0), 100.0) == pytest.approx(23e6)
    assert pair_rate(SourceParams(2.3e5, 0.0), 100.0) == 0.0
    assert pair_rate(SourceParams(3e5, 0.18), 1.0) == pytest.approx(54e3)
    # 0.058 MHz/GHz at 0.18 mW is the same number per unit bandwidth
    assert 0.058e6 / 0.18 == pytest.approx(3.2e5, rel=0.01)


def test_coherence_width_is_fourier_limited():
    fwhm = coherence_sigma(100.0) * 2 * math.sqrt(2 * math.log(2))
    assert fwhm == pytest.approx(4.4, rel=1e-12)


def test_mean_pairs_per_window():
    mu = mean_pairs_per_window(SourceParams(2.3e5, 0.385), FilterBank(), 600)
    assert mu == pytest.approx(2.3e5 * 0.385 * 100 * 600e-12)


def test_parameter_invariants():
    with pytest.raises(ValidationError):
        SourceParams(-1.0, 1.0)
    with pytest.raises(ValidationError):
        DetectorParams(1.2, 30.0, 20.0, 100.0)
    with pytest.raises(ValidationError):
        ChannelParams(1.5)
    with pytest.raises(OverlappingFilters) as err:
        FilterBank(FilterSpec(40.0, 100.0), FilterSpec(-40.0, 100.0))
    assert "FilterSpec" in str(err.value)


def test_total_loss_gives_empty_stream():
    det = DetectorParams(0.0, 30.0, 20.0, 0.0)
    s = simulate_stream(SourceParams(2.3e5, 1.0), FilterBank(), _channels(0.0, 0.0), {SIGNAL: det, IDLER: det},
                        0.1, 1)
    assert len(s) == 0


def test_non_positive_duration():
    with pytest.raises(NonPositiveDuration):
        simulate_stream(SourceParams(), FilterBank(), _channels(), {SIGNAL: NO_DEAD, IDLER: NO_DEAD}, 0.0, 1)


def test_determinism_bitwise(pair_setup):
    src, filt, ch, det = pair_setup
    a = simulate_stream(src, filt, ch, det, 0.2, 42)
    b = simulate_stream(src, filt, ch, det, 0.2, 42)
    c = simulate_stream(src, filt, ch, det, 0.2, 43)
    assert a == b
    assert a != c


def test_singles_follow_binomial_thinning():
    # 1e6 expected pairs, eta_s * eta_D = 0.08 * 0.7 = 0.056
    bw = 100.0
    power = 1e6 / (2.3e5 * bw)
    det = DetectorParams(0.7, 30.0, 0.0, 0.0)
    s = simulate_stream(SourceParams(2.3e5, power), FilterBank(), _channels(), {SIGNAL: det, IDLER: det}, 1.0, 7)
    assert _within(s.count(SIGNAL), 56000, math.sqrt(56000))


def test_singles_rate_includes_darks():
    det = DetectorParams(0.7, 30.0, 0.0, 5e4)
    src = SourceParams(2.3e5, 0.1)
    s = simulate_stream(src, FilterBank(), _channels(), {SIGNAL: det, IDLER: det}, 1.0, 11)
    expected = pair_rate(src, 100.0) * 0.09 * 0.7 + 5e4
    assert expected > 1e4
    assert _within(s.count(IDLER), expected, math.sqrt(expected))


def test_poisson_dispersion_of_singles(pair_setup):
    src, filt, ch, det = pair_setup
    s = simulate_stream(src, filt, ch, det, 0.5, 3)
    counts = np.bincount((s.channel(SIGNAL) // (s.duration // 200)).astype(np.int64), minlength=200)[:200]
    ratio = counts.var(ddof=1) / counts.mean()
    assert 0.9 <= ratio <= 1.1


def test_zero_delay_coincidence_ground_truth():
    det = DetectorParams(0.7, 0.0, 0.0, 0.0)
    src = SourceParams(2.3e5, 0.2, pair_coherence_width=0.0)
    s = simulate_stream(src, FilterBank(), _channels(), {SIGNAL: det, IDLER: det}, 1.0, 5)
    n_c = pair_coincidences(s.channel(SIGNAL), s.channel(IDLER), 1)
    expected = pair_rate(src, 100.0) * 0.08 * 0.09 * 0.7 ** 2
    assert _within(n_c, expected, math.sqrt(expected))


def test_dead_time_drops_close_tag():
    det = DetectorParams(1.0, 0.0, 20.0, 0.0)
    s = TagStream(np.array([0, 0, 0], np.uint8), np.array([1000, 6000, 40000], np.int64), 10 ** 6)
    out = detect(s, {SIGNAL: det}, 0)
    np.testing.assert_array_equal(out.channel(SIGNAL), [1000, 40000])


def test_dead_time_invariant_on_outputs(pair_setup):
    src, filt, ch, det = pair_setup
    s = simulate_stream(SourceParams(2.3e5, 2.0), filt, ch, det, 0.2, 9)
    for c in (SIGNAL, IDLER):
        assert np.diff(s.channel(c)).min() >= det[c].dead_time_ps
    assert s.is_sorted()


def test_detect_requires_parameters_for_every_channel():
    s = TagStream(np.array([0, 4], np.uint8), np.array([1, 2], np.int64), 10)
    with pytest.raises(UnknownChannel):
        detect(s, {SIGNAL: IDEAL_DETECTOR}, 0)


def test_segments_are_independent():
    # emission is generated per fixed 0.1 s segment, so a longer run shares its early segments
    src = SourceParams(2.3e5, 0.2)
    short = emit_photons(src, FilterBank(), _channels(), 0.2, 17)
    long = emit_photons(src, FilterBank(), _channels(), 0.3, 17)
    cut = 2 * 10 ** 11 - 10 ** 4
    a = short.timestamps < cut
    b = long.timestamps < cut
    np.testing.assert_array_equal(short.timestamps[a], long.timestamps[b])
    np.testing.assert_array_equal(short.channels[a], long.channels[b])


def test_unmatched_bandwidth_adds_uncorrelated_singles():
    filters = FilterBank(FilterSpec(400.0, 100.0), FilterSpec(-450.0, 100.0))
    assert filters.matched_bandwidth == pytest.approx(50.0)
    det = DetectorParams(1.0, 0.0, 0.0, 0.0)
    src = SourceParams(2.3e5, 0.1, pair_coherence_width=0.0)
    s = simulate_stream(src, filters, _channels(1.0, 1.0), {SIGNAL: det, IDLER: det}, 0.05, 2)
    total = pair_rate(src, 100.0) * 0.05
    pairs = pair_rate(src, 50.0) * 0.05
    assert _within(s.count(SIGNAL), total, math.sqrt(total))
    assert _within(pair_coincidences(s.channel(SIGNAL), s.channel(IDLER), 1), pairs, math.sqrt(pairs))


# ---------------------------------------------------------------- splitter and thinning

def test_hbt_split_conserves_and_halves():
    base = poisson_stream({IDLER: 2e5, SIGNAL: 1e4}, 1.0, 4)
    out = hbt_split(base, IDLER, 8)
    n = base.count(IDLER)
    assert out.count(IDLER1) + out.count(IDLER2) == n
    assert out.count(IDLER) == 0 and out.count(SIGNAL) == base.count(SIGNAL)
    frac = out.count(IDLER1) / n
    assert abs(frac - 0.5) <= 3 / (2 * math.sqrt(n))
    np.testing.assert_array_equal(out.timestamps, base.timestamps)


def test_hbt_split_of_empty_channel():
    s = TagStream(np.array([0], np.uint8), np.array([3], np.int64), 10, n_channels=2)
    out = hbt_split(s, IDLER, 1)
    assert out.count(IDLER1) == 0 and out.count(IDLER2) == 0 and out.count(SIGNAL) == 1


def test_hbt_split_unknown_channel():
    with pytest.raises(UnknownChannel):
        hbt_split(poisson_stream({SIGNAL: 10.0}, 1.0, 1), 7, 1)


def test_asymmetric_detectors_identity_and_binomial():
    base = poisson_stream({SIGNAL: 1e5, IDLER: 1e5}, 1.0, 6)
    assert asymmetric_detectors(base, {SIGNAL: 1.0, IDLER: 1.0}, 1) == base
    out = asymmetric_detectors(base, {SIGNAL: 0.3}, 2)
    n = base.count(SIGNAL)
    assert _within(out.count(SIGNAL), 0.3 * n, math.sqrt(n * 0.3 * 0.7))
    assert out.count(IDLER) == base.count(IDLER)


def test_hbt_rate_asymmetry_follows_detector_efficiencies():
    det = {SIGNAL: DetectorParams(0.3, 30.0, 20.0, 100.0), IDLER1: DetectorParams(0.7, 30.0, 20.0, 100.0),
           IDLER2: DetectorParams(0.7, 30.0, 20.0, 100.0)}
    s = simulate_hbt_stream(SourceParams(2.3e5, 0.385), FilterBank(), _channels(0.085, 0.085), det, 0.2, 12)
    ratio = (s.count(IDLER1) + s.count(IDLER2)) / s.count(SIGNAL)
    assert ratio == pytest.approx(0.7 / 0.3, rel=0.10)


def test_hbt_stream_has_no_idler_channel_left(pair_setup):
    _, filt, ch, _ = pair_setup
    det = {c: DetectorParams(0.7, 30.0, 20.0, 100.0) for c in (SIGNAL, IDLER1, IDLER2)}
    s = simulate_hbt_stream(SourceParams(2.3e5, 0.2), filt, ch, det, 0.05, 1)
    assert s.count(IDLER) == 0 and s.count(IDLER1) > 0 and s.count(IDLER2) > 0
