"""Statistics recovered from time-tag streams.

Rates are in Hz, delays and windows in integer picoseconds. Coincidence
windows are half-open, -T_w/2 <= t_b - t_a < T_w/2, so their width is exactly
T_w.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._kernels import cross_histogram
from .exceptions import InsufficientPoints, ValidationError, ZeroCoincidences, ZeroDoubles
from .tags import PS_PER_S, check_stream


@dataclass(frozen=True)
class HistogramSpec:
    """bin_width, half_range and coincidence window, all in ps."""

    bin_width: int = 10
    half_range: int = 5000
    window: int = 600

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self):
        out = []
        if not self.bin_width > 0:
            out.append("HistogramSpec: bin_width must be > 0")
        if not self.window > 0:
            out.append("HistogramSpec: window must be > 0")
        if not self.half_range >= self.window / 2:
            out.append("HistogramSpec: half_range must be >= window / 2")
        for name in ("bin_width", "half_range", "window"):
            if int(getattr(self, name)) != getattr(self, name):
                out.append(f"HistogramSpec: {name} must be an integer number of ps")
        return out

    @property
    def half_bins(self):
        return int(self.half_range) // int(self.bin_width)


@dataclass
class CorrelationResult:
    tau: np.ndarray             # bin centres, ps
    g2: np.ndarray              # counts * duration / (N_A N_B bin_width)
    counts: np.ndarray          # raw coincidences per bin
    accidental: float           # accidental counts per bin, side-window estimate
    accidental_source: str      # "side-windows" or "analytic"
    coincidences: int           # raw counts within the window around the peak
    window_bins: int
    car: float                  # (coincidences - accidentals in window) / accidentals in window
    g2_peak: float              # peak bin over the accidental level
    peak_position: float        # ps
    peak_fwhm: float            # ps, after accidental subtraction
    n_a: int
    n_b: int
    duration: int               # ps
    bin_width: int
    window: int

    @property
    def coincidence_rate(self):
        return self.coincidences * PS_PER_S / self.duration

    @property
    def accidental_in_window(self):
        return self.accidental * self.window_bins

    @property
    def analytic_accidental(self):
        """N_A N_B bin_width / duration, the uncorrelated-stream expectation per bin."""
        return self.n_a * self.n_b * self.bin_width / self.duration

    def summary(self):
        out = {k: v for k, v in asdict(self).items() if not isinstance(v, np.ndarray)}
        out["coincidence_rate_hz"] = self.coincidence_rate
        return out


@dataclass
class PairEstimate:
    n_s: float
    n_i: float
    n_c: float
    n_t: float
    eta_s: float
    eta_i: float
    n_s_err: float
    n_i_err: float
    n_c_err: float
    n_t_err: float
    eta_s_err: float
    eta_i_err: float
    # same quantities with the accidental floor removed from N_c
    n_c_corrected: float = float("nan")
    n_t_corrected: float = float("nan")
    car: float = float("nan")
    duration: float = float("nan")

    def summary(self):
        return asdict(self)


@dataclass
class LinearFit:
    """Ordinary least squares y = slope * x + intercept, slope per x unit."""

    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r_squared: float
    residuals: np.ndarray
    brightness: float
    brightness_stderr: float

    def summary(self):
        out = {k: v for k, v in asdict(self).items() if k != "residuals"}
        out["residuals"] = self.residuals.tolist()
        return out


@dataclass
class CarTable:
    n_t: np.ndarray
    car: np.ndarray
    car_err: np.ndarray
    coefficient: float          # c in CAR = c / N_t
    r_squared: float
    exponent: float             # slope of log CAR versus log N_t
    exponent_stderr: float

    def summary(self):
        return {"n_t": self.n_t.tolist(), "car": self.car.tolist(), "car_err": self.car_err.tolist(),
                "coefficient": self.coefficient, "r_squared": self.r_squared,
                "exponent": self.exponent, "exponent_stderr": self.exponent_stderr}


@dataclass
class HeraldedResult:
    g2: float
    g2_err: float
    triples: float              # C_s,i1,i2 in Hz
    doubles_1: float            # C_s,i1 in Hz
    doubles_2: float            # C_s,i2 in Hz
    n_s: float                  # herald rate, Hz
    counts: dict = field(default_factory=dict)

    def summary(self):
        return asdict(self)


@dataclass
class UnheraldedResult:
    g2: float
    g2_err: float
    coincidences: float         # C_i1,i2 in Hz
    n_1: float
    n_2: float
    counts: dict = field(default_factory=dict)

    def summary(self):
        return asdict(self)


def singles_rates(stream, channels=None):
    """Counts per second on every channel (known-but-empty channels give 0)."""
    ids = stream.channel_ids if channels is None else channels
    return {ch: stream.count(ch) * PS_PER_S / stream.duration for ch in ids}


def _bin_delay(delay, bin_width, half_bins):
    """Bin index for integer delays; -1 outside the histogram."""
    delay = np.asarray(delay, dtype=np.int64)
    edge = (2 * half_bins + 1) * bin_width
    inside = (2 * delay >= -edge) & (2 * delay < edge)
    return np.where(inside, (2 * delay + bin_width) // (2 * bin_width) + half_bins, -1)


def brute_force_histogram(ta, tb, bin_width, half_bins):
    """All-pairs reference histogram, O(len(ta) * len(tb))."""
    delays = (np.asarray(tb, np.int64)[None, :] - np.asarray(ta, np.int64)[:, None]).ravel()
    idx = _bin_delay(delays, bin_width, half_bins)
    return np.bincount(idx[idx >= 0], minlength=2 * half_bins + 1).astype(np.int64)


def delay_histogram(ta, tb, bin_width, half_bins):
    return cross_histogram(np.ascontiguousarray(ta, np.int64), np.ascontiguousarray(tb, np.int64),
                           int(bin_width), int(half_bins))


def _peak_fwhm(tau, excess, peak):
    half = excess[peak] / 2
    if not half > 0:
        return float("nan")
    left = peak
    while left > 0 and excess[left] >= half:
        left -= 1
    right = peak
    while right < len(excess) - 1 and excess[right] >= half:
        right += 1
    if excess[left] >= half or excess[right] >= half:
        return float("nan")

    def cross(i_out, i_in):
        y0, y1 = excess[i_out], excess[i_in]
        return tau[i_out] + (half - y0) / (y1 - y0) * (tau[i_in] - tau[i_out])

    return float(cross(right, right - 1) - cross(left, left + 1))


def correlation_histogram(stream, channel_a, channel_b, spec=HistogramSpec()):
    """g2(tau) of tau = t_b - t_a, with coincidence count, CAR and peak shape."""
    check_stream(stream, [channel_a, channel_b], require_events=True)
    ta = stream.channel(channel_a)
    tb = stream.channel(channel_b)
    w = int(spec.bin_width)
    k = spec.half_bins
    counts = delay_histogram(ta, tb, w, k)
    tau = (np.arange(2 * k + 1) - k) * float(w)
    duration = stream.duration
    n_a, n_b = len(ta), len(tb)
    g2 = counts * duration / (n_a * n_b * w)

    peak = int(np.argmax(counts))
    tau_peak = tau[peak]
    offset = np.abs(tau - tau_peak)
    in_window = offset <= spec.window / 2
    side = (offset >= 3 * spec.window) & (offset <= 10 * spec.window)
    if side.any():
        accidental = float(counts[side].mean())
        source = "side-windows"
    else:
        accidental = n_a * n_b * w / duration
        source = "analytic"
    window_bins = int(in_window.sum())
    n_c = int(counts[in_window].sum())
    acc_window = accidental * window_bins
    car = (n_c - acc_window) / acc_window if acc_window > 0 else math.inf
    g2_peak = float(counts[peak] / accidental) if accidental > 0 else math.inf
    fwhm = _peak_fwhm(tau, counts - accidental, peak)
    return CorrelationResult(tau, g2, counts, accidental, source, n_c, window_bins, car, g2_peak,
                             float(tau_peak), fwhm, n_a, n_b, duration, w, int(spec.window))


def _efficiency(detector_efficiency, channel):
    if isinstance(detector_efficiency, dict):
        eff = detector_efficiency[channel]
    else:
        eff = detector_efficiency
    return getattr(eff, "quantum_efficiency", eff)


def pair_estimate_from_counts(count_s, count_i, count_c, duration_s, eta_d_s, eta_d_i,
                              count_c_corrected=None, car=float("nan")):
    """N_t = N_s N_i / N_c and eta_k = N_k / (eta_D N_t), with Poisson errors."""
    if count_c <= 0:
        raise ZeroCoincidences("no coincidences in the window; N_t is undefined")
    n_s, n_i, n_c = count_s / duration_s, count_i / duration_s, count_c / duration_s
    n_t = n_s * n_i / n_c
    eta_s = n_s / (eta_d_s * n_t)
    eta_i = n_i / (eta_d_i * n_t)
    inv = [1 / c if c > 0 else math.inf for c in (count_s, count_i, count_c)]
    n_t_err = n_t * math.sqrt(sum(inv))
    # eta_s = N_c / (eta_D N_i) and symmetrically
    eta_s_err = eta_s * math.sqrt(inv[2] + inv[1])
    eta_i_err = eta_i * math.sqrt(inv[2] + inv[0])
    if count_c_corrected is not None and count_c_corrected > 0:
        n_c_corr = count_c_corrected / duration_s
        n_t_corr = n_s * n_i / n_c_corr
    else:
        n_c_corr = n_t_corr = float("nan")
    return PairEstimate(n_s, n_i, n_c, n_t, eta_s, eta_i,
                        math.sqrt(count_s) / duration_s, math.sqrt(count_i) / duration_s,
                        math.sqrt(count_c) / duration_s, n_t_err, eta_s_err, eta_i_err,
                        n_c_corr, n_t_corr, car, duration_s)


def estimate_pairs(stream, signal, idler, spec=HistogramSpec(), detector_efficiency=0.7, correlation=None):
    """Internal pair rate and channel transmissions from one stream.

    ``detector_efficiency`` is a float, a ``{channel: efficiency}`` dict, or
    a dict of DetectorParams. Pass a precomputed ``correlation`` to avoid
    recomputing the histogram.
    """
    corr = correlation if correlation is not None else correlation_histogram(stream, signal, idler, spec)
    corrected = corr.coincidences - corr.accidental_in_window
    return pair_estimate_from_counts(corr.n_a, corr.n_b, corr.coincidences, stream.duration_s,
                                     _efficiency(detector_efficiency, signal),
                                     _efficiency(detector_efficiency, idler),
                                     count_c_corrected=corrected, car=corr.car)


def linear_fit(x, y, normalization):
    """OLS line with intercept; brightness = slope / normalization."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 3:
        raise InsufficientPoints(f"need at least 3 points, got {len(x)}")
    if np.ptp(x) == 0:
        raise InsufficientPoints("all points share the same abscissa; the fit is degenerate")
    res = stats.linregress(x, y)
    fitted = res.intercept + res.slope * x
    residuals = y - fitted
    r2 = res.rvalue ** 2 if np.ptp(y) > 0 else 1.0
    return LinearFit(float(res.slope), float(res.intercept), float(res.stderr),
                     float(res.intercept_stderr), float(r2), residuals,
                     float(res.slope / normalization), float(res.stderr / normalization))


def _pair_rates(results):
    xs, ys = [], []
    for x, est in results:
        xs.append(x)
        ys.append(est.n_t if isinstance(est, PairEstimate) else float(est))
    return xs, ys


def power_sweep_brightness(results, filter_bandwidth):
    """Fit N_t versus pump power (mW); slope in Hz/mW, brightness in pairs/s/mW/GHz.

    ``results`` holds (power, PairEstimate or N_t) pairs.
    """
    return linear_fit(*_pair_rates(results), filter_bandwidth)


def bandwidth_sweep_brightness(results, pump_power):
    """Fit N_t versus filter bandwidth (GHz); slope in Hz/GHz, brightness = slope / power."""
    return linear_fit(*_pair_rates(results), pump_power)


def fit_car_scaling(n_t, car, car_err=None):
    n_t = np.asarray(n_t, float)
    car = np.asarray(car, float)
    if len(n_t) < 2:
        raise InsufficientPoints("need at least 2 points for the CAR scaling fit")
    inv = 1.0 / n_t
    coefficient = float(np.sum(car * inv) / np.sum(inv * inv))
    model = coefficient * inv
    ss_res = float(np.sum((car - model) ** 2))
    ss_tot = float(np.sum((car - car.mean()) ** 2))
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if len(n_t) >= 3 and np.all(car > 0):
        res = stats.linregress(np.log(n_t), np.log(car))
        exponent, exponent_err = float(res.slope), float(res.stderr)
    elif np.all(car > 0):
        exponent = float(np.diff(np.log(car))[0] / np.diff(np.log(n_t))[0])
        exponent_err = float("nan")
    else:
        exponent = exponent_err = float("nan")
    if car_err is None:
        car_err = np.full(len(car), np.nan)
    return CarTable(n_t, car, np.asarray(car_err, float), coefficient, r2, exponent, exponent_err)


def car_error(corr):
    """Poisson error of the window CAR from window and side-window counts."""
    acc = corr.accidental_in_window
    if not acc > 0:
        return float("nan")
    n_c = corr.coincidences
    rel_acc = 0.0
    if corr.accidental_source == "side-windows":
        side_total = corr.accidental * _side_bin_count(corr)
        rel_acc = 1 / math.sqrt(side_total)
    return math.sqrt(n_c / acc ** 2 + ((n_c / acc) * rel_acc) ** 2)


def _side_bin_count(corr):
    offset = np.abs(corr.tau - corr.peak_position)
    return int(np.count_nonzero((offset >= 3 * corr.window) & (offset <= 10 * corr.window)))


def car_vs_rate(streams, signal, idler, spec=HistogramSpec(), detector_efficiency=0.7):
    """(N_t, CAR) for each stream plus the CAR = c / N_t fit."""
    n_t, car, err = [], [], []
    for stream in streams:
        corr = correlation_histogram(stream, signal, idler, spec)
        est = estimate_pairs(stream, signal, idler, spec, detector_efficiency, correlation=corr)
        n_t.append(est.n_t)
        car.append(corr.car)
        err.append(car_error(corr))
    return fit_car_scaling(n_t, car, err)


def _has_partner(anchor, other, half_window_lo, half_window_hi):
    lo = np.searchsorted(other, anchor - half_window_lo, side="left")
    hi = np.searchsorted(other, anchor + half_window_hi, side="left")
    return hi > lo


def _window_halves(window):
    window = int(window)
    if window <= 0:
        raise ValidationError(["coincidence window must be > 0 ps"])
    lo = window // 2
    return lo, window - lo


def heralded_g2(stream, signal, idler1, idler2, window=600):
    """Heralded autocorrelation C_s,i1,i2 N_s / (C_s,i1 C_s,i2).

    Signal-anchored: each signal tag opens [t_s - T_w/2, t_s + T_w/2) on both
    idler arms; several idler tags in one window count once.
    """
    if len({signal, idler1, idler2}) != 3:
        raise ValidationError(["heralded_g2 needs three distinct channels"])
    check_stream(stream, [signal, idler1, idler2])
    lo, hi = _window_halves(window)
    ts = stream.channel(signal)
    has1 = _has_partner(ts, stream.channel(idler1), lo, hi)
    has2 = _has_partner(ts, stream.channel(idler2), lo, hi)
    c1 = int(has1.sum())
    c2 = int(has2.sum())
    c12 = int((has1 & has2).sum())
    n = len(ts)
    dur = stream.duration_s
    if c1 == 0 or c2 == 0:
        raise ZeroDoubles("no signal-idler coincidences on at least one arm; g2_H undefined")
    g2 = c12 * n / (c1 * c2)
    if c12 > 0:
        err = g2 * math.sqrt(1 / c12 + 1 / c1 + 1 / c2 + 1 / n)
    else:
        # one-count upper scale for an empty numerator
        err = n / (c1 * c2)
    return HeraldedResult(g2, err, c12 / dur, c1 / dur, c2 / dur, n / dur,
                          {"triples": c12, "doubles_1": c1, "doubles_2": c2, "heralds": n})


def pair_coincidences(ta, tb, window):
    """Number of (a, b) pairs with -T_w/2 <= t_b - t_a < T_w/2."""
    lo, hi = _window_halves(window)
    left = np.searchsorted(tb, ta - lo, side="left")
    right = np.searchsorted(tb, ta + hi, side="left")
    return int(np.sum(right - left))


def unheralded_g2(stream, idler1, idler2, window=600):
    """C_i1,i2 duration / (N_i1 N_i2 T_w); 1 for Poissonian light."""
    check_stream(stream, [idler1, idler2], require_events=True)
    t1 = stream.channel(idler1)
    t2 = stream.channel(idler2)
    c = pair_coincidences(t1, t2, window)
    n1, n2 = len(t1), len(t2)
    expected = n1 * n2 * int(window) / stream.duration
    g2 = c / expected
    err = g2 * math.sqrt(1 / c + 1 / n1 + 1 / n2) if c > 0 else 1 / expected
    dur = stream.duration_s
    return UnheraldedResult(g2, err, c / dur, n1 / dur, n2 / dur,
                            {"coincidences": c, "n_1": n1, "n_2": n2})
