"""scikit-learn style wrappers around the simulation and analysis functions.

Parameters are plain constructor arguments (``get_params`` / ``set_params``
work as usual), fitted state ends in an underscore. Estimators that consume
tag streams take a TagStream, or a list of them, in place of ``X``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .analysis import (HistogramSpec, correlation_histogram, estimate_pairs, heralded_g2,
                       linear_fit, unheralded_g2)
from .source import (ChannelParams, DetectorParams, FilterBank, SourceParams, simulate_hbt_stream,
                     simulate_stream)
from .tags import IDLER, IDLER1, IDLER2, SIGNAL, TagStream


def _streams(X):
    if isinstance(X, TagStream):
        return [X]
    streams = list(X)
    for s in streams:
        if not isinstance(s, TagStream):
            raise TypeError(f"expected TagStream items, got {type(s).__name__}")
    return streams


class CorrelationHistogram(TransformerMixin, BaseEstimator):
    """Cross-correlation histogram of ``channel_b`` relative to ``channel_a``.

    ``fit`` stores the full CorrelationResult; ``transform`` maps each stream
    to its normalized g2 curve.
    """

    def __init__(self, channel_a=SIGNAL, channel_b=IDLER, bin_width=10, half_range=5000, window=600):
        self.channel_a = channel_a
        self.channel_b = channel_b
        self.bin_width = bin_width
        self.half_range = half_range
        self.window = window

    def _spec(self):
        return HistogramSpec(self.bin_width, self.half_range, self.window)

    def fit(self, X, y=None):
        stream = _streams(X)[0]
        self.result_ = correlation_histogram(stream, self.channel_a, self.channel_b, self._spec())
        self.tau_ = self.result_.tau
        self.car_ = self.result_.car
        self.g2_peak_ = self.result_.g2_peak
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        spec = self._spec()
        return np.vstack([correlation_histogram(s, self.channel_a, self.channel_b, spec).g2
                          for s in _streams(X)])


class PairRateEstimator(TransformerMixin, BaseEstimator):
    """Pair rate N_t and channel transmissions from singles and coincidences.

    ``transform`` returns one row ``[N_t, eta_s, eta_i]`` per stream.
    """

    def __init__(self, signal=SIGNAL, idler=IDLER, bin_width=10, half_range=5000, window=600,
                 detector_efficiency=0.7):
        self.signal = signal
        self.idler = idler
        self.bin_width = bin_width
        self.half_range = half_range
        self.window = window
        self.detector_efficiency = detector_efficiency

    def _estimate(self, stream):
        spec = HistogramSpec(self.bin_width, self.half_range, self.window)
        return estimate_pairs(stream, self.signal, self.idler, spec, self.detector_efficiency)

    def fit(self, X, y=None):
        self.estimates_ = [self._estimate(s) for s in _streams(X)]
        est = self.estimates_[0]
        self.n_t_, self.eta_s_, self.eta_i_ = est.n_t, est.eta_s, est.eta_i
        return self

    def transform(self, X):
        check_is_fitted(self, "estimates_")
        return np.array([[e.n_t, e.eta_s, e.eta_i] for e in map(self._estimate, _streams(X))])


class BrightnessRegressor(RegressorMixin, BaseEstimator):
    """Straight-line fit of pair rate against a control variable.

    ``X`` is pump power (mW) or filter bandwidth (GHz), ``y`` the pair rate in
    Hz. ``normalization`` converts the slope to brightness: the filter
    bandwidth for a power sweep, the pump power for a bandwidth sweep.
    """

    def __init__(self, normalization=100.0):
        self.normalization = normalization

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=3, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"BrightnessRegressor expects one feature, got {X.shape[1]}")
        self.fit_ = linear_fit(X[:, 0], y, self.normalization)
        self.coef_ = np.array([self.fit_.slope])
        self.intercept_ = self.fit_.intercept
        self.brightness_ = self.fit_.brightness
        self.brightness_stderr_ = self.fit_.brightness_stderr
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_


class HeraldedG2Estimator(BaseEstimator):
    """Heralded and unheralded autocorrelation of an HBT-split idler arm."""

    def __init__(self, signal=SIGNAL, idler1=IDLER1, idler2=IDLER2, window=600):
        self.signal = signal
        self.idler1 = idler1
        self.idler2 = idler2
        self.window = window

    def fit(self, X, y=None):
        stream = _streams(X)[0]
        self.heralded_ = heralded_g2(stream, self.signal, self.idler1, self.idler2, self.window)
        self.unheralded_ = unheralded_g2(stream, self.idler1, self.idler2, self.window)
        self.g2_h_ = self.heralded_.g2
        self.g2_h_err_ = self.heralded_.g2_err
        return self

    def predict(self, X):
        """Heralded g2 of each stream."""
        return np.array([heralded_g2(s, self.signal, self.idler1, self.idler2, self.window).g2
                         for s in _streams(X)])


class PairSourceSimulator(BaseEstimator):
    """Parametrized twin-photon source and detectors; ``sample`` draws a stream.

    Powers in mW, frequencies in GHz, times in ps (dead time in ns).
    ``hbt=True`` splits the idler arm onto two detectors, with the signal arm
    acting as herald.
    """

    def __init__(self, brightness=2.3e5, pump_power=0.2, filter_offset=400.0, filter_bandwidth=100.0,
                 transmission_signal=0.08, transmission_idler=0.09, quantum_efficiency=0.7,
                 herald_efficiency=0.3, jitter_sigma=30.0, dead_time=20.0, dark_rate=100.0, hbt=False):
        self.brightness = brightness
        self.pump_power = pump_power
        self.filter_offset = filter_offset
        self.filter_bandwidth = filter_bandwidth
        self.transmission_signal = transmission_signal
        self.transmission_idler = transmission_idler
        self.quantum_efficiency = quantum_efficiency
        self.herald_efficiency = herald_efficiency
        self.jitter_sigma = jitter_sigma
        self.dead_time = dead_time
        self.dark_rate = dark_rate
        self.hbt = hbt

    def _detector(self, efficiency):
        return DetectorParams(efficiency, self.jitter_sigma, self.dead_time, self.dark_rate)

    def sample(self, duration, seed):
        source = SourceParams(self.brightness, self.pump_power)
        filters = FilterBank.symmetric(self.filter_offset, self.filter_bandwidth)
        channels = {SIGNAL: ChannelParams(self.transmission_signal), IDLER: ChannelParams(self.transmission_idler)}
        if self.hbt:
            detectors = {SIGNAL: self._detector(self.herald_efficiency),
                         IDLER1: self._detector(self.quantum_efficiency),
                         IDLER2: self._detector(self.quantum_efficiency)}
            return simulate_hbt_stream(source, filters, channels, detectors, duration, seed)
        detectors = {SIGNAL: self._detector(self.quantum_efficiency), IDLER: self._detector(self.quantum_efficiency)}
        return simulate_stream(source, filters, channels, detectors, duration, seed)
