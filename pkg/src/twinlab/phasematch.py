"""Quasi-phase-matching: mismatch, SHG and SPDC spectra, tuning curves, solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import effective_index, group_index
from .exceptions import (NonPositiveMismatch, NoPhaseMatch, NoRootInRange,
                         OutOfValidityWindow, ValidationError)

# speed of light in nm * THz
C_NM_THZ = 299792.458

# half-maximum point of sinc^2
SINC2_HALF_MAX_X = 1.3915573782515103

WAVELENGTH_TOL_NM = 1e-4
TEMPERATURE_TOL_C = 1e-2


@dataclass(frozen=True)
class WaveguideSpec:
    """Poled waveguide geometry.

    poling_period is in micrometres, both lengths in millimetres.
    """

    poling_period: float = 4.87
    poled_length: float = 4.8
    physical_length: float = 5.1
    facet_reflectivity: float = 0.14

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationError(problems)

    def violations(self):
        out = []
        if not self.poling_period > 0:
            out.append("WaveguideSpec: poling_period must be > 0")
        if not 0 < self.poled_length <= self.physical_length:
            out.append("WaveguideSpec: require 0 < poled_length <= physical_length")
        if not 0 <= self.facet_reflectivity < 1:
            out.append("WaveguideSpec: require 0 <= facet_reflectivity < 1")
        return out

    @property
    def fringe_visibility(self):
        r = self.facet_reflectivity
        return 2 * r / (1 + r * r)


@dataclass(frozen=True)
class PhaseMatchPoint:
    pump: float
    signal: float
    idler: float
    temperature: float
    mismatch: float
    efficiency: float
    status: str = "branch"


@dataclass
class Spectrum:
    """Sampled spectrum; ``value`` is normalized to a peak of 1."""

    wavelength: np.ndarray
    value: np.ndarray
    temperature: float
    mismatch: np.ndarray
    fwhm_thz: float = float("nan")
    visibility: float = 0.0

    def rows(self):
        return list(zip(self.wavelength.tolist(), self.value.tolist(), self.mismatch.tolist()))


@dataclass
class TuningCurve:
    pump: float
    points: list

    @property
    def temperature(self):
        return np.array([p.temperature for p in self.points])

    @property
    def signal(self):
        return np.array([p.signal for p in self.points])

    @property
    def idler(self):
        return np.array([p.idler for p in self.points])

    @property
    def status(self):
        return [p.status for p in self.points]


def idler_wavelength(pump, signal):
    """Idler from energy conservation, 1/pump = 1/signal + 1/idler (all nm)."""
    pump = np.asarray(pump, float)
    signal = np.asarray(signal, float)
    with np.errstate(divide="ignore"):
        idler = 1.0 / (1.0 / pump - 1.0 / signal)
    return float(idler) if idler.ndim == 0 else idler


def wavevector(model, wavelength, temperature):
    """k = 2 pi n / lambda in rad/um."""
    lam_um = np.asarray(wavelength, float) * 1e-3
    return 2 * np.pi * effective_index(model, wavelength, temperature) / lam_um


def wavevector_mismatch(model, pump, signal, temperature):
    """Delta k = k_p - k_s - k_i in rad/um."""
    idler = idler_wavelength(pump, signal)
    if np.any(np.asarray(idler) <= 0):
        raise OutOfValidityWindow("signal wavelength must exceed the pump wavelength")
    return (wavevector(model, pump, temperature) - wavevector(model, signal, temperature)
            - wavevector(model, idler, temperature))


def qpm_mismatch(model, waveguide, pump, signal, temperature):
    """Dimensionless mismatch x = (Delta k - 2 pi / period) * L / 2.

    Wavelengths in nm, temperature in C. Vectorizes over any argument.
    """
    dk = wavevector_mismatch(model, pump, signal, temperature)
    x = (dk - 2 * np.pi / waveguide.poling_period) * waveguide.poled_length * 1e3 / 2
    return float(x) if np.ndim(x) == 0 else x


def pm_efficiency(x):
    """sinc^2(x) with sinc(x) = sin(x)/x and sinc(0) = 1."""
    s = np.sinc(np.asarray(x, float) / np.pi)
    out = s * s
    return float(out) if out.ndim == 0 else out


def shg_spectrum(model, waveguide, wavelengths, temperature, with_fringes=True):
    """Relative second-harmonic power versus fundamental wavelength (nm).

    With fringes, the sinc^2 envelope is multiplied by the weak-etalon
    modulation 1 + V cos(4 pi n L_phys / lambda), V = 2R / (1 + R^2). The
    round-trip phase uses the phase index so that the local fringe period is
    lambda^2 / (2 n_g L_phys).
    """
    lam = np.asarray(wavelengths, float)
    x = qpm_mismatch(model, waveguide, lam / 2, lam, temperature)
    power = np.atleast_1d(pm_efficiency(x))
    visibility = 0.0
    if with_fringes and waveguide.facet_reflectivity > 0:
        visibility = waveguide.fringe_visibility
        n = effective_index(model, lam, temperature)
        phase = 4 * np.pi * n * (waveguide.physical_length * 1e6) / lam
        power = power * (1 + visibility * np.cos(phase))
    peak = power.max()
    if peak > 0:
        power = power / peak
    return Spectrum(lam, power, float(temperature), np.atleast_1d(x), visibility=visibility)


def fringe_spacing(spectrum, center=None, span=1.0):
    """Mean spacing (nm) of adjacent local maxima within +-span/2 of center."""
    lam = spectrum.wavelength
    v = spectrum.value
    interior = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])
    idx = np.nonzero(interior)[0] + 1
    if center is not None:
        idx = idx[np.abs(lam[idx] - center) <= span / 2]
    if len(idx) < 2:
        return float("nan")
    # parabolic refinement of each maximum
    y0, y1, y2 = v[idx - 1], v[idx], v[idx + 1]
    denom = y0 - 2 * y1 + y2
    step = lam[1] - lam[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom != 0, 0.5 * (y0 - y2) / denom, 0.0)
    peaks = lam[idx] + shift * step
    return float(np.mean(np.diff(peaks)))


def expected_fringe_spacing(model, waveguide, wavelength, temperature):
    """Free spectral range lambda^2 / (2 n_g L_phys) in nm."""
    ng = group_index(model, wavelength, temperature)
    return wavelength ** 2 / (2 * ng * waveguide.physical_length * 1e6)


def _spdc_density_at_frequency(model, waveguide, pump, temperature, freq_thz):
    return pm_efficiency(qpm_mismatch(model, waveguide, pump, C_NM_THZ / freq_thz, temperature))


def spdc_spectral_density(model, waveguide, pump, temperature, signal_wavelengths):
    """sinc^2(x) versus signal wavelength, normalized to its sampled peak.

    The returned spectrum carries ``fwhm_thz``, the full width at half maximum
    in signal frequency, located on the grid and refined by root finding.
    """
    lam = np.asarray(signal_wavelengths, float)
    x = np.atleast_1d(qpm_mismatch(model, waveguide, pump, lam, temperature))
    density = np.atleast_1d(pm_efficiency(x))
    peak = density.max()
    if peak > 0:
        density = density / peak
    fwhm = _fwhm_thz(model, waveguide, pump, temperature, lam, density, peak)
    return Spectrum(lam, density, float(temperature), x, fwhm_thz=fwhm)


def _fwhm_thz(model, waveguide, pump, temperature, lam, density, peak):
    if peak <= 0 or len(lam) < 3:
        return float("nan")
    freq = C_NM_THZ / lam
    order = np.argsort(freq)
    freq, density = freq[order], density[order]
    above = np.nonzero(density >= 0.5)[0]
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == len(freq) - 1:
        return float("nan")

    def g(f):
        return _spdc_density_at_frequency(model, waveguide, pump, temperature, f) - 0.5 * peak

    f_lo = brentq(g, freq[lo - 1], freq[lo], xtol=1e-9)
    f_hi = brentq(g, freq[hi], freq[hi + 1], xtol=1e-9)
    return float(f_hi - f_lo)


def find_qpm_period(model, pump, signal, temperature):
    """Poling period (um) that zeroes the mismatch: 2 pi / Delta k."""
    dk = float(wavevector_mismatch(model, pump, signal, temperature))
    if not dk > 0:
        raise NonPositiveMismatch(f"Delta k = {dk:g} rad/um is not positive; no QPM period exists")
    return 2 * np.pi / dk


def find_degeneracy_temperature(model, waveguide, pump, temperature_range=None, samples=201):
    """Temperature (C) where x(signal = idler = 2 * pump) = 0.

    Scans the range for a sign change and then refines with a bracketed,
    derivative-free root finder until |x| < 1e-6.
    """
    tlo, thi = temperature_range if temperature_range is not None else model.temperature_range
    degenerate = 2.0 * pump
    grid = np.linspace(tlo, thi, samples)
    x = qpm_mismatch(model, waveguide, pump, degenerate, grid)
    exact = np.nonzero(x == 0)[0]
    if len(exact):
        return float(grid[exact[0]])
    flips = np.nonzero(np.signbit(x[:-1]) != np.signbit(x[1:]))[0]
    if not len(flips):
        raise NoRootInRange(
            f"x(2*pump) keeps sign {np.sign(x[0]):+.0f} over [{tlo:g}, {thi:g}] C; no degeneracy temperature")
    i = flips[0]

    def f(t):
        return qpm_mismatch(model, waveguide, pump, degenerate, t)

    return float(brentq(f, grid[i], grid[i + 1], xtol=1e-10, rtol=4 * np.finfo(float).eps))


def phase_match_point(model, waveguide, pump, signal, temperature, status="branch"):
    idler = idler_wavelength(pump, signal)
    x = qpm_mismatch(model, waveguide, pump, signal, temperature)
    return PhaseMatchPoint(float(pump), float(signal), float(idler), float(temperature),
                           float(x), pm_efficiency(x), status)


def signal_wavelength(model, waveguide, pump, temperature, samples=2001):
    """Phase-matched signal wavelength on the branch at or below degeneracy.

    Returns a PhaseMatchPoint whose ``status`` is ``"branch"`` for a
    non-degenerate root, ``"degenerate"`` when the roots have merged at
    2 * pump, and ``"no-branch"`` when the degenerate point is the closest
    approach to phase matching. Raises NoPhaseMatch when a branch should exist
    but its root lies beyond the validity window.
    """
    degenerate = 2.0 * pump
    lam_lo, lam_hi = model.wavelength_range
    # idler = 1 / (1/pump - 1/signal) must stay below the window maximum
    lowest = max(lam_lo, 1.0 / (1.0 / pump - 1.0 / lam_hi))
    if lowest >= degenerate:
        raise NoPhaseMatch(f"no signal wavelengths available below degeneracy at T = {temperature:g} C")
    grid = np.linspace(lowest, degenerate, samples)
    x = qpm_mismatch(model, waveguide, pump, grid, temperature)
    if abs(x[-1]) < 1e-9:
        return phase_match_point(model, waveguide, pump, degenerate, temperature, "degenerate")
    flips = np.nonzero(np.signbit(x[:-1]) != np.signbit(x[1:]))[0]
    if len(flips):
        i = flips[-1]

        def f(s):
            return qpm_mismatch(model, waveguide, pump, s, temperature)

        root = brentq(f, grid[i], grid[i + 1], xtol=WAVELENGTH_TOL_NM)
        status = "degenerate" if degenerate - root < 2 * WAVELENGTH_TOL_NM else "branch"
        if status == "degenerate":
            root = degenerate
        return phase_match_point(model, waveguide, pump, root, temperature, status)
    if abs(x[-1]) <= abs(x[0]):
        return phase_match_point(model, waveguide, pump, degenerate, temperature, "no-branch")
    raise NoPhaseMatch(f"no phase-matched signal in [{lowest:.1f}, {degenerate:.1f}] nm at T = {temperature:g} C")


def tuning_curve(model, waveguide, pump, temperatures):
    """Signal and idler wavelengths versus temperature.

    Temperatures on the side of degeneracy without a real non-degenerate
    solution report the degenerate point with status ``"no-branch"``.
    """
    temps = np.atleast_1d(np.asarray(temperatures, float))
    model.check_window(2.0 * pump, temps)
    return TuningCurve(float(pump), [signal_wavelength(model, waveguide, pump, t) for t in temps])
