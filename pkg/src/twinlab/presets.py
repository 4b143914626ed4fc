"""Shipped dispersion presets.

``bulk-fallback`` is a least-squares polynomial fit of the congruent lithium
niobate extraordinary index (Jundt 1997 temperature-dependent Sellmeier).

``calibrated`` adds a small correction to the bulk table,

    a + b*lam + d*lam**2 + c*(T - T_ref)*lam      (lam in um)

whose four coefficients are solved so that the model reproduces the measured
waveguide behaviour: degeneracy of a 780 nm pump at 53 C for a 4.87 um
period, room-temperature SHG at 1553 nm for the same period, a group index of
2.17 at 1560 nm, and a 21 THz SPDC bandwidth at degeneracy for L = 4.8 mm.
The lam-linear and temperature terms only shift Delta k, ``a`` only shifts the
group index, and ``d`` is the one knob that changes group-velocity dispersion.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .dispersion import DispersionModel, group_index
from .exceptions import ValidationError
from .phasematch import (C_NM_THZ, WaveguideSpec, spdc_spectral_density,
                         wavevector_mismatch)

WAVELENGTH_WINDOW = (650.0, 2000.0)
TEMPERATURE_WINDOW = (0.0, 140.0)


def lithium_niobate_extraordinary(wavelength_um, temperature):
    """Congruent LiNbO3 n_e from the Jundt temperature-dependent Sellmeier."""
    lam2 = np.asarray(wavelength_um, float) ** 2
    f = (np.asarray(temperature, float) - 24.5) * (np.asarray(temperature, float) + 570.82)
    n2 = (5.35583 + 4.629e-7 * f
          + (0.100473 + 3.862e-8 * f) / (lam2 - (0.20692 - 0.89e-8 * f) ** 2)
          + (100.0 + 2.657e-5 * f) / (lam2 - 11.34927 ** 2)
          - 1.5334e-2 * lam2)
    return np.sqrt(n2)


def fit_bulk_model(wavelength_range=WAVELENGTH_WINDOW, temperature_range=TEMPERATURE_WINDOW,
                   degree=(4, 2)):
    lam = np.linspace(*wavelength_range, 271) * 1e-3
    temp = np.linspace(*temperature_range, 29)
    L, T = np.meshgrid(lam, temp, indexing="ij")
    vander = npoly.polyvander2d(L.ravel(), T.ravel(), degree)
    coef, *_ = np.linalg.lstsq(vander, lithium_niobate_extraordinary(L, T).ravel(), rcond=None)
    return DispersionModel(coef.reshape(degree[0] + 1, degree[1] + 1),
                           wavelength_range, temperature_range, label="bulk-fallback")


@dataclass(frozen=True)
class CalibrationAnchors:
    pump: float = 780.0                 # nm
    poling_period: float = 4.87         # um
    degeneracy_temperature: float = 53.0
    shg_wavelength: float = 1553.0      # nm, fundamental at room temperature
    room_temperature: float = 25.0
    group_index: float = 2.17
    group_index_wavelength: float = 1560.0
    bandwidth_thz: float = 21.0
    poled_length: float = 4.8           # mm


def _correction(a, b, c, d, t_ref):
    # rows: powers of lam (um); columns: powers of T
    return [[a, 0.0], [b - c * t_ref, c], [d, 0.0]]


def _solve_shift_terms(model, anchors):
    """b, c such that both QPM anchors hold; these terms add -2 pi (b + c (T - T_ref)) to Delta k."""
    target = 2 * np.pi / anchors.poling_period
    t_deg = anchors.degeneracy_temperature
    t_room = anchors.room_temperature
    dk_deg = wavevector_mismatch(model, anchors.pump, 2 * anchors.pump, t_deg)
    dk_room = wavevector_mismatch(model, anchors.shg_wavelength / 2, anchors.shg_wavelength, t_room)
    matrix = 2 * np.pi * np.array([[1.0, t_deg - t_room], [1.0, 0.0]])
    b, c = np.linalg.solve(matrix, [dk_deg - target, dk_room - target])
    return b, c


def _with_dispersion_term(bulk, d, anchors):
    stage = bulk.with_correction(_correction(0.0, 0.0, 0.0, d, 0.0), "calibration-stage")
    b, c = _solve_shift_terms(stage, anchors)
    stage = stage.with_correction(_correction(0.0, b, c, 0.0, anchors.room_temperature), "calibration-stage")
    a = anchors.group_index - group_index(stage, anchors.group_index_wavelength,
                                          anchors.degeneracy_temperature)
    return a, b, c


def _bandwidth(model, anchors):
    wg = WaveguideSpec(anchors.poling_period, anchors.poled_length, max(anchors.poled_length, 5.1), 0.0)
    f0 = C_NM_THZ / (2 * anchors.pump)
    half = 1.5 * anchors.bandwidth_thz
    freq = np.linspace(f0 - half, f0 + half, 1201)
    spec = spdc_spectral_density(model, wg, anchors.pump, anchors.degeneracy_temperature, C_NM_THZ / freq)
    return spec.fwhm_thz


def calibrate(bulk, anchors=CalibrationAnchors(), d_bracket=(0.0, 0.05)):
    """Return (model, coefficients) with the four-term correction solved."""

    def build(d):
        a, b, c = _with_dispersion_term(bulk, d, anchors)
        return bulk.with_correction(_correction(a, b, c, d, anchors.room_temperature), "calibrated"), (a, b, c)

    def residual(d):
        return _bandwidth(build(d)[0], anchors) - anchors.bandwidth_thz

    lo, hi = d_bracket
    if np.sign(residual(lo)) == np.sign(residual(hi)):
        raise ValidationError([f"calibration: bandwidth anchor {anchors.bandwidth_thz} THz not reachable"])
    d = brentq(residual, lo, hi, xtol=1e-12)
    model, (a, b, c) = build(d)
    return model, {"a": a, "b": b, "c": c, "d": d, "t_ref": anchors.room_temperature}


@lru_cache(maxsize=None)
def bulk_preset():
    return fit_bulk_model()


@lru_cache(maxsize=None)
def calibrated_preset():
    return calibrate(bulk_preset())[0]


PRESETS = {
    "bulk-fallback": bulk_preset,
    "calibrated": calibrated_preset,
}


def get_preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValidationError([f"dispersion: unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})"]) from None
