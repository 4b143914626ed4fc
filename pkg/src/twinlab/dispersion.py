"""Effective-index model of the guided TE mode.

The index is a bivariate polynomial in wavelength (micrometres) and
temperature (degrees Celsius). All public entry points take wavelengths in
nanometres and convert once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import OutOfValidityWindow, ValidationError

MAX_WAVELENGTH_DEGREE = 4
MAX_TEMPERATURE_DEGREE = 2

# central-difference step for group index, nm
GROUP_INDEX_STEP = 0.1


@dataclass(frozen=True)
class DispersionModel:
    """n_eff(lambda, T) = sum_ij c[i][j] * lambda_um**i * T**j.

    Parameters
    ----------
    coefficients : nested sequence, shape (<=5, <=3)
        ``coefficients[i][j]`` multiplies ``lambda_um**i * T**j``.
    wavelength_range : (float, float)
        Validity window in nm.
    temperature_range : (float, float)
        Validity window in degrees Celsius.
    label : str
        Provenance, e.g. ``"calibrated"`` or ``"bulk-fallback"``.
    """

    coefficients: tuple
    wavelength_range: tuple
    temperature_range: tuple
    label: str = "custom"
    _c: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        problems = []
        if c.ndim != 2:
            problems.append("DispersionModel: coefficients must be a 2-D table")
        else:
            if c.shape[0] > MAX_WAVELENGTH_DEGREE + 1:
                problems.append(
                    f"DispersionModel: wavelength degree {c.shape[0] - 1} > {MAX_WAVELENGTH_DEGREE}")
            if c.shape[1] > MAX_TEMPERATURE_DEGREE + 1:
                problems.append(
                    f"DispersionModel: temperature degree {c.shape[1] - 1} > {MAX_TEMPERATURE_DEGREE}")
        lo, hi = self.wavelength_range
        tlo, thi = self.temperature_range
        if not 0 < lo < hi:
            problems.append("DispersionModel: wavelength_range must satisfy 0 < min < max")
        if not tlo < thi:
            problems.append("DispersionModel: temperature_range must satisfy min < max")
        if not np.all(np.isfinite(c)):
            problems.append("DispersionModel: coefficients must be finite")
        if problems:
            raise ValidationError(problems)

        object.__setattr__(self, "coefficients", tuple(tuple(float(v) for v in row) for row in c))
        object.__setattr__(self, "wavelength_range", (float(lo), float(hi)))
        object.__setattr__(self, "temperature_range", (float(tlo), float(thi)))
        object.__setattr__(self, "_c", c)

        lg = np.linspace(lo, hi, 64)
        tg = np.linspace(tlo, thi, 16)
        n = self._evaluate(lg[:, None], tg[None, :])
        if not np.all(n > 1):
            raise ValidationError([f"DispersionModel: n_eff <= 1 inside validity window (min {n.min():.4f})"])

    def _evaluate(self, wavelength_nm, temperature):
        lam, t = np.broadcast_arrays(np.asarray(wavelength_nm, float) * 1e-3,
                                     np.asarray(temperature, float))
        return npoly.polyval2d(lam, t, self._c)

    def check_window(self, wavelength_nm, temperature):
        lam = np.asarray(wavelength_nm, float)
        t = np.asarray(temperature, float)
        lo, hi = self.wavelength_range
        tlo, thi = self.temperature_range
        if lam.size and (np.nanmin(lam) < lo or np.nanmax(lam) > hi or np.isnan(lam).any()):
            bad = lam[(lam < lo) | (lam > hi) | np.isnan(lam)].flat[0]
            raise OutOfValidityWindow(
                f"wavelength {bad:g} nm outside validity window [{lo:g}, {hi:g}] nm of model {self.label!r}")
        if t.size and (np.nanmin(t) < tlo or np.nanmax(t) > thi or np.isnan(t).any()):
            bad = t[(t < tlo) | (t > thi) | np.isnan(t)].flat[0]
            raise OutOfValidityWindow(
                f"temperature {bad:g} C outside validity window [{tlo:g}, {thi:g}] C of model {self.label!r}")

    def with_correction(self, coefficients, label):
        """Return a new model whose table is this one plus ``coefficients``."""
        extra = np.atleast_2d(np.asarray(coefficients, float))
        shape = tuple(max(a, b) for a, b in zip(self._c.shape, extra.shape))
        out = np.zeros(shape)
        out[:self._c.shape[0], :self._c.shape[1]] += self._c
        out[:extra.shape[0], :extra.shape[1]] += extra
        return DispersionModel(out, self.wavelength_range, self.temperature_range, label)

    def to_dict(self):
        return {
            "label": self.label,
            "coefficients": [list(row) for row in self.coefficients],
            "wavelength_range_nm": list(self.wavelength_range),
            "temperature_range_c": list(self.temperature_range),
        }


def constant_model(n, wavelength_range=(400.0, 2500.0), temperature_range=(-50.0, 200.0)):
    return DispersionModel([[n]], wavelength_range, temperature_range, label="constant")


def effective_index(model, wavelength, temperature):
    """Effective index at ``wavelength`` (nm) and ``temperature`` (C).

    Raises OutOfValidityWindow instead of extrapolating.
    """
    model.check_window(wavelength, temperature)
    n = model._evaluate(wavelength, temperature)
    return float(n) if n.ndim == 0 else n


def group_index(model, wavelength, temperature):
    """n_g = n - lambda dn/dlambda from a central difference with a 0.1 nm step."""
    lam = np.asarray(wavelength, float)
    h = GROUP_INDEX_STEP
    model.check_window(lam - h, temperature)
    model.check_window(lam + h, temperature)
    n = model._evaluate(lam, temperature)
    dn = (model._evaluate(lam + h, temperature) - model._evaluate(lam - h, temperature)) / (2 * h)
    ng = n - lam * dn
    return float(ng) if ng.ndim == 0 else ng
