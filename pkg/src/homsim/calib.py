"""Circuit calibration estimators.

Directional-coupler splitting ratio from two drive experiments, classical
fringe contrast, degree of linear polarization from an analyzer sweep, and
propagation loss from a cut-back intensity series.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fitting import nlls_solve
from .model import ValidationError


@dataclass(frozen=True)
class SplitterMeasurement:
    """Output intensities of the two drive experiments.

    i11/i12: intensities at outputs 1/2 with input 1 driven;
    i21/i22: intensities at outputs 1/2 with input 2 driven.
    Arbitrary but per-experiment-consistent units; the output-coupling
    imbalance cancels in the ratio estimator.
    """

    i11: float
    i12: float
    i21: float
    i22: float

    def __post_init__(self) -> None:
        for name in ("i11", "i12", "i21", "i22"):
            if not getattr(self, name) > 0:
                raise ValidationError("%s must be strictly positive" % name)

    @classmethod
    def from_drive_pairs(cls, bar1: float, cross1: float, bar2: float, cross2: float):
        """Build from per-drive (same-arm, opposite-arm) intensity pairs.

        Drive 1: bar1 = output 1, cross1 = output 2.
        Drive 2: bar2 = output 2, cross2 = output 1.
        """
        return cls(i11=bar1, i12=cross1, i21=cross2, i22=bar2)


def splitting_ratio(m: SplitterMeasurement) -> tuple[float, float]:
    """Coupler splitting ratio (r, t), r + t = 1.

    r/t = sqrt[(i11/i12) * (i22/i21)]; the geometric mean over the two
    drives cancels any fixed per-output collection imbalance.
    """
    ratio = np.sqrt((m.i11 / m.i12) * (m.i22 / m.i21))
    r = ratio / (1.0 + ratio)
    return float(r), float(1.0 - r)


def outcoupling_imbalance(m: SplitterMeasurement) -> float:
    """Diagnostic ratio of the two output-collection efficiencies.

    x = sqrt[(i11/i12) / (i22/i21)]: the factor by which output 1 is
    collected more efficiently than output 2.
    """
    return float(np.sqrt((m.i11 / m.i12) / (m.i22 / m.i21)))


def fringe_visibility(
    intensity: np.ndarray, mode: str = "raw"
) -> tuple[float, float]:
    """Classical fringe contrast (I_max - I_min)/(I_max + I_min).

    mode "raw" uses the exact extrema (right for noiseless traces); mode
    "clipped" takes 0.5%/99.5% percentiles to resist single-sample
    outliers. The error combines the sample spread of the top and bottom
    1% of the trace. A structureless trace returns 0 with a warning.
    Returns (V, V_err).
    """
    y = np.asarray(intensity, dtype=float)
    if y.size < 2:
        raise ValidationError("need at least two intensity samples")
    if np.any(y < 0):
        raise ValidationError("intensities must be >= 0")
    if np.ptp(y) == 0:
        warnings.warn("flat trace: fringe visibility is 0", RuntimeWarning)
        return 0.0, 0.0
    if mode == "raw":
        i_max = float(np.max(y))
        i_min = float(np.min(y))
    elif mode == "clipped":
        i_max = float(np.percentile(y, 99.5))
        i_min = float(np.percentile(y, 0.5))
    else:
        raise ValidationError("mode must be 'raw' or 'clipped'")
    top = y[y >= np.percentile(y, 99.0)]
    bot = y[y <= np.percentile(y, 1.0)]
    s_max = float(np.std(top, ddof=1)) if top.size > 1 else 0.0
    s_min = float(np.std(bot, ddof=1)) if bot.size > 1 else 0.0
    total = i_max + i_min
    v = (i_max - i_min) / total
    dv_dmax = 2.0 * i_min / total**2
    dv_dmin = 2.0 * i_max / total**2
    return float(v), float(np.hypot(dv_dmax * s_max, dv_dmin * s_min))


def _malus_model(theta_rad, p):
    i0, rho, theta0 = p
    return i0 * (1.0 + rho * np.cos(2.0 * (theta_rad - theta0)))


def dolp(
    angles_deg: np.ndarray, intensity: np.ndarray, raw: bool = False
) -> tuple[float, float]:
    """Degree of linear polarization from an analyzer-angle sweep.

    Fits I(theta) = I0*(1 + rho*cos 2(theta - theta0)); DOLP is the fitted
    rho = (I_max - I_min)/(I_max + I_min) of the curve. raw=True skips the
    fit and uses the sample extrema. Returns (dolp, error).
    """
    th = np.asarray(angles_deg, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if th.size != y.size:
        raise ValidationError("angle and intensity arrays must match")
    if th.size < 8:
        raise ValidationError("need >= 8 analyzer angles")
    if np.ptp(th) < 180.0 - 1e-9:
        raise ValidationError("analyzer sweep must span >= 180 degrees")
    if raw:
        i_max, i_min = float(np.max(y)), float(np.min(y))
        if i_max + i_min == 0:
            raise ValidationError("intensities sum to zero")
        return (i_max - i_min) / (i_max + i_min), 0.0
    th_rad = np.deg2rad(th)
    i0_0 = float(np.mean(y))
    if i0_0 <= 0:
        raise ValidationError("mean intensity must be positive")
    rho_0 = float(np.clip(np.ptp(y) / (2.0 * i0_0), 0.0, 1.0))
    theta0_0 = float(th_rad[int(np.argmax(y))])
    res = nlls_solve(
        _malus_model,
        th_rad,
        y,
        (i0_0, rho_0, theta0_0),
        bounds=[(1e-300, np.inf), (0.0, 1.0), (-2.0 * np.pi, 2.0 * np.pi)],
        param_names=("i0", "rho", "theta0"),
    )
    return float(res["rho"]), float(res.uncertainty("rho"))


def fit_loss(
    distance_mm: np.ndarray, intensity: np.ndarray
) -> tuple[float, float]:
    """Propagation loss in dB/mm from intensities at several distances.

    Ordinary least squares of 10*log10(I) against distance; returns the
    slope magnitude and its standard error.
    """
    x = np.asarray(distance_mm, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if x.size != y.size:
        raise ValidationError("distance and intensity arrays must match")
    if x.size < 3:
        raise ValidationError("need >= 3 distances for a loss fit")
    if np.any(y <= 0):
        raise ValidationError("intensities must be strictly positive")
    if np.ptp(x) == 0:
        raise ValidationError("distances must not all coincide")
    db = 10.0 * np.log10(y)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (db - db.mean())) / sxx
    resid = db - (db.mean() + slope * xm)
    dof = x.size - 2
    se = float(np.sqrt((resid @ resid) / dof / sxx)) if dof > 0 else 0.0
    return float(abs(slope)), se
