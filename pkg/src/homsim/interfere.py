"""Two-photon interference theory for a pair of independent emitters.

The mutual coherence of two photons detected a time tau apart is modelled
as a damped beat note

    D(tau) = overlap * cos(delta_omega * tau) * exp(-|tau| * (gs1 + gs2))

where gs_i are the emitters' pure dephasing rates and delta_omega their
angular frequency difference. Averaging D over the joint emission-time
distribution of the two exponential wavepackets yields the wavepacket-level
visibility; for identical emitters it reduces to T2 / (2 T1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .model import (
    CircuitSpec,
    ConfigurationError,
    EmitterSpec,
    ValidationError,
    detuning_to_angular,
)


@dataclass(frozen=True)
class InterferenceKernelParams:
    """Rates and overlaps feeding the mutual-coherence kernel.

    gamma1/gamma2 are radiative rates (1/ps), gstar1/gstar2 pure dephasing
    rates (1/ps), delta_rad_ps the angular frequency difference (rad/ps),
    overlap the product of polarization overlap and any classical contrast
    cap, reflectance the coupler same-side coefficient.
    """

    gamma1: float
    gamma2: float
    gstar1: float
    gstar2: float
    delta_rad_ps: float = 0.0
    overlap: float = 1.0
    reflectance: float = 0.5

    def __post_init__(self) -> None:
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ValidationError("radiative rates must be strictly positive")
        if self.gstar1 < 0 or self.gstar2 < 0:
            raise ValidationError("pure dephasing rates must be >= 0")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValidationError("overlap must be in [0, 1]")
        if not 0.0 < self.reflectance < 1.0:
            raise ValidationError("reflectance must be in (0, 1)")


def kernel_params(
    e1: EmitterSpec,
    e2: EmitterSpec,
    circuit: CircuitSpec,
    delta_uev: float | None = None,
) -> InterferenceKernelParams:
    """Build kernel parameters from two emitters and the circuit.

    delta_uev defaults to the emitters' energy difference. The circuit's
    classical_visibility cap multiplies pol_overlap.
    """
    if delta_uev is None:
        delta_uev = e1.energy_uev - e2.energy_uev
    return InterferenceKernelParams(
        gamma1=e1.radiative_rate,
        gamma2=e2.radiative_rate,
        gstar1=e1.pure_dephasing_rate,
        gstar2=e2.pure_dephasing_rate,
        delta_rad_ps=detuning_to_angular(delta_uev),
        overlap=circuit.pol_overlap * circuit.contrast_cap,
        reflectance=circuit.reflectance,
    )


def coherence_kernel(tau_ps, params: InterferenceKernelParams):
    """Mutual coherence D(tau); accepts scalars or arrays, |D| <= overlap."""
    tau = np.asarray(tau_ps, dtype=float)
    a = params.gstar1 + params.gstar2
    out = params.overlap * np.cos(params.delta_rad_ps * tau) * np.exp(-np.abs(tau) * a)
    return out if out.ndim else float(out)


def _check_visibility_inputs(e1: EmitterSpec, e2: EmitterSpec, pol_overlap: float) -> None:
    if not 0.0 <= pol_overlap <= 1.0:
        raise ValidationError("pol_overlap must be in [0, 1]")
    # EmitterSpec already enforces positivity and the Fourier limit.
    assert e1.t1_fast_ps > 0 and e2.t1_fast_ps > 0


def visibility_closed_form(
    e1: EmitterSpec,
    e2: EmitterSpec,
    delta_uev: float = 0.0,
    pol_overlap: float = 1.0,
) -> float:
    """Wavepacket-averaged two-photon interference visibility.

    Evaluates the analytic average of the coherence kernel over the joint
    exponential emission-time distribution of the fast decay components:

        V = pol * g1*g2 * Re[(g1 + g2 + 2A) / ((g1+A)(g2+A)(g1+g2))],
        A = (gs1 + gs2) + i * delta_omega.

    For identical emitters at zero detuning this reduces to T2 / (2 T1).
    """
    _check_visibility_inputs(e1, e2, pol_overlap)
    g1, g2 = e1.radiative_rate, e2.radiative_rate
    a = (e1.pure_dephasing_rate + e2.pure_dephasing_rate) + 1j * detuning_to_angular(delta_uev)
    val = g1 * g2 * (g1 + g2 + 2.0 * a) / ((g1 + a) * (g2 + a) * (g1 + g2))
    return float(pol_overlap * val.real)


def visibility_numeric(
    e1: EmitterSpec,
    e2: EmitterSpec,
    delta_uev: float = 0.0,
    pol_overlap: float = 1.0,
    span_ps: float | None = None,
    step_ps: float | None = None,
) -> float:
    """Visibility by direct 2-D quadrature over the emission-time densities.

    Independent numerical route used to cross-check the closed form:
    V = pol * sum_ij P1(t_i) P2(t_j) D(t_i - t_j) / (sum P1 * sum P2) on a
    uniform grid. The grid must span at least 10x the longer lifetime with a
    step no coarser than min(T1, T2)/50, otherwise a ConfigurationError is
    raised.
    """
    _check_visibility_inputs(e1, e2, pol_overlap)
    t1a, t1b = e1.t1_fast_ps, e2.t1_fast_ps
    max_step = min(t1a, t1b, e1.t2_ps, e2.t2_ps) / 50.0
    min_span = 10.0 * max(t1a, t1b)
    if span_ps is None:
        span_ps = min_span
    if step_ps is None:
        step_ps = max_step
    if step_ps > max_step:
        raise ConfigurationError(
            "quadrature grid too coarse: step %.4g ps exceeds %.4g ps" % (step_ps, max_step)
        )
    if span_ps < min_span:
        raise ConfigurationError(
            "quadrature grid too short: span %.4g ps is below %.4g ps" % (span_ps, min_span)
        )
    n = int(np.ceil(span_ps / step_ps))
    t = np.arange(n) * step_ps
    p1 = np.exp(-t / t1a)
    p2 = np.exp(-t / t1b)
    a = e1.pure_dephasing_rate + e2.pure_dephasing_rate
    lags = np.arange(-(n - 1), n) * step_ps
    kern = np.cos(detuning_to_angular(delta_uev) * lags) * np.exp(-np.abs(lags) * a)
    # s[i] = sum_j p2[j] * kern(t_i - t_j)
    s = fftconvolve(p2, kern)[n - 1 : 2 * n - 1]
    return float(pol_overlap * np.sum(p1 * s) / (np.sum(p1) * np.sum(p2)))


def postselected_visibility(g2_zero_time: float) -> float:
    """Post-selected visibility (0.5 - g) / 0.5 from the zero-delay value.

    Values of g above 0.5 yield a negative result; that is reported as-is
    with a warning rather than clamped.
    """
    if not 0.0 <= g2_zero_time:
        raise ValidationError("g2 at zero delay must be >= 0")
    v = (0.5 - g2_zero_time) / 0.5
    if v < 0.0:
        warnings.warn(
            "post-selected visibility is negative (g = %.4g > 0.5)" % g2_zero_time,
            RuntimeWarning,
            stacklevel=2,
        )
    return v


def envelope_cross_correlation(tau_ps, params: InterferenceKernelParams):
    """Normalized density of the emission-time difference of the two wavepackets."""
    tau = np.asarray(tau_ps, dtype=float)
    g1, g2 = params.gamma1, params.gamma2
    c = g1 * g2 / (g1 + g2)
    w = np.where(tau >= 0.0, c * np.exp(-g1 * tau), c * np.exp(g2 * tau))
    return w if w.ndim else float(w)


def predicted_hom_dip(tau_grid_ps, params: InterferenceKernelParams):
    """Predicted central-peak coincidence density.

    c(tau) = w(tau) * 0.5 * (1 - 4 r t D(tau)) with w the envelope
    cross-correlation; normalized so that the distinguishable case (D = 0)
    integrates to 0.5 when a side peak integrates to 1.
    """
    tau = np.asarray(tau_grid_ps, dtype=float)
    r = params.reflectance
    t = 1.0 - r
    w = envelope_cross_correlation(tau, params)
    return w * 0.5 * (1.0 - 4.0 * r * t * coherence_kernel(tau, params))
