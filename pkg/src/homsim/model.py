"""Physical parameter containers, validation, and unit conversions.

All times are picoseconds, energies are micro-eV offsets from a common
reference, rates are per second unless a suffix says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Reduced Planck constant in ueV*ps (CODATA hbar = 6.582119569e-16 eV s).
HBAR_UEV_PS = 658.2119569

# Gaussian FWHM to sigma: 2*sqrt(2*ln 2).
FWHM_TO_SIGMA = 2.3548200450309493


class ValidationError(ValueError):
    """A parameter set violates its declared invariants."""


class ConfigurationError(ValueError):
    """An analysis was configured inconsistently (grids, windows, combs)."""


class EstimationError(RuntimeError):
    """An estimator could not produce a meaningful value from its input."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def t2_from_linewidth(linewidth_uev: float) -> float:
    """Coherence time (ps) of a Lorentzian line of the given FWHM (ueV)."""
    if not linewidth_uev > 0:
        raise ValidationError("linewidth must be positive, got %r" % (linewidth_uev,))
    return 2.0 * HBAR_UEV_PS / linewidth_uev


def linewidth_from_t2(t2_ps: float) -> float:
    """Lorentzian FWHM (ueV) of an emitter with coherence time t2 (ps)."""
    if not t2_ps > 0:
        raise ValidationError("t2 must be positive, got %r" % (t2_ps,))
    return 2.0 * HBAR_UEV_PS / t2_ps


def detuning_to_angular(delta_uev: float) -> float:
    """Energy detuning (ueV) to angular frequency difference (rad/ps)."""
    return delta_uev / HBAR_UEV_PS


@dataclass(frozen=True)
class EmitterSpec:
    """One solid-state single-photon emitter.

    The decay is a bi-exponential mixture: a fast radiative component
    t1_fast_ps and a slow recapture-fed component t1_slow_ps carrying
    slow_fraction of the emission. t2_ps is the first-order coherence time,
    bounded by the Fourier limit t2 <= 2*t1_fast. double_prob is the
    per-pulse probability of one extra recapture photon drawn from the slow
    decay. Blinking is a two-state telegraph gate with the given switching
    rates (0 disables it).
    """

    energy_uev: float
    t1_fast_ps: float
    t1_slow_ps: float
    slow_fraction: float
    t2_ps: float
    emission_prob: float = 0.5
    double_prob: float = 0.0
    blink_on_rate_per_s: float = 0.0
    blink_off_rate_per_s: float = 0.0
    spectral_diffusion_sigma_uev: float = 0.0

    def __post_init__(self) -> None:
        _require(self.t1_fast_ps > 0, "t1_fast_ps must be strictly positive")
        _require(self.t1_slow_ps > 0, "t1_slow_ps must be strictly positive")
        _require(self.t2_ps > 0, "t2_ps must be strictly positive")
        _require(
            self.t2_ps <= 2.0 * self.t1_fast_ps + 1e-12 * self.t1_fast_ps,
            "t2_ps must not exceed 2*t1_fast_ps (Fourier limit)",
        )
        _require(0.0 <= self.emission_prob <= 1.0, "emission_prob must be in [0, 1]")
        _require(0.0 <= self.double_prob < 1.0, "double_prob must be in [0, 1)")
        _require(0.0 <= self.slow_fraction < 1.0, "slow_fraction must be in [0, 1)")
        _require(self.blink_on_rate_per_s >= 0, "blink_on_rate_per_s must be >= 0")
        _require(self.blink_off_rate_per_s >= 0, "blink_off_rate_per_s must be >= 0")
        _require(
            self.spectral_diffusion_sigma_uev >= 0,
            "spectral_diffusion_sigma_uev must be >= 0",
        )

    @property
    def pure_dephasing_rate(self) -> float:
        """gamma* = 1/t2 - 1/(2 t1_fast), per ps; >= 0 by the Fourier limit."""
        return max(1.0 / self.t2_ps - 1.0 / (2.0 * self.t1_fast_ps), 0.0)

    @property
    def radiative_rate(self) -> float:
        """1/t1_fast, per ps."""
        return 1.0 / self.t1_fast_ps


@dataclass(frozen=True)
class CircuitSpec:
    """The interference circuit: one 2x2 coupler plus arm transmissions.

    reflectance is the same-side intensity coefficient r; transmittance is
    t = 1 - r. arm_transmission holds (input1, input2, output1, output2)
    intensity transmissions. pol_overlap scales the interference term, and
    classical_visibility optionally caps the achievable contrast further
    (None means no cap).
    """

    reflectance: float = 0.5
    pol_overlap: float = 1.0
    arm_transmission: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    classical_visibility: float | None = None

    def __post_init__(self) -> None:
        _require(0.0 < self.reflectance < 1.0, "reflectance must be in (0, 1)")
        _require(0.0 <= self.pol_overlap <= 1.0, "pol_overlap must be in [0, 1]")
        _require(len(self.arm_transmission) == 4, "arm_transmission needs 4 values")
        for v in self.arm_transmission:
            _require(0.0 < v <= 1.0, "arm transmissions must be in (0, 1]")
        if self.classical_visibility is not None:
            _require(
                0.0 <= self.classical_visibility <= 1.0,
                "classical_visibility must be in [0, 1]",
            )

    @property
    def transmittance(self) -> float:
        return 1.0 - self.reflectance

    @property
    def contrast_cap(self) -> float:
        return 1.0 if self.classical_visibility is None else self.classical_visibility


@dataclass(frozen=True)
class DetectorSpec:
    """Detection chain: Gaussian timing response, darks, efficiency, dead time."""

    irf_fwhm_ps: float = 0.0
    dark_rate_cps: float = 0.0
    efficiency: float = 1.0
    dead_time_ps: float = 0.0

    def __post_init__(self) -> None:
        _require(self.irf_fwhm_ps >= 0, "irf_fwhm_ps must be >= 0")
        _require(self.dark_rate_cps >= 0, "dark_rate_cps must be >= 0")
        _require(0.0 < self.efficiency <= 1.0, "efficiency must be in (0, 1]")
        _require(self.dead_time_ps >= 0, "dead_time_ps must be >= 0")

    @property
    def irf_sigma_ps(self) -> float:
        return self.irf_fwhm_ps / FWHM_TO_SIGMA


@dataclass(frozen=True)
class PulseTrainSpec:
    """Shared excitation pulse train.

    source_delay_ps is the intentional inter-source excitation delay applied
    to source 2 (0 for synchronized operation).
    """

    rep_rate_mhz: float
    n_pulses: int
    source_delay_ps: float = 0.0

    def __post_init__(self) -> None:
        _require(self.rep_rate_mhz > 0, "rep_rate_mhz must be strictly positive")
        _require(
            isinstance(self.n_pulses, int) and self.n_pulses >= 0,
            "n_pulses must be a non-negative integer",
        )
        _require(self.source_delay_ps >= 0, "source_delay_ps must be >= 0")
        _require(
            self.source_delay_ps < self.period_ps / 2.0,
            "source_delay_ps must be below half the pulse period",
        )

    @property
    def period_ps(self) -> float:
        return 1.0e6 / self.rep_rate_mhz

    @property
    def span_ps(self) -> float:
        return self.n_pulses * self.period_ps
