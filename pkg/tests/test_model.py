"""Units, domain dataclasses, and their validation rules."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import homsim as hs
from helpers import make_emitter


class TestConversions:
    def test_linewidth_to_t2_regression_values(self):
        # Independently computed from T2 = 2*hbar/Gamma.
        assert hs.t2_from_linewidth(13.5) == pytest.approx(
            97.51288250370371, rel=1e-12
        )
        assert hs.t2_from_linewidth(3.0) == pytest.approx(
            438.8079712666667, rel=1e-12
        )

    def test_linewidth_values_land_in_measured_coherence_windows(self):
        assert 80.0 <= hs.t2_from_linewidth(13.5) <= 120.0
        assert 410.0 <= hs.t2_from_linewidth(3.0) <= 470.0

    @given(st.floats(min_value=1e-3, max_value=1e5))
    def test_conversions_are_exact_inverses(self, gamma_uev):
        t2 = hs.t2_from_linewidth(gamma_uev)
        assert hs.linewidth_from_t2(t2) == pytest.approx(gamma_uev, rel=1e-12)

    @given(st.floats(min_value=1e-3, max_value=1e5))
    def test_inverse_round_trip_from_time_side(self, t2_ps):
        gamma = hs.linewidth_from_t2(t2_ps)
        assert hs.t2_from_linewidth(gamma) == pytest.approx(t2_ps, rel=1e-12)

    def test_detuning_to_angular_is_linear_in_hbar_units(self):
        # 658.2119569 ueV corresponds to exactly 1 rad/ps.
        assert hs.detuning_to_angular(658.2119569) == pytest.approx(1.0, rel=1e-15)
        assert hs.detuning_to_angular(0.0) == 0.0
        assert hs.detuning_to_angular(-658.2119569) == pytest.approx(
            -1.0, rel=1e-15
        )

    def test_nonpositive_linewidth_rejected(self):
        with pytest.raises(hs.ValidationError):
            hs.t2_from_linewidth(0.0)
        with pytest.raises(hs.ValidationError):
            hs.linewidth_from_t2(-1.0)


class TestEmitterSpec:
    def test_coherence_beyond_fourier_limit_rejected(self):
        with pytest.raises(hs.ValidationError):
            make_emitter(t1_fast_ps=600.0, t2_ps=1200.0 + 1e-6)

    def test_fourier_limit_boundary_accepted(self):
        e = make_emitter(t1_fast_ps=600.0, t2_ps=1200.0)
        assert e.pure_dephasing_rate == pytest.approx(0.0, abs=1e-15)

    def test_dephasing_rate_definition(self):
        e = make_emitter(t1_fast_ps=720.0, t2_ps=100.0)
        assert e.pure_dephasing_rate == pytest.approx(
            1.0 / 100.0 - 1.0 / 1440.0, rel=1e-12
        )
        assert e.radiative_rate == pytest.approx(1.0 / 720.0, rel=1e-12)

    @pytest.mark.parametrize(
        "field,value",
        [
            ("t1_fast_ps", 0.0),
            ("t1_slow_ps", -5.0),
            ("t2_ps", 0.0),
            ("slow_fraction", -0.1),
            ("slow_fraction", 1.1),
            ("emission_prob", -0.2),
            ("emission_prob", 1.2),
            ("double_prob", -0.1),
            ("double_prob", 1.5),
            ("blink_on_rate_per_s", -1.0),
            ("blink_off_rate_per_s", -1.0),
            ("spectral_diffusion_sigma_uev", -0.5),
        ],
    )
    def test_out_of_range_fields_rejected(self, field, value):
        with pytest.raises(hs.ValidationError):
            make_emitter(**{field: value})

    def test_validation_is_pure_same_message_every_time(self):
        def grab():
            try:
                make_emitter(t1_fast_ps=100.0, t2_ps=500.0)
            except hs.ValidationError as exc:
                return str(exc)
            return None

        first, second = grab(), grab()
        assert first is not None and first == second


class TestCircuitSpec:
    def test_transmittance_complements_reflectance(self):
        c = hs.CircuitSpec(reflectance=0.48, pol_overlap=0.95)
        assert c.transmittance == pytest.approx(0.52, rel=1e-12)

    @pytest.mark.parametrize("r", [0.0, 1.0, -0.1, 1.1])
    def test_degenerate_reflectance_rejected(self, r):
        with pytest.raises(hs.ValidationError):
            hs.CircuitSpec(reflectance=r, pol_overlap=1.0)

    @pytest.mark.parametrize("pol", [-0.1, 1.0000001])
    def test_overlap_outside_unit_interval_rejected(self, pol):
        with pytest.raises(hs.ValidationError):
            hs.CircuitSpec(reflectance=0.5, pol_overlap=pol)

    def test_arm_transmission_bounds(self):
        with pytest.raises(hs.ValidationError):
            hs.CircuitSpec(
                reflectance=0.5, pol_overlap=1.0, arm_transmission=(1.0, 1.2, 1.0, 1.0)
            )
        with pytest.raises(hs.ValidationError):
            hs.CircuitSpec(
                reflectance=0.5, pol_overlap=1.0, arm_transmission=(1.0, 1.0, 1.0)
            )

    def test_contrast_cap_reflects_classical_ceiling(self):
        c = hs.CircuitSpec(reflectance=0.5, pol_overlap=0.9, classical_visibility=0.98)
        assert c.contrast_cap == pytest.approx(0.98, rel=1e-12)
        c2 = hs.CircuitSpec(reflectance=0.5, pol_overlap=0.9)
        assert c2.contrast_cap == 1.0
        # Both factors multiply into the interference kernel.
        k = hs.kernel_params(
            hs.EmitterSpec(
                energy_uev=0.0,
                t1_fast_ps=600.0,
                t1_slow_ps=12000.0,
                slow_fraction=0.0,
                t2_ps=440.0,
            ),
            hs.EmitterSpec(
                energy_uev=0.0,
                t1_fast_ps=600.0,
                t1_slow_ps=12000.0,
                slow_fraction=0.0,
                t2_ps=440.0,
            ),
            c,
        )
        assert k.overlap == pytest.approx(0.9 * 0.98, rel=1e-12)


class TestDetectorSpec:
    def test_irf_sigma_from_fwhm(self):
        d = hs.DetectorSpec(irf_fwhm_ps=80.0)
        assert d.irf_sigma_ps == pytest.approx(80.0 / 2.3548200450309493, rel=1e-12)

    @pytest.mark.parametrize(
        "kw",
        [
            {"irf_fwhm_ps": -1.0},
            {"dark_rate_cps": -10.0},
            {"efficiency": -0.1},
            {"efficiency": 1.1},
            {"dead_time_ps": -5.0},
        ],
    )
    def test_out_of_range_detector_fields_rejected(self, kw):
        with pytest.raises(hs.ValidationError):
            hs.DetectorSpec(**kw)


class TestPulseTrainSpec:
    def test_period_and_span(self):
        t = hs.PulseTrainSpec(rep_rate_mhz=76.0, n_pulses=1000)
        assert t.period_ps == pytest.approx(1e6 / 76.0, rel=1e-12)
        assert t.span_ps == pytest.approx(1000 * 1e6 / 76.0, rel=1e-12)

    def test_invalid_train_rejected(self):
        with pytest.raises(hs.ValidationError):
            hs.PulseTrainSpec(rep_rate_mhz=0.0, n_pulses=10)
        with pytest.raises(hs.ValidationError):
            hs.PulseTrainSpec(rep_rate_mhz=76.0, n_pulses=-1)

    def test_empty_train_is_a_valid_degenerate_case(self):
        t = hs.PulseTrainSpec(rep_rate_mhz=76.0, n_pulses=0)
        assert t.span_ps == 0.0
