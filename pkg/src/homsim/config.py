"""Scenario configuration: strict JSON schema, round-trip, digest.

Every physics parameter must be given explicitly (no silent defaults);
only the analysis block has defaults. Unknown keys are rejected with the
full path to the offending key.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .model import (
    CircuitSpec,
    ConfigurationError,
    DetectorSpec,
    EmitterSpec,
    PulseTrainSpec,
)


@dataclass(frozen=True)
class AnalysisSpec:
    """Histogramming and peak-integration settings for analyze-hom."""

    bin_width_ps: float = 10.0
    window_ps: float = 80000.0
    delta_t_ps: float = 3000.0
    n_side: int = 6
    background_correction: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    emitter1: EmitterSpec
    emitter2: EmitterSpec
    circuit: CircuitSpec
    detector: DetectorSpec
    train: PulseTrainSpec
    seed: int
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)


def _expect_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigurationError("%s: expected an object" % path)
    return obj


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError("%s: expected a number" % path)
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError("%s: expected an integer" % path)
    return int(value)


def _boolean(value, path):
    if not isinstance(value, bool):
        raise ConfigurationError("%s: expected true/false" % path)
    return value


def _take_fields(obj: dict, path: str, required: dict, optional: dict) -> dict:
    out = {}
    for key in obj:
        if key not in required and key not in optional:
            raise ConfigurationError("%s.%s: unknown key" % (path, key))
    for key, cast in required.items():
        if key not in obj:
            raise ConfigurationError("%s.%s: missing required key" % (path, key))
        out[key] = cast(obj[key], "%s.%s" % (path, key))
    for key, cast in optional.items():
        if key in obj:
            out[key] = cast(obj[key], "%s.%s" % (path, key))
    return out


def _parse_emitter(obj, path) -> EmitterSpec:
    fields = _take_fields(
        _expect_mapping(obj, path),
        path,
        required={
            "energy_uev": _number,
            "t1_fast_ps": _number,
            "t1_slow_ps": _number,
            "slow_fraction": _number,
            "t2_ps": _number,
            "emission_prob": _number,
            "double_prob": _number,
            "blink_on_rate_per_s": _number,
            "blink_off_rate_per_s": _number,
            "spectral_diffusion_sigma_uev": _number,
        },
        optional={},
    )
    return EmitterSpec(**fields)


def _arm_transmission(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigurationError("%s: expected a list of four numbers" % path)
    return tuple(_number(v, "%s[%d]" % (path, i)) for i, v in enumerate(value))


def _optional_number(value, path):
    if value is None:
        return None
    return _number(value, path)


def _parse_circuit(obj, path) -> CircuitSpec:
    fields = _take_fields(
        _expect_mapping(obj, path),
        path,
        required={
            "reflectance": _number,
            "pol_overlap": _number,
            "arm_transmission": _arm_transmission,
            "classical_visibility": _optional_number,
        },
        optional={},
    )
    return CircuitSpec(**fields)


def _parse_detector(obj, path) -> DetectorSpec:
    fields = _take_fields(
        _expect_mapping(obj, path),
        path,
        required={
            "irf_fwhm_ps": _number,
            "dark_rate_cps": _number,
            "efficiency": _number,
            "dead_time_ps": _number,
        },
        optional={},
    )
    return DetectorSpec(**fields)


def _parse_train(obj, path) -> PulseTrainSpec:
    fields = _take_fields(
        _expect_mapping(obj, path),
        path,
        required={
            "rep_rate_mhz": _number,
            "n_pulses": _integer,
            "source_delay_ps": _number,
        },
        optional={},
    )
    return PulseTrainSpec(**fields)


def _parse_analysis(obj, path) -> AnalysisSpec:
    fields = _take_fields(
        _expect_mapping(obj, path),
        path,
        required={},
        optional={
            "bin_width_ps": _number,
            "window_ps": _number,
            "delta_t_ps": _number,
            "n_side": _integer,
            "background_correction": _boolean,
        },
    )
    return AnalysisSpec(**fields)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario from JSON text."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError("invalid JSON: %s" % exc)
    obj = _expect_mapping(obj, "config")
    known = {"emitter1", "emitter2", "circuit", "detector", "train", "seed", "analysis"}
    for key in obj:
        if key not in known:
            raise ConfigurationError("config.%s: unknown key" % key)
    for key in ("emitter1", "emitter2", "circuit", "detector", "train", "seed"):
        if key not in obj:
            raise ConfigurationError("config.%s: missing required key" % key)
    seed = _integer(obj["seed"], "config.seed")
    if not 0 <= seed < 2**64:
        raise ConfigurationError("config.seed: must be an unsigned 64-bit integer")
    analysis = (
        _parse_analysis(obj["analysis"], "config.analysis")
        if "analysis" in obj
        else AnalysisSpec()
    )
    return ScenarioConfig(
        emitter1=_parse_emitter(obj["emitter1"], "config.emitter1"),
        emitter2=_parse_emitter(obj["emitter2"], "config.emitter2"),
        circuit=_parse_circuit(obj["circuit"], "config.circuit"),
        detector=_parse_detector(obj["detector"], "config.detector"),
        train=_parse_train(obj["train"], "config.train"),
        seed=seed,
        analysis=analysis,
    )


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_scenario(fh.read())


def _emitter_dict(e: EmitterSpec) -> dict:
    return {
        "energy_uev": e.energy_uev,
        "t1_fast_ps": e.t1_fast_ps,
        "t1_slow_ps": e.t1_slow_ps,
        "slow_fraction": e.slow_fraction,
        "t2_ps": e.t2_ps,
        "emission_prob": e.emission_prob,
        "double_prob": e.double_prob,
        "blink_on_rate_per_s": e.blink_on_rate_per_s,
        "blink_off_rate_per_s": e.blink_off_rate_per_s,
        "spectral_diffusion_sigma_uev": e.spectral_diffusion_sigma_uev,
    }


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "emitter1": _emitter_dict(cfg.emitter1),
        "emitter2": _emitter_dict(cfg.emitter2),
        "circuit": {
            "reflectance": cfg.circuit.reflectance,
            "pol_overlap": cfg.circuit.pol_overlap,
            "arm_transmission": list(cfg.circuit.arm_transmission),
            "classical_visibility": cfg.circuit.classical_visibility,
        },
        "detector": {
            "irf_fwhm_ps": cfg.detector.irf_fwhm_ps,
            "dark_rate_cps": cfg.detector.dark_rate_cps,
            "efficiency": cfg.detector.efficiency,
            "dead_time_ps": cfg.detector.dead_time_ps,
        },
        "train": {
            "rep_rate_mhz": cfg.train.rep_rate_mhz,
            "n_pulses": cfg.train.n_pulses,
            "source_delay_ps": cfg.train.source_delay_ps,
        },
        "seed": cfg.seed,
        "analysis": {
            "bin_width_ps": cfg.analysis.bin_width_ps,
            "window_ps": cfg.analysis.window_ps,
            "delta_t_ps": cfg.analysis.delta_t_ps,
            "n_side": cfg.analysis.n_side,
            "background_correction": cfg.analysis.background_correction,
        },
    }


def scenario_to_json(cfg: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable SHA-256 over the canonical JSON form."""
    canonical = json.dumps(
        scenario_to_dict(cfg), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode()).hexdigest()
