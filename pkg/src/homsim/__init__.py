"""homsim: simulator and analysis toolkit for two-photon interference
between independent pulsed single-photon sources on a beamsplitter.
"""

from .calib import (
    SplitterMeasurement,
    dolp,
    fit_loss,
    fringe_visibility,
    outcoupling_imbalance,
    splitting_ratio,
)
from .config import (
    AnalysisSpec,
    ScenarioConfig,
    config_digest,
    load_scenario,
    parse_scenario,
    scenario_to_dict,
    scenario_to_json,
)
from .correlate import (
    CorrelationHistogram,
    PeakAnalysis,
    Timetrace,
    cross_correlate,
    estimate_background,
    estimate_delay,
    hom_visibility,
    integrate_peaks,
    timetrace,
)
from .fitting import (
    FitResult,
    ModelDomainError,
    convolve_gaussian,
    deconvolve_lorentzian,
    exp_conv_gauss,
    fit_biexp_irf,
    fit_g2cw,
    fit_lorentzian,
    nlls_solve,
)
from .formats import read_ptg1, write_ptg1
from .interfere import (
    InterferenceKernelParams,
    coherence_kernel,
    envelope_cross_correlation,
    kernel_params,
    postselected_visibility,
    predicted_hom_dip,
    visibility_closed_form,
    visibility_numeric,
)
from .model import (
    HBAR_UEV_PS,
    CircuitSpec,
    ConfigurationError,
    DetectorSpec,
    EmitterSpec,
    EstimationError,
    PulseTrainSpec,
    ValidationError,
    detuning_to_angular,
    linewidth_from_t2,
    t2_from_linewidth,
)
from .simulate import (
    PhotonEvent,
    SimulationCounters,
    TimeTagStream,
    delayed_reference,
    generate_emission_stream,
    pair_interference_outcome,
    route_and_detect,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisSpec",
    "CircuitSpec",
    "ConfigurationError",
    "CorrelationHistogram",
    "DetectorSpec",
    "EmitterSpec",
    "EstimationError",
    "FitResult",
    "HBAR_UEV_PS",
    "InterferenceKernelParams",
    "ModelDomainError",
    "PeakAnalysis",
    "PhotonEvent",
    "PulseTrainSpec",
    "ScenarioConfig",
    "SimulationCounters",
    "SplitterMeasurement",
    "TimeTagStream",
    "Timetrace",
    "ValidationError",
    "coherence_kernel",
    "config_digest",
    "convolve_gaussian",
    "cross_correlate",
    "deconvolve_lorentzian",
    "detuning_to_angular",
    "dolp",
    "envelope_cross_correlation",
    "estimate_background",
    "estimate_delay",
    "exp_conv_gauss",
    "fit_biexp_irf",
    "fit_g2cw",
    "fit_lorentzian",
    "fit_loss",
    "fringe_visibility",
    "generate_emission_stream",
    "hom_visibility",
    "integrate_peaks",
    "kernel_params",
    "linewidth_from_t2",
    "load_scenario",
    "nlls_solve",
    "outcoupling_imbalance",
    "delayed_reference",
    "pair_interference_outcome",
    "parse_scenario",
    "postselected_visibility",
    "predicted_hom_dip",
    "read_ptg1",
    "route_and_detect",
    "run_simulation",
    "scenario_to_dict",
    "scenario_to_json",
    "splitting_ratio",
    "t2_from_linewidth",
    "timetrace",
    "visibility_closed_form",
    "visibility_numeric",
    "write_ptg1",
]
