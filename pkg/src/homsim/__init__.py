"""homsim: Hong-Ou-Mandel interference of weak coherent pulses retrieved
from independent, noisy quantum memories.

The package models an elementary two-source / two-memory / one
interference-node network: mode overlaps (temporal, spectral,
polarization), the memories' storage, leakage and background, analytic
click statistics, a deterministic Monte Carlo time-tag generator, and
the full coincidence-analysis pipeline (ROI post-selection, MLM
visibility fits, SBR estimation and the visibility-vs-SBR law).
"""

from .analysis import (
    CountSummary,
    FitResult,
    PairCounts,
    Roi,
    count_in_roi,
    estimate_sbr,
    fit_cos2,
    fit_gaussian_dip,
    fit_sbr_model,
    mdiqkd_threshold_check,
    normalized_rate,
    normalized_rate_sigma,
    pair_count_in_roi,
    shift_roi_for_delay,
    visibility_vs_sbr,
)
from .elements import (
    DetectorConfig,
    Etalon,
    FilterConfig,
    MemoryConfig,
    NoiseModel,
    PulseSpec,
    QubitLevel,
    SinePhaseScan,
    SourceConfig,
    UniformPhase,
    encode_qubit,
    etalon_transmission,
    make_pulse,
    store_and_retrieve,
    unequal_rail_distortion,
)
from .engine import (
    CoincidenceProbabilities,
    CycleModel,
    HomInput,
    ScanCurve,
    ScanPoint,
    analytic_hom,
    collect_stream,
    hom_visibility,
    mc_trial,
    run_scan,
)
from .modes import (
    OpticalMode,
    PolarizationState,
    SpectralMode,
    TemporalEnvelope,
    linear,
    mode_overlap,
    polarization_overlap,
    rotate,
    spectral_overlap,
    temporal_overlap,
)
from .runner import (
    RunReport,
    Table1Report,
    analytic_visibility,
    calibrate_overlap_scale,
    effective_sbr,
    overlap_visibility,
    run,
    source_visibility,
    table1_suite,
    write_artifacts,
)
from .scenario import (
    RoiPolicy,
    ScanSpec,
    Scenario,
    ScenarioParseError,
    list_presets,
    load_preset,
    parse_scenario,
    serialize_scenario,
)
from .timetags import (
    Histogram,
    StreamHeader,
    TimeTag,
    TimeTagStream,
    fold_histogram,
    read_stream,
    write_stream,
)

__version__ = "0.1.0"
