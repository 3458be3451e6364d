"""Parametric models of the network elements.

Covers the polarization-qubit sources (AOM pulse carving + EOM
encoding), the dual-rail vapor-cell memories with a phenomenological
signal-to-background noise model, the cascaded etalon frequency
filters, and the single-photon detectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .modes import (
    EnvelopeShape,
    OpticalMode,
    PolarizationState,
    SpectralMode,
    TemporalEnvelope,
    linear,
)

# Gaussian time-bandwidth product (intensity FWHMs): dnu * dt = 2 ln2 / pi
TIME_BANDWIDTH_PRODUCT = 2.0 * math.log(2.0) / math.pi


def transform_limited_bandwidth_mhz(fwhm_ns: float) -> float:
    """Spectral intensity FWHM (MHz) of a transform-limited Gaussian pulse."""
    return TIME_BANDWIDTH_PRODUCT / fwhm_ns * 1e3


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

class QubitLevel(enum.Enum):
    """The four drive levels of the high-voltage encoder (0, Vpi/2, Vpi,
    3Vpi/2), mapping to |V>, |A>, |H>, |D>."""

    L0 = 0
    L_HALF = 1
    L_PI = 2
    L_3HALF = 3


# target polarization angle from horizontal, per drive level
_LEVEL_ANGLE_DEG = {
    QubitLevel.L0: 90.0,      # |V>
    QubitLevel.L_HALF: 135.0,  # |A>
    QubitLevel.L_PI: 0.0,      # |H>
    QubitLevel.L_3HALF: 45.0,  # |D>
}

_LEVEL_BY_NAME = {"V": QubitLevel.L0, "A": QubitLevel.L_HALF,
                  "H": QubitLevel.L_PI, "D": QubitLevel.L_3HALF}


def qubit_level_for(state_name: str) -> QubitLevel:
    """Drive level producing the named polarization state (H, V, D or A)."""
    try:
        return _LEVEL_BY_NAME[state_name.upper()]
    except KeyError:
        raise ValueError(f"unknown qubit state {state_name!r}; expected one of H, V, D, A")


@dataclass(frozen=True)
class UniformPhase:
    """Fresh uniform random optical phase for every pulse (ideal
    phase randomization)."""


@dataclass(frozen=True)
class SinePhaseScan:
    """Sinusoidal phase drive from a slow phase modulator.  The default
    depth covers the full 2*pi range so all relative phases are sampled."""

    rate_khz: float = 1.0
    depth_rad: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if self.rate_khz <= 0.0:
            raise ValueError("rate_khz must be > 0")

    def phase_at(self, t_ns: float) -> float:
        return self.depth_rad * math.sin(2.0 * math.pi * self.rate_khz * 1e-6 * t_ns)


PhaseModel = UniformPhase | SinePhaseScan


@dataclass(frozen=True)
class SourceConfig:
    """One qubit source: pulse carving, mean photon number, phase
    randomization, encoder imperfections."""

    pulse_fwhm_ns: float
    mean_photons: float
    phase_model: PhaseModel = field(default_factory=UniformPhase)
    eom_extinction_db: float = math.inf
    dop: float = 1.0
    rep_rate_khz: float = 40.0

    def __post_init__(self) -> None:
        if self.pulse_fwhm_ns <= 0.0:
            raise ValueError("pulse_fwhm_ns must be > 0")
        if self.mean_photons < 0.0:
            raise ValueError("mean_photons must be >= 0")
        if self.eom_extinction_db < 0.0:
            raise ValueError("eom_extinction_db must be >= 0")
        if not 0.0 <= self.dop <= 1.0:
            raise ValueError("dop must be in [0, 1]")
        if self.rep_rate_khz <= 0.0:
            raise ValueError("rep_rate_khz must be > 0")

    @property
    def trigger_period_ns(self) -> float:
        return 1e6 / self.rep_rate_khz


@dataclass(frozen=True)
class PulseSpec:
    """A weak coherent pulse: its optical mode, mean photon number and
    the optical phase realized for this pulse."""

    mode: OpticalMode
    mean_photons: float
    phase_rad: float = 0.0


def encode_qubit(level: QubitLevel, cfg: SourceConfig) -> PolarizationState:
    """Polarization produced by the EOM at the given drive level.

    Finite extinction leaks a power fraction 10^(-dB/10) into the
    orthogonal Jones component (renormalized); the state carries the
    source's degree of polarization.
    """
    target = linear(_LEVEL_ANGLE_DEG[level], cfg.dop)
    if math.isinf(cfg.eom_extinction_db):
        return target
    eps = 10.0 ** (-cfg.eom_extinction_db / 10.0)
    orth = target.orthogonal()
    jones = (target.jones[0] + math.sqrt(eps) * orth.jones[0],
             target.jones[1] + math.sqrt(eps) * orth.jones[1])
    return PolarizationState(jones, cfg.dop)


def make_pulse(cfg: SourceConfig, level: QubitLevel, emit_time_ns: float,
               rng=None) -> PulseSpec:
    """Carve one weak coherent pulse: Gaussian envelope centered at
    ``emit_time_ns``, transform-limited spectrum at the probe reference,
    polarization from :func:`encode_qubit`, phase drawn per the source's
    phase model (``rng`` required only for :class:`UniformPhase`; without
    it the phase is left at 0 and the interference engine randomizes the
    relative phase itself)."""
    envelope = TemporalEnvelope.gaussian(emit_time_ns, cfg.pulse_fwhm_ns)
    spectrum = SpectralMode(0.0, transform_limited_bandwidth_mhz(cfg.pulse_fwhm_ns))
    pol = encode_qubit(level, cfg)
    if isinstance(cfg.phase_model, SinePhaseScan):
        phase = cfg.phase_model.phase_at(emit_time_ns)
    elif rng is not None:
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
    else:
        phase = 0.0
    return PulseSpec(OpticalMode(envelope, spectrum, pol), cfg.mean_photons, phase)


# ---------------------------------------------------------------------------
# memories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MemoryConfig:
    """A dual-rail vapor-cell memory.

    ``transmission`` is the end-to-end passive transmission of the arm
    without storage (fibers, optics and filter insertion loss lumped
    together, as measured).  ``leakage_fraction`` is the share of the
    unstored input that exits during the leakage window; per rail it may
    not exceed 1 - storage efficiency, which keeps the photon-number
    bookkeeping retrieved + leakage <= input.
    """

    eta_store_h: float
    eta_store_v: float
    transmission: float
    storage_time_us: float = 1.0
    retrieved_fwhm_ns: float = 400.0
    leakage_fraction: float = 0.0
    eit_fwhm_mhz: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eta_store_h", "eta_store_v", "transmission", "leakage_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.storage_time_us < 0.0:
            raise ValueError("storage_time_us must be >= 0")
        if self.retrieved_fwhm_ns <= 0.0:
            raise ValueError("retrieved_fwhm_ns must be > 0")
        if self.eit_fwhm_mhz <= 0.0:
            raise ValueError("eit_fwhm_mhz must be > 0")
        if self.leakage_fraction + max(self.eta_store_h, self.eta_store_v) > 1.0 + 1e-12:
            raise ValueError("leakage_fraction + storage efficiency exceeds 1")


@dataclass(frozen=True)
class NoiseModel:
    """Phenomenological memory noise: a flat background fixed by the
    signal-to-background ratio within the signal ROI, plus detector
    dark counts."""

    sbr: float = math.inf
    dark_rate_cps: float = 0.0

    def __post_init__(self) -> None:
        if not self.sbr > 0.0:
            raise ValueError("sbr must be > 0 (may be inf)")
        if self.dark_rate_cps < 0.0:
            raise ValueError("dark_rate_cps must be >= 0")


def unequal_rail_distortion(state: PolarizationState, eta_h: float,
                            eta_v: float) -> PolarizationState:
    """Polarization change from unequal rail efficiencies: Jones
    components scaled by sqrt(eta) per rail and renormalized."""
    if not (0.0 <= eta_h <= 1.0 and 0.0 <= eta_v <= 1.0):
        raise ValueError("rail efficiencies must be in [0, 1]")
    if eta_h == 0.0 and eta_v == 0.0:
        raise ValueError("both rail efficiencies are zero")
    jones = (math.sqrt(eta_h) * state.jones[0], math.sqrt(eta_v) * state.jones[1])
    if abs(jones[0]) == 0.0 and abs(jones[1]) == 0.0:
        # input lived entirely in the dead rail
        raise ValueError("polarization is fully extinguished by the rail split")
    return PolarizationState(jones, state.dop)


@dataclass(frozen=True)
class RetrievalResult:
    retrieved: PulseSpec
    leakage: PulseSpec
    background_mean_per_roi: float


def store_and_retrieve(pulse: PulseSpec, mem: MemoryConfig, noise: NoiseModel,
                       read_time_ns: float) -> RetrievalResult:
    """Buffer a pulse in a dual-rail memory and retrieve it on demand.

    The retrieved pulse is re-emitted with the control-shaped envelope
    (``retrieved_fwhm_ns`` Gaussian centered at ``read_time_ns``) and a
    correspondingly transform-limited spectrum; its polarization picks up
    the unequal-rail distortion.  The unstored leakage exits with the
    front-truncated input envelope.  The flat background accompanying the
    retrieval is returned as a mean photon number per signal ROI,
    retrieved / SBR.
    """
    env = pulse.mode.envelope
    pulse_end = env.center_ns + env.fwhm_ns
    if read_time_ns < pulse_end:
        raise ValueError(
            f"read_time_ns={read_time_ns} precedes pulse end {pulse_end} "
            "(the input must have fully entered the memory)")

    pol = pulse.mode.polarization
    eta_weighted = mem.eta_store_h * pol.power_h + mem.eta_store_v * pol.power_v
    retrieved_mean = pulse.mean_photons * eta_weighted * mem.transmission
    if eta_weighted > 0.0:
        retrieved_pol = unequal_rail_distortion(pol, mem.eta_store_h, mem.eta_store_v)
    else:
        retrieved_pol = pol
    retrieved = PulseSpec(
        OpticalMode(
            TemporalEnvelope.gaussian(read_time_ns, mem.retrieved_fwhm_ns),
            SpectralMode(pulse.mode.spectrum.detuning_mhz,
                         transform_limited_bandwidth_mhz(mem.retrieved_fwhm_ns)),
            retrieved_pol,
        ),
        retrieved_mean,
        pulse.phase_rad,
    )

    leakage_mean = pulse.mean_photons * mem.leakage_fraction * mem.transmission
    leakage = PulseSpec(
        OpticalMode(
            TemporalEnvelope.truncated_front(env.center_ns, env.fwhm_ns),
            pulse.mode.spectrum,
            pol,
        ),
        leakage_mean,
        pulse.phase_rad,
    )

    background = 0.0 if math.isinf(noise.sbr) else retrieved_mean / noise.sbr
    return RetrievalResult(retrieved, leakage, background)


# ---------------------------------------------------------------------------
# etalon filters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Etalon:
    """One Fabry-Perot etalon: Lorentzian line of the given FWHM repeating
    every free spectral range.  The default FSR puts the 6.835 GHz
    control-field offset mid-FSR for maximal suppression."""

    fwhm_mhz: float
    fsr_ghz: float = 13.6
    insertion_loss_db: float = 0.0

    def __post_init__(self) -> None:
        if self.fwhm_mhz <= 0.0:
            raise ValueError("fwhm_mhz must be > 0")
        if self.fsr_ghz * 1e3 <= self.fwhm_mhz:
            raise ValueError("fsr must exceed the linewidth")
        if self.insertion_loss_db < 0.0:
            raise ValueError("insertion_loss_db must be >= 0")


@dataclass(frozen=True)
class FilterConfig:
    """Cascade of etalons in one arm."""

    etalons: tuple[Etalon, ...]

    def __post_init__(self) -> None:
        if not self.etalons:
            raise ValueError("at least one etalon required")


def etalon_transmission(detuning_mhz: float, cfg: FilterConfig) -> float:
    """Power transmission of the cascade at the given detuning: product of
    periodic Lorentzians times insertion losses."""
    t = 1.0
    for et in cfg.etalons:
        fsr_mhz = et.fsr_ghz * 1e3
        wrapped = detuning_mhz - fsr_mhz * round(detuning_mhz / fsr_mhz)
        t *= 10.0 ** (-et.insertion_loss_db / 10.0) / (1.0 + (2.0 * wrapped / et.fwhm_mhz) ** 2)
    return t


# ---------------------------------------------------------------------------
# detectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectorConfig:
    """Single-photon counting module plus its time tagger channel."""

    efficiency: float = 1.0
    jitter_sigma_ns: float = 10.0
    resolution_ps: int = 100
    dead_time_ns: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        if self.jitter_sigma_ns < 0.0:
            raise ValueError("jitter_sigma_ns must be >= 0")
        if self.resolution_ps <= 0:
            raise ValueError("resolution_ps must be > 0")
        if self.dead_time_ns < 0.0:
            raise ValueError("dead_time_ns must be >= 0")
