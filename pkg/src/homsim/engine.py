"""Interference engine.

Analytic side: per-trigger click and coincidence probabilities for two
phase-randomized weak coherent pulses on a 50:50 beamsplitter.  With
relative phase phi uniform on [0, 2pi) the output means are

    mu_1(phi) = (mu_a + mu_b)/2 + |zeta| sqrt(mu_a mu_b) cos(phi)
    mu_2(phi) = (mu_a + mu_b)/2 - |zeta| sqrt(mu_a mu_b) cos(phi)

and the detectors click with p_i(phi) = 1 - exp(-eta_i mu_i(phi) - b_i),
conditionally independent given phi.  Averaging over phi by trapezoid
quadrature gives P1, P2, P12; the quadrature is exponentially accurate
for this periodic integrand.

Monte Carlo side: per trigger the relative phase is sampled, photon
detections are drawn from the corresponding inhomogeneous Poisson
intensity (retrieved/leakage envelopes, flat background, dark counts),
then detector jitter, resolution quantization and optional dead time are
applied.  Trials are keyed by (master_seed, scan point, trial index), so
any execution order reproduces the same stream byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import gaussian_filter1d

from .analysis import (
    CountSummary,
    Roi,
    count_in_roi,
    normalized_rate,
    shift_roi_for_delay,
)
from .elements import (
    DetectorConfig,
    SinePhaseScan,
    UniformPhase,
    etalon_transmission,
    make_pulse,
    store_and_retrieve,
)
from .modes import (
    OpticalMode,
    PolarizationState,
    SpectralMode,
    TemporalEnvelope,
    polarization_overlap,
    rotate,
    spectral_overlap,
)
from .scenario import Scenario
from .timetags import StreamHeader, TimeTagStream

PHASE_NODES = 512


# ---------------------------------------------------------------------------
# analytic model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomInput:
    """Effective inputs to the interference node within one evaluation
    window: mean photon numbers at the beamsplitter, their complex mode
    overlap, detector efficiencies, and additive background means per
    detector (darks included)."""

    mu_a: float
    mu_b: float
    zeta: complex = 1.0
    eta1: float = 1.0
    eta2: float = 1.0
    b1: float = 0.0
    b2: float = 0.0

    def __post_init__(self) -> None:
        if self.mu_a < 0.0 or self.mu_b < 0.0:
            raise ValueError("mean photon numbers must be >= 0")
        if abs(self.zeta) > 1.0 + 1e-9:
            raise ValueError(f"|zeta| must be <= 1, got {abs(self.zeta)}")
        if not (0.0 <= self.eta1 <= 1.0 and 0.0 <= self.eta2 <= 1.0):
            raise ValueError("detector efficiencies must be in [0, 1]")
        if self.b1 < 0.0 or self.b2 < 0.0:
            raise ValueError("background means must be >= 0")


@dataclass(frozen=True)
class CoincidenceProbabilities:
    """Per-trigger click probabilities and the normalized coincidence
    rate g = P12 / (P1 P2)."""

    p1: float
    p2: float
    p12: float

    def __post_init__(self) -> None:
        if self.p12 > min(self.p1, self.p2) + 1e-12:
            raise ValueError("p12 cannot exceed the singles probabilities")

    @property
    def g(self) -> float:
        if self.p1 == 0.0 or self.p2 == 0.0:
            return math.nan
        return self.p12 / (self.p1 * self.p2)


def analytic_hom(inp: HomInput, n_phase: int = PHASE_NODES) -> CoincidenceProbabilities:
    """Phase-averaged click statistics of the interference node."""
    if n_phase < 8:
        raise ValueError("n_phase too small for the phase average")
    phi = np.linspace(0.0, 2.0 * math.pi, n_phase, endpoint=False)
    mean = 0.5 * (inp.mu_a + inp.mu_b)
    cross = abs(inp.zeta) * math.sqrt(inp.mu_a * inp.mu_b) * np.cos(phi)
    p1 = 1.0 - np.exp(-inp.eta1 * (mean + cross) - inp.b1)
    p2 = 1.0 - np.exp(-inp.eta2 * (mean - cross) - inp.b2)
    return CoincidenceProbabilities(float(p1.mean()), float(p2.mean()),
                                    float((p1 * p2).mean()))


def hom_visibility(inp: HomInput, n_phase: int = PHASE_NODES) -> float:
    """Visibility against the distinguishable (zeta = 0) baseline."""
    g_min = analytic_hom(inp, n_phase).g
    g_base = analytic_hom(replace(inp, zeta=0.0), n_phase).g
    return 1.0 - g_min / g_base


# ---------------------------------------------------------------------------
# scenario -> per-cycle physical model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArmPulse:
    """One optical component arriving at the beamsplitter from one arm."""

    kind: str  # "source" | "retrieved" | "leakage"
    envelope: TemporalEnvelope
    spectrum: SpectralMode
    polarization: PolarizationState
    mean_photons: float


def _propagate_arm(scenario: Scenario, arm: str, delay_ns: float) -> tuple[list[ArmPulse], float]:
    """Pulses and flat background flux (photons/ns) this arm delivers to
    the beamsplitter.  ``delay_ns`` shifts the whole arm timeline."""
    src = scenario.source_a if arm == "a" else scenario.source_b
    level = scenario.qubit_a if arm == "a" else scenario.qubit_b
    mem = scenario.memory_a if arm == "a" else scenario.memory_b
    noise = scenario.noise_a if arm == "a" else scenario.noise_b
    filters = scenario.filters_a if arm == "a" else scenario.filters_b

    emit = scenario.emit_time_ns + delay_ns
    pulse = make_pulse(src, level, emit)
    t_filter = (etalon_transmission(pulse.mode.spectrum.detuning_mhz, filters)
                if filters is not None else 1.0)

    if mem is None:
        direct = ArmPulse("source", pulse.mode.envelope, pulse.mode.spectrum,
                          pulse.mode.polarization, pulse.mean_photons * t_filter)
        signal_mean = direct.mean_photons
        pulses = [direct]
    else:
        read = emit + mem.storage_time_us * 1e3
        rr = store_and_retrieve(pulse, mem, noise, read)
        pulses = []
        if rr.retrieved.mean_photons > 0.0:
            pulses.append(ArmPulse("retrieved", rr.retrieved.mode.envelope,
                                   rr.retrieved.mode.spectrum,
                                   rr.retrieved.mode.polarization,
                                   rr.retrieved.mean_photons * t_filter))
        if rr.leakage.mean_photons > 0.0:
            pulses.append(ArmPulse("leakage", rr.leakage.mode.envelope,
                                   rr.leakage.mode.spectrum,
                                   rr.leakage.mode.polarization,
                                   rr.leakage.mean_photons * t_filter))
        signal_mean = rr.retrieved.mean_photons * t_filter

    if math.isinf(noise.sbr) or signal_mean == 0.0:
        bg_flux = 0.0
    else:
        # the configured SBR is quoted for the reference ROI width; the
        # background is flat, so its in-window share scales with width
        ref_w = scenario.roi.reference_width_ns
        coverage = _reference_coverage(scenario, pulses)
        bg_flux = signal_mean * coverage / (noise.sbr * ref_w)
    return pulses, bg_flux


def _reference_coverage(scenario: Scenario, pulses: list[ArmPulse]) -> float:
    """Fraction of the arm's signal pulse inside its reference-width
    window, jitter included (signal = retrieved, or the bare source)."""
    sig = [p for p in pulses if p.kind in ("retrieved", "source")]
    if not sig:
        return 1.0
    env = sig[0].envelope
    jitter = 0.5 * (scenario.detector_1.jitter_sigma_ns + scenario.detector_2.jitter_sigma_ns)
    if scenario.roi.policy == "delay_split":
        half = scenario.roi.reference_width_ns / 4.0
    else:
        half = scenario.roi.reference_width_ns / 2.0
    sigma = math.hypot(env.sigma_ns, jitter)
    return math.erf(half / (sigma * math.sqrt(2.0)))


@dataclass(frozen=True)
class _Pair:
    """Interfering pulse pair (same kind on both arms)."""

    pulse_a: ArmPulse
    pulse_b: ArmPulse
    zeta_ps: complex  # polarization x spectral overlap x imperfection scale


class CycleModel:
    """Everything needed to evaluate one scan point: the per-cycle
    intensity model at both detectors, window statistics, and the
    sampling tables for the Monte Carlo."""

    def __init__(self, scenario: Scenario, scan_value: float | None = None):
        self.scenario = scenario
        self.scan_value = scan_value
        variable = scenario.scan.variable
        delay = 0.0
        rotation = 0.0
        if scan_value is not None:
            if variable == "delay_ns":
                delay = float(scan_value)
            else:
                rotation = float(scan_value)
        self.delay_ns = delay

        pulses_a, bg_a = _propagate_arm(scenario, "a", delay)
        pulses_b, bg_b = _propagate_arm(scenario, "b", 0.0)
        if rotation != 0.0:
            pulses_b = [replace(p, polarization=rotate(p.polarization, rotation))
                        for p in pulses_b]
        self.pulses_a, self.pulses_b = pulses_a, pulses_b
        self.bg_flux_a, self.bg_flux_b = bg_a, bg_b

        self.pairs: list[_Pair] = []
        self.singles: list[tuple[str, ArmPulse]] = []
        by_kind_b = {p.kind: p for p in pulses_b}
        matched_b = set()
        for pa in pulses_a:
            pb = by_kind_b.get(pa.kind)
            if pb is None:
                self.singles.append(("a", pa))
                continue
            matched_b.add(pa.kind)
            zeta = (polarization_overlap(pa.polarization, pb.polarization)
                    * spectral_overlap(pa.spectrum, pb.spectrum)
                    * scenario.overlap_scale)
            self.pairs.append(_Pair(pa, pb, complex(zeta)))
        for pb in pulses_b:
            if pb.kind not in matched_b:
                self.singles.append(("b", pb))

        self.roi = self._place_roi()
        self._build_grid()

    # -- ROI placement ----------------------------------------------------

    def _signal_center(self, arm: str) -> float:
        pulses = self.pulses_a if arm == "a" else self.pulses_b
        for p in pulses:
            if p.kind in ("retrieved", "source"):
                return p.envelope.center_ns
        return pulses[0].envelope.center_ns

    def _place_roi(self) -> Roi:
        pol = self.scenario.roi
        period = self.scenario.trigger_period_ns
        if pol.policy == "centered":
            c = self._signal_center("b")
            roi = Roi(((c - pol.total_width_ns / 2.0, c + pol.total_width_ns / 2.0),))
            if roi.windows[0][1] > period:
                raise ValueError("ROI window exceeds the trigger cycle")
            return roi
        # delay_split: window 0 tracks the delayed arm (a)
        half = pol.total_width_ns / 4.0
        ca0 = self._signal_center("a") - self.delay_ns  # nominal (zero-delay) center
        cb = self._signal_center("b")
        base = ((ca0 - half, ca0 + half), (cb - half, cb + half))
        return shift_roi_for_delay(base, self.delay_ns, pol.total_width_ns, cycle_ns=period)

    # -- grid -------------------------------------------------------------

    def _build_grid(self) -> None:
        pulses = self.pulses_a + self.pulses_b
        jit = max(self.scenario.detector_1.jitter_sigma_ns,
                  self.scenario.detector_2.jitter_sigma_ns)
        lo = min(min(p.envelope.support()[0] for p in pulses),
                 min(a for a, _ in self.roi.windows)) - 6.0 * jit - 10.0
        hi = max(max(p.envelope.support()[1] for p in pulses),
                 max(b for _, b in self.roi.windows)) + 6.0 * jit + 10.0
        lo = max(lo, 0.0)
        dt = min(min(p.envelope.fwhm_ns for p in pulses) / 128.0, 2.0)
        n = int(math.ceil((hi - lo) / dt)) + 1
        self.t = np.linspace(lo, hi, n)
        self.dt = float(self.t[1] - self.t[0])

        self._intensity = {id(p): p.mean_photons * p.envelope.intensity(self.t)
                           for p in pulses}
        self._amplitude = {id(p): np.sqrt(self._intensity[id(p)]) for p in pulses}

    def _window_integral(self, y: np.ndarray, roi: Roi, jitter_sigma_ns: float) -> float:
        """Integral of the jitter-smeared density over the ROI windows."""
        if jitter_sigma_ns > 0.0:
            y = gaussian_filter1d(y, jitter_sigma_ns / self.dt, mode="constant")
        cum = cumulative_trapezoid(y, self.t, initial=0.0)
        total = 0.0
        for a, b in roi.windows:
            total += float(np.interp(b, self.t, cum) - np.interp(a, self.t, cum))
        return total

    # -- analytic window statistics ----------------------------------------

    def window_statistics(self, roi: Roi | None = None) -> HomInput:
        """Reduce this scan point to the effective HomInput for the given
        ROI (default: the scenario's ROI placement)."""
        roi = self.roi if roi is None else roi
        d1, d2 = self.scenario.detector_1, self.scenario.detector_2
        jitter = 0.5 * (d1.jitter_sigma_ns + d2.jitter_sigma_ns)

        mu_a = sum(self._window_integral(self._intensity[id(p)], roi, jitter)
                   for p in self.pulses_a)
        mu_b = sum(self._window_integral(self._intensity[id(p)], roi, jitter)
                   for p in self.pulses_b)
        cross = 0.0j
        for pair in self.pairs:
            prod = self._amplitude[id(pair.pulse_a)] * self._amplitude[id(pair.pulse_b)]
            cross += pair.zeta_ps * self._window_integral(prod, roi, jitter)
        zeta = cross / math.sqrt(mu_a * mu_b) if mu_a > 0.0 and mu_b > 0.0 else 0.0
        # numerical guard: Cauchy-Schwarz bounds |zeta| by 1
        if abs(zeta) > 1.0:
            zeta *= 1.0 / abs(zeta)

        w = roi.total_width_ns
        bg = 0.5 * (self.bg_flux_a + self.bg_flux_b)
        b1 = d1.efficiency * bg * w + self.scenario.noise_a.dark_rate_cps * 1e-9 * w
        b2 = d2.efficiency * bg * w + self.scenario.noise_b.dark_rate_cps * 1e-9 * w
        return HomInput(mu_a, mu_b, complex(zeta), d1.efficiency, d2.efficiency, b1, b2)

    def probabilities(self, roi: Roi | None = None,
                      n_phase: int = PHASE_NODES) -> CoincidenceProbabilities:
        return analytic_hom(self.window_statistics(roi), n_phase)

    # -- Monte Carlo -------------------------------------------------------

    def _sampler(self, y: np.ndarray):
        """Inverse-CDF sampler for a density on the model grid."""
        cum = cumulative_trapezoid(y, self.t, initial=0.0)
        total = float(cum[-1])

        def draw(rng: np.random.Generator, n: int) -> np.ndarray:
            return np.interp(rng.uniform(0.0, total, n), cum, self.t)

        return total, draw

    def _mc_components(self):
        """Per-detector sampling plan: (rate per trigger, draw, accept)
        triples; accept is None for non-interfering components."""
        if hasattr(self, "_components"):
            return self._components
        comps = []
        for pair in self.pairs:
            ia = self._intensity[id(pair.pulse_a)]
            ib = self._intensity[id(pair.pulse_b)]
            base = ia + ib
            cross = 2.0 * self._amplitude[id(pair.pulse_a)] * self._amplitude[id(pair.pulse_b)]
            kappa = min(abs(pair.zeta_ps), 1.0)
            chi = math.atan2(pair.zeta_ps.imag, pair.zeta_ps.real)
            if kappa < 1.0:
                total, draw = self._sampler(base)
                comps.append({"rate": (1.0 - kappa) * total / 2.0, "draw": draw,
                              "accept": None, "chi": 0.0})
            if kappa > 0.0:
                prop = base + cross
                total, draw = self._sampler(prop)
                base_i = base.copy()
                cross_i = cross.copy()

                def accept(times, c, _b=base_i, _x=cross_i):
                    b = np.interp(times, self.t, _b)
                    x = np.interp(times, self.t, _x)
                    denom = b + x
                    out = np.ones_like(b)
                    ok = denom > 0.0
                    out[ok] = (b[ok] + x[ok] * c[ok]) / denom[ok]
                    return out

                comps.append({"rate": kappa * total / 2.0, "draw": draw,
                              "accept": accept, "chi": chi})
        for _arm, pulse in self.singles:
            total, draw = self._sampler(self._intensity[id(pulse)])
            comps.append({"rate": total / 2.0, "draw": draw, "accept": None, "chi": 0.0})
        self._components = comps
        return comps

    def _relative_phases(self, trigger_indices: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
        ma = self.scenario.source_a.phase_model
        mb = self.scenario.source_b.phase_model
        n = trigger_indices.size
        if isinstance(ma, UniformPhase) or isinstance(mb, UniformPhase):
            return rng.uniform(0.0, 2.0 * math.pi, n)
        emit = (trigger_indices.astype(float) * self.scenario.trigger_period_ns
                + self.scenario.emit_time_ns)
        rate_a = 2.0 * math.pi * ma.rate_khz * 1e-6
        rate_b = 2.0 * math.pi * mb.rate_khz * 1e-6
        return (mb.depth_rad * np.sin(rate_b * emit)
                - ma.depth_rad * np.sin(rate_a * emit))

    def sample_trial(self, rng: np.random.Generator, trigger_start: int,
                     n_triggers: int) -> tuple[np.ndarray, np.ndarray]:
        """One Monte Carlo trial: (times_ps uint64, channels uint8),
        time-sorted, for triggers [trigger_start, trigger_start + n)."""
        scenario = self.scenario
        period = scenario.trigger_period_ns
        dets = (scenario.detector_1, scenario.detector_2)
        comps = self._mc_components()

        trig = np.arange(trigger_start, trigger_start + n_triggers, dtype=np.int64)
        phi = self._relative_phases(trig, rng)

        all_times: list[np.ndarray] = []
        all_chans: list[np.ndarray] = []
        bg_half = 0.5 * (self.bg_flux_a + self.bg_flux_b)
        darks = (scenario.noise_a.dark_rate_cps, scenario.noise_b.dark_rate_cps)

        for ch, det in enumerate(dets):
            sign = 1.0 if ch == 0 else -1.0
            times_ch: list[np.ndarray] = []
            for comp in comps:
                rate = det.efficiency * comp["rate"]
                if rate <= 0.0:
                    continue
                n_tags = rng.poisson(rate * n_triggers)
                if n_tags == 0:
                    continue
                which = rng.integers(0, n_triggers, n_tags)
                t_in = comp["draw"](rng, n_tags)
                if comp["accept"] is not None:
                    c = sign * np.cos(phi[which] + comp["chi"])
                    keep = rng.uniform(0.0, 1.0, n_tags) < comp["accept"](t_in, c)
                    which, t_in = which[keep], t_in[keep]
                times_ch.append((trig[which].astype(float)) * period + t_in)
            # flat background + dark counts over the whole cycle
            flat_rate = (det.efficiency * bg_half + darks[ch] * 1e-9) * period
            n_bg = rng.poisson(flat_rate * n_triggers)
            if n_bg:
                which = rng.integers(0, n_triggers, n_bg)
                t_in = rng.uniform(0.0, period, n_bg)
                times_ch.append((trig[which].astype(float)) * period + t_in)
            if not times_ch:
                continue
            t_ns = np.concatenate(times_ch)
            if det.jitter_sigma_ns > 0.0:
                t_ns = t_ns + rng.normal(0.0, det.jitter_sigma_ns, t_ns.size)
            t_ns = np.maximum(t_ns, 0.0)
            t_ps = (np.round(t_ns * 1000.0 / det.resolution_ps).astype(np.uint64)
                    * np.uint64(det.resolution_ps))
            if det.dead_time_ns > 0.0:
                t_ps = _apply_dead_time(np.sort(t_ps), det.dead_time_ns * 1000.0)
            all_times.append(t_ps)
            all_chans.append(np.full(t_ps.size, ch, dtype=np.uint8))

        if not all_times:
            return (np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint8))
        times = np.concatenate(all_times)
        chans = np.concatenate(all_chans)
        order = np.lexsort((chans, times))
        return times[order], chans[order]


def _apply_dead_time(sorted_ps: np.ndarray, dead_ps: float) -> np.ndarray:
    keep = np.ones(sorted_ps.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(sorted_ps):
        if t - last < dead_ps:
            keep[i] = False
        else:
            last = t
    return sorted_ps[keep]


# ---------------------------------------------------------------------------
# trials and scans
# ---------------------------------------------------------------------------

def _trial_rng(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed,
                                 spawn_key=(point_index, trial_index))
    return np.random.default_rng(seq)


def mc_trial(scenario: Scenario, trial_index: int,
             scan_value: float | None = None,
             _model: CycleModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run one deterministic Monte Carlo trial.

    The trial covers triggers [i * triggers_per_trial, ...) of the
    scenario and is a pure function of (scenario, scan point, trial
    index): re-running it, in any process or order, reproduces the same
    tags.  Returns (times_ps, channels).
    """
    if not 0 <= trial_index < scenario.n_trials:
        raise ValueError(f"trial_index {trial_index} outside 0..{scenario.n_trials - 1}")
    model = _model if _model is not None else CycleModel(scenario, scan_value)
    start = trial_index * scenario.triggers_per_trial
    count = min(scenario.triggers_per_trial, scenario.n_triggers - start)
    if scan_value is None:
        point_index = 0
    else:
        try:
            point_index = 1 + scenario.scan.grid.index(scan_value)
        except ValueError:
            raise ValueError(f"scan_value {scan_value} is not on the scenario grid")
    rng = _trial_rng(scenario.master_seed, point_index, trial_index)
    return model.sample_trial(rng, start, count)


def collect_stream(scenario: Scenario, scan_value: float | None = None,
                   model: CycleModel | None = None,
                   max_workers: int = 1) -> TimeTagStream:
    """Run all trials for one scan point and merge them into a stream.

    Trials may run concurrently; the merge is by trial index followed by
    a stable time sort, so the result is identical to a sequential run.
    """
    model = model if model is not None else CycleModel(scenario, scan_value)
    indices = range(scenario.n_trials)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            blocks = list(pool.map(
                lambda i: mc_trial(scenario, i, scan_value, _model=model), indices))
    else:
        blocks = [mc_trial(scenario, i, scan_value, _model=model) for i in indices]
    times = np.concatenate([b[0] for b in blocks]) if blocks else np.empty(0, np.uint64)
    chans = np.concatenate([b[1] for b in blocks]) if blocks else np.empty(0, np.uint8)
    order = np.lexsort((chans, times))
    header = StreamHeader(
        trigger_period_ps=int(round(scenario.trigger_period_ns * 1000.0)),
        n_triggers=scenario.n_triggers,
        resolution_ps=min(scenario.detector_1.resolution_ps,
                          scenario.detector_2.resolution_ps),
        channel_labels=("det1", "det2"),
        master_seed=scenario.master_seed,
    )
    return TimeTagStream(header, times[order], chans[order])


@dataclass(frozen=True)
class ScanPoint:
    value: float
    hom: HomInput
    probs: CoincidenceProbabilities
    roi: Roi
    counts: CountSummary | None = None


@dataclass(frozen=True)
class ScanCurve:
    variable: str
    points: tuple[ScanPoint, ...]

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def analytic_g(self) -> np.ndarray:
        return np.array([p.probs.g for p in self.points])

    def measured_g(self) -> np.ndarray:
        return np.array([normalized_rate(p.counts) if p.counts is not None else math.nan
                         for p in self.points])


def run_scan(scenario: Scenario, scan=None, mode: str = "analytic",
             max_workers: int = 1, keep_streams: bool = False):
    """Evaluate a scan over the control variable (polarization angle or
    delay), recomputing the overlap, effective photon numbers and ROI
    placement at every grid value.

    ``scan`` overrides the scenario's own ScanSpec.  ``mode`` selects
    analytic probabilities, Monte Carlo counts, or both (the analytic
    side is always computed; "mc"/"both" add counting).  Returns the
    ScanCurve, plus the per-point streams if requested.
    """
    if mode not in ("analytic", "mc", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    if scan is not None:
        scenario = replace(scenario, scan=scan)
    if not scenario.scan.grid:
        raise ValueError("scan grid is empty")

    points = []
    streams = []
    for value in scenario.scan.grid:
        model = CycleModel(scenario, value)
        hom = model.window_statistics()
        probs = analytic_hom(hom)
        counts = None
        if mode in ("mc", "both"):
            stream = collect_stream(scenario, value, model=model, max_workers=max_workers)
            counts = count_in_roi(stream, model.roi)
            if keep_streams:
                streams.append(stream)
        points.append(ScanPoint(float(value), hom, probs, model.roi, counts))
    curve = ScanCurve(scenario.scan.variable, tuple(points))
    if keep_streams:
        return curve, streams
    return curve
