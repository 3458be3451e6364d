"""Element-model tests: sources, memories, filters, detectors."""

import math

import numpy as np
import pytest

from homsim.elements import (
    DetectorConfig,
    Etalon,
    FilterConfig,
    MemoryConfig,
    NoiseModel,
    QubitLevel,
    SinePhaseScan,
    SourceConfig,
    UniformPhase,
    encode_qubit,
    etalon_transmission,
    make_pulse,
    qubit_level_for,
    store_and_retrieve,
    transform_limited_bandwidth_mhz,
    unequal_rail_distortion,
)
from homsim.modes import A, D, H, V, EnvelopeShape, PolarizationState, polarization_overlap


def ideal_source(**kwargs) -> SourceConfig:
    defaults = dict(pulse_fwhm_ns=200.0, mean_photons=0.4)
    defaults.update(kwargs)
    return SourceConfig(**defaults)


class TestEncodeQubit:
    @pytest.mark.parametrize("level,target", [
        (QubitLevel.L0, V), (QubitLevel.L_HALF, A),
        (QubitLevel.L_PI, H), (QubitLevel.L_3HALF, D),
    ])
    def test_ideal_mapping(self, level, target):
        state = encode_qubit(level, ideal_source())
        assert abs(polarization_overlap(state, target)) == pytest.approx(1.0)

    def test_finite_extinction_leaks_orthogonal_power(self):
        # 20 dB extinction: orthogonal power eps/(1+eps) with eps = 1e-2
        state = encode_qubit(QubitLevel.L_PI, ideal_source(eom_extinction_db=20.0))
        eps = 10.0 ** (-2.0)
        assert state.power_v == pytest.approx(eps / (1.0 + eps), abs=1e-12)
        assert state.power_h == pytest.approx(1.0 / (1.0 + eps), abs=1e-12)

    def test_dop_carried_through(self):
        state = encode_qubit(QubitLevel.L0, ideal_source(dop=0.96))
        assert state.dop == 0.96

    def test_level_names(self):
        assert qubit_level_for("h") is QubitLevel.L_PI
        with pytest.raises(ValueError):
            qubit_level_for("X")


class TestMakePulse:
    def test_fig2_polarization_configuration(self):
        cfg = ideal_source(pulse_fwhm_ns=400.0, mean_photons=10.0)
        pulse = make_pulse(cfg, QubitLevel.L_PI, 0.0)
        assert pulse.mean_photons == 10.0
        assert pulse.mode.envelope.fwhm_ns == 400.0
        assert abs(polarization_overlap(pulse.mode.polarization, H)) == pytest.approx(1.0)

    def test_envelope_centered_at_emit_time(self):
        pulse = make_pulse(ideal_source(), QubitLevel.L_PI, 1234.0)
        assert pulse.mode.envelope.center_ns == 1234.0
        assert pulse.mode.envelope.shape is EnvelopeShape.GAUSSIAN

    def test_vacuum_pulse(self):
        pulse = make_pulse(ideal_source(mean_photons=0.0), QubitLevel.L_PI, 0.0)
        assert pulse.mean_photons == 0.0

    def test_transform_limited_spectrum(self):
        pulse = make_pulse(ideal_source(pulse_fwhm_ns=200.0), QubitLevel.L_PI, 0.0)
        assert pulse.mode.spectrum.bandwidth_mhz == pytest.approx(
            transform_limited_bandwidth_mhz(200.0))
        # 200 ns transform-limited pulses are ~2.2 MHz wide
        assert 1.5 < pulse.mode.spectrum.bandwidth_mhz < 3.0

    def test_uniform_phase_needs_rng(self):
        cfg = ideal_source()
        assert make_pulse(cfg, QubitLevel.L_PI, 0.0).phase_rad == 0.0
        rng = np.random.default_rng(3)
        phases = {make_pulse(cfg, QubitLevel.L_PI, 0.0, rng).phase_rad for _ in range(5)}
        assert len(phases) == 5
        assert all(0.0 <= p < 2 * math.pi for p in phases)

    def test_sine_phase_is_deterministic(self):
        cfg = ideal_source(phase_model=SinePhaseScan(rate_khz=1.0))
        # quarter period of a 1 kHz drive is 250 us
        p = make_pulse(cfg, QubitLevel.L_PI, 250_000.0)
        assert p.phase_rad == pytest.approx(2.0 * math.pi, rel=1e-9)


class TestEtalon:
    def test_resonance_is_unity(self):
        cfg = FilterConfig((Etalon(22.1),))
        assert etalon_transmission(0.0, cfg) == pytest.approx(1.0)

    def test_half_width_gives_half_transmission(self):
        cfg = FilterConfig((Etalon(22.1),))
        assert etalon_transmission(11.05, cfg) == pytest.approx(0.5)

    def test_periodic_in_fsr(self):
        cfg = FilterConfig((Etalon(22.1, fsr_ghz=13.6),))
        assert etalon_transmission(13_600.0, cfg) == pytest.approx(1.0)

    def test_cascade_multiplies(self):
        cfg = FilterConfig((Etalon(22.1), Etalon(17.49)))
        t1 = etalon_transmission(5.0, FilterConfig((Etalon(22.1),)))
        t2 = etalon_transmission(5.0, FilterConfig((Etalon(17.49),)))
        assert etalon_transmission(5.0, cfg) == pytest.approx(t1 * t2)

    def test_insertion_loss(self):
        cfg = FilterConfig((Etalon(22.1, insertion_loss_db=1.0),))
        assert etalon_transmission(0.0, cfg) == pytest.approx(10 ** -0.1)

    @pytest.mark.parametrize("fwhm", [22.100, 17.490, 15.26, 13.99])
    def test_control_field_suppression(self, fwhm):
        # the 6.835 GHz control offset must see >= 50 dB per etalon with
        # the default mid-FSR placement
        cfg = FilterConfig((Etalon(fwhm),))
        t = etalon_transmission(6835.0, cfg)
        assert -10.0 * math.log10(t) >= 50.0

    def test_bounded_continuous_peaked(self):
        cfg = FilterConfig((Etalon(22.1), Etalon(15.26)))
        grid = np.linspace(-20_000.0, 20_000.0, 4001)
        vals = np.array([etalon_transmission(d, cfg) for d in grid])
        assert np.all(vals > 0.0) and np.all(vals <= 1.0)
        assert vals.max() == pytest.approx(etalon_transmission(0.0, cfg))

    def test_fsr_must_exceed_linewidth(self):
        with pytest.raises(ValueError):
            Etalon(22.1, fsr_ghz=0.00001)


def bob_like_memory() -> MemoryConfig:
    # tuned so a <n>=10 input retrieves ~0.01 at the detector side
    return MemoryConfig(eta_store_h=0.2, eta_store_v=0.2, transmission=0.005,
                        storage_time_us=1.0, retrieved_fwhm_ns=400.0,
                        leakage_fraction=0.3)


class TestStoreAndRetrieve:
    def test_bob_like_detector_side_mean(self):
        pulse = make_pulse(ideal_source(pulse_fwhm_ns=400.0, mean_photons=10.0),
                           QubitLevel.L_3HALF, 1000.0)
        rr = store_and_retrieve(pulse, bob_like_memory(), NoiseModel(sbr=37.0), 2000.0)
        assert rr.retrieved.mean_photons == pytest.approx(0.01, rel=1e-9)
        assert rr.retrieved.mode.envelope.center_ns == 2000.0
        assert rr.retrieved.mode.envelope.fwhm_ns == 400.0

    def test_zero_storage_keeps_leakage(self):
        pulse = make_pulse(ideal_source(mean_photons=1.0), QubitLevel.L_PI, 1000.0)
        mem = MemoryConfig(eta_store_h=0.0, eta_store_v=0.0, transmission=0.03,
                           leakage_fraction=0.5)
        rr = store_and_retrieve(pulse, mem, NoiseModel(), 3000.0)
        assert rr.retrieved.mean_photons == 0.0
        assert rr.leakage.mean_photons == pytest.approx(0.5 * 0.03)
        assert rr.leakage.mode.envelope.shape is EnvelopeShape.TRUNCATED_FRONT
        assert rr.leakage.mode.envelope.cut_ns == 1000.0

    def test_infinite_sbr_means_no_background(self):
        pulse = make_pulse(ideal_source(mean_photons=1.0), QubitLevel.L_PI, 1000.0)
        rr = store_and_retrieve(pulse, bob_like_memory(), NoiseModel(sbr=math.inf), 3000.0)
        assert rr.background_mean_per_roi == 0.0

    def test_background_scales_with_sbr(self):
        pulse = make_pulse(ideal_source(mean_photons=10.0), QubitLevel.L_PI, 1000.0)
        rr = store_and_retrieve(pulse, bob_like_memory(), NoiseModel(sbr=2.5), 3000.0)
        assert rr.background_mean_per_roi == pytest.approx(rr.retrieved.mean_photons / 2.5)

    def test_early_read_rejected(self):
        pulse = make_pulse(ideal_source(pulse_fwhm_ns=400.0, mean_photons=1.0),
                           QubitLevel.L_PI, 1000.0)
        with pytest.raises(ValueError, match="read_time"):
            store_and_retrieve(pulse, bob_like_memory(), NoiseModel(), 1100.0)

    def test_retrieved_spectrum_follows_control_shaping(self):
        pulse = make_pulse(ideal_source(pulse_fwhm_ns=150.0, mean_photons=1.0),
                           QubitLevel.L_PI, 1000.0)
        rr = store_and_retrieve(pulse, bob_like_memory(), NoiseModel(), 3000.0)
        assert rr.retrieved.mode.spectrum.bandwidth_mhz == pytest.approx(
            transform_limited_bandwidth_mhz(400.0))
        # leakage keeps the input spectrum
        assert rr.leakage.mode.spectrum.bandwidth_mhz == pytest.approx(
            transform_limited_bandwidth_mhz(150.0))

    def test_photon_bookkeeping_on_random_configs(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            eta = rng.uniform(0.0, 1.0)
            mem = MemoryConfig(
                eta_store_h=eta, eta_store_v=rng.uniform(0.0, eta),
                transmission=rng.uniform(0.0, 1.0),
                leakage_fraction=rng.uniform(0.0, 1.0 - eta),
            )
            n_in = rng.uniform(0.0, 20.0)
            pulse = make_pulse(ideal_source(mean_photons=n_in), QubitLevel.L_3HALF, 500.0)
            rr = store_and_retrieve(pulse, mem, NoiseModel(), 5000.0)
            assert rr.retrieved.mean_photons + rr.leakage.mean_photons <= n_in + 1e-12

    def test_leakage_plus_storage_budget_enforced(self):
        with pytest.raises(ValueError):
            MemoryConfig(eta_store_h=0.7, eta_store_v=0.7, transmission=1.0,
                         leakage_fraction=0.5)


class TestRailDistortion:
    def test_equal_rails_identity(self):
        out = unequal_rail_distortion(D, 0.2, 0.2)
        assert abs(polarization_overlap(out, D)) == pytest.approx(1.0)

    def test_h_is_eigenstate(self):
        out = unequal_rail_distortion(H, 0.13, 0.77)
        assert abs(polarization_overlap(out, H)) == pytest.approx(1.0)

    def test_diagonal_input_rotates_toward_strong_rail(self):
        # oracle: apply the diagonal map diag(sqrt(eta_h), sqrt(eta_v))
        # to the Jones vector directly and renormalize
        eta_h, eta_v = 0.2, 0.1
        out = unequal_rail_distortion(D, eta_h, eta_v)
        vec = np.array([math.sqrt(eta_h) * D.jones[0], math.sqrt(eta_v) * D.jones[1]])
        vec = vec / np.linalg.norm(vec)
        assert out.jones[0] == pytest.approx(vec[0])
        assert out.jones[1] == pytest.approx(vec[1])
        angle = math.degrees(math.atan2(abs(out.jones[1]), abs(out.jones[0])))
        assert angle == pytest.approx(math.degrees(math.atan(math.sqrt(0.1 / 0.2))))

    def test_both_rails_dead(self):
        with pytest.raises(ValueError):
            unequal_rail_distortion(D, 0.0, 0.0)

    def test_fully_extinguished_polarization(self):
        with pytest.raises(ValueError):
            unequal_rail_distortion(H, 0.0, 0.5)


class TestConfigValidation:
    def test_source_invariants(self):
        with pytest.raises(ValueError):
            SourceConfig(pulse_fwhm_ns=200.0, mean_photons=-1.0)
        with pytest.raises(ValueError):
            SourceConfig(pulse_fwhm_ns=200.0, mean_photons=1.0, rep_rate_khz=0.0)

    def test_trigger_period(self):
        assert ideal_source(rep_rate_khz=40.0).trigger_period_ns == pytest.approx(25_000.0)

    def test_noise_invariants(self):
        with pytest.raises(ValueError):
            NoiseModel(sbr=0.0)
        with pytest.raises(ValueError):
            NoiseModel(sbr=2.5, dark_rate_cps=-1.0)

    def test_detector_invariants(self):
        with pytest.raises(ValueError):
            DetectorConfig(efficiency=1.5)
        with pytest.raises(ValueError):
            DetectorConfig(resolution_ps=0)
