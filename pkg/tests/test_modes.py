"""Mode-overlap tests.

Expected values for the non-trivial cases are computed by an independent
quadrature oracle (scipy.integrate.quad over integrands written out here
from first principles) and frozen as constants alongside.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from homsim.modes import (
    A,
    D,
    H,
    V,
    OpticalMode,
    PolarizationState,
    SpectralMode,
    TemporalEnvelope,
    gaussian_spectral_overlap,
    gaussian_temporal_overlap,
    linear,
    mode_overlap,
    polarization_overlap,
    rotate,
    spectral_overlap,
    temporal_overlap,
)


def oracle_gaussian_amplitude_overlap(delta, fwhm_a, fwhm_b):
    """Independent quadrature of the amplitude inner product of two
    unit-normalized Gaussian intensity profiles."""
    sa = fwhm_a / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    sb = fwhm_b / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    def integrand(x):
        ia = math.exp(-0.5 * (x / sa) ** 2) / (sa * math.sqrt(2 * math.pi))
        ib = math.exp(-0.5 * ((x - delta) / sb) ** 2) / (sb * math.sqrt(2 * math.pi))
        return math.sqrt(ia * ib)

    val, err = quad(integrand, -10 * max(sa, sb), delta + 10 * max(sa, sb),
                    limit=400, epsabs=1e-13, epsrel=1e-13)
    assert err < 1e-12
    return val


class TestPolarization:
    def test_identical_states(self):
        assert polarization_overlap(H, H) == pytest.approx(1.0)

    def test_orthogonal_states(self):
        assert polarization_overlap(H, V) == pytest.approx(0.0, abs=1e-15)

    def test_h_against_diagonal(self):
        z = polarization_overlap(H, D)
        assert z == pytest.approx(1.0 / math.sqrt(2.0))
        assert abs(z) ** 2 == pytest.approx(0.5)

    def test_dop_scales_overlap(self):
        a = PolarizationState((1, 0), dop=0.96)
        b = PolarizationState((1, 0), dop=0.96)
        assert abs(polarization_overlap(a, b)) == pytest.approx(0.96)

    def test_cos2_law_on_grid(self):
        for theta in np.linspace(0.0, 180.0, 37):
            z = polarization_overlap(H, linear(theta))
            assert abs(z) ** 2 == pytest.approx(math.cos(math.radians(theta)) ** 2,
                                                abs=1e-12)

    def test_normalization_enforced(self):
        s = PolarizationState((3.0, 4.0))
        assert abs(s.jones[0]) ** 2 + abs(s.jones[1]) ** 2 == pytest.approx(1.0)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            PolarizationState((0, 0))
        with pytest.raises(ValueError):
            PolarizationState((1, 0), dop=1.5)

    def test_rotation_moves_h_to_d(self):
        assert abs(polarization_overlap(rotate(H, 45.0), D)) == pytest.approx(1.0)


class TestTemporal:
    def test_identical_gaussians(self):
        e = TemporalEnvelope.gaussian(0.0, 200.0)
        assert temporal_overlap(e, e).real == pytest.approx(1.0, abs=1e-9)

    def test_delay_equal_to_fwhm(self):
        # |zeta_t|^2 = exp(-2 ln 2) = 0.25 for delay = fwhm
        a = TemporalEnvelope.gaussian(0.0, 200.0)
        b = TemporalEnvelope.gaussian(200.0, 200.0)
        z = temporal_overlap(a, b).real
        oracle = oracle_gaussian_amplitude_overlap(200.0, 200.0, 200.0)
        assert z == pytest.approx(oracle, abs=1e-9)
        assert z**2 == pytest.approx(0.25, abs=1e-9)
        assert z**2 == pytest.approx(math.exp(-2.0 * math.log(2.0)), abs=1e-12)

    def test_large_delay_vanishes(self):
        a = TemporalEnvelope.gaussian(0.0, 200.0)
        b = TemporalEnvelope.gaussian(50_000.0, 200.0)
        assert abs(temporal_overlap(a, b)) < 1e-9

    def test_unequal_widths_match_oracle(self):
        a = TemporalEnvelope.gaussian(0.0, 150.0)
        b = TemporalEnvelope.gaussian(120.0, 400.0)
        oracle = oracle_gaussian_amplitude_overlap(120.0, 150.0, 400.0)
        assert temporal_overlap(a, b).real == pytest.approx(oracle, abs=1e-9)
        assert gaussian_temporal_overlap(a, b).real == pytest.approx(oracle, abs=1e-12)

    def test_truncated_front_normalized(self):
        e = TemporalEnvelope.truncated_front(100.0, 200.0)
        # integrate up to the cut so the jump sits on the domain boundary
        val, err = quad(lambda x: e.intensity(np.array([x]))[0], -1500.0, 100.0, limit=400, epsabs=1e-13)
        assert err < 1e-9
        assert val == pytest.approx(1.0, abs=1e-9)
        assert e.intensity(np.array([100.1]))[0] == 0.0  # nothing after the cut

    def test_truncated_pair_against_oracle(self):
        a = TemporalEnvelope.truncated_front(0.0, 150.0)
        b = TemporalEnvelope.truncated_front(0.0, 400.0)

        def integrand(x):
            if x > 0.0:
                return 0.0
            sa = 150.0 / (2 * math.sqrt(2 * math.log(2)))
            sb = 400.0 / (2 * math.sqrt(2 * math.log(2)))
            ia = 2.0 * math.exp(-0.5 * (x / sa) ** 2) / (sa * math.sqrt(2 * math.pi))
            ib = 2.0 * math.exp(-0.5 * (x / sb) ** 2) / (sb * math.sqrt(2 * math.pi))
            return math.sqrt(ia * ib)

        oracle, err = quad(integrand, -2000.0, 0.0, limit=400, epsabs=1e-13)
        assert err < 1e-9
        assert temporal_overlap(a, b).real == pytest.approx(oracle, abs=1e-7)

    def test_invalid_fwhm(self):
        with pytest.raises(ValueError):
            TemporalEnvelope.gaussian(0.0, -1.0)


class TestSpectral:
    def test_equal_modes(self):
        m = SpectralMode(0.0, 1.0)
        assert spectral_overlap(m, m).real == pytest.approx(1.0, abs=1e-9)

    def test_far_detuned_vanishes(self):
        assert abs(spectral_overlap(SpectralMode(0.0, 1.0), SpectralMode(100.0, 1.0))) < 1e-9

    def test_one_mhz_offset_one_mhz_bandwidths(self):
        # same oracle as temporal_overlap, in the frequency domain
        a = SpectralMode(0.0, 1.0)
        b = SpectralMode(1.0, 1.0)
        oracle = oracle_gaussian_amplitude_overlap(1.0, 1.0, 1.0)
        z = spectral_overlap(a, b).real
        assert z == pytest.approx(oracle, abs=1e-9)
        assert z == pytest.approx(0.5, abs=1e-9)  # exp(-ln 2)
        assert gaussian_spectral_overlap(a, b).real == pytest.approx(oracle, abs=1e-12)

    def test_monochromatic_pair(self):
        assert spectral_overlap(SpectralMode(0.0, 0.0), SpectralMode(0.0, 0.0)).real == 1.0
        assert spectral_overlap(SpectralMode(0.0, 0.0), SpectralMode(1.0, 0.0)).real == 0.0


def _random_mode(rng):
    jones = rng.normal(size=2) + 1j * rng.normal(size=2)
    pol = PolarizationState(tuple(jones), dop=rng.uniform(0.0, 1.0))
    env = TemporalEnvelope.gaussian(rng.uniform(-300, 300), rng.uniform(50, 500))
    spec = SpectralMode(rng.uniform(-3, 3), rng.uniform(0.5, 5.0))
    return OpticalMode(env, spec, pol)


class TestModeOverlap:
    def test_identical_modes(self):
        m = OpticalMode(TemporalEnvelope.gaussian(0.0, 200.0), SpectralMode(0.0, 2.2), H)
        assert abs(mode_overlap(m, m)) == pytest.approx(1.0, abs=1e-9)

    def test_polarization_angle_only(self):
        dop = 0.96
        for theta in (0.0, 30.0, 45.0, 60.0):
            a = OpticalMode(TemporalEnvelope.gaussian(0.0, 200.0), SpectralMode(0.0, 2.2),
                            linear(0.0, dop))
            b = OpticalMode(TemporalEnvelope.gaussian(0.0, 200.0), SpectralMode(0.0, 2.2),
                            linear(theta, dop))
            expected = math.cos(math.radians(theta)) ** 2 * dop**2
            assert abs(mode_overlap(a, b)) ** 2 == pytest.approx(expected, abs=1e-9)

    def test_delayed_gaussians(self):
        a = OpticalMode(TemporalEnvelope.gaussian(0.0, 200.0), SpectralMode(0.0, 2.2), H)
        b = OpticalMode(TemporalEnvelope.gaussian(200.0, 200.0), SpectralMode(0.0, 2.2), H)
        assert abs(mode_overlap(a, b)) ** 2 == pytest.approx(0.25, abs=1e-9)

    def test_bounded_and_hermitian_on_random_modes(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b = _random_mode(rng), _random_mode(rng)
            zab = mode_overlap(a, b)
            zba = mode_overlap(b, a)
            assert abs(zab) <= 1.0 + 1e-9
            assert zab == pytest.approx(zba.conjugate(), abs=1e-9)

    def test_self_overlap_unity_for_full_dop(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = _random_mode(rng)
            m = OpticalMode(m.envelope, m.spectrum,
                            PolarizationState(m.polarization.jones, dop=1.0))
            assert abs(mode_overlap(m, m)) == pytest.approx(1.0, abs=1e-9)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            a, b = _random_mode(rng), _random_mode(rng)
            chi = rng.uniform(0.0, 2 * math.pi)
            jones = (b.polarization.jones[0] * complex(math.cos(chi), math.sin(chi)),
                     b.polarization.jones[1] * complex(math.cos(chi), math.sin(chi)))
            b2 = OpticalMode(b.envelope, b.spectrum,
                             PolarizationState(jones, b.polarization.dop))
            assert abs(mode_overlap(a, b2)) == pytest.approx(abs(mode_overlap(a, b)),
                                                             abs=1e-12)
