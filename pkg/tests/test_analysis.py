"""Coincidence-analysis tests: counting, ROI bookkeeping, MLM fitters,
SBR estimation, and the visibility-vs-SBR law."""

import math

import numpy as np
import pytest

from homsim.analysis import (
    AnalysisError,
    CountSummary,
    FitError,
    Roi,
    ZeroBackgroundError,
    count_in_roi,
    estimate_sbr,
    fit_cos2,
    fit_gaussian_dip,
    fit_sbr_model,
    mdiqkd_threshold_check,
    normalized_rate,
    shift_roi_for_delay,
    visibility_vs_sbr,
)
from homsim.timetags import StreamHeader, TimeTag, TimeTagStream, fold_histogram

PERIOD_PS = 25_000_000  # 25 us cycles
HEADER5 = StreamHeader(trigger_period_ps=PERIOD_PS, n_triggers=5)


def stream_of(tags):
    return TimeTagStream.from_tags(HEADER5, sorted(tags))


def tag(cycle, t_ns, channel):
    return TimeTag(cycle * PERIOD_PS + int(t_ns * 1000), channel)


class TestCountInRoi:
    def test_pair_in_same_cycle(self):
        roi = Roi(((1000.0, 2000.0),))
        cs = count_in_roi(stream_of([tag(0, 1500, 0), tag(0, 1600, 1)]), roi)
        assert (cs.c1, cs.c2, cs.c12, cs.n_triggers) == (1, 1, 1, 5)

    def test_pair_in_different_cycles(self):
        roi = Roi(((1000.0, 2000.0),))
        cs = count_in_roi(stream_of([tag(0, 1500, 0), tag(1, 1600, 1)]), roi)
        assert (cs.c1, cs.c2, cs.c12) == (1, 1, 0)

    def test_hand_enumerated_five_cycles(self):
        # cycle 0: both channels in ROI -> coincidence
        # cycle 1: ch0 in ROI, ch1 outside -> single on 0
        # cycle 2: two ch1 tags in ROI -> one single on 1 (cycle counted once)
        # cycle 3: both in ROI -> coincidence
        # cycle 4: nothing in ROI
        roi = Roi(((1000.0, 2000.0),))
        tags = [
            tag(0, 1100, 0), tag(0, 1900, 1),
            tag(1, 1500, 0), tag(1, 2500, 1),
            tag(2, 1200, 1), tag(2, 1300, 1),
            tag(3, 1999, 0), tag(3, 1000, 1),
            tag(4, 900, 0),
        ]
        cs = count_in_roi(stream_of(tags), roi)
        assert (cs.c1, cs.c2, cs.c12, cs.n_triggers) == (3, 3, 2, 5)

    def test_multi_window_roi(self):
        roi = Roi(((1000.0, 1200.0), (3000.0, 3200.0)))
        cs = count_in_roi(stream_of([tag(0, 1100, 0), tag(0, 3100, 1)]), roi)
        assert cs.c12 == 1

    def test_window_edges_half_open(self):
        roi = Roi(((1000.0, 2000.0),))
        cs = count_in_roi(stream_of([tag(0, 2000, 0), tag(1, 1000, 0)]), roi)
        assert cs.c1 == 1  # 2000 excluded, 1000 included


class TestNormalizedRate:
    def test_arithmetic(self):
        assert normalized_rate(CountSummary(100, 100, 5, 2000)) == pytest.approx(1.0)

    def test_zero_singles_rejected(self):
        with pytest.raises(AnalysisError):
            normalized_rate(CountSummary(0, 10, 0, 100))

    def test_invariant_enforced(self):
        with pytest.raises(ValueError):
            CountSummary(3, 10, 5, 100)

    def test_independent_channels_give_unity(self):
        rng = np.random.default_rng(17)
        n = 200_000
        p1, p2 = 0.05, 0.04
        click1 = rng.random(n) < p1
        click2 = rng.random(n) < p2
        cs = CountSummary(int(click1.sum()), int(click2.sum()),
                          int((click1 & click2).sum()), n)
        rate = normalized_rate(cs)
        sigma = rate / math.sqrt(cs.c12)
        assert abs(rate - 1.0) < 3.0 * sigma


class TestShiftRoi:
    BASE = ((2000.0, 2300.0), (2000.0, 2300.0))  # 0.3 us windows, 0.6 us total

    def test_full_overlap_adds_background_window(self):
        roi = shift_roi_for_delay(self.BASE, 0.0)
        assert len(roi.windows) == 2
        assert roi.windows[0] == (2000.0, 2300.0)
        assert roi.windows[1][1] - roi.windows[1][0] == pytest.approx(300.0)
        assert roi.total_width_ns == pytest.approx(600.0)

    def test_disjoint_beyond_window_width(self):
        roi = shift_roi_for_delay(self.BASE, 450.0)
        assert len(roi.windows) == 2
        assert roi.windows == ((2000.0, 2300.0), (2450.0, 2750.0))

    def test_partial_overlap_interval_arithmetic(self):
        # delay 150 ns: union is 450 ns wide, filler restores 600 ns
        roi = shift_roi_for_delay(self.BASE, 150.0)
        widths = [b - a for a, b in roi.windows]
        assert widths[0] == pytest.approx(450.0)
        assert widths[1] == pytest.approx(150.0)
        assert roi.total_width_ns == pytest.approx(600.0)

    def test_width_preserved_on_dense_grid(self):
        for delay in np.linspace(-800.0, 800.0, 161):
            roi = shift_roi_for_delay(self.BASE, float(delay))
            assert roi.total_width_ns == pytest.approx(600.0, abs=1e-9)

    def test_exceeding_cycle_rejected(self):
        with pytest.raises(ValueError):
            shift_roi_for_delay(self.BASE, 400.0, cycle_ns=2600.0)
        with pytest.raises(ValueError):
            shift_roi_for_delay(self.BASE, -2100.0)


def synth_cos2_counts(rng, amplitude, visibility, theta0, thetas, singles, n):
    pts = []
    for th in thetas:
        lam = (singles * singles / n) * amplitude * (
            1.0 - visibility * math.cos(math.radians(th - theta0)) ** 2)
        c12 = int(rng.poisson(lam))
        pts.append((th, CountSummary(singles, singles, c12, n)))
    return pts


def synth_dip_counts(rng, baseline, visibility, center, sigma, taus, singles, n):
    pts = []
    for tau in taus:
        lam = (singles * singles / n) * baseline * (
            1.0 - visibility * math.exp(-0.5 * ((tau - center) / sigma) ** 2))
        c12 = int(rng.poisson(lam))
        pts.append((tau, CountSummary(singles, singles, c12, n)))
    return pts


THETAS = tuple(np.linspace(0.0, 180.0, 13))
TAUS = tuple(np.linspace(-1200.0, 1200.0, 13))


class TestFitCos2:
    def test_recovers_synthetic_truth(self):
        rng = np.random.default_rng(31)
        # ~1e4 coincidences per point
        pts = synth_cos2_counts(rng, 1.0, 0.42, 0.0, THETAS, 100_000, 1_000_000)
        res = fit_cos2(pts)
        assert abs(res.params["visibility"] - 0.42) < 2.0 * res.sigmas["visibility"]
        assert abs(res.params["theta0_deg"] - 0.0) < 1.0

    def test_zero_visibility_consistent_with_zero(self):
        rng = np.random.default_rng(32)
        pts = synth_cos2_counts(rng, 1.0, 0.0, 0.0, THETAS, 50_000, 1_000_000)
        res = fit_cos2(pts)
        assert res.params["visibility"] < 2.0 * max(res.sigmas["visibility"], 1e-4)

    def test_theta0_recovered_within_one_degree(self):
        rng = np.random.default_rng(33)
        pts = synth_cos2_counts(rng, 1.2, 0.45, 10.0, THETAS, 100_000, 1_000_000)
        res = fit_cos2(pts)
        assert abs(res.params["theta0_deg"] - 10.0) < 1.0

    def test_requires_span_and_points(self):
        rng = np.random.default_rng(34)
        pts = synth_cos2_counts(rng, 1.0, 0.4, 0.0, (0.0, 10.0, 20.0, 30.0),
                                10_000, 100_000)
        with pytest.raises(ValueError):
            fit_cos2(pts)
        with pytest.raises(ValueError):
            fit_cos2(pts[:3])

    def test_bootstrap_agrees_with_curvature(self):
        rng = np.random.default_rng(35)
        pts = synth_cos2_counts(rng, 1.0, 0.42, 0.0, THETAS, 50_000, 1_000_000)
        res = fit_cos2(pts)
        boot = fit_cos2(pts, bootstrap=60, seed=5)
        assert boot.sigmas["visibility"] == pytest.approx(
            res.sigmas["visibility"], rel=0.5)

    def test_json_record_shape(self):
        rng = np.random.default_rng(36)
        pts = synth_cos2_counts(rng, 1.0, 0.4, 0.0, THETAS, 20_000, 200_000)
        rec = fit_cos2(pts).as_dict()
        assert set(rec) == {"model", "params", "sigmas", "loglik", "n_points"}
        assert rec["model"] == "cos2"
        assert rec["n_points"] == len(THETAS)


class TestFitGaussianDip:
    def test_recovers_synthetic_truth(self):
        rng = np.random.default_rng(41)
        pts = synth_dip_counts(rng, 1.0, 0.25, 0.0, 300.0, TAUS, 100_000, 1_000_000)
        res = fit_gaussian_dip(pts)
        assert abs(res.params["visibility"] - 0.25) < 2.0 * res.sigmas["visibility"]
        assert abs(res.params["center_ns"]) < 3.0 * res.sigmas["center_ns"] + 20.0

    def test_flat_data_zero_visibility(self):
        rng = np.random.default_rng(42)
        pts = synth_dip_counts(rng, 1.0, 0.0, 0.0, 300.0, TAUS, 50_000, 1_000_000)
        res = fit_gaussian_dip(pts)
        assert res.params["visibility"] < 2.0 * max(res.sigmas["visibility"], 1e-4)

    def test_needs_five_points(self):
        rng = np.random.default_rng(43)
        pts = synth_dip_counts(rng, 1.0, 0.3, 0.0, 300.0, TAUS[:4], 10_000, 100_000)
        with pytest.raises(ValueError):
            fit_gaussian_dip(pts)


class TestSbr:
    def make_hist(self, signal_counts, bg_counts):
        # two equal 100 ns windows on a 1000 ns cycle, 10 ns bins
        header = StreamHeader(trigger_period_ps=1_000_000, n_triggers=1)
        tags = []
        t = 0
        for _ in range(signal_counts):
            tags.append(TimeTag(t * 7 % 100_000 + 100_000, 0)); t += 1
        for _ in range(bg_counts):
            tags.append(TimeTag(t * 13 % 100_000 + 500_000, 0)); t += 1
        stream = TimeTagStream.from_tags(header, sorted(tags))
        return fold_histogram(stream, 0, 10.0)

    def test_paper_arithmetic(self):
        h = self.make_hist(350, 100)
        sbr = estimate_sbr(h, Roi(((100.0, 200.0),)), Roi(((500.0, 600.0),)))
        assert sbr == pytest.approx(2.5)

    def test_background_only_gives_zero(self):
        h = self.make_hist(100, 100)
        sbr = estimate_sbr(h, Roi(((100.0, 200.0),)), Roi(((500.0, 600.0),)))
        assert sbr == pytest.approx(0.0)

    def test_zero_background_reports_lower_bound(self):
        h = self.make_hist(350, 0)
        with pytest.raises(ZeroBackgroundError) as err:
            estimate_sbr(h, Roi(((100.0, 200.0),)), Roi(((500.0, 600.0),)))
        assert err.value.lower_bound > 0.0

    def test_overlapping_windows_rejected(self):
        h = self.make_hist(10, 10)
        with pytest.raises(ValueError):
            estimate_sbr(h, Roi(((100.0, 200.0),)), Roi(((150.0, 250.0),)))


class TestVisibilityVsSbr:
    def test_limit_is_vs(self):
        assert visibility_vs_sbr(0.45, math.inf) == pytest.approx(0.45)

    def test_paper_single_photon_point(self):
        assert visibility_vs_sbr(0.45, 2.5) == pytest.approx(0.2296, abs=5e-4)

    def test_paper_dual_rail_point(self):
        v = visibility_vs_sbr(0.45, 37.0)
        assert v == pytest.approx(0.4266, abs=5e-4)
        assert abs(v - 0.419) < 3.0 * 0.020  # within 3 sigma of the measured value

    def test_strictly_increasing_to_zero_limit(self):
        grid = np.logspace(-3, 6, 40)
        vals = [visibility_vs_sbr(0.45, s) for s in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[0] < 1e-5

    def test_requires_positive_sbr(self):
        with pytest.raises(ValueError):
            visibility_vs_sbr(0.45, 0.0)


class TestFitSbrModel:
    def test_exact_recovery_noise_free(self):
        pts = [(s, visibility_vs_sbr(0.45, s), 0.0) for s in (2.5, 5.0, 10.0, 37.0)]
        res = fit_sbr_model(pts)
        assert res.params["v_s"] == pytest.approx(0.45, abs=1e-12)

    def test_paper_measured_set(self):
        # (SBR, V, sigma) as reported for the five experiments
        pts = [(2.6, 0.259, 0.025), (2.4, 0.203, 0.023), (37.0, 0.419, 0.020),
               (24.0, 0.358, 0.017), (1000.0, 0.45, 0.02)]
        res = fit_sbr_model(pts)
        assert res.params["v_s"] == pytest.approx(0.45, abs=0.03)

    def test_single_point_infinite_proxy(self):
        res = fit_sbr_model([(1e6, 0.5, 0.0)])
        assert res.params["v_s"] == pytest.approx(0.5, rel=1e-5)

    def test_degenerate_rejected(self):
        with pytest.raises(AnalysisError):
            fit_sbr_model([])
        with pytest.raises(AnalysisError):
            fit_sbr_model([(-1.0, 0.3, 0.01)])


class TestThreshold:
    def test_paper_values(self):
        assert mdiqkd_threshold_check(0.419) is True
        assert mdiqkd_threshold_check(0.259) is False

    def test_boundary_is_strict(self):
        assert mdiqkd_threshold_check(0.37) is False

    def test_domain_checked(self):
        with pytest.raises(ValueError):
            mdiqkd_threshold_check(1.5)
