"""Coincidence analysis: ROI post-selection, counting, normalization,
maximum-likelihood visibility fits, SBR estimation, and the
visibility-vs-SBR background law.

Counting convention: a channel's singles count is the number of trigger
cycles with at least one tag inside the ROI, and a coincidence is a
cycle with at least one ROI tag on each channel.  This keeps counts in
one-to-one correspondence with the per-trigger click probabilities of
the interference model and guarantees c12 <= min(c1, c2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .timetags import Histogram, TimeTagStream

# minimum HOM visibility for a positive MDI-QKD key rate
MDIQKD_MIN_VISIBILITY = 0.37


class AnalysisError(Exception):
    """Raised when an analysis operation cannot produce a result."""


class FitError(AnalysisError):
    """Optimizer failed to converge; message carries diagnostics."""


class ZeroBackgroundError(AnalysisError):
    """SBR undefined because the background window is empty."""

    def __init__(self, lower_bound: float):
        self.lower_bound = lower_bound
        super().__init__(
            "no background counts in the background window; "
            f"SBR >= {lower_bound:.3g} (one-count lower bound)")


# ---------------------------------------------------------------------------
# regions of interest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Roi:
    """Disjoint half-open time windows [start_ns, end_ns) within one
    trigger cycle."""

    windows: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.windows:
            raise ValueError("ROI needs at least one window")
        wins = tuple((float(a), float(b)) for a, b in self.windows)
        for a, b in wins:
            if b <= a:
                raise ValueError(f"empty or inverted window [{a}, {b})")
            if a < 0.0:
                raise ValueError(f"window starts before the trigger at {a}")
        ordered = sorted(wins)
        for (a0, b0), (a1, b1) in zip(ordered, ordered[1:]):
            if a1 < b0:
                raise ValueError(f"overlapping windows [{a0},{b0}) and [{a1},{b1})")
        object.__setattr__(self, "windows", tuple(ordered))

    @property
    def total_width_ns(self) -> float:
        return sum(b - a for a, b in self.windows)

    def contains(self, t_ns: np.ndarray) -> np.ndarray:
        t = np.asarray(t_ns, dtype=float)
        mask = np.zeros(t.shape, dtype=bool)
        for a, b in self.windows:
            mask |= (t >= a) & (t < b)
        return mask


def shift_roi_for_delay(base_roi, delay_ns: float,
                        total_width_ns: float | None = None,
                        cycle_ns: float | None = None) -> Roi:
    """ROI placement for a delay scan.

    ``base_roi`` holds the two zero-delay signal windows, first window
    tracking the delayed arm; it may be an :class:`Roi` or a plain pair
    of (start_ns, end_ns) windows (the zero-delay windows typically
    coincide, which an Roi cannot represent).  The first window shifts
    by ``delay_ns``; where it overlaps the fixed window the merged
    region shrinks and a background-only window is appended one
    window-width after the merged region, keeping the total ROI width
    constant.
    """
    windows_in = base_roi.windows if isinstance(base_roi, Roi) else tuple(base_roi)
    if len(windows_in) != 2:
        raise ValueError("delay ROI policy expects exactly two base windows")
    (a0, a1), fixed = (tuple(map(float, windows_in[0])),
                       tuple(map(float, windows_in[1])))
    if total_width_ns is None:
        total = (a1 - a0) + (fixed[1] - fixed[0])
    else:
        total = float(total_width_ns)
    moving = (a0 + delay_ns, a1 + delay_ns)

    # merge the two (possibly overlapping) intervals
    ivs = sorted([moving, fixed])
    merged: list[tuple[float, float]] = [ivs[0]]
    for lo, hi in ivs[1:]:
        mlo, mhi = merged[-1]
        if lo <= mhi:
            merged[-1] = (mlo, max(mhi, hi))
        else:
            merged.append((lo, hi))
    width = sum(b - a for a, b in merged)

    filler = total - width
    if filler > 1e-9:
        anchor = merged[-1][1] + (a1 - a0)
        merged.append((anchor, anchor + filler))
    windows = tuple(merged)
    for a, b in windows:
        if a < 0.0 or (cycle_ns is not None and b > cycle_ns):
            raise ValueError(f"ROI window [{a}, {b}) exceeds the trigger cycle")
    return Roi(windows)


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountSummary:
    """(C1, C2, C12, N) for one scan point."""

    c1: int
    c2: int
    c12: int
    n_triggers: int

    def __post_init__(self) -> None:
        if min(self.c1, self.c2, self.c12, self.n_triggers) < 0:
            raise ValueError("counts must be non-negative")
        if self.c12 > min(self.c1, self.c2):
            raise ValueError("coincidences exceed a singles count")


def count_in_roi(stream: TimeTagStream, roi: Roi,
                 trigger_period_ns: float | None = None) -> CountSummary:
    """Count singles and coincidences inside the ROI.

    Singles are trigger cycles with at least one ROI tag on the channel;
    a coincidence is a cycle with ROI tags on both channels.
    """
    period_ps = (stream.header.trigger_period_ps if trigger_period_ns is None
                 else int(round(trigger_period_ns * 1000.0)))
    t = stream.times_ps
    folded_ns = (t % np.uint64(period_ps)).astype(float) / 1000.0
    in_roi = roi.contains(folded_ns)
    cycle = (t // np.uint64(period_ps)).astype(np.int64)
    cyc1 = np.unique(cycle[in_roi & (stream.channels == 0)])
    cyc2 = np.unique(cycle[in_roi & (stream.channels == 1)])
    c12 = np.intersect1d(cyc1, cyc2, assume_unique=True).size
    return CountSummary(int(cyc1.size), int(cyc2.size), int(c12),
                        stream.header.n_triggers)


@dataclass(frozen=True)
class PairCounts:
    """Intensity-correlation tallies: c1/c2 are total ROI tags per
    channel and c12 is the per-cycle tag-pair sum (n1 * n2 summed over
    cycles).  Unlike click counting this estimator stays linear in the
    optical intensity at any photon number, so its normalized rate
    measures the normalized second-order correlation directly."""

    c1: int
    c2: int
    c12: int
    n_triggers: int

    def __post_init__(self) -> None:
        if min(self.c1, self.c2, self.c12, self.n_triggers) < 0:
            raise ValueError("counts must be non-negative")


def pair_count_in_roi(stream: TimeTagStream, roi: Roi,
                      trigger_period_ns: float | None = None) -> PairCounts:
    """Tag-pair coincidence tally inside the ROI (see
    :class:`PairCounts`)."""
    period_ps = (stream.header.trigger_period_ps if trigger_period_ns is None
                 else int(round(trigger_period_ns * 1000.0)))
    t = stream.times_ps
    folded_ns = (t % np.uint64(period_ps)).astype(float) / 1000.0
    in_roi = roi.contains(folded_ns)
    cycle = (t // np.uint64(period_ps)).astype(np.int64)
    n = stream.header.n_triggers
    n1 = np.bincount(cycle[in_roi & (stream.channels == 0)], minlength=n)
    n2 = np.bincount(cycle[in_roi & (stream.channels == 1)], minlength=n)
    return PairCounts(int(n1.sum()), int(n2.sum()), int((n1 * n2).sum()), n)


def normalized_rate(cs) -> float:
    """N * C12 / (C1 * C2): unity for distinguishable pulses.  Accepts a
    :class:`CountSummary` or :class:`PairCounts`."""
    if cs.c1 == 0 or cs.c2 == 0:
        raise AnalysisError("normalized rate undefined with zero singles")
    return cs.n_triggers * cs.c12 / (cs.c1 * cs.c2)


def normalized_rate_sigma(cs) -> float:
    """Poisson standard error of :func:`normalized_rate`."""
    if cs.c12 == 0:
        # one-count floor keeps zero-coincidence points usable in fits
        return cs.n_triggers / (cs.c1 * cs.c2)
    rel = math.sqrt(1.0 / cs.c12 + 1.0 / cs.c1 + 1.0 / cs.c2)
    return normalized_rate(cs) * rel


# ---------------------------------------------------------------------------
# fit machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """MLE parameters with curvature-based uncertainties."""

    model: str
    params: dict[str, float]
    sigmas: dict[str, float]
    log_likelihood: float
    n_points: int

    def as_dict(self) -> dict:
        return {"model": self.model, "params": dict(self.params),
                "sigmas": dict(self.sigmas), "loglik": self.log_likelihood,
                "n_points": self.n_points}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


def _poisson_negll(lam: np.ndarray, k: np.ndarray) -> float:
    lam = np.maximum(lam, 1e-300)
    return float(np.sum(lam - k * np.log(lam)))


def _numeric_hessian(fun, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    n = x.size
    h = np.maximum(np.abs(x), 1.0) * rel_step
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n); ei[i] = h[i]
            ej = np.zeros(n); ej[j] = h[j]
            fpp = fun(x + ei + ej)
            fpm = fun(x + ei - ej)
            fmp = fun(x - ei + ej)
            fmm = fun(x - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return hess


def _curvature_sigmas(fun, x: np.ndarray) -> np.ndarray:
    hess = _numeric_hessian(fun, x)
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hess)
    diag = np.diag(cov).copy()
    diag[diag < 0.0] = np.nan
    return np.sqrt(diag)


def _mle(negll, starts, bounds, model: str):
    best = None
    for x0 in starts:
        res = optimize.minimize(negll, np.asarray(x0, dtype=float), method="L-BFGS-B",
                                bounds=bounds, options={"ftol": 1e-12, "gtol": 1e-9,
                                                        "maxiter": 500})
        if best is None or (res.success and res.fun < best.fun - 1e-12) \
                or (not best.success and res.success):
            best = res
    if best is None or not np.isfinite(best.fun):
        raise FitError(f"{model}: optimizer failed ({best})")
    if not best.success and best.status != 0:
        # L-BFGS-B reports ABNORMAL on genuinely pathological data
        raise FitError(f"{model}: no convergence after {best.nit} iterations: "
                       f"{best.message}")
    return best


# ---------------------------------------------------------------------------
# cos^2 polarization fit
# ---------------------------------------------------------------------------

def _fit_cos2_core(theta: np.ndarray, c12: np.ndarray, scale: np.ndarray):
    rad = np.radians(theta)

    def expected(x):
        a, v, th0 = x
        return scale * a * (1.0 - v * np.cos(rad - math.radians(th0)) ** 2)

    def negll(x):
        return _poisson_negll(expected(x), c12)

    rate = c12 / scale
    a0 = float(np.max(rate)) if np.max(rate) > 0 else 1.0
    v0 = float(np.clip(1.0 - (np.min(rate) / a0 if a0 > 0 else 1.0), 0.0, 1.0))
    starts = [(a0, v0, th0) for th0 in (-45.0, 0.0, 45.0)]
    starts.append((a0, v0, float(theta[np.argmin(rate)] % 180.0 - 90.0)))
    bounds = [(1e-12, None), (0.0, 1.0), (-90.0, 90.0)]
    best = _mle(negll, starts, bounds, "cos2")
    return best, expected, negll


def fit_cos2(points: list[tuple[float, CountSummary]],
             bootstrap: int = 0, seed: int = 0) -> FitResult:
    """MLM fit of C12/(C1*C2) = A * (1 - V cos^2(theta - theta0)) / N.

    Poisson likelihood on the coincidence counts conditioned on the
    measured singles; ``A`` is a free normalization.  ``bootstrap`` > 0
    replaces the curvature uncertainties with parametric-bootstrap ones.
    """
    if len(points) < 4:
        raise ValueError("cos^2 fit needs at least 4 scan points")
    theta = np.array([p[0] for p in points], dtype=float)
    if theta.max() - theta.min() < 90.0 - 1e-9:
        raise ValueError("cos^2 fit needs points spanning at least 90 degrees")
    c12 = np.array([p[1].c12 for p in points], dtype=float)
    scale = np.array([p[1].c1 * p[1].c2 / p[1].n_triggers for p in points], dtype=float)
    if np.any(scale <= 0.0):
        raise AnalysisError("cos^2 fit needs nonzero singles at every point")

    best, expected, negll = _fit_cos2_core(theta, c12, scale)
    names = ("amplitude", "visibility", "theta0_deg")
    if bootstrap > 0:
        def refit(k):
            res, _, _ = _fit_cos2_core(theta, k.astype(float), scale)
            return res.x
        sig = _bootstrap_sigmas(expected(best.x), refit, bootstrap, seed)
    else:
        sig = _curvature_sigmas(negll, best.x)
    return FitResult("cos2", dict(zip(names, map(float, best.x))),
                     dict(zip(names, map(float, sig))), -float(best.fun), len(points))


def _bootstrap_sigmas(lam, refit, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(n):
        k = rng.poisson(lam)
        try:
            draws.append(refit(k))
        except (FitError, AnalysisError, ValueError):
            continue
    if len(draws) < max(10, n // 10):
        raise FitError("bootstrap: too few successful refits")
    return np.std(np.asarray(draws), axis=0, ddof=1)


# ---------------------------------------------------------------------------
# Gaussian dip fit (delay scans)
# ---------------------------------------------------------------------------

def fit_gaussian_dip(points: list[tuple[float, CountSummary]]) -> FitResult:
    """MLM fit of the delay-scan dip: baseline * (1 - V exp(-(tau-tau0)^2/2s^2))."""
    if len(points) < 5:
        raise ValueError("dip fit needs at least 5 scan points including tails")
    tau = np.array([p[0] for p in points], dtype=float)
    c12 = np.array([p[1].c12 for p in points], dtype=float)
    scale = np.array([p[1].c1 * p[1].c2 / p[1].n_triggers for p in points], dtype=float)
    if np.any(scale <= 0.0):
        raise AnalysisError("dip fit needs nonzero singles at every point")

    def expected(x):
        base, v, center, sigma = x
        return scale * base * (1.0 - v * np.exp(-0.5 * ((tau - center) / sigma) ** 2))

    def negll(x):
        return _poisson_negll(expected(x), c12)

    rate = c12 / scale
    span = float(tau.max() - tau.min())
    base0 = float(np.median(np.concatenate([rate[:2], rate[-2:]])))
    base0 = base0 if base0 > 0 else max(float(np.max(rate)), 1e-6)
    v0 = float(np.clip(1.0 - np.min(rate) / base0, 0.0, 1.0))
    c_grid = (float(tau[np.argmin(rate)]), 0.0)
    starts = [(base0, v0, c, s) for c in c_grid for s in (span / 8.0, span / 4.0)]
    bounds = [(1e-12, None), (0.0, 1.0), (float(tau.min()), float(tau.max())),
              (span / 100.0, span)]
    best = _mle(negll, starts, bounds, "gaussian_dip")

    names = ("baseline", "visibility", "center_ns", "sigma_ns")
    sig = _curvature_sigmas(negll, best.x)
    return FitResult("gaussian_dip", dict(zip(names, map(float, best.x))),
                     dict(zip(names, map(float, sig))), -float(best.fun), len(points))


# ---------------------------------------------------------------------------
# SBR estimation and the background law
# ---------------------------------------------------------------------------

def estimate_sbr(histogram: Histogram, signal_roi: Roi, background_roi: Roi) -> float:
    """(signal - background) / background on width-normalized count rates
    in two disjoint windows of a folded histogram."""
    for a, b in signal_roi.windows:
        for c, d in background_roi.windows:
            if a < d and c < b:
                raise ValueError("signal and background windows overlap")
    centers = histogram.centers_ns

    def window_rate(roi: Roi) -> tuple[float, float]:
        mask = roi.contains(centers)
        width = float(mask.sum()) * histogram.bin_ns
        if width <= 0.0:
            raise ValueError("ROI covers no histogram bins")
        return float(histogram.counts[mask].sum()), width

    sig_counts, sig_width = window_rate(signal_roi)
    bg_counts, bg_width = window_rate(background_roi)
    if bg_counts == 0.0:
        lower = (sig_counts / sig_width) / (1.0 / bg_width) - 1.0
        raise ZeroBackgroundError(lower)
    sig_rate = sig_counts / sig_width
    bg_rate = bg_counts / bg_width
    return (sig_rate - bg_rate) / bg_rate


def visibility_vs_sbr(v_s: float, sbr: float) -> float:
    """Background-degraded HOM visibility V = V_s / (1 + 1/SBR)^2."""
    if not sbr > 0.0:
        raise ValueError("sbr must be > 0")
    return v_s / (1.0 + 1.0 / sbr) ** 2


def fit_sbr_model(points: list[tuple[float, float, float]]) -> FitResult:
    """Weighted least squares for V_s through V = V_s/(1+1/SBR)^2.

    Points are (sbr, visibility, sigma); sigma == 0 rows are allowed only
    when every row has sigma 0, in which case the fit is unweighted.
    The model is linear in V_s, so the estimate is closed-form.
    """
    if not points:
        raise AnalysisError("sbr fit needs at least one point")
    sbr = np.array([p[0] for p in points], dtype=float)
    vis = np.array([p[1] for p in points], dtype=float)
    sig = np.array([p[2] for p in points], dtype=float)
    if np.any(sbr <= 0.0):
        raise AnalysisError("sbr values must be > 0")
    m = (1.0 + 1.0 / sbr) ** -2
    weighted = bool(np.all(sig > 0.0))
    if not weighted and np.any(sig > 0.0):
        raise AnalysisError("mix of zero and nonzero sigmas; provide all or none")
    w = 1.0 / sig**2 if weighted else np.ones_like(sig)
    denom = float(np.sum(w * m * m))
    if denom <= 0.0:
        raise AnalysisError("degenerate sbr fit inputs")
    v_s = float(np.sum(w * m * vis) / denom)
    if weighted:
        sigma_vs = math.sqrt(1.0 / denom)
        ll = -0.5 * float(np.sum(((vis - v_s * m) / sig) ** 2))
    else:
        resid = vis - v_s * m
        dof = max(len(points) - 1, 1)
        sigma_vs = math.sqrt(float(np.sum(resid**2)) / dof / denom) if len(points) > 1 else 0.0
        ll = -0.5 * float(np.sum(resid**2))
    return FitResult("sbr", {"v_s": v_s}, {"v_s": sigma_vs}, ll, len(points))


def mdiqkd_threshold_check(v: float) -> bool:
    """True iff the visibility strictly exceeds the 37% MDI-QKD bound."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must be in [0, 1]")
    return v > MDIQKD_MIN_VISIBILITY
