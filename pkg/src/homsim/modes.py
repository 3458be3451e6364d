"""Optical mode descriptions and pairwise mode-overlap computation.

Two pulses interfere at a beamsplitter only to the extent that their
modes match.  Each pulse mode is modeled as a product of a temporal
envelope, a Gaussian spectral profile and a polarization state; the
amplitude overlap factorizes accordingly,

    zeta = zeta_t * zeta_s * zeta_p,    |zeta| <= 1,

and feeds the interference engine.  Temporal and spectral overlaps are
computed by fixed-step quadrature; closed forms for the all-Gaussian
cases are exposed for cross-checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Gaussian intensity FWHM <-> standard deviation
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

# quadrature settings: nodes over the support intersection; amplitudes
# decay at half the intensity rate, so a 12 sigma intensity support is
# needed to keep amplitude-overlap truncation below 1e-10 (tighter than
# the 6 sigma / 2001 node floor the overlap contract guarantees)
QUAD_NODES = 4001
SUPPORT_SIGMAS = 12.0


# ---------------------------------------------------------------------------
# polarization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarizationState:
    """Jones vector (H, V components) plus a scalar degree of polarization.

    The Jones vector is renormalized on construction.  The depolarized
    fraction is treated as fully distinguishable light, so overlaps are
    scaled by sqrt(dop_a * dop_b).
    """

    jones: tuple[complex, complex]
    dop: float = 1.0

    def __post_init__(self) -> None:
        jh, jv = complex(self.jones[0]), complex(self.jones[1])
        norm = math.hypot(abs(jh), abs(jv))
        if norm == 0.0:
            raise ValueError("Jones vector must be nonzero")
        if not 0.0 <= self.dop <= 1.0:
            raise ValueError(f"dop must be in [0, 1], got {self.dop}")
        object.__setattr__(self, "jones", (jh / norm, jv / norm))

    @property
    def power_h(self) -> float:
        return abs(self.jones[0]) ** 2

    @property
    def power_v(self) -> float:
        return abs(self.jones[1]) ** 2

    def orthogonal(self) -> "PolarizationState":
        """State with ``polarization_overlap(self, result) == 0``."""
        jh, jv = self.jones
        return PolarizationState((-jv.conjugate(), jh.conjugate()), self.dop)


def linear(angle_deg: float, dop: float = 1.0) -> PolarizationState:
    """Linear polarization at ``angle_deg`` from horizontal."""
    a = math.radians(angle_deg)
    return PolarizationState((math.cos(a), math.sin(a)), dop)


def rotate(state: PolarizationState, angle_deg: float) -> PolarizationState:
    """Rotate a Jones vector by ``angle_deg`` (ideal half-wave-plate pair)."""
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    jh, jv = state.jones
    return PolarizationState((c * jh - s * jv, s * jh + c * jv), state.dop)


H = linear(0.0)
V = linear(90.0)
D = linear(45.0)
A = linear(135.0)


def polarization_overlap(a: PolarizationState, b: PolarizationState) -> complex:
    """Amplitude overlap <a|b> scaled by sqrt(dop_a * dop_b)."""
    inner = a.jones[0].conjugate() * b.jones[0] + a.jones[1].conjugate() * b.jones[1]
    return math.sqrt(a.dop * b.dop) * inner


# ---------------------------------------------------------------------------
# temporal envelopes
# ---------------------------------------------------------------------------

class EnvelopeShape(enum.Enum):
    GAUSSIAN = "gaussian"
    TRUNCATED_FRONT = "truncated_front"


@dataclass(frozen=True)
class TemporalEnvelope:
    """Unit-normalized intensity profile of a pulse, all times in ns.

    ``TRUNCATED_FRONT`` is a Gaussian whose intensity is zeroed after
    ``cut_ns`` and renormalized; it models the unstored leakage that
    exits a memory before the control field switches off.  ``cut_ns``
    defaults to the pulse center.
    """

    shape: EnvelopeShape
    center_ns: float
    fwhm_ns: float
    cut_ns: float | None = None

    def __post_init__(self) -> None:
        if self.fwhm_ns <= 0.0:
            raise ValueError(f"fwhm_ns must be > 0, got {self.fwhm_ns}")
        if self.shape is EnvelopeShape.TRUNCATED_FRONT and self.cut_ns is None:
            object.__setattr__(self, "cut_ns", self.center_ns)
        if self.shape is EnvelopeShape.GAUSSIAN and self.cut_ns is not None:
            raise ValueError("cut_ns applies only to TRUNCATED_FRONT envelopes")

    @classmethod
    def gaussian(cls, center_ns: float, fwhm_ns: float) -> "TemporalEnvelope":
        return cls(EnvelopeShape.GAUSSIAN, center_ns, fwhm_ns)

    @classmethod
    def truncated_front(cls, center_ns: float, fwhm_ns: float,
                        cut_ns: float | None = None) -> "TemporalEnvelope":
        return cls(EnvelopeShape.TRUNCATED_FRONT, center_ns, fwhm_ns, cut_ns)

    @property
    def sigma_ns(self) -> float:
        """Standard deviation of the (untruncated) intensity profile."""
        return self.fwhm_ns * FWHM_TO_SIGMA

    def support(self) -> tuple[float, float]:
        """Interval outside which the intensity is negligible."""
        lo = self.center_ns - SUPPORT_SIGMAS * self.sigma_ns
        hi = self.center_ns + SUPPORT_SIGMAS * self.sigma_ns
        if self.shape is EnvelopeShape.TRUNCATED_FRONT:
            hi = min(hi, float(self.cut_ns))
        return lo, hi

    def intensity(self, t_ns: np.ndarray) -> np.ndarray:
        """Unit-normalized intensity profile evaluated at ``t_ns``."""
        t = np.asarray(t_ns, dtype=float)
        s = self.sigma_ns
        g = np.exp(-0.5 * ((t - self.center_ns) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        if self.shape is EnvelopeShape.TRUNCATED_FRONT:
            # renormalize by the kept Gaussian mass
            z = (float(self.cut_ns) - self.center_ns) / s
            kept = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
            if kept <= 0.0:
                raise ValueError("cut_ns removes the whole pulse")
            g = np.where(t <= float(self.cut_ns), g / kept, 0.0)
        return g

    def amplitude(self, t_ns: np.ndarray) -> np.ndarray:
        """sqrt of the intensity profile (field amplitude up to phase)."""
        return np.sqrt(self.intensity(t_ns))


def _overlap_grid(a_lo: float, a_hi: float, b_lo: float, b_hi: float) -> np.ndarray | None:
    """Quadrature grid over the support intersection, where the product
    of the amplitudes lives.  Ending the grid at an envelope's cut time
    keeps truncation discontinuities off the integration domain."""
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    if hi <= lo:
        return None
    return np.linspace(lo, hi, QUAD_NODES)


def temporal_overlap(a: TemporalEnvelope, b: TemporalEnvelope) -> complex:
    """Amplitude inner product of two unit-normalized envelopes.

    Fixed-step trapezoid quadrature over the overlap of the supports;
    exact to ~1e-10 for the shapes modeled here.
    """
    t = _overlap_grid(*a.support(), *b.support())
    if t is None:
        return complex(0.0)
    val = np.trapezoid(a.amplitude(t) * b.amplitude(t), t)
    return complex(val)


def gaussian_temporal_overlap(a: TemporalEnvelope, b: TemporalEnvelope) -> complex:
    """Closed form of ``temporal_overlap`` for two Gaussian envelopes."""
    if not (a.shape is EnvelopeShape.GAUSSIAN and b.shape is EnvelopeShape.GAUSSIAN):
        raise ValueError("closed form requires Gaussian envelopes")
    sa, sb = a.sigma_ns, b.sigma_ns
    delta = a.center_ns - b.center_ns
    pref = math.sqrt(2.0 * sa * sb / (sa * sa + sb * sb))
    return complex(pref * math.exp(-delta * delta / (4.0 * (sa * sa + sb * sb))))


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralMode:
    """Gaussian spectral profile: detuning from the probe reference and
    intensity FWHM, both in MHz.  Zero bandwidth means an ideal
    monochromatic line."""

    detuning_mhz: float = 0.0
    bandwidth_mhz: float = 0.0

    def __post_init__(self) -> None:
        if self.bandwidth_mhz < 0.0:
            raise ValueError(f"bandwidth_mhz must be >= 0, got {self.bandwidth_mhz}")


def spectral_overlap(a: SpectralMode, b: SpectralMode) -> complex:
    """Amplitude overlap of two Gaussian spectra (same quadrature scheme
    as ``temporal_overlap``, in the frequency domain)."""
    if a.bandwidth_mhz == 0.0 and b.bandwidth_mhz == 0.0:
        return complex(1.0 if a.detuning_mhz == b.detuning_mhz else 0.0)
    if a.bandwidth_mhz == 0.0 or b.bandwidth_mhz == 0.0:
        # line against a band: vanishing amplitude overlap in this model
        return complex(0.0)
    sa = a.bandwidth_mhz * FWHM_TO_SIGMA
    sb = b.bandwidth_mhz * FWHM_TO_SIGMA
    nu = _overlap_grid(a.detuning_mhz - SUPPORT_SIGMAS * sa, a.detuning_mhz + SUPPORT_SIGMAS * sa,
                       b.detuning_mhz - SUPPORT_SIGMAS * sb, b.detuning_mhz + SUPPORT_SIGMAS * sb)
    if nu is None:
        return complex(0.0)
    fa = np.exp(-0.25 * ((nu - a.detuning_mhz) / sa) ** 2) / math.sqrt(sa * math.sqrt(2.0 * math.pi))
    fb = np.exp(-0.25 * ((nu - b.detuning_mhz) / sb) ** 2) / math.sqrt(sb * math.sqrt(2.0 * math.pi))
    return complex(np.trapezoid(fa * fb, nu))


def gaussian_spectral_overlap(a: SpectralMode, b: SpectralMode) -> complex:
    """Closed form of ``spectral_overlap`` for nonzero bandwidths."""
    if a.bandwidth_mhz <= 0.0 or b.bandwidth_mhz <= 0.0:
        raise ValueError("closed form requires nonzero bandwidths")
    sa = a.bandwidth_mhz * FWHM_TO_SIGMA
    sb = b.bandwidth_mhz * FWHM_TO_SIGMA
    delta = a.detuning_mhz - b.detuning_mhz
    pref = math.sqrt(2.0 * sa * sb / (sa * sa + sb * sb))
    return complex(pref * math.exp(-delta * delta / (4.0 * (sa * sa + sb * sb))))


# ---------------------------------------------------------------------------
# composite mode
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpticalMode:
    """Full single-pulse mode: when, at what frequency, with what
    polarization."""

    envelope: TemporalEnvelope
    spectrum: SpectralMode
    polarization: PolarizationState


def mode_overlap(a: OpticalMode, b: OpticalMode) -> complex:
    """Separable pairwise overlap zeta = zeta_t * zeta_s * zeta_p."""
    return (temporal_overlap(a.envelope, b.envelope)
            * spectral_overlap(a.spectrum, b.spectrum)
            * polarization_overlap(a.polarization, b.polarization))
