"""THz link budget: path gain, noise power, SNR anchor and pointing geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import speed_of_light
from scipy.special import erf

from .errors import ParameterError

# Illustrative molecular-absorption coefficients (1/m).  The coefficient is a
# configured scalar; these are order-of-magnitude anchors, not a model.
ABSORPTION_EXAMPLES = {
    "275 GHz, standard atmosphere (order of magnitude)": 0.0033,
    "dry air / absorption ignored": 0.0,
}

DEFAULT_K_ABS = 0.0033


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def dbm_to_watt(x_dbm):
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w):
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class LinkBudget:
    """Deterministic parameters of one THz hop, all in SI / linear units.

    Attributes:
        f: carrier frequency in Hz.
        d: link distance in m.
        gt, gr: transmit and receive antenna gains (linear).
        k_abs: molecular absorption coefficient in 1/m.
        ptx: transmit power in W.
        n0: noise power spectral density in W/Hz.
        bw: bandwidth in Hz.
    """

    f: float
    d: float
    gt: float
    gr: float
    k_abs: float
    ptx: float
    n0: float
    bw: float

    def __post_init__(self):
        for name in ("f", "d", "ptx", "n0", "bw"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"LinkBudget.{name} must be > 0, got {getattr(self, name)}")
        for name in ("gt", "gr", "k_abs"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"LinkBudget.{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_db(cls, *, f_ghz=275.0, d_m=10.0, gain_dbi=45.0, k_abs_per_m=DEFAULT_K_ABS,
                ptx_dbm=20.0, n0_dbm_hz=-174.0, bw_ghz=10.0) -> "LinkBudget":
        """Build a budget from the engineering units used in configuration files.

        The noise density is taken per Hz (dBm/Hz).
        """
        g = db_to_linear(gain_dbi)
        return cls(f=f_ghz * 1e9, d=d_m, gt=g, gr=g, k_abs=k_abs_per_m,
                   ptx=dbm_to_watt(ptx_dbm), n0=dbm_to_watt(n0_dbm_hz), bw=bw_ghz * 1e9)


def path_gain(lb: LinkBudget) -> float:
    """Amplitude path gain c·sqrt(Gt·Gr)/(4π f d) · exp(-k d / 2)."""
    return (speed_of_light * math.sqrt(lb.gt * lb.gr) / (4.0 * math.pi * lb.f * lb.d)
            * math.exp(-0.5 * lb.k_abs * lb.d))


def noise_power(lb: LinkBudget) -> float:
    return lb.n0 * lb.bw


def snr_anchor(lb: LinkBudget) -> float:
    """SNR without fading or misalignment, Ptx·h_l²/(N0·Bw), linear."""
    return lb.ptx * path_gain(lb) ** 2 / noise_power(lb)


@dataclass(frozen=True)
class FadingParams:
    """α-μ small-scale fading: nonlinearity α, clustering μ, α-root mean Ω."""

    alpha: float
    mu: float
    omega: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "mu", "omega"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"FadingParams.{name} must be > 0, got {v}")


@dataclass(frozen=True)
class PointingParams:
    """Zero-boresight pointing error: shape φ and maximum collected fraction S₀."""

    phi: float
    s0: float

    def __post_init__(self):
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise ParameterError(f"PointingParams.phi must be > 0, got {self.phi}")
        if not (0 < self.s0 <= 1):
            raise ParameterError(f"PointingParams.s0 must lie in (0, 1], got {self.s0}")


def pointing_from_geometry(aperture_radius: float, beam_waist_at_rx: float,
                           jitter_sigma: float) -> PointingParams:
    """Pointing-error parameters of a Gaussian beam on a circular aperture.

    The aperture of radius ``a`` is replaced by the square of equal area, so
    S₀ = erf(v)² with v = sqrt(π)·a / (sqrt(2)·w_z).  The collected fraction
    at radial offset r is then approximated by S₀·exp(-2r²/w_eq²) with

        w_eq² = w_z² · sqrt(π)·erf(v) / (2v·exp(-v²)),

    matching the curvature at r = 0.  With Rayleigh-distributed offsets of
    per-axis deviation σ_s the collected fraction has density ∝ h^(φ-1) on
    [0, S₀] where φ = w_eq² / (4σ_s²).

    Raises:
        ParameterError: for non-positive inputs or when φ underflows to 0
            (e.g. infinite jitter).
    """
    for name, v in (("aperture_radius", aperture_radius),
                    ("beam_waist_at_rx", beam_waist_at_rx), ("jitter_sigma", jitter_sigma)):
        if not v > 0:
            raise ParameterError(f"{name} must be > 0, got {v}")
    v = math.sqrt(math.pi) * aperture_radius / (math.sqrt(2.0) * beam_waist_at_rx)
    ev = float(erf(v))
    s0 = ev ** 2
    log_weq2 = 2.0 * math.log(beam_waist_at_rx) + math.log(math.sqrt(math.pi) * ev / (2.0 * v)) + v * v
    log_phi = log_weq2 - math.log(4.0) - 2.0 * math.log(jitter_sigma)
    if log_phi > 700.0:
        raise ParameterError(f"aperture much wider than the beam (v={v:.3g}): pointing loss is "
                             "negligible and phi overflows")
    return PointingParams(phi=math.exp(log_phi), s0=min(s0, 1.0))
