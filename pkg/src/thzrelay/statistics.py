"""Per-hop and end-to-end SNR statistics under α-μ fading with pointing errors.

Per hop the combined envelope h = R·h_p has density

    f(x) = A x^(φ-1) Γ(B, C x^α)

and with T = C (γ/γ₀)^(α/2) the SNR CDF is

    F(γ) = κ [γ(μ, T) + T^(φ/α) Γ(B, T)],   κ = A C^(-φ/α) / φ.

The end-to-end statistics use the surrogate min{γ₁, γ₂}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sc

from .channel_model import FadingParams, LinkBudget, PointingParams, snr_anchor
from .errors import ParameterError, PreconditionError
from .special_functions import scaled_upper_incomplete_gamma

NORMALIZATION_TOL = 1e-6


class NormalizationWarning(UserWarning):
    """The printed envelope constant A did not normalize the density."""


def _envelope_mass(A: float, B: float, C: float, fading: FadingParams, phi: float) -> float:
    # ∫ A x^(φ-1) Γ(B, Cx^α) dx = (A / α) C^(-φ/α) ∫ t^(φ/α) Γ(B, t) d(ln t)
    s0 = phi / fading.alpha

    def g(u):
        return float(scaled_upper_incomplete_gamma(B, math.exp(u), s0))

    # t^(s0) Γ(B,t) ~ t^min(s0, μ) near 0 and ~ e^-t t^(μ-1) at infinity
    lo = -60.0 / min(s0, fading.mu)
    hi = math.log(60.0 + 2.0 * fading.mu)
    total, _ = integrate.quad(g, lo, 0.0, limit=200, epsabs=0, epsrel=1e-12)
    upper, _ = integrate.quad(g, 0.0, hi, limit=200, epsabs=0, epsrel=1e-12)
    return A / fading.alpha * C ** (-s0) * (total + upper)


def derive_constants(fading: FadingParams, pointing: PointingParams) -> tuple[float, float, float]:
    """Constants (A, B, C) of the combined envelope density.

    A follows the textbook expression with Ω^α in the denominator.  The
    density is then integrated numerically; if the mass differs from one by
    more than 1e-6 (this happens for Ω ≠ 1), A is rescaled and a
    :class:`NormalizationWarning` is emitted.
    """
    a, mu, om = fading.alpha, fading.mu, fading.omega
    phi, s0 = pointing.phi, pointing.s0
    log_a = (math.log(phi) - phi * math.log(s0) + (phi / a) * math.log(mu)
             - a * math.log(om) - sc.gammaln(mu))
    A = math.exp(log_a)
    B = (a * mu - phi) / a
    C = mu / om ** a * s0 ** (-a)
    if not (A > 0 and C > 0 and math.isfinite(A) and math.isfinite(C)):
        raise ParameterError(f"non-normalizable parameter set: A={A}, C={C}")
    mass = _envelope_mass(A, B, C, fading, phi)
    if not (mass > 0 and math.isfinite(mass)):
        raise ParameterError(f"envelope density is not normalizable (mass={mass})")
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        warnings.warn(
            f"envelope constant A rescaled by {1.0 / mass:.6g} to normalize the density "
            f"(omega={om}); the printed Ω-exponent only normalizes at Ω = 1",
            NormalizationWarning, stacklevel=2)
        A /= mass
    return A, B, C


@dataclass(frozen=True)
class HopStatistics:
    """Statistical description of one hop.  Build with :meth:`create`."""

    fading: FadingParams
    pointing: PointingParams
    gamma0: float
    A: float
    B: float
    C: float

    def __post_init__(self):
        if not (self.gamma0 > 0 and math.isfinite(self.gamma0)):
            raise ParameterError(f"gamma0 must be a positive finite SNR, got {self.gamma0}")
        if not (self.A > 0 and self.C > 0):
            raise ParameterError("A and C must be positive")

    @classmethod
    def create(cls, fading: FadingParams, pointing: PointingParams, gamma0: float) -> "HopStatistics":
        A, B, C = derive_constants(fading, pointing)
        return cls(fading, pointing, float(gamma0), A, B, C)

    @classmethod
    def from_link_budget(cls, fading, pointing, lb: LinkBudget) -> "HopStatistics":
        return cls.create(fading, pointing, snr_anchor(lb))

    def with_gamma0(self, gamma0: float) -> "HopStatistics":
        return HopStatistics(self.fading, self.pointing, float(gamma0), self.A, self.B, self.C)

    @property
    def s0_ratio(self) -> float:
        """φ/α, the exponent of the pointing branch in T-space."""
        return self.pointing.phi / self.fading.alpha

    @property
    def kappa(self) -> float:
        """A C^(-φ/α) / φ; equals 1/Γ(μ) for a normalized density."""
        return self.A * self.C ** (-self.s0_ratio) / self.pointing.phi

    def t_of_gamma(self, gamma):
        return self.C * (np.asarray(gamma, dtype=float) / self.gamma0) ** (self.fading.alpha / 2.0)


@dataclass(frozen=True)
class DualHopModel:
    """Two independent hops joined by an amplify-and-forward relay."""

    hop1: HopStatistics
    hop2: HopStatistics

    @property
    def identical(self) -> bool:
        """Both hops share fading and pointing parameters (γ₀ may differ)."""
        return self.hop1.fading == self.hop2.fading and self.hop1.pointing == self.hop2.pointing

    @property
    def equal_gamma0(self) -> bool:
        return math.isclose(self.hop1.gamma0, self.hop2.gamma0, rel_tol=1e-12)

    @classmethod
    def symmetric(cls, fading, pointing, gamma0: float) -> "DualHopModel":
        hop = HopStatistics.create(fading, pointing, gamma0)
        return cls(hop, hop)

    def with_gamma0(self, gamma0_1: float, gamma0_2: float | None = None) -> "DualHopModel":
        g2 = gamma0_1 if gamma0_2 is None else gamma0_2
        return DualHopModel(self.hop1.with_gamma0(gamma0_1), self.hop2.with_gamma0(g2))

    def require_symmetric(self, what: str) -> HopStatistics:
        """Return the common hop, or raise if hops differ in shape or γ₀."""
        if not self.identical:
            raise PreconditionError(
                f"{what} requires identically distributed hops; use the quadrature path")
        if not self.equal_gamma0:
            raise PreconditionError(f"{what} requires equal gamma0 on both hops; "
                                    "use the quadrature path")
        return self.hop1


def _small_x_envelope(hop: HopStatistics):
    """Value of the density at x = 0 (0, finite or inf)."""
    a, mu, phi = hop.fading.alpha, hop.fading.mu, hop.pointing.phi
    order = min(phi, a * mu)
    if order > 1:
        return 0.0
    if order < 1 or phi == a * mu:
        return math.inf
    if phi < a * mu:
        return hop.A * math.gamma(hop.B)
    # Γ(B, t) ~ t^B / (-B) for B < 0
    return hop.A * hop.C ** hop.B / (-hop.B)


def envelope_pdf(x, hop: HopStatistics):
    """Density A x^(φ-1) Γ(B, C x^α) of the combined envelope."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ParameterError("envelope_pdf requires x >= 0")
    out = np.empty_like(x)
    pos = x > 0
    t = hop.C * x[pos] ** hop.fading.alpha
    # x^(φ-1) Γ(B,T) = C^(-φ/α) T^(φ/α) Γ(B,T) / x
    out[pos] = (hop.A * hop.C ** (-hop.s0_ratio)
                * scaled_upper_incomplete_gamma(hop.B, t, hop.s0_ratio) / x[pos])
    out[~pos] = _small_x_envelope(hop)
    return out if out.ndim else float(out)


def hop_snr_pdf(gamma, hop: HopStatistics):
    """Density of γ = γ₀ h², returns +inf at γ = 0 when the density diverges."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ParameterError("hop_snr_pdf requires gamma >= 0")
    out = np.empty_like(g)
    pos = g > 0
    gp = g[pos]
    out[pos] = envelope_pdf(np.sqrt(gp / hop.gamma0), hop) / (2.0 * np.sqrt(gp * hop.gamma0))
    order = min(hop.pointing.phi, hop.fading.alpha * hop.fading.mu) / 2.0
    if order > 1:
        zero_val = 0.0
    elif order < 1:
        zero_val = math.inf
    else:
        # f_x ~ c x near 0, so f_γ → c / (2 γ₀)
        zero_val = _envelope_slope_at_zero(hop) / (2.0 * hop.gamma0)
    out[~pos] = zero_val
    return out if out.ndim else float(out)


def _envelope_slope_at_zero(hop: HopStatistics) -> float:
    # leading coefficient c in f(x) ~ c x when min(φ, αμ) = 2
    a, mu, phi = hop.fading.alpha, hop.fading.mu, hop.pointing.phi
    if phi < a * mu:
        return hop.A * math.gamma(hop.B)
    if phi > a * mu:
        return hop.A * hop.C ** hop.B / (-hop.B)
    return math.inf


def hop_snr_cdf(gamma, hop: HopStatistics):
    """CDF κ[γ(μ,T) + T^(φ/α) Γ(B,T)] of the per-hop SNR."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ParameterError("hop_snr_cdf requires gamma >= 0")
    t = hop.t_of_gamma(g)
    mu = hop.fading.mu
    # γ(μ, T) = Γ(μ) P(μ, T); P underflows gracefully for tiny T
    lower = np.exp(sc.gammaln(mu)) * sc.gammainc(mu, t)
    branch = np.where(np.isinf(t), 0.0, scaled_upper_incomplete_gamma(hop.B, np.where(np.isinf(t), 1.0, t),
                                                                       hop.s0_ratio))
    out = np.clip(hop.kappa * (lower + branch), 0.0, 1.0)
    return out if out.ndim else float(out)


def exact_af_snr(g1, g2):
    """End-to-end SNR of a CSI-assisted AF relay, γ₁γ₂/(γ₁+γ₂+1)."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if np.any(g1 < 0) or np.any(g2 < 0):
        raise ParameterError("SNRs must be non-negative")
    out = g1 * g2 / (g1 + g2 + 1.0)
    return out if out.ndim else float(out)


def e2e_cdf_min_bound(gamma, model: DualHopModel):
    """CDF of min{γ₁, γ₂}: F₁ + F₂ − F₁F₂."""
    f1 = hop_snr_cdf(gamma, model.hop1)
    f2 = f1 if model.hop2 is model.hop1 else hop_snr_cdf(gamma, model.hop2)
    return f1 + f2 - f1 * f2


def e2e_pdf_min_bound(gamma, model: DualHopModel):
    """Density of min{γ₁, γ₂}: f₁(1 − F₂) + f₂(1 − F₁)."""
    f1 = hop_snr_pdf(gamma, model.hop1)
    c1 = hop_snr_cdf(gamma, model.hop1)
    if model.hop2 is model.hop1:
        return 2.0 * f1 * (1.0 - c1)
    f2 = hop_snr_pdf(gamma, model.hop2)
    c2 = hop_snr_cdf(gamma, model.hop2)
    return f1 * (1.0 - c2) + f2 * (1.0 - c1)
