"""Outage, average BER, average SNR, ergodic-capacity lower bound, diversity.

Each metric has a quadrature path that works for any model and, where the
hops are identically distributed with equal γ₀, a closed-form path built on
Mellin–Barnes representations of the per-hop CDF.  Both return a
:class:`MetricReport` carrying the method tag and an error estimate.

Closed-form building blocks (T-space, s₀ = φ/α, κ = A C^(-s₀)/φ):

* the survival function of T has Mellin transform
  κ s₀ Γ(μ+s) / (s (s+s₀)), valid for Re s > 0;
* BER splits as k(2 H₁ − H₂) with H₁ = ∫ w F and H₂ = ∫ w F², where
  w(γ) = γ^(p-1) e^(-qγ); H₁ is a Meijer G, H₂ a bivariate Meijer G;
* E[ln T_min] and E[T_min^r] follow the same pattern with ln(1 + x) and
  ₂F₁(·; −1) kernels respectively.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy import special as sc

from .channel_model import FadingParams, PointingParams
from .errors import EvaluationError, ParameterError, PreconditionError
from .special_functions import (BivariateGSpec, GBlock, MeijerGSpec, bivariate_meijer_g,
                                digamma, incomplete_beta_signed, meijer_g)
from .statistics import DualHopModel, HopStatistics, e2e_cdf_min_bound, e2e_pdf_min_bound

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte_carlo"

DEFAULT_TOL = 1e-8
_INT_TOL = 1e-12


@dataclass(frozen=True)
class ModulationParams:
    """Conditional BER Γ(p, qγ) / (2Γ(p))."""

    p: float
    q: float
    label: str = "custom"

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ParameterError(f"modulation parameters must be positive, got p={self.p}, q={self.q}")

    def conditional_ber(self, gamma):
        return 0.5 * sc.gammaincc(self.p, self.q * np.asarray(gamma, dtype=float))


BPSK = ModulationParams(0.5, 1.0, "bpsk")
BFSK = ModulationParams(0.5, 0.5, "bfsk")
DPSK = ModulationParams(1.0, 1.0, "dpsk")
MODULATIONS = {m.label: m for m in (BPSK, BFSK, DPSK)}


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float
    method: str
    error_estimate: float
    parameters: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ParameterError("error_estimate must be non-negative")


def _echo(model: DualHopModel) -> dict:
    h = model.hop1
    return {"alpha": h.fading.alpha, "mu": h.fading.mu, "omega": h.fading.omega,
            "phi": h.pointing.phi, "s0": h.pointing.s0,
            "gamma0_hop1": model.hop1.gamma0, "gamma0_hop2": model.hop2.gamma0}


def _is_int(v: float) -> bool:
    return abs(v - round(v)) < _INT_TOL


# -- diversity ---------------------------------------------------------------

def diversity_order(fading: FadingParams, pointing: PointingParams) -> float:
    """High-SNR slope min(αμ/2, φ/2)."""
    return min(fading.alpha * fading.mu, pointing.phi) / 2.0


def fit_loglog_slope(gamma0_db, values) -> float:
    """Least-squares slope of −log₁₀(metric) against γ₀[dB]/10.

    Requires at least 5 points spanning at least 10 dB.
    """
    x = np.asarray(gamma0_db, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 5 or x.max() - x.min() < 10.0 - 1e-9:
        raise ParameterError("slope fit needs >= 5 points spanning >= 10 dB")
    if np.any(y <= 0):
        raise ParameterError("slope fit needs strictly positive metric values")
    slope, _ = np.polyfit(x / 10.0, -np.log10(y), 1)
    return float(slope)


# -- quadrature helper -------------------------------------------------------

def _t_one(hop: HopStatistics) -> float:
    """ln γ at which T = 1 for this hop."""
    return math.log(hop.gamma0) - (2.0 / hop.fading.alpha) * math.log(hop.C)


def _small_gamma_order(model: DualHopModel) -> float:
    return min(diversity_order(h.fading, h.pointing) for h in (model.hop1, model.hop2))


def _log_quad(g, lo, hi, breaks, *, tol, scale=None, what="integral"):
    """∫_lo^hi g(u) du split at ``breaks``; returns (value, error)."""
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    err = 0.0
    captured = []
    for a, b in zip(pts[:-1], pts[1:]):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            v, e = integrate.quad(g, a, b, limit=400, epsabs=0.0, epsrel=tol / 10.0)
        total += v
        err += e
        captured.extend(str(x.message) for x in w)
    # crude tail: both ends decay at least exponentially in u
    err += abs(g(lo)) + abs(g(hi))
    bound = tol * (abs(total) if scale is None else max(abs(total), scale))
    if not math.isfinite(total) or err > bound:
        raise EvaluationError(
            f"{what}: quadrature error {err:.3g} exceeds tolerance {bound:.3g}"
            + (f" ({captured[0]})" if captured else ""))
    return total, err


def ber_from_cdf(mod: ModulationParams, cdf, *, lo, hi, breaks=(), tol=DEFAULT_TOL):
    """q^p/(2Γ(p)) ∫ γ^(p-1) e^(-qγ) F(γ) dγ for an arbitrary CDF, in log-γ.

    Returns (value, error).  ``lo``/``hi`` bound ln γ.
    """
    p, q = mod.p, mod.q
    k = math.exp(p * math.log(q) - sc.gammaln(p)) / 2.0

    def g(u):
        gam = math.exp(u)
        return gam ** p * math.exp(-q * gam) * float(cdf(gam))

    hi = min(hi, math.log((80.0 + 2.0 * p) / q))
    v, e = _log_quad(g, lo, hi, [-math.log(q), *breaks], tol=tol, what="average BER")
    return k * v, k * e


# -- outage ------------------------------------------------------------------

def outage_probability(gamma_th: float, model: DualHopModel) -> MetricReport:
    """P(min{γ₁, γ₂} < γ_th)."""
    if not gamma_th > 0:
        raise ParameterError(f"gamma_th must be > 0, got {gamma_th}")
    v = float(e2e_cdf_min_bound(gamma_th, model))
    return MetricReport("outage", v, CLOSED_FORM, 4 * np.finfo(float).eps * max(v, 1e-300),
                        {**_echo(model), "gamma_th": gamma_th})


# -- BER ---------------------------------------------------------------------

def average_ber_quadrature(mod: ModulationParams, model: DualHopModel,
                           tol: float = DEFAULT_TOL) -> MetricReport:
    """Average BER by adaptive quadrature of the CDF-weighted integral.

    ``tol`` is a relative tolerance; a :class:`EvaluationError` is raised if
    the reported error exceeds it.
    """
    order = _small_gamma_order(model)
    breaks = [_t_one(model.hop1), _t_one(model.hop2),
              math.log(model.hop1.gamma0), math.log(model.hop2.gamma0)]
    lo = min(breaks + [-math.log(mod.q)]) - 80.0 / (mod.p + order)
    v, e = ber_from_cdf(mod, lambda g: e2e_cdf_min_bound(g, model), lo=lo, hi=math.inf,
                        breaks=breaks, tol=tol)
    return MetricReport("ber", v, QUADRATURE, e, {**_echo(model), "p": mod.p, "q": mod.q})


def average_ber_closed_form(mod: ModulationParams, model: DualHopModel) -> MetricReport:
    """Average BER in closed form (integer α and μ, identical hops).

    The CDF-weighted integral splits into ∫ w F and ∫ w F².  Writing F as an
    inverse Mellin integral and applying the Gauss multiplication formula to
    Γ(p + αs/2) turns the first into a Meijer G function and the second into
    a bivariate Meijer G function of the same argument
    x = C² α^α / (4 (γ₀ q)^α).
    """
    hop = model.require_symmetric("closed-form BER")
    a_f, mu = hop.fading.alpha, hop.fading.mu
    if not _is_int(a_f):
        raise PreconditionError(f"closed-form BER requires integer alpha (got {a_f}); "
                                "use average_ber_quadrature")
    if not _is_int(mu):
        raise PreconditionError(f"closed-form BER requires integer mu (got {mu}); "
                                "use average_ber_quadrature")
    a = int(round(a_f))
    p, q = mod.p, mod.q
    s0 = hop.s0_ratio
    x = hop.C ** 2 * a ** a / (4.0 * (hop.gamma0 * q) ** a)
    # Mellin pieces of F after t → t/2 duplication of Γ(μ + s)
    pref = hop.kappa * s0 * 0.25 * 2.0 ** (mu - 1.0) / math.sqrt(math.pi)
    gauss = (2.0 * math.pi) ** ((1.0 - a) / 2.0) * a ** (p - 0.5)
    coupled = [1.0 - (p + j) / a for j in range(a)]
    lower = [s0 / 2.0, mu / 2.0, (mu + 1.0) / 2.0, 0.0]

    g1 = meijer_g(MeijerGSpec(3, a + 1, [1.0, *coupled, 1.0 + s0 / 2.0], lower), x)
    block = GBlock(3, 1, [1.0, 1.0 + s0 / 2.0], lower)
    g2 = bivariate_meijer_g(BivariateGSpec(GBlock(0, a, coupled, []), block, block), x, x)

    c1 = q ** (-p) * 2.0 * pref * gauss
    c2 = q ** (-p) * 4.0 * pref ** 2 * gauss
    k = q ** p / (2.0 * math.gamma(p))
    value = k * (2.0 * c1 * g1.value - c2 * g2.value)
    err = k * (2.0 * abs(c1) * g1.error + abs(c2) * g2.error)
    return MetricReport("ber", value, CLOSED_FORM, err, {**_echo(model), "p": p, "q": q})


# -- capacity ----------------------------------------------------------------

def ergodic_capacity_lower_quadrature(model: DualHopModel, tol: float = DEFAULT_TOL) -> MetricReport:
    """E[log₂ min{γ₁, γ₂}] by quadrature, in bits/s/Hz.

    ``tol`` is relative, with an absolute floor of ``tol`` bit.
    """
    order = _small_gamma_order(model)
    t1 = [_t_one(model.hop1), _t_one(model.hop2)]
    hi = max(_t_one(h) + (2.0 / h.fading.alpha) * math.log(60.0) for h in (model.hop1, model.hop2))
    lo = min(t1) - 80.0 / order

    def g(u):
        gam = math.exp(u)
        return u * float(e2e_pdf_min_bound(gam, model)) * gam

    breaks = t1 + [math.log(model.hop1.gamma0), math.log(model.hop2.gamma0)]
    v, e = _log_quad(g, lo, hi, breaks, tol=tol, scale=math.log(2.0), what="ergodic capacity")
    return MetricReport("capacity", v / math.log(2.0), QUADRATURE, e / math.log(2.0), _echo(model))


def _mean_log_tmin(hop: HopStatistics):
    """E[ln min(T₁, T₂)] for two i.i.d. hops, with error estimate."""
    mu, s0 = hop.fading.mu, hop.s0_ratio
    coupled = GBlock(0, 2, [1.0 - mu, 1.0 - s0], [-s0])
    second = GBlock(2, 1, [1.0, 1.0 + s0], [mu, s0, 0.0])
    k_plus = bivariate_meijer_g(BivariateGSpec(coupled, second, GBlock(1, 2, [1.0, 1.0], [1.0, 0.0])),
                                1.0, 1.0)
    k_minus = bivariate_meijer_g(BivariateGSpec(coupled, second, GBlock(2, 1, [0.0, 1.0], [0.0, 0.0])),
                                 1.0, 1.0)
    w = (hop.kappa * s0) ** 2
    mean_log_t = hop.kappa * math.gamma(mu) * (digamma(mu) - 1.0 / s0)
    value = 2.0 * mean_log_t - 2.0 * w * (k_plus.value - k_minus.value)
    return value, 2.0 * w * (k_plus.error + k_minus.error)


def ergodic_capacity_lower_closed(model: DualHopModel) -> MetricReport:
    """E[log₂ min{γ₁, γ₂}] in closed form (identical hops, equal γ₀).

    With γ = γ₀ (T/C)^(2/α), the capacity is
    [ln γ₀ − (2/α) ln C + (2/α) E[ln T_min]] / ln 2, where E[ln T_min]
    combines the digamma mean of one hop with two bivariate Meijer G terms
    (ln(1 + x) and ln(1 + 1/x) kernels).
    """
    hop = model.require_symmetric("closed-form capacity")
    r = 2.0 / hop.fading.alpha
    try:
        elt, elt_err = _mean_log_tmin(hop)
    except EvaluationError as exc:
        raise EvaluationError(f"{exc}; use ergodic_capacity_lower_quadrature") from exc
    value = (math.log(hop.gamma0) - r * math.log(hop.C) + r * elt) / math.log(2.0)
    return MetricReport("capacity", value, CLOSED_FORM, r * elt_err / math.log(2.0), _echo(model))


# -- average SNR -------------------------------------------------------------

def average_snr_quadrature(model: DualHopModel, tol: float = DEFAULT_TOL) -> MetricReport:
    """E[min{γ₁, γ₂}] by quadrature (relative tolerance ``tol``)."""
    order = _small_gamma_order(model)
    t1 = [_t_one(model.hop1), _t_one(model.hop2)]
    hi = max(_t_one(h) + (2.0 / h.fading.alpha) * math.log(60.0) for h in (model.hop1, model.hop2))
    lo = min(t1) - 80.0 / (order + 1.0)

    def g(u):
        gam = math.exp(u)
        return float(e2e_pdf_min_bound(gam, model)) * gam * gam

    breaks = t1 + [math.log(model.hop1.gamma0), math.log(model.hop2.gamma0)]
    v, e = _log_quad(g, lo, hi, breaks, tol=tol, what="average SNR")
    return MetricReport("avg_snr", v, QUADRATURE, e, _echo(model))


def _beta_moment(c: float, b: float, term: str) -> float:
    """Γ(c+b) · Re[(-1)^(-c) B₋₁(c, 1-c-b)] = Γ(c+b)/c · ₂F₁(c+b, c; c+1; −1)."""
    if c + b <= 0 and _is_int(c + b):
        raise PreconditionError(f"average SNR term {term}: Γ({c + b:g}) is at a pole")
    if c <= 0:
        raise PreconditionError(f"average SNR term {term}: incomplete beta needs a > 0, got {c:g}")
    z = incomplete_beta_signed(-1.0, c, 1.0 - c - b)
    v = np.exp(-1j * math.pi * c) * z
    if abs(v.imag) > 1e-9 * abs(v):
        raise EvaluationError(f"average SNR term {term}: imaginary residue {v.imag:.3g}")
    return math.gamma(c + b) * v.real


def average_snr_closed(model: DualHopModel) -> MetricReport:
    """E[min{γ₁, γ₂}] in closed form (identical hops, equal γ₀).

    γ̄ = γ₀ C^(-r) E[T_min^r] with r = 2/α, and E[T_min^r] = r ∫ t^(r-1) G(t)² dt
    where G = κ[Γ(μ,t) − t^(s₀) Γ(B,t)].  Each product of two incomplete
    gammas integrates to a ₂F₁ at −1, written through the signed incomplete
    beta function.
    """
    hop = model.require_symmetric("closed-form average SNR")
    mu, s0, B = hop.fading.mu, hop.s0_ratio, hop.B
    r = 2.0 / hop.fading.alpha

    def jay(nu, aa, bb, name):
        return (_beta_moment(nu + aa, bb, name) + _beta_moment(nu + bb, aa, name)) / nu

    m = r * hop.kappa ** 2 * (jay(r, mu, mu, "Γ(μ,t)²")
                              - 2.0 * jay(r + s0, mu, B, "Γ(μ,t)·t^s Γ(B,t)")
                              + jay(r + 2.0 * s0, B, B, "t^2s Γ(B,t)²"))
    value = hop.gamma0 * hop.C ** (-r) * m
    return MetricReport("avg_snr", value, CLOSED_FORM, 1e-12 * abs(value), _echo(model))
