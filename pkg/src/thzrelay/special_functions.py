"""Special-function kernel.

Gamma family, digamma, Gauss hypergeometric 2F1, the signed incomplete beta
and Mellin-Barnes evaluation of univariate and bivariate Meijer G-functions.

Everything here is a pure function of its arguments.  The gamma-family
wrappers accept numpy arrays; the hypergeometric and Meijer routines are
scalar.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy import special as sc

from .errors import DomainError, EvaluationError, ParameterError

EULER_GAMMA = 0.57721566490153286061

# Default contour-integration tolerances: stop on whichever is met first.
DEFAULT_ATOL = 1e-12
DEFAULT_RTOL = 1e-9

# Pole-collision handling for Meijer G parameters.
COLLISION_TOL = 1e-8
NUDGE = 1e-6


class ContourResult(NamedTuple):
    """Value of a contour integral and its self-reported absolute error."""

    value: float
    error: float


def _is_nonpositive_int(a, tol=0.0):
    a = np.asarray(a, dtype=float)
    return (a <= tol) & (np.abs(a - np.round(a)) <= tol)


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def ln_gamma(a: float) -> tuple[float, float]:
    """Return ``(ln|Γ(a)|, sign Γ(a))``.

    Raises:
        DomainError: if ``a`` is a non-positive integer.
    """
    a = float(a)
    if _is_nonpositive_int(a):
        raise DomainError(f"Gamma has a pole at a={a}")
    return float(sc.gammaln(a)), float(sc.gammasgn(a))


def digamma(x):
    """Logarithmic derivative of the gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("digamma is only provided for x > 0")
    out = sc.psi(x)
    return float(out) if out.ndim == 0 else out


def _gamma_upper_cf(a, x, max_iter=500, s=0.0):
    """Continued fraction for x^s Γ(a, x), valid for any real a when x > a + 1.

    Vectorised modified Lentz iteration.  The prefactor x^(a+s) e^(-x) is
    applied in log form so large |a| or s do not overflow.
    """
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < 1e-16
        if done.all():
            break
    else:
        raise EvaluationError("incomplete-gamma continued fraction did not converge")
    return np.exp(-x + (a + s) * np.log(x)) * h


def _gamma_upper_positive(a, x):
    return sc.gammaincc(a, x) * sc.gamma(a)


def upper_incomplete_gamma(a, x):
    """Upper incomplete gamma Γ(a, x) = ∫_x^∞ t^(a-1) e^(-t) dt.

    ``a`` may be zero or negative provided ``x > 0``.  For negative ``a`` the
    downward recurrence Γ(a,x) = (Γ(a+1,x) - x^a e^(-x)) / a is used for small
    ``x`` and a continued fraction for ``x >= 1.5`` (where the recurrence
    cancels badly).  Arrays broadcast.

    Raises:
        DomainError: for ``a <= 0`` with ``x == 0`` or for ``x < 0``.
    """
    a_arr, x_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    if np.any(x_arr < 0):
        raise DomainError("upper incomplete gamma requires x >= 0")
    if np.any((a_arr <= 0) & (x_arr == 0)):
        raise DomainError("Γ(a, 0) diverges for a <= 0")
    out = np.empty(a_arr.shape, dtype=float)
    pos = a_arr > 0
    if pos.any():
        out[pos] = _gamma_upper_positive(a_arr[pos], x_arr[pos])
    neg = ~pos
    if neg.any():
        an, xn = a_arr[neg], x_arr[neg]
        res = np.empty(an.shape)
        big = xn >= 1.5
        if big.any():
            res[big] = _gamma_upper_cf(an[big], xn[big])
        small = ~big
        if small.any():
            res[small] = _gamma_upper_recurrence(an[small], xn[small])
        out[neg] = res
    return float(out) if out.ndim == 0 else out


def _gamma_upper_recurrence(a, x, s=0.0):
    """x^s Γ(a, x) for a <= 0 by downward recurrence on a scaled quantity.

    The recurrence runs on x^(-a_j) Γ(a_j, x), so the power x^(s+a) is
    applied once at the end and stays finite for tiny x whenever s + a > 0.
    """
    s_arr = np.broadcast_to(np.asarray(s, dtype=float), a.shape)
    out = np.empty(a.shape)
    for idx in np.ndindex(a.shape):
        ai, xi, si = float(a[idx]), float(x[idx]), float(s_arr[idx])
        k = math.floor(-ai) + 1  # smallest k with ai + k > 0
        top = ai + k
        lx = math.log(xi)
        # z_j = x^(-a_j) Γ(a_j, x) obeys z_j = (x z_(j+1) - e^(-x)) / a_j and
        # stays O(1) however many steps are taken
        if abs(ai - round(ai)) == 0.0:
            # integer a <= 0: start from Γ(0, x) = E1(x)
            k -= 1
            z = float(sc.exp1(xi))
        else:
            z = float(_gamma_upper_positive(top, xi)) * math.exp(-top * lx)
        ex = math.exp(-xi)
        for j in range(k - 1, -1, -1):
            z = (xi * z - ex) / (ai + j)
        val = z * math.exp((si + ai) * lx)
        out[idx] = val
    return out


def scaled_upper_incomplete_gamma(a, x, s):
    """x^s Γ(a, x), finite at small x whenever s + min(a, 0) > 0.

    Needed where Γ(a, x) with negative ``a`` is multiplied by a power that
    cancels its x^a singularity; evaluating the two factors separately
    overflows for x below roughly 1e-30.
    """
    a_arr, x_arr, s_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(x, dtype=float), np.asarray(s, dtype=float))
    if np.any(x_arr < 0):
        raise DomainError("scaled incomplete gamma requires x >= 0")
    out = np.zeros(a_arr.shape, dtype=float)
    zero = x_arr == 0
    plain = zero & (a_arr > 0) & (s_arr == 0)
    out[plain] = sc.gamma(a_arr[plain])
    if np.any(zero & ~plain & (s_arr + np.minimum(a_arr, 0.0) <= 0)):
        raise DomainError("x^s Γ(a, x) diverges at x = 0 for s + min(a, 0) <= 0")
    nz = ~zero
    pos = nz & (a_arr > 0)
    if pos.any():
        xp = x_arr[pos]
        out[pos] = _gamma_upper_positive(a_arr[pos], xp) * np.exp(s_arr[pos] * np.log(xp))
    neg = nz & (a_arr <= 0)
    if neg.any():
        an, xn, sn = a_arr[neg], x_arr[neg], s_arr[neg]
        res = np.empty(an.shape)
        big = xn >= 1.5
        if big.any():
            res[big] = _gamma_upper_cf(an[big], xn[big], s=sn[big])
        small = ~big
        if small.any():
            res[small] = _gamma_upper_recurrence(an[small], xn[small], sn[small])
        out[neg] = res
    return float(out) if out.ndim == 0 else out


def lower_incomplete_gamma(a, x):
    """Lower incomplete gamma γ(a, x) = Γ(a) - Γ(a, x) for ``a > 0``.

    Computed from the regularised function, which uses the series for small
    ``x`` and the complement for large ``x``.
    """
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(a_arr <= 0):
        raise DomainError("lower incomplete gamma requires a > 0")
    if np.any(x_arr < 0):
        raise DomainError("lower incomplete gamma requires x >= 0")
    out = sc.gammainc(a_arr, x_arr) * sc.gamma(a_arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Gauss hypergeometric function and incomplete beta
# ---------------------------------------------------------------------------

def _hyp2f1_series(a, b, c, z, max_terms=20000):
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0 or abs(term) < 1e-17 * abs(total):
            return total
    raise EvaluationError(f"2F1 series did not converge for z={z}")


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function ₂F₁(a, b; c; z) for real ``z <= 1``.

    Direct series for |z| <= 1/2, the Pfaff transformation z -> z/(z-1) for
    negative z beyond that, the 1-z connection formula for 1/2 < z < 1 and
    Gauss's sum at z = 1.  When c - a - b is an integer the connection
    formula is evaluated at c ± ε and Richardson-extrapolated.

    Raises:
        DomainError: if ``c`` is a non-positive integer, ``z > 1``, or the
            series diverges at ``z = 1``.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 undefined for c={c}")
    if z > 1.0:
        raise DomainError("2F1 is only provided for z <= 1")
    if z == 0.0:
        return 1.0
    if abs(z) <= 0.5:
        return _hyp2f1_series(a, b, c, z)
    if z < 0.0:
        w = z / (z - 1.0)
        return (1.0 - z) ** (-a) * gauss_2f1(a, c - b, c, w)
    if z == 1.0:
        if c - a - b <= 0:
            raise DomainError("2F1 diverges at z=1 unless c - a - b > 0")
        return float(sc.gamma(c) * sc.gamma(c - a - b) * sc.rgamma(c - a) * sc.rgamma(c - b))
    if z <= 0.9:
        return _hyp2f1_series(a, b, c, z)
    s = c - a - b
    if abs(s - round(s)) < _HYP_EPS:
        # logarithmic case: Richardson-extrapolated symmetric perturbations of c
        c0 = a + b + round(s)

        def avg(e):
            return 0.5 * (_hyp2f1_connection(a, b, c0 + e, z) + _hyp2f1_connection(a, b, c0 - e, z))

        return (4.0 * avg(_HYP_EPS) - avg(2.0 * _HYP_EPS)) / 3.0
    return _hyp2f1_connection(a, b, c, z)


_HYP_EPS = 1e-4


def _hyp2f1_connection(a, b, c, z):
    s = c - a - b
    w = 1.0 - z
    t1 = sc.gamma(c) * sc.gamma(s) * sc.rgamma(c - a) * sc.rgamma(c - b)
    t2 = sc.gamma(c) * sc.gamma(-s) * sc.rgamma(a) * sc.rgamma(b)
    return float(t1 * _hyp2f1_series(a, b, 1.0 - s, w)
                 + w ** s * t2 * _hyp2f1_series(c - a, c - b, 1.0 + s, w))


def incomplete_beta_signed(z: float, a: float, b: float):
    """Incomplete beta B_z(a, b) = z^a / a · ₂F₁(a, 1-b; a+1; z).

    Defined through the hypergeometric identity so that negative ``z`` is
    admissible.  For ``z < 0`` the principal branch z^a = |z|^a e^(iπa) is used
    and a complex number is returned; callers pair it with a conjugate phase
    factor and keep the real part.  For ``0 <= z <= 1`` a float is returned.

    Raises:
        DomainError: if ``a <= 0``.
    """
    z, a, b = float(z), float(a), float(b)
    if a <= 0:
        raise DomainError("incomplete beta requires a > 0")
    if z == 0.0:
        return 0.0
    f = gauss_2f1(a, 1.0 - b, a + 1.0, z)
    if z > 0:
        return z ** a / a * f
    return complex(abs(z) ** a * np.exp(1j * np.pi * a) / a * f)


# ---------------------------------------------------------------------------
# Meijer G-function
# ---------------------------------------------------------------------------

def delta_params(k: int, a: float) -> list[float]:
    """The parameter list Δ(k, a) = a/k, (a+1)/k, ..., (a+k-1)/k."""
    return [(a + j) / k for j in range(k)]


@dataclass(frozen=True)
class MeijerGSpec:
    """Orders and parameters of G^{m,n}_{p,q}(x | a; b).

    ``a`` holds the ``p`` upper parameters (the first ``n`` belong to the
    Γ(1 - a + s) family), ``b`` the ``q`` lower ones (the first ``m`` belong
    to the Γ(b - s) family).
    """

    m: int
    n: int
    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ParameterError(
                f"invalid Meijer G orders m={self.m}, n={self.n}, p={self.p}, q={self.q}")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def delta(self) -> float:
        return self.m + self.n - 0.5 * (self.p + self.q)


def _lg(z):
    """Complex log-gamma with +inf at the poles (so 1/Γ evaluates to 0)."""
    out = sc.loggamma(z)
    return np.where(np.isnan(out), np.inf, out)


def _meijer_log_kernel(m, n, a, b, s):
    """log of Π Γ(b_j - s) Π Γ(1 - a_i + s) / (Π Γ(1 - b_j + s) Π Γ(a_i - s))."""
    out = np.zeros(np.shape(s), dtype=complex)
    for j, bj in enumerate(b):
        out = out + (sc.loggamma(bj - s) if j < m else -_lg(1.0 - bj + s))
    for i, ai in enumerate(a):
        out = out + (sc.loggamma(1.0 - ai + s) if i < n else -_lg(ai - s))
    return out


def _excluding_collisions(spec: MeijerGSpec) -> MeijerGSpec:
    """Nudge upper parameters whose Γ(1-a+s) poles collide with Γ(b-s) poles."""
    a = list(spec.a)
    nudged = False
    for i in range(spec.n):
        for j in range(spec.m):
            k = a[i] - 1.0 - spec.b[j]
            if k > -COLLISION_TOL and abs(k - round(k)) < COLLISION_TOL:
                a[i] += NUDGE
                nudged = True
    if nudged:
        warnings.warn(
            f"Meijer G pole collision; upper parameters nudged by {NUDGE}", RuntimeWarning)
        return MeijerGSpec(spec.m, spec.n, a, spec.b)
    return spec


def _strip(m, n, a, b):
    lo = max((a[i] - 1.0 for i in range(n)), default=-math.inf)
    hi = min((b[j] for j in range(m)), default=math.inf)
    return lo, hi


def _place_line(lo, hi, log_kernel=None, span=None):
    """Abscissa of the vertical contour and its distance to the nearest pole.

    Starts from the midpoint of the admissible strip (or half a unit inside
    a half-infinite one).  When ``log_kernel`` is given the abscissa is moved
    to the minimum of the real integrand over the strip, the saddle of the
    Mellin-Barnes integrand, so that the integrand is of the same order as
    the result and small values keep their relative accuracy.
    """
    if math.isinf(lo) and math.isinf(hi):
        c, left, right = 0.0, -span, span
    elif math.isinf(hi):
        c, left, right = lo + 0.5, lo, lo + span
    elif math.isinf(lo):
        c, left, right = hi - 0.5, hi - span, hi
    else:
        c, left, right = 0.5 * (lo + hi), lo, hi
    if log_kernel is not None:
        margin = min(0.5, 0.1 * (right - left))
        res = optimize.minimize_scalar(
            lambda t: float(np.real(log_kernel(complex(t)))),
            bounds=(left + margin, right - margin), method="bounded",
            options={"xatol": 1e-3})
        if res.success and res.fun <= float(np.real(log_kernel(complex(c)))):
            c = float(res.x)
    return c, min(c - lo, hi - c)


def _line_integral(log_kernel, c, dist, decay, atol, rtol, max_levels=9):
    """(1/2πi)∫ K(s) ds along Re(s) = c for a kernel with K(conj s) = conj K(s).

    Composite trapezoid on the half line, truncated where |K| has dropped by
    e^-45 relative to its maximum, refined by step halving until successive
    levels agree.  Returns the value and an error estimate that includes the
    level-difference, the truncated tail and a rounding floor.
    """
    def f(y):
        return log_kernel(c + 1j * np.asarray(y, dtype=float))

    probe = np.linspace(0.0, 8.0, 33)
    logmax = float(np.max(f(probe).real))
    ymax = 8.0
    while float(f(ymax).real) - logmax > -45.0:
        ymax *= 1.5
        if ymax > 1e4:
            raise EvaluationError("Mellin-Barnes integrand does not decay along the contour")
        logmax = max(logmax, float(np.max(f(np.linspace(ymax / 1.5, ymax, 17)).real)))

    h = min(0.5, dist / 4.0)
    n = int(math.ceil(ymax / h))
    h = ymax / n
    vals = np.exp(f(np.arange(n + 1) * h)).real
    weighted = vals.sum() - 0.5 * vals[0] - 0.5 * vals[-1]
    absum = np.abs(vals).sum()
    est = h * weighted / np.pi
    for _ in range(max_levels):
        mids = np.exp(f((np.arange(n) + 0.5) * h)).real
        weighted += mids.sum()
        absum += np.abs(mids).sum()
        n *= 2
        h *= 0.5
        new = h * weighted / np.pi
        diff = abs(new - est)
        est = new
        if diff <= max(atol, rtol * abs(est)):
            break
    else:
        raise EvaluationError(
            f"Mellin-Barnes trapezoid did not converge (last difference {diff:.3e})")
    tail = math.exp(float(f(ymax).real)) / (max(decay, 1e-3) * np.pi)
    # exp(log K) carries a relative error of order eps·|log K|
    rounding = 64 * np.finfo(float).eps * (1.0 + abs(logmax)) * h * absum / np.pi
    return est, diff + tail + rounding


def meijer_g(spec: MeijerGSpec, x: float, *, atol: float = DEFAULT_ATOL,
             rtol: float = DEFAULT_RTOL) -> ContourResult:
    """Evaluate G^{m,n}_{p,q}(x | a; b) for real ``x > 0``.

    The Mellin-Barnes integral is taken along a vertical line that separates
    the poles of Γ(b_j - s) from those of Γ(1 - a_i + s).  If no such line
    exists the line is placed left of every Γ(b_j - s) pole and the residues
    of the Γ(1 - a_i + s) poles it passes are added back, which is the same
    bent contour in disguise.

    Raises:
        DomainError: for ``x <= 0``.
        EvaluationError: when the contour integral does not converge
            (requires m + n > (p + q) / 2).
    """
    x = float(x)
    if x <= 0:
        raise DomainError("meijer_g requires x > 0")
    spec = _excluding_collisions(spec)
    if spec.delta <= 0:
        raise EvaluationError(
            f"Mellin-Barnes line integral diverges: m+n-(p+q)/2 = {spec.delta} <= 0")
    m, n, a, b = spec.m, spec.n, spec.a, spec.b
    lx = math.log(x)
    lo, hi = _strip(m, n, a, b)
    residues: list[tuple[int, int, float]] = []

    def kernel(s):
        return _meijer_log_kernel(m, n, a, b, s) + s * lx

    if lo < hi:
        c, dist = _place_line(lo, hi, kernel, span=abs(lx) + 60.0)
    else:
        c, dist, residues = _bent_line(spec, hi)

    value, err = _line_integral(kernel, c, dist, spec.delta, atol, rtol)
    for i, l, sp in residues:
        r = _residue_value(spec, i, l, sp) * x ** sp
        value += r
        err += 1e-15 * abs(r)
    return ContourResult(float(value), float(err))


def _bent_line(spec: MeijerGSpec, hi: float):
    """Line left of all Γ(b-s) poles plus the Γ(1-a+s) poles it leaves behind."""
    poles = []
    for i in range(spec.n):
        ai = spec.a[i]
        l = 0
        while ai - 1.0 - l > hi - 1.0 - 1e-12:
            poles.append(ai - 1.0 - l)
            l += 1
    marks = sorted({hi - 1.0, hi, *[p for p in poles if hi - 1.0 < p < hi]})
    gaps = [(marks[k + 1] - marks[k], k) for k in range(len(marks) - 1)]
    width, k = max(gaps)
    c = marks[k] + 0.5 * width
    dist = 0.5 * width
    residues = []
    seen = []
    for i in range(spec.n):
        ai = spec.a[i]
        l = 0
        while ai - 1.0 - l > c:
            sp = ai - 1.0 - l
            if any(abs(sp - o) < COLLISION_TOL for o in seen):
                raise ParameterError("coincident poles left of the contour; perturb parameters")
            seen.append(sp)
            residues.append((i, l, sp))
            l += 1
    return c, dist, residues


def _residue_value(spec: MeijerGSpec, i_pole: int, l: int, sp: float) -> float:
    """Residue of the Mellin-Barnes kernel at the simple pole s = a_i - 1 - l."""
    val = (-1.0) ** l / math.factorial(l)
    for j, bj in enumerate(spec.b):
        val *= sc.gamma(bj - sp) if j < spec.m else sc.rgamma(1.0 - bj + sp)
    for i, ai in enumerate(spec.a):
        if i == i_pole:
            continue
        val *= sc.gamma(1.0 - ai + sp) if i < spec.n else sc.rgamma(ai - sp)
    return float(val)


# ---------------------------------------------------------------------------
# Bivariate Meijer G-function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GBlock:
    """One ``(orders, upper, lower)`` parameter group of a bivariate G."""

    m: int
    n: int
    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        if not (0 <= self.m <= len(self.lower) and 0 <= self.n <= len(self.upper)):
            raise ParameterError(
                f"block orders m={self.m}, n={self.n} inconsistent with "
                f"{len(self.upper)} upper / {len(self.lower)} lower parameters")


@dataclass(frozen=True)
class BivariateGSpec:
    """Extended generalized bivariate Meijer G.

    G^{0,n1 : m2,n2 : m3,n3}_{p1,q1 : p2,q2 : p3,q3}(x, y) =
    (2πi)^-2 ∬ Φ1(s+t) Φ2(s) Φ3(t) x^s y^t ds dt, with

    * Φ1(w) = Π_{j<=n1} Γ(1-a_j+w) / (Π_{j>n1} Γ(a_j-w) Π_j Γ(1-b_j+w)),
    * Φ2, Φ3 the ordinary Meijer kernels of ``second`` and ``third``.
    """

    coupled: GBlock
    second: GBlock
    third: GBlock

    def __post_init__(self):
        if self.coupled.m != 0:
            raise ParameterError("the coupled block must have m1 = 0")


def _block_log_kernel(block: GBlock, s):
    return _meijer_log_kernel(block.m, block.n, block.upper, block.lower, s)


def _block_strip(block: GBlock):
    return _strip(block.m, block.n, block.upper, block.lower)


def _choose_bivariate_lines(spec: BivariateGSpec):
    lo1 = max((spec.coupled.upper[j] - 1.0 for j in range(spec.coupled.n)), default=-math.inf)

    def finite(lo, hi):
        if math.isinf(lo) and math.isinf(hi):
            return -1.0, 1.0
        if math.isinf(hi):
            return lo, lo + 2.0
        if math.isinf(lo):
            return hi - 2.0, hi
        return lo, hi

    lo2, hi2 = finite(*_block_strip(spec.second))
    lo3, hi3 = finite(*_block_strip(spec.third))
    if not (lo2 < hi2 and lo3 < hi3):
        raise ParameterError("bivariate Meijer G: empty contour strip on one axis")
    best = None
    for ls in np.linspace(0.05, 0.95, 19):
        cs = lo2 + ls * (hi2 - lo2)
        for lt in np.linspace(0.05, 0.95, 19):
            ct = lo3 + lt * (hi3 - lo3)
            d = min(cs - lo2, hi2 - cs, ct - lo3, hi3 - ct, cs + ct - lo1)
            if best is None or d > best[0]:
                best = (d, cs, ct)
    d, cs, ct = best
    if d <= 0:
        raise ParameterError("bivariate Meijer G: contours cannot separate the coupled poles")
    return cs, ct, d


def bivariate_meijer_g(spec: BivariateGSpec, x: float, y: float, *,
                       atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL,
                       max_levels: int = 4) -> ContourResult:
    """Evaluate the bivariate Meijer G of ``spec`` at ``(x, y)``, both > 0.

    Double Mellin-Barnes integral over two vertical lines, as a 2-D
    trapezoid sum on a common lattice so that the coupled factor is a 1-D
    array indexed by k1 + k2.  Step halving until two levels agree.

    Raises:
        DomainError: for non-positive arguments.
        ParameterError: when no contour pair separates the poles.
        EvaluationError: when the double integral does not converge.
    """
    if x <= 0 or y <= 0:
        raise DomainError("bivariate_meijer_g requires x, y > 0")
    cs, ct, dist = _choose_bivariate_lines(spec)
    lx, ly = math.log(x), math.log(y)

    def phi2(yy):
        s = cs + 1j * yy
        return _block_log_kernel(spec.second, s) + s * lx

    def phi3(yy):
        t = ct + 1j * yy
        return _block_log_kernel(spec.third, t) + t * ly

    def phi1(yy):
        return _block_log_kernel(spec.coupled, cs + ct + 1j * yy)

    def grid(ymax, h):
        k = np.arange(-int(round(ymax / h)), int(round(ymax / h)) + 1)
        yy = k * h
        p2, p3 = phi2(yy), phi3(yy)
        p1 = phi1(np.arange(2 * k[0], 2 * k[-1] + 1) * h)
        idx = np.add.outer(np.arange(k.size), np.arange(k.size))
        return p2[:, None] + p3[None, :] + p1[idx]

    # truncation: grow the box until its rim is negligible
    ymax = 10.0
    while True:
        lk = grid(ymax, 0.25).real
        top = lk.max()
        rim = max(lk[0].max(), lk[-1].max(), lk[:, 0].max(), lk[:, -1].max())
        rel_rim = rim - top
        if rel_rim < -42.0:
            break
        ymax *= 1.5
        if ymax > 400:
            raise EvaluationError("bivariate Mellin-Barnes integrand does not decay")

    h = min(0.25, dist / 3.0)
    h = ymax / math.ceil(ymax / h)
    prev = None
    for _ in range(max_levels + 1):
        vals = np.exp(grid(ymax, h)).real
        est = h * h * vals.sum() / (4 * np.pi ** 2)
        absum = h * h * np.abs(vals).sum() / (4 * np.pi ** 2)
        if prev is not None:
            diff = abs(est - prev)
            if diff <= max(atol, rtol * abs(est)):
                err = (diff + math.exp(rel_rim) * absum
                       + 64 * np.finfo(float).eps * (1.0 + abs(top)) * absum)
                return ContourResult(float(est), float(err))
        prev = est
        h *= 0.5
    raise EvaluationError(
        f"bivariate Mellin-Barnes trapezoid did not converge (difference {diff:.3e})")
