"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
collected and printed in the terminal summary.  Running this file as a
script prints them directly.
"""

import functools
import json
import math
import time
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy import integrate

from thzrelay.channel_model import FadingParams, PointingParams
from thzrelay.cli import Config, compare_report
from thzrelay.errors import PreconditionError
from thzrelay.metrics import (BPSK, average_ber_closed_form, average_ber_quadrature,
                              average_snr_closed, average_snr_quadrature, diversity_order,
                              ergodic_capacity_lower_closed, ergodic_capacity_lower_quadrature,
                              fit_loglog_slope, outage_probability)
from thzrelay.monte_carlo import (SimConfig, avg_snr_stats, capacity_stats, outage_stats,
                                  run_statistics)
from thzrelay.special_functions import (MeijerGSpec, gauss_2f1, meijer_g,
                                        upper_incomplete_gamma)
from thzrelay.statistics import (DualHopModel, HopStatistics, envelope_pdf, hop_snr_cdf,
                                 hop_snr_pdf)

RESULTS: dict[int, str] = {}
FIXTURE = Path(__file__).parent / "fixtures" / "ber_gap.json"
GAMMA_TH = 10 ** 0.4
SET_A = (1.0, 1.5, 2.4)
SET_B = (2.0, 2.5, 6.7)


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def model(alpha, mu, phi, gamma0_db, s0=0.8):
    return DualHopModel.symmetric(FadingParams(alpha, mu), PointingParams(phi, s0),
                                  10 ** (gamma0_db / 10))


def log_quad(f, lo, hi, pts=()):
    edges = sorted({lo, hi, *[p for p in pts if lo < p < hi]})
    g = lambda u: f(math.exp(u)) * math.exp(u)  # noqa: E731
    return sum(integrate.quad(g, a, b, limit=400, epsabs=1e-15, epsrel=1e-12)[0]
               for a, b in zip(edges[:-1], edges[1:]))


def test_criterion_1_distribution_correctness():
    t0 = time.perf_counter()
    worst_mass = worst_cdf = 0.0
    for alpha in (1.0, 2.0, 3.0):
        for mu in (1.0, 1.5, 2.5):
            for phi in (1.2, 2.4, 6.7):
                h = HopStatistics.create(FadingParams(alpha, mu), PointingParams(phi, 0.8), 1.0)
                env = log_quad(lambda x: envelope_pdf(x, h), -150, 3, [-20, -5, 0])
                snr = log_quad(lambda g: hop_snr_pdf(g, h), -300, 8, [-20, -5, 0, 2])
                worst_mass = max(worst_mass, abs(env - 1), abs(snr - 1))
                for g in (1e-4, 0.05, 0.5, 2.0, 20.0):
                    ref = log_quad(lambda t: hop_snr_pdf(t, h), -300, math.log(g), [-20, -5, 0, 2])
                    worst_cdf = max(worst_cdf, abs(float(hop_snr_cdf(g, h)) - ref))
    dt = time.perf_counter() - t0
    ok = worst_mass <= 1e-6 and worst_cdf <= 1e-8 and dt < 60
    report(1, ok, f"max |mass-1|={worst_mass:.2e}, max |CDF-int PDF|={worst_cdf:.2e}, {dt:.1f}s")


@functools.lru_cache(maxsize=None)
def _outage_mc():
    out = {}
    for db in (5.0, 15.0, 25.0, 35.0):
        m = model(*SET_A, db)
        est = run_statistics(m, SimConfig(samples=1_000_000, seed=2024), outage_stats(GAMMA_TH))
        out[db] = (outage_probability(GAMMA_TH, m).value, est["outage_min"], est["outage_exact"])
    return out


def _sigma(est, p, n):
    # floor the spread by the Bernoulli variance of the analytic probability
    return max(est.std_error, math.sqrt(p * (1 - p) / n))


def test_criterion_2_monte_carlo_outage():
    t0 = time.perf_counter()
    res = _outage_mc()
    z = {db: abs(mn.mean - p) / _sigma(mn, p, mn.n) for db, (p, mn, _) in res.items()}
    dt = time.perf_counter() - t0
    ok = max(z.values()) <= 3 and dt < 120
    report(2, ok, "z-scores " + ", ".join(f"{db:g} dB: {v:.2f}" for db, v in z.items()) + f", {dt:.1f}s")


def test_criterion_3_bound_direction():
    res = _outage_mc()
    slack = {db: (ex.mean - p) / _sigma(ex, p, ex.n) for db, (p, _, ex) in res.items()}
    ok = min(slack.values()) >= -3
    report(3, ok, "(exact-AF - bound)/sigma " + ", ".join(f"{db:g} dB: {v:+.1f}" for db, v in slack.items()))


def test_criterion_4_diversity_order():
    x = np.arange(30.0, 40.1, 2.0)
    parts, ok = [], True
    for params in (SET_A, SET_B):
        target = diversity_order(FadingParams(*params[:2]), PointingParams(params[2], 0.8))
        out = fit_loglog_slope(x, [outage_probability(GAMMA_TH, model(*params, d)).value for d in x])
        ber = fit_loglog_slope(x, [average_ber_quadrature(BPSK, model(*params, d)).value for d in x])
        ok &= abs(out - target) <= 0.1 * target and abs(ber - target) <= 0.1 * target
        parts.append(f"{params}: M={target:g} outage {out:.3f} BER {ber:.3f}")
    report(4, ok, "; ".join(parts))


def test_criterion_5_ber_closed_form():
    doc = json.loads(FIXTURE.read_text())
    bound = doc["bound"]
    recorded = {(p["alpha"], p["mu"], p["phi"], p["gamma0_db"]): p["rel_gap"] for p in doc["points"]}
    worst, ok = 0.0, True
    for alpha in (1, 2):
        for mu in (1, 2, 3):
            for phi in (2.4, 6.7):
                for db in (10.0, 20.0, 30.0, 40.0):
                    m = model(alpha, mu, phi, db, s0=doc["s0"])
                    c = average_ber_closed_form(BPSK, m).value
                    q = average_ber_quadrature(BPSK, m, tol=1e-10).value
                    gap = abs(c - q) / q
                    worst = max(worst, gap)
                    lock = max(10 * recorded[(alpha, mu, phi, db)], 1e-10)
                    ok &= gap <= bound and gap <= lock
    raised = 0
    for alpha, mu in ((1, 1.5), (2.5, 2), (1.5, 2.5)):
        try:
            average_ber_closed_form(BPSK, model(alpha, mu, 2.4, 20.0))
        except PreconditionError:
            raised += 1
    ok &= raised == 3
    report(5, ok, f"max relative gap {worst:.2e} (fixture bound {bound:g}, "
                  f"recorded max {doc['max_rel_gap']:.2e}); non-integer preconditions {raised}/3")


def test_criterion_6_capacity():
    parts, ok, worst_z = [], True, -math.inf
    for params in (SET_A, (1.0, 1.5, 6.7), SET_B):
        for db in (0.0, 20.0, 40.0):
            m = model(*params, db)
            c = ergodic_capacity_lower_closed(m)
            q = ergodic_capacity_lower_quadrature(m)
            ok &= abs(c.value - q.value) <= c.error_estimate + q.error_estimate + 1e-12
            est = run_statistics(m, SimConfig(samples=200_000, seed=7), capacity_stats())
            mc = est["capacity_log1p_min"]
            z = (q.value - mc.mean) / mc.std_error
            worst_z = max(worst_z, z)
            ok &= z <= 3
    parts.append(f"closed vs quadrature within combined errors on 9 points, "
                 f"max (quadrature - MC log1p)/sigma = {worst_z:+.2f}")
    anchor = Config(ptx_dbm=30.0, d1_m=40.0, d2_m=40.0)
    g1, _ = anchor.gamma0s()
    rate = anchor.bw_ghz * ergodic_capacity_lower_closed(anchor.model()).value
    ok &= 100 / 3 <= rate <= 300
    parts.append(f"anchor 30 dBm, 40 m: gamma0 {10 * math.log10(g1):.1f} dB, rate {rate:.1f} Gbps")
    report(6, ok, "; ".join(parts))


def test_criterion_7_average_snr():
    phis = list(range(1, 13))
    vals, worst_rel, worst_z = [], 0.0, 0.0
    for phi in phis:
        m = model(1.0, 1.5, float(phi), 20.0)
        c = average_snr_closed(m).value
        q = average_snr_quadrature(m).value
        worst_rel = max(worst_rel, abs(c - q) / q)
        est = run_statistics(m, SimConfig(samples=400_000, seed=phi), avg_snr_stats())["avg_snr_min"]
        worst_z = max(worst_z, abs(est.mean - c) / est.std_error)
        vals.append(c)
    inc = np.diff(vals)
    shape = bool(np.all(inc > 0) and np.all(np.diff(inc) < 0) and inc[-1] < 0.1 * inc[0])
    ok = worst_rel <= 5e-3 and worst_z <= 3 and shape
    report(7, ok, f"max closed/quadrature rel {worst_rel:.1e}, max MC z {worst_z:.2f}, "
                  f"increments {inc[0]:.3g} -> {inc[-1]:.3g}")


def test_criterion_8_kernel_identities():
    xs = (0.01, 0.3, 1.0, 7.5, 100.0)
    worst, bounded, n = 0.0, True, 0

    def check(value, exact, err=None):
        nonlocal worst, bounded, n
        n += 1
        worst = max(worst, abs(value - exact) / abs(exact))
        if err is not None:
            bounded &= err >= abs(value - exact)

    for x in xs:
        r = meijer_g(MeijerGSpec(1, 0, (), (0.0,)), x)
        check(r.value, math.exp(-x), r.error)
        r = meijer_g(MeijerGSpec(1, 2, (1.0, 1.0), (1.0, 0.0)), x)
        check(r.value, math.log1p(x), r.error)
        for a in (2.5, 0.4, -0.85):
            r = meijer_g(MeijerGSpec(2, 0, (1.0,), (a, 0.0)), x)
            check(r.value, float(mp.gammainc(a, x)), r.error)
    for a, b, c in ((0.5, 1.0, 1.5), (1.2, -0.4, 2.3), (3.0, 2.5, 0.7), (-1.5, 0.6, 1.1)):
        check(gauss_2f1(a, b, c, -1.0), float(mp.hyp2f1(a, b, c, -1.0)))
    for a in (-0.3, -1.7, -4.2, -7.5):
        for x in (1e-3, 0.4, 1.2):
            check(upper_incomplete_gamma(a, x), float(mp.gammainc(a, x)))
    ok = worst <= 1e-8 and bounded
    report(8, ok, f"{n} identities, max relative error {worst:.1e}, "
                  f"error estimates {'bound' if bounded else 'do NOT bound'} true errors")


def test_criterion_9_determinism():
    cfg = Config(gamma0_db=15.0, samples=200_000, seed=42, batch=1 << 15)
    a = compare_report(cfg)
    b = compare_report(cfg)
    c = compare_report(Config(gamma0_db=15.0, samples=200_000, seed=42, batch=1 << 15, workers=4))
    d = compare_report(cfg, "csv")
    e = compare_report(Config(gamma0_db=15.0, samples=200_000, seed=42, batch=1 << 15, workers=3), "csv")
    ok = a == b == c and d == e
    report(9, ok, f"text report {len(a.encode())} bytes identical across runs and 1/4 threads; "
                  f"csv identical across 1/3 threads: {d == e}")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
