"""Monte-Carlo oracle for the dual-hop link.

Samples are generated in fixed-size batches.  Batch ``i`` draws from
``SeedSequence(seed).spawn(...)[i]``, itself split into one substream per
hop, so results depend only on (seed, samples, batch) and never on the
number of worker threads.  Per-batch moments are merged in batch order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import special as sc

from .channel_model import FadingParams, PointingParams
from .errors import ParameterError
from .metrics import ModulationParams
from .statistics import DualHopModel, HopStatistics


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo settings.

    Attributes:
        samples: total number of channel realizations.
        seed: root seed (any non-negative integer).
        antithetic: pair each uniform draw with its mirror 1 − U.  Uses
            inverse-CDF gamma sampling, which is slower.
        batch: realizations per batch.
        workers: threads used to process batches.
    """

    samples: int = 10_000_000
    seed: int = 0
    antithetic: bool = False
    batch: int = 1 << 18
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ParameterError(f"samples must be >= 1, got {self.samples}")
        if self.batch < 1:
            raise ParameterError(f"batch must be >= 1, got {self.batch}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")
        if self.antithetic and (self.batch % 2 or self.samples % 2):
            raise ParameterError("antithetic sampling needs even batch and sample counts")


@dataclass(frozen=True)
class EmpiricalEstimate:
    mean: float
    std_error: float
    n: int


class _Moments:
    """Running count, mean and centered second moment (Chan et al. merge)."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self, n=0, mean=0.0, m2=0.0):
        self.n, self.mean, self.m2 = n, mean, m2

    @classmethod
    def of(cls, x: np.ndarray) -> "_Moments":
        n = x.size
        mean = float(np.mean(x)) if n else 0.0
        return cls(n, mean, float(np.sum((x - mean) ** 2)) if n else 0.0)

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        d = other.mean - self.mean
        self.mean += d * other.n / n
        self.m2 += other.m2 + d * d * self.n * other.n / n
        self.n = n

    def estimate(self) -> EmpiricalEstimate:
        if self.n < 2:
            return EmpiricalEstimate(self.mean, math.inf, self.n)
        var = self.m2 / (self.n - 1)
        return EmpiricalEstimate(self.mean, math.sqrt(var / self.n), self.n)


def _uniform(rng: np.random.Generator, size: int, antithetic: bool) -> np.ndarray:
    # values in (0, 1]; 1 - random() never returns 0
    if not antithetic:
        return 1.0 - rng.random(size)
    half = 1.0 - rng.random(size // 2)
    return np.concatenate([half, np.maximum(1.0 - half, np.finfo(float).tiny)])


def sample_alpha_mu(fading: FadingParams, rng: np.random.Generator, size: int,
                    antithetic: bool = False) -> np.ndarray:
    """Envelope samples R with R^α ~ Gamma(μ, Ω^α/μ)."""
    scale = fading.omega ** fading.alpha / fading.mu
    if antithetic:
        g = sc.gammaincinv(fading.mu, np.minimum(_uniform(rng, size, True), 1.0)) * scale
    else:
        g = rng.standard_gamma(fading.mu, size) * scale
    return g ** (1.0 / fading.alpha)


def sample_pointing(pointing: PointingParams, rng: np.random.Generator, size: int,
                    antithetic: bool = False) -> np.ndarray:
    """Misalignment gain S₀ U^(1/φ), supported on (0, S₀]."""
    u = np.minimum(_uniform(rng, size, antithetic), 1.0)
    return pointing.s0 * u ** (1.0 / pointing.phi)


def _hop_snr(hop: HopStatistics, seq: np.random.SeedSequence, size: int, antithetic: bool):
    f_rng, p_rng = (np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(2))
    h = sample_alpha_mu(hop.fading, f_rng, size, antithetic) * sample_pointing(
        hop.pointing, p_rng, size, antithetic)
    return hop.gamma0 * h * h


def _batch_sizes(cfg: SimConfig) -> list[int]:
    full, rest = divmod(cfg.samples, cfg.batch)
    sizes = [cfg.batch] * full
    if rest:
        sizes.append(rest)
    return sizes


def _batch_snrs(model: DualHopModel, cfg: SimConfig, index: int, size: int,
                swap_hops: bool = False):
    batch_seq = np.random.SeedSequence(cfg.seed, spawn_key=(index,))
    s1, s2 = batch_seq.spawn(2)
    if swap_hops:
        s1, s2 = s2, s1
    g1 = _hop_snr(model.hop1, s1, size, cfg.antithetic)
    g2 = _hop_snr(model.hop2, s2, size, cfg.antithetic)
    exact = g1 * g2 / (g1 + g2 + 1.0)
    return exact, np.minimum(g1, g2)


def simulate_e2e(model: DualHopModel, cfg: SimConfig, *, swap_hops: bool = False
                 ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield batches of (γ_exact, γ_min) end-to-end SNR samples."""
    for i, size in enumerate(_batch_sizes(cfg)):
        yield _batch_snrs(model, cfg, i, size, swap_hops)


Statistic = Callable[[np.ndarray], np.ndarray]


def run_statistics(model: DualHopModel, cfg: SimConfig,
                   stats: dict[str, tuple[str, Statistic]]) -> dict[str, EmpiricalEstimate]:
    """Estimate several per-sample means in one pass.

    Args:
        stats: name → (variant, function) where variant is ``"exact"`` or
            ``"min"`` and the function maps an SNR array to per-sample values.

    Returns:
        name → EmpiricalEstimate.
    """
    for name, (variant, _) in stats.items():
        if variant not in ("exact", "min"):
            raise ParameterError(f"statistic {name}: variant must be 'exact' or 'min'")
    sizes = _batch_sizes(cfg)

    def work(args):
        i, size = args
        exact, mn = _batch_snrs(model, cfg, i, size)
        src = {"exact": exact, "min": mn}
        return {name: _Moments.of(fn(src[var])) for name, (var, fn) in stats.items()}

    totals = {name: _Moments() for name in stats}
    jobs = list(enumerate(sizes))
    if cfg.workers == 1:
        parts = map(work, jobs)
        for part in parts:
            for name, m in part.items():
                totals[name].merge(m)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for part in pool.map(work, jobs):
                for name, m in part.items():
                    totals[name].merge(m)
    return {name: t.estimate() for name, t in totals.items()}


def outage_stats(gamma_th: float) -> dict:
    ind = lambda g: (g < gamma_th).astype(float)  # noqa: E731
    return {"outage_min": ("min", ind), "outage_exact": ("exact", ind)}


def ber_stats(mod: ModulationParams) -> dict:
    return {"ber_min": ("min", mod.conditional_ber), "ber_exact": ("exact", mod.conditional_ber)}


def capacity_stats() -> dict:
    log1p = lambda g: np.log2(1.0 + g)  # noqa: E731
    return {"capacity_log1p_min": ("min", log1p), "capacity_log1p_exact": ("exact", log1p),
            "capacity_log_min": ("min", np.log2), "capacity_log_exact": ("exact", np.log2)}


def avg_snr_stats() -> dict:
    ident = lambda g: g  # noqa: E731
    return {"avg_snr_min": ("min", ident), "avg_snr_exact": ("exact", ident)}


def empirical_outage(gamma_th: float, model: DualHopModel, cfg: SimConfig) -> dict[str, EmpiricalEstimate]:
    """Outage frequency; keys ``outage_min`` and ``outage_exact``."""
    return run_statistics(model, cfg, outage_stats(gamma_th))


def empirical_ber(mod: ModulationParams, model: DualHopModel, cfg: SimConfig) -> dict[str, EmpiricalEstimate]:
    """Mean conditional BER; keys ``ber_min`` and ``ber_exact``."""
    return run_statistics(model, cfg, ber_stats(mod))


def empirical_capacity(model: DualHopModel, cfg: SimConfig) -> dict[str, EmpiricalEstimate]:
    """E[log₂(1+γ)] and E[log₂ γ] for both SNR variants."""
    return run_statistics(model, cfg, capacity_stats())


def empirical_avg_snr(model: DualHopModel, cfg: SimConfig) -> dict[str, EmpiricalEstimate]:
    return run_statistics(model, cfg, avg_snr_stats())
