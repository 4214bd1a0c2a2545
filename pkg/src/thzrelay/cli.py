"""Command-line front end: config files, sweeps, figure presets, comparisons.

Configuration files hold flat ``key = value`` lines with ``#`` comments.
Command-line flags use the same names (``--alpha 2`` or ``--f-ghz 300``)
and override the file.  Exit codes: 0 success, 1 validation error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

from .channel_model import FadingParams, LinkBudget, PointingParams, linear_to_db, snr_anchor
from .errors import EvaluationError, ParameterError, PreconditionError, ThzRelayError
from .metrics import (MODULATIONS, average_ber_closed_form, average_ber_quadrature,
                      average_snr_closed, average_snr_quadrature, ergodic_capacity_lower_closed,
                      ergodic_capacity_lower_quadrature, outage_probability)
from .monte_carlo import (SimConfig, avg_snr_stats, ber_stats, capacity_stats, outage_stats,
                          run_statistics)
from .statistics import DualHopModel, HopStatistics

CSV_COLUMNS = ("sweep_var", "sweep_value", "metric", "method", "value", "error_estimate",
               "alpha", "mu", "phi", "s0", "gamma0_db_hop1", "gamma0_db_hop2", "status")
METRICS = ("outage", "ber", "avg_snr", "capacity", "capacity_log1p", "rate_gbps")
METHODS = ("closed_form", "quadrature", "monte_carlo", "monte_carlo_exact")
SWEEP_VARS = ("gamma0_db", "ptx_dbm", "phi", "d_m", "gamma_th_db")


class ConfigError(ParameterError):
    """Malformed or invalid configuration input."""


@dataclass(frozen=True)
class Config:
    """Every configurable quantity; defaults reproduce the reference scenario."""

    f_ghz: float = 275.0
    d1_m: float = 10.0
    d2_m: float = 10.0
    ptx_dbm: float = 20.0
    gain_dbi: float = 45.0
    k_abs_per_m: float = 0.0033
    n0_dbm_hz: float = -174.0
    bw_ghz: float = 10.0
    gamma_th_db: float = 4.0
    alpha: float = 1.0
    mu: float = 1.5
    omega: float = 1.0
    phi: float = 2.4
    s0: float = 0.8
    samples: int = 10_000_000
    seed: int = 0
    gamma0_db: Optional[float] = None
    modulation: str = "bpsk"
    workers: int = 1
    batch: int = 1 << 18
    sweep_var: str = "gamma0_db"
    sweep_start: float = 0.0
    sweep_stop: float = 40.0
    sweep_step: float = 2.0
    metrics: str = "outage,ber,avg_snr,capacity"
    methods: str = "closed_form,quadrature,monte_carlo"

    # -- derived objects --------------------------------------------------
    def fading(self) -> FadingParams:
        return FadingParams(self.alpha, self.mu, self.omega)

    def pointing(self) -> PointingParams:
        return PointingParams(self.phi, self.s0)

    def link_budget(self, hop: int) -> LinkBudget:
        return LinkBudget.from_db(f_ghz=self.f_ghz, d_m=self.d1_m if hop == 1 else self.d2_m,
                                  gain_dbi=self.gain_dbi, k_abs_per_m=self.k_abs_per_m,
                                  ptx_dbm=self.ptx_dbm, n0_dbm_hz=self.n0_dbm_hz,
                                  bw_ghz=self.bw_ghz)

    def gamma0s(self) -> tuple[float, float]:
        if self.gamma0_db is not None:
            g = 10.0 ** (self.gamma0_db / 10.0)
            return g, g
        return snr_anchor(self.link_budget(1)), snr_anchor(self.link_budget(2))

    def model(self) -> DualHopModel:
        g1, g2 = self.gamma0s()
        hop = HopStatistics.create(self.fading(), self.pointing(), g1)
        return DualHopModel(hop, hop if g2 == g1 else hop.with_gamma0(g2))

    def sim(self, workers: int | None = None) -> SimConfig:
        return SimConfig(samples=self.samples, seed=self.seed, batch=self.batch,
                         workers=self.workers if workers is None else workers)

    def modulation_params(self):
        try:
            return MODULATIONS[self.modulation]
        except KeyError:
            raise ConfigError(f"unknown modulation {self.modulation!r}; "
                              f"choose one of {sorted(MODULATIONS)}") from None

    def gamma_th(self) -> float:
        return 10.0 ** (self.gamma_th_db / 10.0)

    def with_value(self, var: str, value: float) -> "Config":
        if var == "d_m":
            return dataclasses.replace(self, d1_m=value, d2_m=value)
        if var not in SWEEP_VARS:
            raise ConfigError(f"cannot sweep {var!r}; choose one of {SWEEP_VARS}")
        return dataclasses.replace(self, **{var: value})


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "float":
        return float(raw)
    if kind == "int":
        v = float(raw)
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if kind == "Optional[float]":
        return None if raw.lower() in ("", "none") else float(raw)
    return raw


def _validate(cfg: Config) -> None:
    cfg.model()
    cfg.sim()
    cfg.modulation_params()
    sweep_spec(cfg)


def parse_config_text(text: str, source: str = "<config>") -> tuple[Config, set[str]]:
    """Parse configuration text; returns the config and the keys it set."""
    values: dict = {}
    lines: dict[str, int] = {}
    for no, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{no}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r} (first on line {lines[key]})")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{no}: bad value for {key}: {exc}") from None
        lines[key] = no
    cfg = Config(**values)
    try:
        _validate(cfg)
    except ParameterError as exc:
        msg = str(exc)
        hit = [k for k in lines if f".{k}" in msg or f"{k} " in msg or f"{k!r}" in msg]
        where = f"{source}:{lines[hit[0]]}" if hit else source
        raise ConfigError(f"{where}: {msg}") from None
    sweep_conflict(cfg, set(values))
    return cfg, set(values)


def sweep_conflict(cfg: Config, explicit: set[str]) -> None:
    """Reject a swept variable that is also given a fixed value."""
    fixed = {"d_m": {"d1_m", "d2_m"}}.get(cfg.sweep_var, {cfg.sweep_var})
    if "sweep_var" in explicit and fixed & explicit:
        raise ConfigError(f"swept variable {cfg.sweep_var} is also fixed by "
                          f"{', '.join(sorted(fixed & explicit))}")


def emit_config(cfg: Config) -> str:
    """Canonical text form; ``parse_config_text(emit_config(c))[0] == c``.

    Every key is listed in field order.  Keys at their default value are
    written as comments, so the output never fixes a swept variable that the
    source config left free.
    """
    out = []
    for f in fields(Config):
        v = getattr(cfg, f.name)
        text = "none" if v is None else (v if isinstance(v, str) else repr(v))
        prefix = "# " if v == f.default else ""
        out.append(f"{prefix}{f.name} = {text}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    fixed: Config
    metrics: tuple[str, ...]
    methods: tuple[str, ...]

    def __post_init__(self):
        if self.variable not in SWEEP_VARS:
            raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}, got {self.variable!r}")
        if not (self.start < self.stop and self.step > 0):
            raise ConfigError("sweep range needs start < stop and step > 0")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}; choose from {METRICS}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")

    def values(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [round(self.start + i * self.step, 12) for i in range(n + 1)]


def _split(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def sweep_spec(cfg: Config) -> SweepSpec:
    return SweepSpec(cfg.sweep_var, cfg.sweep_start, cfg.sweep_stop, cfg.sweep_step, cfg,
                     _split(cfg.metrics), _split(cfg.methods))


def parse_config(path) -> tuple[DualHopModel, SimConfig, SweepSpec]:
    """Read a configuration file and return the model, MC settings and sweep."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg, _ = parse_config_text(text, str(path))
    return cfg.model(), cfg.sim(), sweep_spec(cfg)


# -- evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    value: float
    error: float
    status: str = "ok"


_NA = Cell(math.nan, math.nan, "N/A")


def _analytic(cfg: Config, model: DualHopModel, metric: str, method: str) -> Cell:
    mod = cfg.modulation_params()
    table = {
        ("outage", "closed_form"): lambda: outage_probability(cfg.gamma_th(), model),
        ("ber", "closed_form"): lambda: average_ber_closed_form(mod, model),
        ("ber", "quadrature"): lambda: average_ber_quadrature(mod, model),
        ("avg_snr", "closed_form"): lambda: average_snr_closed(model),
        ("avg_snr", "quadrature"): lambda: average_snr_quadrature(model),
        ("capacity", "closed_form"): lambda: ergodic_capacity_lower_closed(model),
        ("capacity", "quadrature"): lambda: ergodic_capacity_lower_quadrature(model),
    }
    base = "capacity" if metric == "rate_gbps" else metric
    fn = table.get((base, method))
    if fn is None:
        return _NA
    try:
        rep = fn()
    except PreconditionError as exc:
        return Cell(math.nan, math.nan, f"N/A: {exc}")
    except EvaluationError as exc:
        return Cell(math.nan, math.nan, f"error: {exc}")
    scale = cfg.bw_ghz if metric == "rate_gbps" else 1.0
    return Cell(rep.value * scale, rep.error_estimate * scale)


_MC_KEYS = {"outage": "outage", "ber": "ber", "avg_snr": "avg_snr", "capacity": "capacity_log",
            "capacity_log1p": "capacity_log1p", "rate_gbps": "capacity_log"}


def _monte_carlo(cfg: Config, model: DualHopModel, metrics, workers: int) -> dict:
    stats: dict = {}
    if "outage" in metrics:
        stats.update(outage_stats(cfg.gamma_th()))
    if "ber" in metrics:
        stats.update(ber_stats(cfg.modulation_params()))
    if "avg_snr" in metrics:
        stats.update(avg_snr_stats())
    if {"capacity", "capacity_log1p", "rate_gbps"} & set(metrics):
        stats.update(capacity_stats())
    return run_statistics(model, cfg.sim(workers), stats) if stats else {}


def _mc_cell(cfg: Config, est: dict, metric: str, variant: str) -> Cell:
    e = est[f"{_MC_KEYS[metric]}_{variant}"]
    scale = cfg.bw_ghz if metric == "rate_gbps" else 1.0
    return Cell(e.mean * scale, e.std_error * scale)


def evaluate_point(cfg: Config, metrics, methods, mc_workers: int = 1) -> list[tuple[str, str, Cell]]:
    """All (metric, method, cell) results for one parameter point."""
    try:
        model = cfg.model()
    except ParameterError as exc:
        bad = Cell(math.nan, math.nan, f"invalid: {exc}")
        return [(m, k, bad) for m in metrics for k in methods]
    needs_mc = any(k.startswith("monte_carlo") for k in methods)
    est = _monte_carlo(cfg, model, metrics, mc_workers) if needs_mc else {}
    out = []
    for metric in metrics:
        for method in methods:
            if method == "monte_carlo":
                cell = _mc_cell(cfg, est, metric, "min")
            elif method == "monte_carlo_exact":
                cell = _mc_cell(cfg, est, metric, "exact")
            elif metric == "capacity_log1p":
                cell = _NA
            else:
                cell = _analytic(cfg, model, metric, method)
            out.append((metric, method, cell))
    return out


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else format(v, ".10g")


def _echo(cfg: Config) -> list[str]:
    try:
        g1, g2 = cfg.gamma0s()
        gd = [_fmt(linear_to_db(g1)), _fmt(linear_to_db(g2))]
    except ParameterError:
        gd = ["nan", "nan"]
    return [_fmt(cfg.alpha), _fmt(cfg.mu), _fmt(cfg.phi), _fmt(cfg.s0), *gd]


def run_sweep(spec: SweepSpec) -> list[list[str]]:
    """CSV rows (without header) in sweep order, metric order, method order."""
    points = [spec.fixed.with_value(spec.variable, v) for v in spec.values()]
    workers = spec.fixed.workers

    def one(cfg):
        # parallelism lives at the sweep level; MC shards are deterministic either way
        return evaluate_point(cfg, spec.metrics, spec.methods, mc_workers=1)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(c) for c in points]
    rows = []
    for value, cfg, res in zip(spec.values(), points, results):
        for metric, method, cell in res:
            rows.append([spec.variable, _fmt(value), metric, method, _fmt(cell.value),
                         _fmt(cell.error), *_echo(cfg), cell.status])
    return rows


def rows_to_csv(rows, header=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- presets -----------------------------------------------------------------

FIG1_SETS = ((1.0, 1.5, 2.4), (1.0, 1.5, 6.7), (2.0, 2.5, 6.7))
PTX_SET = (0.0, 10.0, 20.0, 30.0)


def preset_specs(name: str, base: Config) -> list[SweepSpec]:
    """Sweeps behind each figure preset."""
    specs = []
    if name in ("fig1a", "fig1b"):
        metric, methods = (("outage",), ("closed_form", "monte_carlo", "monte_carlo_exact")) \
            if name == "fig1a" else (("ber",), ("closed_form", "quadrature", "monte_carlo"))
        for a, mu, phi in FIG1_SETS:
            cfg = dataclasses.replace(base, alpha=a, mu=mu, phi=phi)
            specs.append(SweepSpec("gamma0_db", 0.0, 40.0, 2.0, cfg, metric, methods))
    elif name == "fig2a":
        for p in PTX_SET:
            cfg = dataclasses.replace(base, alpha=1.0, mu=1.5, ptx_dbm=p, gamma0_db=None)
            specs.append(SweepSpec("phi", 1.0, 12.0, 1.0, cfg, ("avg_snr",),
                                   ("closed_form", "quadrature", "monte_carlo")))
    elif name == "fig2b":
        for p in PTX_SET:
            cfg = dataclasses.replace(base, ptx_dbm=p, gamma0_db=None)
            specs.append(SweepSpec("d_m", 10.0, 100.0, 10.0, cfg, ("rate_gbps",),
                                   ("closed_form", "quadrature", "monte_carlo")))
    else:
        raise ConfigError(f"unknown preset {name!r}; choose fig1a, fig1b, fig2a or fig2b")
    return specs


# -- comparison report -------------------------------------------------------

def _mc_sigma(metric: str, mc: Cell, ref: Cell, n: int) -> float:
    """Standard error, floored by the variance bound implied by the reference.

    Rare-event estimates can show zero spread; an indicator has variance
    p(1 − p) and a conditional BER X ≤ 1/2 has Var X ≤ E[X]/2.
    """
    p = min(max(ref.value, 0.0), 1.0)
    if metric == "outage":
        return max(mc.error, math.sqrt(p * (1.0 - p) / n))
    if metric == "ber":
        return max(mc.error, math.sqrt(0.5 * p / n))
    return mc.error


def compare_rows(cfg: Config) -> list[dict]:
    """Closed form, quadrature and Monte Carlo side by side for every metric."""
    metrics = ("outage", "ber", "avg_snr", "capacity")
    res = evaluate_point(cfg, metrics, ("closed_form", "quadrature", "monte_carlo"),
                         mc_workers=cfg.workers)
    by = {(m, k): c for m, k, c in res}
    rows = []
    for m in metrics:
        closed, quad, mc = by[(m, "closed_form")], by[(m, "quadrature")], by[(m, "monte_carlo")]
        ref = quad if quad.status == "ok" else closed
        ok = ref.status == "ok"
        if ok and closed.status == "ok" and quad.status == "ok":
            tol = max(1e-6 * abs(quad.value), 3.0 * (closed.error + quad.error))
            ok = abs(closed.value - quad.value) <= tol
        if ok:
            ok = abs(mc.value - ref.value) <= 3.0 * _mc_sigma(m, mc, ref, cfg.samples) \
                + 1e-12 * abs(ref.value)
        if closed.status.startswith("error") or quad.status.startswith("error"):
            ok = False
        rows.append({"metric": m, "closed": closed, "quadrature": quad, "mc": mc,
                     "verdict": "PASS" if ok else "FAIL"})
    return rows


def _cell_text(c: Cell) -> str:
    return "N/A" if c.status.startswith("N/A") else ("ERROR" if c.status != "ok" else f"{c.value:.6e}")


def compare_report(cfg: Config, fmt: str = "text") -> str:
    rows = compare_rows(cfg)
    g1, g2 = cfg.gamma0s()
    if fmt == "csv":
        body = [[r["metric"], _fmt(r["closed"].value), _fmt(r["quadrature"].value),
                 _fmt(r["mc"].value), _fmt(r["mc"].error), r["verdict"]] for r in rows]
        return rows_to_csv(body, ("metric", "closed_form", "quadrature", "monte_carlo",
                                  "mc_std_error", "verdict"))
    lines = [
        f"alpha={cfg.alpha:g} mu={cfg.mu:g} omega={cfg.omega:g} phi={cfg.phi:g} s0={cfg.s0:g} "
        f"gamma0_db=({linear_to_db(g1):.4f}, {linear_to_db(g2):.4f}) "
        f"gamma_th_db={cfg.gamma_th_db:g} modulation={cfg.modulation}",
        f"monte carlo: samples={cfg.samples} seed={cfg.seed}",
        f"{'metric':<10} {'closed':>14} {'quadrature':>14} {'monte carlo':>14} {'+/- sigma':>11}  verdict",
    ]
    for r in rows:
        lines.append(f"{r['metric']:<10} {_cell_text(r['closed']):>14} {_cell_text(r['quadrature']):>14} "
                     f"{r['mc'].value:>14.6e} {r['mc'].error:>11.3e}  {r['verdict']}")
    notes = [f"  {r['metric']} closed form: {r['closed'].status}" for r in rows
             if r["closed"].status not in ("ok", "N/A")]
    return "\n".join(lines + notes) + "\n"


# -- argument handling -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="configuration file (key = value lines)")
    for f in fields(Config):
        names = [f"--{f.name.replace('_', '-')}"]
        if "_" in f.name:
            names.append(f"--{f.name}")
        p.add_argument(*names, dest=f.name, default=None, metavar=f.name.upper())
    p.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thzrelay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("outage", "outage probability"), ("ber", "average BER"),
                        ("avg-snr", "average SNR"), ("capacity", "ergodic-capacity lower bound"),
                        ("simulate", "Monte-Carlo estimates of every metric"),
                        ("sweep", "parameter sweep to CSV"),
                        ("compare", "closed form vs quadrature vs Monte Carlo")):
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        if name == "compare":
            p.add_argument("--format", choices=("text", "csv"), default="text")
    p = sub.add_parser("preset", help="figure presets")
    p.add_argument("name", choices=("fig1a", "fig1b", "fig2a", "fig2b"))
    _add_config_flags(p)
    return parser


def resolve_config(args) -> tuple[Config, set[str]]:
    text = ""
    source = "<flags>"
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        source = args.config
    cfg, explicit = parse_config_text(text, source)
    overrides = {}
    for f in fields(Config):
        raw = getattr(args, f.name)
        if raw is not None:
            try:
                overrides[f.name] = _convert(f.name, raw)
            except ValueError as exc:
                raise ConfigError(f"--{f.name}: {exc}") from None
    cfg = dataclasses.replace(cfg, **overrides)
    try:
        _validate(cfg)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    sweep_conflict(cfg, explicit | set(overrides))
    return cfg, explicit | set(overrides)


_SINGLE = {"outage": "outage", "ber": "ber", "avg-snr": "avg_snr", "capacity": "capacity"}


def _run(args) -> tuple[str, bool]:
    cfg, explicit = resolve_config(args)
    if args.command in _SINGLE:
        methods = _split(cfg.methods) if "methods" in explicit else ("closed_form", "quadrature")
        res = evaluate_point(cfg, (_SINGLE[args.command],), methods, cfg.workers)
        rows = [["none", "", m, k, _fmt(c.value), _fmt(c.error), *_echo(cfg), c.status]
                for m, k, c in res]
    elif args.command == "simulate":
        res = evaluate_point(cfg, ("outage", "ber", "avg_snr", "capacity", "capacity_log1p"),
                             ("monte_carlo", "monte_carlo_exact"), cfg.workers)
        rows = [["none", "", m, k, _fmt(c.value), _fmt(c.error), *_echo(cfg), c.status]
                for m, k, c in res]
    elif args.command == "sweep":
        rows = run_sweep(sweep_spec(cfg))
    elif args.command == "compare":
        return compare_report(cfg, args.format), False
    else:
        rows = [r for s in preset_specs(args.name, cfg) for r in run_sweep(s)]
    failed = any(r[-1].startswith("error") for r in rows)
    return rows_to_csv(rows), failed


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    try:
        text, numeric_failure = _run(args)
    except (ConfigError, ParameterError, PreconditionError) as exc:
        print(f"thzrelay: error: {exc}", file=sys.stderr)
        return 1
    except (EvaluationError, ThzRelayError, FloatingPointError) as exc:
        print(f"thzrelay: numerical failure: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 2 if numeric_failure else 0


if __name__ == "__main__":
    sys.exit(main())
