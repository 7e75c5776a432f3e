"""Studies built on top of single runs: threshold bisection, decay fits,
blow-up time curves, mass-law audits and parameter sweeps."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic import Params, expected_decay_exponent
from .config import ConfigError, RunConfig
from .solver import Outcome, RunResult, run

logger = logging.getLogger(__name__)

KINDS = ("bisect", "decay-fit", "blowup-curve", "sweep", "mass-audit")


class ExperimentError(ValueError):
    pass


class BracketError(ExperimentError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    base: RunConfig
    variable: str | None = None
    values: tuple = ()
    bracket: tuple | None = None
    tol: float = 1e-2
    window: tuple | None = None
    ks: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExperimentError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "bisect":
            if self.variable is None or self.bracket is None or len(self.bracket) != 2:
                raise ExperimentError("bisect needs a variable and a bracket [lo, hi]")
            if not self.bracket[0] < self.bracket[1]:
                raise ExperimentError("bracket must satisfy lo < hi")
            if not self.tol > 0:
                raise ExperimentError("tol must be > 0")
        if self.kind in ("blowup-curve", "sweep") and self.variable is None:
            raise ExperimentError(f"{self.kind} needs a variable")

    @classmethod
    def from_config(cls, cfg: RunConfig, kind: str | None = None) -> "ExperimentSpec":
        exp = dict(cfg.experiment or {})
        kind = kind or exp.get("kind")
        if kind is None:
            raise ConfigError("experiment.kind: required")

        def floats(key):
            val = exp.get(key)
            if val is None:
                return None
            try:
                return tuple(float(x) for x in val)
            except (TypeError, ValueError):
                raise ConfigError(f"experiment.{key}: expected a list of numbers") from None

        try:
            return cls(
                kind=kind,
                base=cfg,
                variable=exp.get("variable"),
                values=floats("values") or (),
                bracket=floats("bracket"),
                tol=float(exp.get("tol", 1e-2)),
                window=floats("window"),
                ks=floats("ks") or tuple(cfg.outputs.norms),
            )
        except ExperimentError as exc:
            raise ConfigError(f"experiment: {exc}") from None


@dataclass(frozen=True)
class FitResult:
    exponent: float
    r_squared: float
    window: tuple
    samples: int


@dataclass
class Probe:
    value: float
    config: RunConfig | None
    result: RunResult | None = None
    error: str | None = None

    @property
    def outcome(self) -> Outcome:
        return self.result.outcome if self.result is not None else Outcome.FAILED


@dataclass
class BisectionResult:
    value: float
    lo: float
    hi: float
    probes: list = field(default_factory=list)


def run_config(cfg: RunConfig, extra_ks=()) -> RunResult:
    o = cfg.outputs
    return run(
        cfg.params,
        cfg.init,
        cfg.grid,
        cfg.controls,
        ks=tuple(o.norms) + tuple(extra_ks),
        record_every=o.record_every,
        snapshot_times=o.snapshot_times,
    )


def _norm_integral(result: RunResult, alpha: float) -> np.ndarray:
    if alpha == 1:
        return result.series["mass"]
    return result.norm(alpha) ** alpha


def mass_ode_residual(result: RunResult, p: Params) -> float:
    """Worst mismatch between the recorded dm/dt and χ(M₀−m)∫u^α.

    Normalized by χ·M₀·max∫u^α (χ taken as 1 for pure-diffusion runs).
    """
    s = result.series
    if len(s["t"]) < 3:
        raise ExperimentError("mass_ode_residual needs at least 3 series records")
    t, m = s["t"], s["mass"]
    integ = _norm_integral(result, p.alpha)
    dmdt = (m[2:] - m[:-2]) / (t[2:] - t[:-2])
    rhs = p.chi * (p.M0 - m[1:-1]) * integ[1:-1]
    scale = (p.chi if p.chi > 0 else 1.0) * p.M0 * float(np.max(integ))
    if scale == 0:
        return 0.0 if np.all(dmdt == 0) else math.inf
    return float(np.max(np.abs(dmdt - rhs)) / scale)


def fit_decay(t, norms, window) -> FitResult:
    """Least-squares slope of log‖u‖ against log(1+t) inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(norms, dtype=float)
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 10:
        raise ExperimentError(f"window [{lo:g}, {hi:g}] holds {int(sel.sum())} samples; need >= 10")
    if np.any(y[sel] <= 0):
        raise ExperimentError("norm series must be positive inside the fit window")
    x = np.log1p(t[sel])
    ly = np.log(y[sel])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * x + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-300 * max(len(ly), 1):
        r2 = 1.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return FitResult(float(slope), r2, (float(lo), float(hi)), int(sel.sum()))


def bisect(predicate: Callable[[float], bool], lo: float, hi: float, tol: float, on_probe=None):
    """Locate the switch point of a monotone boolean ``predicate`` on [lo, hi].

    The endpoints must disagree.  Returns ``(midpoint, lo, hi)`` of the final
    bracket, whose width is at most ``tol``.
    """
    f_lo = predicate(lo)
    if on_probe:
        on_probe(lo, f_lo)
    f_hi = predicate(hi)
    if on_probe:
        on_probe(hi, f_hi)
    if f_lo == f_hi:
        raise BracketError("bracket endpoints agree")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = predicate(mid)
        if on_probe:
            on_probe(mid, f_mid)
        if f_mid == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


def _is_blowup(result: RunResult) -> bool:
    if result.outcome is Outcome.FAILED:
        raise ExperimentError(f"probe failed: {result.reason}")
    # MaxTime counts as global existence
    return result.outcome is Outcome.BLOWUP


def bisect_capacity(spec: ExperimentSpec, runner=run_config) -> BisectionResult:
    """Bisect ``spec.variable`` for the switch between global runs and blow-up."""
    probes: list[Probe] = []

    def predicate(value):
        cfg = spec.base.with_value(spec.variable, value)
        res = runner(cfg)
        probes.append(Probe(value, cfg, res))
        logger.info("probe %s=%.10g -> %s", spec.variable, value, res.outcome.value)
        return _is_blowup(res)

    lo, hi = spec.bracket
    value, lo, hi = bisect(predicate, lo, hi, spec.tol)
    return BisectionResult(value, lo, hi, probes)


def _probe(args):
    base, variable, value = args
    try:
        cfg = base.with_value(variable, value)
    except Exception as exc:  # recorded inline, never aborts a sweep
        return Probe(value, None, None, f"{type(exc).__name__}: {exc}")
    try:
        return Probe(value, cfg, run_config(cfg))
    except Exception as exc:
        return Probe(value, cfg, None, f"{type(exc).__name__}: {exc}")


def sweep(spec: ExperimentSpec, threads: int = 1) -> list[Probe]:
    """Run one probe per value; output order follows ``spec.values``."""
    jobs = [(spec.base, spec.variable, v) for v in spec.values]
    if not jobs:
        return []
    if threads <= 1 or len(jobs) == 1:
        return [_probe(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_probe, jobs))


def blowup_time_curve(spec: ExperimentSpec, threads: int = 1) -> list[tuple]:
    """Rows ``(value, T_b)`` sorted by value; ``T_b`` is None for censored probes."""
    rows = []
    for probe in sweep(spec, threads):
        tb = probe.result.t_blow if probe.outcome is Outcome.BLOWUP else None
        rows.append((probe.value, tb))
    return sorted(rows, key=lambda r: r[0])


def decay_fit(spec: ExperimentSpec) -> tuple[RunResult, dict]:
    """Run the base config and fit ‖u‖_k for each requested k.

    Returns the run and a mapping k -> (FitResult, expected exponent or None).
    """
    res = run_config(spec.base, extra_ks=spec.ks)
    t_last = float(res.series["t"][-1])
    window = spec.window or (0.5 * t_last, t_last)
    fits = {}
    for k in spec.ks:
        fr = fit_decay(res.series["t"], res.norm(k), window)
        try:
            expected = expected_decay_exponent(spec.base.params, k)
        except ValueError:
            expected = None
        fits[k] = (fr, expected)
    return res, fits
