"""Command-line front end.

    nonlocal-pme constants    --config run.yaml
    nonlocal-pme simulate     --config run.yaml [--out DIR]
    nonlocal-pme bisect       --config run.yaml [--out DIR]
    nonlocal-pme decay-fit    --config run.yaml [--out DIR]
    nonlocal-pme blowup-curve --config run.yaml [--out DIR] [--threads K]
    nonlocal-pme sweep        --config run.yaml [--out DIR] [--threads K]
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import analytic
from .config import ConfigError, RunConfig, dump_document, load_document, parse_params, resolve
from .experiments import (
    ExperimentError,
    ExperimentSpec,
    bisect_capacity,
    decay_fit,
    mass_ode_residual,
    run_config,
    sweep,
)
from .grid import write_profile_csv
from .solver import Outcome, RunResult, series_columns

logger = logging.getLogger("nonlocal_pme")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_series_csv(path, result: RunResult) -> None:
    cols = series_columns(result.ks)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(result.series["t"])):
            w.writerow([fmt(float(result.series[c][i])) for c in cols])


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:.10g}.csv"


def manifest_document(cfg: RunConfig, result: RunResult | None = None, **extra) -> dict:
    doc = cfg.to_document()
    info = {"defaults_applied": list(cfg.defaults_applied)}
    if cfg.alpha_marker:
        info["alpha_marker"] = cfg.alpha_marker
    if result is not None:
        info.update(
            outcome=result.outcome.value,
            t_blow=result.t_blow,
            reason=result.reason,
            final_time=float(result.series["t"][-1]),
            final_mass=result.final_mass,
            steps=result.steps,
            truncation_warning=result.truncation_warning,
        )
    info.update(extra)
    doc["result"] = info
    return doc


def write_manifest(path, cfg: RunConfig, result: RunResult | None = None, **extra) -> None:
    Path(path).write_text(dump_document(manifest_document(cfg, result, **extra)))


def write_run(out: Path, cfg: RunConfig, result: RunResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "series.csv", result)
    for t, prof in result.snapshots:
        write_profile_csv(out / snapshot_name(t), prof.grid.r, prof.values)
    write_manifest(out / "manifest.yaml", cfg, result)


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out) if args.out else Path(cfg.outputs.out_dir)


def _load(args) -> RunConfig:
    return resolve(_read_doc(args))


def _read_doc(args) -> dict:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return load_document(text)


def cmd_constants(args) -> int:
    doc = _read_doc(args)
    p, marker = parse_params(doc)
    out = sys.stdout
    print(f"n = {p.n}", file=out)
    print(f"m = {fmt(p.m)}", file=out)
    print(f"alpha = {fmt(p.alpha)}" + (" (critical)" if marker else ""), file=out)
    print(f"chi = {fmt(p.chi)}", file=out)
    print(f"M0 = {fmt(p.M0)}", file=out)
    print(f"regime = {p.regime.value}", file=out)
    print(f"critical_exponent = {fmt(analytic.critical_exponent(p.n, p.m))}", file=out)
    print(f"S_n = {fmt(analytic.sobolev_constant(p.n))}", file=out)
    if p.regime is analytic.Regime.CRITICAL and p.chi > 0:
        print(f"M_star = {fmt(analytic.critical_capacity(p))}", file=out)
    if p.alpha > p.m:
        print(f"p0 = {fmt(analytic.p_zero(p))}", file=out)
    m0 = (doc.get("init") or {}).get("target_mass")
    if p.regime is analytic.Regime.SUPERCRITICAL and p.chi > 0 and m0 is not None:
        print(f"C_p0 = {fmt(analytic.smallness_constant(p, float(m0)))}", file=out)
    spec = analytic.SteadyProfileSpec.for_mass(p.n, p.m, p.M0)
    print(f"C_M0 = {fmt(spec.C)}", file=out)
    print(f"steady_support_radius = {fmt(spec.support_radius)}", file=out)
    if p.regime is not analytic.Regime.SUBCRITICAL:
        ks = (doc.get("outputs") or {}).get("norms") or [2.0]
        for k in ks:
            k = float(k)
            if k > 1:
                print(f"decay_exponent_L{k:g} = {fmt(analytic.expected_decay_exponent(p, k))}", file=out)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    result = run_config(cfg)
    out = _out_dir(args, cfg)
    write_run(out, cfg, result)
    print(f"outcome = {result.outcome.value}")
    if result.t_blow is not None:
        print(f"T_b = {fmt(result.t_blow)}")
    print(f"final_mass = {fmt(result.final_mass)}")
    if result.outcome is Outcome.FAILED:
        print(f"error: run failed: {result.reason}", file=sys.stderr)
        return 1
    return 0


def _write_report(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def cmd_bisect(args) -> int:
    cfg = _load(args)
    spec = ExperimentSpec.from_config(cfg, "bisect")
    res = bisect_capacity(spec)
    out = _out_dir(args, cfg)
    (out / "probes").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, probe in enumerate(res.probes):
        write_manifest(out / "probes" / f"probe_{i:03d}.yaml", probe.config, probe.result)
        r = probe.result
        rows.append((spec.variable, probe.value, r.outcome.value, r.t_blow, r.final_mass))
    _write_report(out / "report.csv", ["variable", "value", "outcome", "T_b", "final_mass"], rows)
    print(f"threshold {spec.variable} = {fmt(res.value)} (bracket [{fmt(res.lo)}, {fmt(res.hi)}])")
    return 0


def cmd_decay_fit(args) -> int:
    cfg = _load(args)
    spec = ExperimentSpec.from_config(cfg, "decay-fit")
    result, fits = decay_fit(spec)
    out = _out_dir(args, cfg)
    write_run(out, cfg, result)
    rows = []
    for k, (fr, expected) in fits.items():
        rows.append((k, fr.exponent, expected, fr.r_squared, fr.window[0], fr.window[1], result.outcome.value))
        print(f"k = {k:g}: exponent = {fmt(fr.exponent)}, expected = {fmt(expected)}, r2 = {fr.r_squared:.6f}")
    _write_report(
        out / "report.csv",
        ["k", "exponent", "expected", "r_squared", "t_lo", "t_hi", "outcome"],
        rows,
    )
    return 0


def _probe_rows(spec, probes):
    rows = []
    for probe in probes:
        r = probe.result
        if r is None:
            rows.append((spec.variable, probe.value, "failed", None, None, probe.error))
        else:
            rows.append((spec.variable, probe.value, r.outcome.value, r.t_blow, r.final_mass, r.reason))
    return rows


def cmd_sweep(args, kind="sweep") -> int:
    cfg = _load(args)
    spec = ExperimentSpec.from_config(cfg, kind)
    probes = sweep(spec, threads=args.threads)
    out = _out_dir(args, cfg)
    (out / "probes").mkdir(parents=True, exist_ok=True)
    for i, probe in enumerate(probes):
        if probe.config is not None and probe.result is not None:
            extra = {}
            if kind == "sweep" and probe.result.outcome is not Outcome.FAILED:
                try:
                    extra["mass_ode_residual"] = mass_ode_residual(probe.result, probe.config.params)
                except ExperimentError:
                    pass
            write_manifest(out / "probes" / f"probe_{i:03d}.yaml", probe.config, probe.result, **extra)
    rows = _probe_rows(spec, probes)
    if kind == "blowup-curve":
        rows.sort(key=lambda r: r[1])
        for row in rows:
            tb = "censored" if row[3] is None else fmt(row[3])
            print(f"{spec.variable} = {fmt(row[1])}: T_b = {tb}")
    _write_report(out / "report.csv", ["variable", "value", "outcome", "T_b", "final_mass", "note"], rows)
    print(f"{len(probes)} probes written to {out}")
    return 0


COMMANDS = {
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "bisect": cmd_bisect,
    "decay-fit": cmd_decay_fit,
    "blowup-curve": lambda a: cmd_sweep(a, "blowup-curve"),
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-pme", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--threads", type=int, default=1, metavar="K")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: missing subcommand", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ExperimentError, analytic.DomainError, analytic.RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
