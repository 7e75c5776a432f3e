"""Run configuration: YAML parsing, default resolution and manifest documents.

A config document has the sections ``params``, ``grid``, ``controls``,
``init``, ``outputs`` and optionally ``experiment``.  Manifests written by
the CLI are configs with every default filled in plus a ``result`` section,
so feeding a manifest back reproduces the run exactly.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .analytic import DomainError, Params, SteadyProfileSpec
from .grid import Grid, mass
from .initdata import InitDataError, InitialDataSpec, Kind, realize
from .solver import DEFAULT_BLOW_FACTOR, StepControls

DEFAULT_N = 2001
DEFAULT_CFL = 0.4
DEFAULT_CONV_TOL = 1e-4
DEFAULT_DT_MIN = 1e-10
DEFAULT_DT_MAX = 1e-2
FALLBACK_R_MAX = 20.0
SUPPORT_FACTOR = 4.0

_SECTIONS = {
    "params": {"n", "m", "alpha", "chi", "M0"},
    "grid": {"R_max", "N"},
    "controls": {"t_end", "dt_min", "dt_max", "cfl", "u_blow", "conv_tol"},
    "init": {"kind", "centers", "widths", "amplitudes", "breakpoints", "target_mass", "disjoint"},
    "outputs": {"record_every", "snapshot_times", "norms", "out_dir"},
    "experiment": {"kind", "variable", "values", "bracket", "tol", "window", "ks"},
}
_IGNORED = {"result"}

VARIABLE_PATHS = {
    "M0": ("params", "M0"),
    "m0": ("init", "target_mass"),
    "n": ("params", "n"),
    "alpha": ("params", "alpha"),
    "chi": ("params", "chi"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputSpec:
    record_every: int = 1
    snapshot_times: tuple = ()
    norms: tuple = (2.0,)
    out_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    params: Params
    grid: Grid
    controls: StepControls
    init: InitialDataSpec
    outputs: OutputSpec
    raw: dict = field(repr=False, compare=False)
    experiment: dict | None = None
    alpha_marker: str | None = None
    defaults_applied: tuple = ()

    @property
    def m0(self) -> float:
        return mass(realize(self.init, self.grid, self.params.n), self.params.n)

    def with_value(self, variable: str, value) -> "RunConfig":
        """Re-resolve the config with one scalar replaced; defaults are recomputed."""
        if variable not in VARIABLE_PATHS:
            raise ConfigError(f"experiment.variable: unknown variable {variable!r}")
        section, key = VARIABLE_PATHS[variable]
        raw = copy.deepcopy(self.raw)
        raw.setdefault(section, {})[key] = value
        return resolve(raw)

    def to_document(self) -> dict:
        p, g, c = self.params, self.grid, self.controls
        doc = {
            "params": {"n": p.n, "m": p.m, "alpha": p.alpha, "chi": p.chi, "M0": p.M0},
            "grid": {"R_max": g.R_max, "N": g.N},
            "controls": {
                "t_end": c.t_end,
                "dt_min": c.dt_min,
                "dt_max": c.dt_max,
                "cfl": c.cfl,
                "u_blow": c.u_blow,
                "conv_tol": c.conv_tol,
            },
            "init": self.init.to_dict(),
            "outputs": {
                "record_every": self.outputs.record_every,
                "snapshot_times": list(self.outputs.snapshot_times),
                "norms": list(self.outputs.norms),
                "out_dir": self.outputs.out_dir,
            },
        }
        if self.experiment is not None:
            doc["experiment"] = copy.deepcopy(self.experiment)
        return doc


def _load(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "document"
        raise ConfigError(f"parse error at {where}: {getattr(exc, 'problem', exc)}") from None
    if doc is None:
        doc = {}
    _check_keys(doc)
    return doc


def _check_keys(doc) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("parse error: top level must be a mapping of sections")
    for key, val in doc.items():
        if key in _IGNORED:
            continue
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown section")
        if not isinstance(val, dict):
            raise ConfigError(f"{key}: section must be a mapping")
        for sub in val:
            if sub not in _SECTIONS[key]:
                raise ConfigError(f"{key}.{sub}: unknown key")


def _num(sec: dict, section: str, key: str, default=None, *, integer=False):
    if key not in sec or sec[key] is None:
        if default is None:
            raise ConfigError(f"{section}.{key}: required")
        return default
    val = sec[key]
    try:
        if isinstance(val, bool):
            raise TypeError
        out = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected a number, got {val!r}") from None
    if integer:
        if out != int(out):
            raise ConfigError(f"{section}.{key}: expected an integer, got {val!r}")
        return int(out)
    return out


def _num_list(sec: dict, section: str, key: str, default=()):
    val = sec.get(key, default)
    if val is None:
        return tuple(default)
    if not isinstance(val, (list, tuple)):
        val = [val]
    out = []
    for x in val:
        if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
            out.append(math.inf)
            continue
        try:
            out.append(float(x))
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected numbers, got {x!r}") from None
    return tuple(out)


def parse_params(doc: dict) -> tuple[Params, str | None]:
    sec = doc.get("params") or {}
    n = _num(sec, "params", "n", integer=True)
    m = _num(sec, "params", "m")
    alpha_raw = sec.get("alpha")
    marker = None
    if isinstance(alpha_raw, str) and alpha_raw.strip().lower() == "critical":
        marker = "critical"
        alpha = m + 2.0 / n
    else:
        alpha = _num(sec, "params", "alpha")
    chi = _num(sec, "params", "chi", 1.0)
    M0 = _num(sec, "params", "M0")
    try:
        return Params(n, m, alpha, chi, M0), marker
    except DomainError as exc:
        raise ConfigError(f"params: {exc}") from None


def _parse_init(doc: dict) -> InitialDataSpec:
    sec = doc.get("init")
    if not sec:
        raise ConfigError("init: required")
    kind = str(sec.get("kind", "bump")).lower()
    try:
        Kind(kind)
    except ValueError:
        raise ConfigError(f"init.kind: unknown kind {kind!r}") from None
    kwargs = {"kind": kind}
    for key in ("centers", "widths", "amplitudes", "breakpoints"):
        if key in sec:
            kwargs[key] = _num_list(sec, "init", key)
    if sec.get("target_mass") is not None:
        kwargs["target_mass"] = _num(sec, "init", "target_mass")
    kwargs["disjoint"] = bool(sec.get("disjoint", False))
    try:
        return InitialDataSpec(**kwargs)
    except InitDataError as exc:
        raise ConfigError(f"init: {exc}") from None


def resolve(doc: dict) -> RunConfig:
    """Build a fully resolved :class:`RunConfig` from a parsed document."""
    _check_keys(doc)
    params, marker = parse_params(doc)
    init = _parse_init(doc)
    defaults = []

    gsec = doc.get("grid") or {}
    N = _num(gsec, "grid", "N", DEFAULT_N, integer=True)
    if gsec.get("N") is None:
        defaults.append("grid.N")
    if gsec.get("R_max") is None:
        try:
            R_max = SUPPORT_FACTOR * SteadyProfileSpec.for_mass(params.n, params.m, params.M0).support_radius
        except (DomainError, OverflowError, ZeroDivisionError):
            R_max = FALLBACK_R_MAX
        if not (math.isfinite(R_max) and R_max > 0):
            R_max = FALLBACK_R_MAX
        defaults.append("grid.R_max")
    else:
        R_max = _num(gsec, "grid", "R_max")
    try:
        grid = Grid(R_max, N)
    except DomainError as exc:
        raise ConfigError(f"grid: {exc}") from None

    try:
        u0 = realize(init, grid, params.n)
    except InitDataError as exc:
        raise ConfigError(f"init: {exc}") from None
    m0 = mass(u0, params.n)
    if not m0 < params.M0:
        raise ConfigError(
            f"init.target_mass: initial mass m0={m0:.17g} must be below params.M0={params.M0:.17g}"
        )

    csec = doc.get("controls") or {}
    if csec.get("t_end") is None:
        raise ConfigError("controls.t_end: required")
    vals = {}
    for key, default in (("dt_min", DEFAULT_DT_MIN), ("dt_max", DEFAULT_DT_MAX), ("cfl", DEFAULT_CFL), ("conv_tol", DEFAULT_CONV_TOL)):
        if csec.get(key) is None:
            defaults.append(f"controls.{key}")
        vals[key] = _num(csec, "controls", key, default)
    if csec.get("u_blow") is None:
        defaults.append("controls.u_blow")
        vals["u_blow"] = DEFAULT_BLOW_FACTOR * float(u0.values.max())
    else:
        vals["u_blow"] = _num(csec, "controls", "u_blow")
    try:
        controls = StepControls(t_end=_num(csec, "controls", "t_end"), **vals)
    except ValueError as exc:
        raise ConfigError(f"controls: {exc}") from None

    osec = doc.get("outputs") or {}
    record_every = _num(osec, "outputs", "record_every", 1, integer=True)
    if record_every < 1:
        raise ConfigError("outputs.record_every: must be >= 1")
    norms = _num_list(osec, "outputs", "norms", (2.0,))
    if any(k < 1 for k in norms):
        raise ConfigError("outputs.norms: every norm index must be >= 1")
    snaps = tuple(sorted(_num_list(osec, "outputs", "snapshot_times", ())))
    if any(t < 0 for t in snaps):
        raise ConfigError("outputs.snapshot_times: times must be >= 0")
    outputs = OutputSpec(record_every, snaps, norms, str(osec.get("out_dir", "out")))

    experiment = doc.get("experiment")
    return RunConfig(
        params=params,
        grid=grid,
        controls=controls,
        init=init,
        outputs=outputs,
        raw=copy.deepcopy(doc),
        experiment=copy.deepcopy(experiment) if experiment is not None else None,
        alpha_marker=marker,
        defaults_applied=tuple(defaults),
    )


def parse_config(text: str) -> RunConfig:
    return resolve(_load(text))


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def load_document(text: str) -> dict:
    """Parse and key-check a document without resolving it (for ``constants``)."""
    return _load(text)


def dump_document(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
