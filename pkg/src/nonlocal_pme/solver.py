"""Semi-implicit time integration of the radial nonlocal PME.

Discretization
--------------
Vertex-centred finite volumes on the uniform grid ``r_i = i*dr``.  Node ``i ≥ 1``
owns the trapezoid volume ``W_i`` used by :func:`grid.mass`; node 0 owns the
half cell ``|x| < dr/2``.  Fluxes across ``r_{i+1/2}`` are

    A_{i+1/2} * a_{i+1/2} * (u_{i+1} − u_i) / dr

with ``a`` the secant slope of ``s ↦ s^m`` between the lagged values, so the
flux reduces to the conservative difference of ``u^m`` whenever the new
state equals the old one.  The reaction enters the diagonal as
``χ u_old^{α−1} (M₀ − m_old)``.  Zero flux at the axis, ``u = 0`` at R_max.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .analytic import Params, ball_volume_coeff
from .grid import Grid, Profile, mass
from .initdata import InitialDataSpec, realize

logger = logging.getLogger(__name__)

EPS = 1e-300
BLOWUP_GROWTH_RATE = 1e2
TRUNCATION_RATIO = 1e-8
DEFAULT_BLOW_FACTOR = 1e8


class ZeroPivotError(ArithmeticError):
    pass


class Outcome(enum.Enum):
    ONGOING = "ongoing"
    CONVERGED = "converged"
    BLOWUP = "blowup"
    MAX_TIME = "max_time"
    FAILED = "failed"


@numba.njit(cache=True)
def _thomas_kernel(lower, diag, upper, rhs, x):
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        return 0
    c[0] = upper[0] / piv
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * c[i - 1]
        if piv == 0.0:
            return i
        c[i] = upper[i] / piv
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return -1


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system without pivoting.

    Row ``i`` reads ``lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i]``;
    ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    lower = np.ascontiguousarray(lower, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    n = diag.shape[0]
    if n < 2 or not (lower.shape == upper.shape == rhs.shape == (n,)):
        raise ValueError("tridiagonal system needs size >= 2 and matching vector lengths")
    x = np.empty(n)
    bad = _thomas_kernel(lower, diag, upper, rhs, x)
    if bad >= 0:
        raise ZeroPivotError(f"zero pivot in row {bad}")
    return x


@dataclass(frozen=True)
class StepControls:
    t_end: float
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    cfl: float = 0.4
    u_blow: float | None = None
    conv_tol: float = 1e-4

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end!r}")
        if not 0 < self.dt_min < self.dt_max:
            raise ValueError(f"need 0 < dt_min < dt_max, got {self.dt_min!r}, {self.dt_max!r}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if self.u_blow is not None and not self.u_blow > 0:
            raise ValueError(f"u_blow must be > 0, got {self.u_blow!r}")
        if not self.conv_tol > 0:
            raise ValueError(f"conv_tol must be > 0, got {self.conv_tol!r}")


@dataclass(frozen=True)
class State:
    t: float
    u: Profile
    clipped_mass: float = 0.0


def control_volumes(grid: Grid, n: int) -> np.ndarray:
    """Volumes owned by each node in the finite-volume balance.

    Identical to the trapezoid weights except at the axis, where the half
    cell ``|x| < dr/2`` replaces the vanishing trapezoid weight.
    """
    v = np.array(grid.weights(n))
    v[0] = ball_volume_coeff(n) * (0.5 * grid.dr) ** n
    return v


def _face_areas(grid: Grid, n: int) -> np.ndarray:
    rf = (np.arange(grid.N - 1) + 0.5) * grid.dr
    return n * ball_volume_coeff(n) * rf ** (n - 1)


def _lagged_coefficient(u: np.ndarray, m: float) -> np.ndarray:
    ul, ur = u[:-1], u[1:]
    du = ur - ul
    dv = ur**m - ul**m
    scale = np.maximum(np.abs(ul), np.abs(ur))
    flat = np.abs(du) <= 1e-12 * scale
    a = np.divide(dv, du, out=np.zeros_like(du), where=~flat)
    mid = 0.5 * (ul + ur)
    a[flat] = m * mid[flat] ** (m - 1.0)
    return a


def reaction_rate(u: np.ndarray, p: Params, m_old: float) -> np.ndarray:
    """Per-node linear growth rate χ u^{α−1} (M₀ − m)."""
    if p.alpha == 1:
        g = np.ones_like(u)
    else:
        g = u ** (p.alpha - 1.0)
    return p.chi * (p.M0 - m_old) * g


def suggest_dt(s: State, p: Params, c: StepControls) -> float:
    umax = float(s.u.values.max())
    dr = s.u.grid.dr
    diff = dr * dr / (2.0 * p.m * umax ** (p.m - 1.0) + EPS)
    react = 1.0 / (p.chi * p.M0 * umax ** (p.alpha - 1.0) + EPS)
    dt = c.cfl * min(diff, react)
    return min(max(dt, c.dt_min), c.dt_max)


def assemble(s: State, p: Params, dt: float):
    """Tridiagonal system (lower, diag, upper, rhs) for the interior unknowns 0..N−2."""
    grid = s.u.grid
    u = s.u.values
    vol = control_volumes(grid, p.n)[:-1]
    trans = _face_areas(grid, p.n) * _lagged_coefficient(u, p.m) / grid.dr
    k = dt / vol
    t_left = np.concatenate(([0.0], trans[:-1]))
    t_right = trans
    c = reaction_rate(u[:-1], p, mass(s.u, p.n))
    diag = 1.0 - dt * c + k * (t_left + t_right)
    lower = -k * t_left
    upper = -k * t_right
    upper[-1] = 0.0
    return lower, diag, upper, u[:-1].copy()


def step(s: State, p: Params, dt: float) -> State:
    """Advance one semi-implicit step; raises :class:`ZeroPivotError` on breakdown."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    grid = s.u.grid
    lower, diag, upper, rhs = assemble(s, p, dt)
    x = thomas_solve(lower, diag, upper, rhs)
    if not np.all(np.isfinite(x)):
        raise ZeroPivotError("tridiagonal solve produced non-finite values")
    u_new = np.zeros(grid.N)
    u_new[:-1] = x
    neg = u_new < 0
    clipped = 0.0
    if neg.any():
        clipped = -float(np.dot(grid.weights(p.n)[neg], u_new[neg]))
        u_new[neg] = 0.0
    return State(s.t + dt, Profile(u_new, grid), s.clipped_mass + clipped)


def norm_column(k: float) -> str:
    return f"L{k:.6g}"


def observe(s: State, p: Params, ks, dt: float) -> dict:
    u = s.u.values
    w = s.u.grid.weights(p.n)
    rec = {
        "t": s.t,
        "dt": dt,
        "mass": float(np.dot(w, u)),
        "max": float(u.max()),
        "L2": math.sqrt(float(np.dot(w, u * u))),
    }
    for k in ks:
        rec[norm_column(k)] = float(np.dot(w, u**k)) ** (1.0 / k)
    rec["second_moment"] = float(np.dot(w, u * s.u.grid.r ** 2))
    rec["clipped_mass"] = s.clipped_mass
    return rec


def detect_outcome(prev: dict, cur: dict, p: Params, c: StepControls) -> Outcome:
    """Classify the run from its two most recent records.

    ``c.u_blow`` must already be resolved to a number.
    """
    dt = cur["t"] - prev["t"]
    if cur["max"] > c.u_blow or not math.isfinite(cur["max"]):
        return Outcome.BLOWUP
    if dt > 0 and cur["dt"] <= c.dt_min * (1 + 1e-12) and prev["max"] > 0:
        growth = math.log(cur["max"] / prev["max"]) / dt if cur["max"] > 0 else -math.inf
        if growth > BLOWUP_GROWTH_RATE:
            return Outcome.BLOWUP
    if dt > 0 and abs(cur["mass"] - p.M0) < c.conv_tol * p.M0:
        if prev["max"] > 0 and cur["max"] > 0:
            change = abs(math.log(cur["max"] / prev["max"])) / dt
        else:
            change = 0.0 if prev["max"] == cur["max"] else math.inf
        if change < c.conv_tol:
            return Outcome.CONVERGED
    if cur["t"] >= c.t_end * (1 - 1e-12):
        return Outcome.MAX_TIME
    return Outcome.ONGOING


@dataclass
class RunResult:
    outcome: Outcome
    series: dict
    snapshots: list
    params: Params
    grid: Grid
    controls: StepControls
    init: InitialDataSpec
    ks: tuple
    t_blow: float | None = None
    reason: str | None = None
    truncation_warning: bool = False
    steps: int = 0
    final: State | None = field(default=None, repr=False)

    def column(self, name: str) -> np.ndarray:
        return self.series[name]

    def norm(self, k: float) -> np.ndarray:
        if k == 1:
            return self.series["mass"]
        if math.isinf(k):
            return self.series["max"]
        return self.series["L2" if k == 2 else norm_column(k)]

    @property
    def final_mass(self) -> float:
        return float(self.series["mass"][-1])


def series_columns(ks) -> list[str]:
    return ["t", "dt", "mass", "max", "L2", *[norm_column(k) for k in ks], "second_moment", "clipped_mass"]


def _norm_list(ks, alpha: float) -> tuple:
    out = []
    for k in list(ks) + [alpha]:
        k = float(k)
        if k in (1.0, 2.0) or math.isinf(k) or k in out:
            continue
        if k < 1:
            raise ValueError(f"norm index must be >= 1, got {k}")
        out.append(k)
    return tuple(out)


def run(
    p: Params,
    init: InitialDataSpec,
    grid: Grid,
    c: StepControls,
    *,
    ks=(),
    record_every: int = 1,
    snapshot_times=(),
) -> RunResult:
    """Integrate until blow-up, convergence, t_end or breakdown.

    The α-norm is always recorded so mass-law audits are possible.  Steps are
    shortened to land exactly on snapshot times and on t_end.
    """
    u0 = realize(init, grid, p.n)
    m0 = mass(u0, p.n)
    if not m0 < p.M0:
        raise ValueError(f"initial mass {m0:.17g} must be below M0 = {p.M0:.17g}")
    if c.u_blow is None:
        c = StepControls(c.t_end, c.dt_min, c.dt_max, c.cfl, DEFAULT_BLOW_FACTOR * float(u0.values.max()), c.conv_tol)
    ks = _norm_list(ks, p.alpha)
    record_every = max(int(record_every), 1)

    state = State(0.0, u0, 0.0)
    cur = observe(state, p, ks, 0.0)
    records = [cur]
    snaps_due = sorted(float(t) for t in snapshot_times if 0 < t <= c.t_end)
    snapshots = [(0.0, u0)] if any(t == 0 for t in snapshot_times) else []
    truncation = False
    outcome, t_blow, reason = Outcome.ONGOING, None, None
    nstep = 0

    while outcome is Outcome.ONGOING:
        dt = suggest_dt(state, p, c)
        target = snaps_due[0] if snaps_due else c.t_end
        if state.t + dt >= target * (1 - 1e-12) and target > state.t:
            dt = target - state.t
        m_old = cur["mass"]
        rate = p.chi * (p.M0 - m_old) * cur["max"] ** (p.alpha - 1.0)
        if dt * rate >= 1.0:
            outcome, t_blow = Outcome.BLOWUP, state.t
            reason = "implicit reaction factor singular at the minimum step"
            break
        try:
            new = step(state, p, dt)
        except ZeroPivotError as exc:
            outcome, reason = Outcome.FAILED, str(exc)
            break
        nstep += 1
        prev, cur = cur, observe(new, p, ks, dt)
        state = new
        if snaps_due and state.t >= snaps_due[0] * (1 - 1e-12):
            snaps_due.pop(0)
            snapshots.append((state.t, state.u))
        outcome = detect_outcome(prev, cur, p, c)
        if nstep % record_every == 0 or outcome is not Outcome.ONGOING:
            records.append(cur)
            u = state.u.values
            if not truncation and u[-2] > TRUNCATION_RATIO * cur["max"]:
                truncation = True
                logger.warning("solution reaches the outer boundary at t=%g; enlarge R_max", state.t)
        if outcome is Outcome.BLOWUP:
            t_blow = state.t

    if records[-1] is not cur:
        records.append(cur)
    cols = series_columns(ks)
    series = {name: np.array([r[name] for r in records]) for name in cols}
    return RunResult(
        outcome=outcome,
        series=series,
        snapshots=snapshots,
        params=p,
        grid=grid,
        controls=c,
        init=init,
        ks=ks,
        t_blow=t_blow,
        reason=reason,
        truncation_warning=truncation,
        steps=nstep,
        final=state,
    )
