"""Closed-form constants, profiles and exponents for the nonlocal PME model.

Everything here is a pure function of its arguments; no simulation state is
touched.  The model is

    u_t = Δu^m + χ u^α (M₀ − ∫u)

posed radially in ℝⁿ, n ≥ 3.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

CRITICAL_RTOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class RegimeError(ValueError):
    """A formula was requested for parameters in the wrong regime."""


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


def critical_exponent(n: int, m: float) -> float:
    return m + 2.0 / n


def classify(n: int, m: float, alpha: float) -> Regime:
    """Place α relative to the mass-invariant exponent m + 2/n."""
    crit = critical_exponent(n, m)
    if abs(alpha - crit) <= CRITICAL_RTOL * abs(crit):
        return Regime.CRITICAL
    return Regime.SUBCRITICAL if alpha < crit else Regime.SUPERCRITICAL


@dataclass(frozen=True)
class Params:
    """Model parameters.

    ``chi = 0`` is accepted: it switches the reaction off and leaves the pure
    porous medium equation, which is what the verification runs use.
    """

    n: int
    m: float
    alpha: float
    chi: float
    M0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"n must be an integer >= 3, got {self.n!r}")
        if not self.m > 1:
            raise DomainError(f"m must be > 1, got {self.m!r}")
        if not self.alpha >= 1:
            raise DomainError(f"alpha must be >= 1, got {self.alpha!r}")
        if not self.chi >= 0 or not math.isfinite(self.chi):
            raise DomainError(f"chi must be >= 0, got {self.chi!r}")
        if not self.M0 > 0 or not math.isfinite(self.M0):
            raise DomainError(f"M0 must be > 0, got {self.M0!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def regime(self) -> Regime:
        return classify(self.n, self.m, self.alpha)

    @property
    def mu(self) -> float:
        return self.n * self.m - self.n + 2.0


def gamma_function(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_function needs x > 0, got {x!r}")
    return math.gamma(x)


def beta_function(a: float, b: float) -> float:
    return gamma_function(a) * gamma_function(b) / gamma_function(a + b)


def ball_volume_coeff(n: int) -> float:
    """Volume of the unit ball in ℝⁿ."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n!r}")
    return math.pi ** (n / 2.0) / gamma_function(n / 2.0 + 1.0)


def sobolev_constant(n: int) -> float:
    """Sharp constant S_n in S_n‖u‖²_{2n/(n-2)} ≤ ‖∇u‖²₂."""
    if n < 3:
        raise DomainError(f"sobolev_constant needs n >= 3, got {n!r}")
    return (
        n * (n - 2) / 4.0
        * 2.0 ** (2.0 / n)
        * math.pi ** (1.0 + 1.0 / n)
        * gamma_function((n + 1) / 2.0) ** (-2.0 / n)
    )


def critical_capacity(p: Params) -> float:
    """Capacity M* below which critical-case solutions stay global and decay."""
    if p.regime is not Regime.CRITICAL:
        raise RegimeError(f"critical_capacity requires the critical regime, got {p.regime.value}")
    if p.chi <= 0:
        raise DomainError("critical_capacity requires chi > 0")
    d = p.alpha - p.m
    return (sobolev_constant(p.n) * d / p.chi) ** (1.0 / (d + 1.0)) * (d + 1.0) / d


def p_zero(p: Params) -> float:
    if not p.alpha > p.m:
        raise DomainError(f"p_zero requires alpha > m, got alpha={p.alpha}, m={p.m}")
    return p.n * (p.alpha - p.m) / 2.0


def smallness_constant(p: Params, m0: float) -> float:
    """Threshold C_{p0} on ‖u₀‖_{p0} for global existence when α > m + 2/n."""
    if p.regime is not Regime.SUPERCRITICAL:
        raise RegimeError(f"smallness_constant requires the supercritical regime, got {p.regime.value}")
    if p.chi <= 0:
        raise DomainError("smallness_constant requires chi > 0")
    if not 0 < m0 < p.M0:
        raise DomainError(f"need 0 < m0 < M0, got m0={m0}, M0={p.M0}")
    n, m = p.n, p.m
    d = p.alpha - m
    p0 = p_zero(p)
    inner = 4.0 * sobolev_constant(n) * m * (p0 - 1.0) * (n + 2) / (n * p.chi * (p0 + m - 1.0) ** 2)
    return (
        ((n + 2) / 2.0) ** (1.0 / p0)
        * inner ** (1.0 / d)
        * m0 ** (1.0 / p0)
        / p.M0 ** (1.0 / p0 + 1.0 / d)
    )


def barenblatt_constant(n: int, m: float, M0: float) -> float:
    """Height constant C_{M0} of the stationary rescaled profile with mass M0."""
    if n < 3 or int(n) != n:
        raise DomainError(f"n must be an integer >= 3, got {n!r}")
    if not m > 1:
        raise DomainError(f"m must be > 1, got {m!r}")
    if not M0 > 0:
        raise DomainError(f"M0 must be > 0, got {M0!r}")
    mu = n * m - n + 2.0
    shape = n * ball_volume_coeff(n) / 2.0 * beta_function(n / 2.0, m / (m - 1.0))
    return (
        ((m - 1.0) / (2.0 * m)) ** (n * (m - 1.0) / mu)
        * shape ** (-2.0 * (m - 1.0) / mu)
        * M0 ** (2.0 * (m - 1.0) / mu)
    )


@dataclass(frozen=True)
class SteadyProfileSpec:
    C: float
    n: int
    m: float

    @classmethod
    def for_mass(cls, n: int, m: float, M0: float) -> "SteadyProfileSpec":
        return cls(barenblatt_constant(n, m, M0), n, m)

    @property
    def support_radius(self) -> float:
        return math.sqrt(2.0 * self.m * self.C / (self.m - 1.0))


def steady_profile(spec: SteadyProfileSpec, r):
    """(C − (m−1)/(2m) r²)₊^{1/(m−1)}; accepts scalars or arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    base = np.maximum(spec.C - (spec.m - 1.0) / (2.0 * spec.m) * r * r, 0.0)
    out = base ** (1.0 / (spec.m - 1.0))
    return float(out) if out.ndim == 0 else out


def barenblatt_pme(n: int, m: float, mass: float, t, r):
    """Source-type solution of v_t = Δv^m carrying ``mass``, evaluated at (t, r).

    Written as R^{-n}·V(r/R) with R = (μt)^{1/μ}, where V is the stationary
    rescaled profile of the same mass.
    """
    mu = n * m - n + 2.0
    spec = SteadyProfileSpec.for_mass(n, m, mass)
    scale = (mu * float(t)) ** (1.0 / mu)
    return steady_profile(spec, np.asarray(r, dtype=float) / scale) / scale**n


def rescaled_mass_deficit(p: Params, m0: float, tau):
    """M₀ − m(τ) for the rescaled linear-reaction (α = 1) dynamics."""
    if p.alpha != 1:
        raise RegimeError(f"rescaled_mass_deficit requires alpha = 1, got {p.alpha}")
    if not 0 < m0 < p.M0:
        raise DomainError(f"need 0 < m0 < M0, got m0={m0}, M0={p.M0}")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("tau must be >= 0")
    c2 = p.chi * p.M0 / p.mu
    # C1·exp(C2·e^{μτ}) with C1 = m0/(M0−m0)·e^{−C2}, kept in log form
    log_denom_term = math.log(m0 / (p.M0 - m0)) - c2 + c2 * np.exp(p.mu * tau)
    out = p.M0 * np.exp(-np.logaddexp(0.0, log_denom_term))
    return float(out) if out.ndim == 0 else out


def expected_decay_exponent(p: Params, k: float) -> float:
    """Power of (1+t) bounding ‖u(t)‖_k; k = inf gives the k → ∞ limit."""
    if not k > 1:
        raise DomainError(f"norm index must be > 1, got {k!r}")
    regime = p.regime
    if regime is Regime.SUBCRITICAL:
        raise RegimeError("no decay rate is predicted in the subcritical regime")
    denom = critical_exponent(p.n, p.m) - 1.0 if regime is Regime.CRITICAL else p.alpha - 1.0
    if math.isinf(k):
        return -1.0 / denom
    return -(k - 1.0) / (k * denom)


def sobolev_ratio(grid, w, n: int) -> float:
    """‖∇w‖²₂ / ‖w‖²_{2n/(n−2)} for a radial profile, by grid quadrature.

    ``w`` may be a :class:`~nonlocal_pme.grid.Profile` or an array on ``grid``.
    """
    from .grid import Profile, lk_norm, radial_gradient_l2

    prof = w if isinstance(w, Profile) else Profile(np.asarray(w, dtype=float), grid)
    if not np.any(prof.values != 0):
        raise DomainError("sobolev_ratio is undefined for the zero function")
    q = 2.0 * n / (n - 2.0)
    return radial_gradient_l2(prof, n) / lk_norm(prof, n, q) ** 2
