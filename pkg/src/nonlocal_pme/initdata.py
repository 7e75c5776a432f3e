"""Initial-condition families: compact cosine-squared bumps, Gaussians, piecewise-linear profiles."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, Profile, mass


class InitDataError(ValueError):
    pass


class Kind(enum.Enum):
    BUMP = "bump"
    MULTI_BUMP = "multibump"
    GAUSSIAN = "gaussian"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class InitialDataSpec:
    """Declarative initial density.

    Bump / MultiBump: ``amplitude * cos²(π (r − center) / (2 width))`` on
    ``|r − center| < width``, one cap per (center, width, amplitude) triple.
    Gaussian: ``amplitude * exp(−(r − center)² / width²)``, cut to zero at R_max.
    Piecewise: linear interpolation through (breakpoints, amplitudes), zero
    beyond the last breakpoint.
    """

    kind: Kind
    centers: tuple[float, ...] = (0.0,)
    widths: tuple[float, ...] = (1.0,)
    amplitudes: tuple[float, ...] = (1.0,)
    breakpoints: tuple[float, ...] = ()
    target_mass: float | None = None
    disjoint: bool = False

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        for name in ("centers", "widths", "amplitudes", "breakpoints"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.target_mass is not None:
            if not self.target_mass > 0:
                raise InitDataError(f"target_mass must be > 0, got {self.target_mass!r}")
            object.__setattr__(self, "target_mass", float(self.target_mass))

        if kind is Kind.PIECEWISE:
            if len(self.breakpoints) < 2 or len(self.breakpoints) != len(self.amplitudes):
                raise InitDataError("piecewise data needs >= 2 breakpoints and one amplitude per breakpoint")
            if np.any(np.diff(self.breakpoints) <= 0) or self.breakpoints[0] < 0:
                raise InitDataError("breakpoints must be nonnegative and strictly increasing")
        else:
            if not (len(self.centers) == len(self.widths) == len(self.amplitudes)) or not self.centers:
                raise InitDataError("centers, widths and amplitudes must be nonempty and of equal length")
            if kind in (Kind.BUMP, Kind.GAUSSIAN) and len(self.centers) != 1:
                raise InitDataError(f"{kind.value} takes exactly one center; use multibump for several")
            if any(w <= 0 for w in self.widths):
                raise InitDataError("widths must be > 0")
            if any(c < 0 for c in self.centers):
                raise InitDataError("centers must be >= 0")
        if any(a < 0 for a in self.amplitudes):
            raise InitDataError("amplitudes must be >= 0")
        if self.disjoint and kind is Kind.MULTI_BUMP:
            iv = sorted(self.intervals())
            for (_, hi), (lo, _) in zip(iv, iv[1:]):
                if lo < hi:
                    raise InitDataError("bump supports overlap although disjoint=True")

    def intervals(self) -> list[tuple[float, float]]:
        return [(max(c - w, 0.0), c + w) for c, w in zip(self.centers, self.widths)]

    def support_radius(self) -> float:
        if self.kind is Kind.PIECEWISE:
            return self.breakpoints[-1]
        if self.kind is Kind.GAUSSIAN:
            return float("inf")
        return max(hi for _, hi in self.intervals())

    def components(self) -> list["InitialDataSpec"]:
        """One single-bump spec per cap of a MultiBump (unnormalized)."""
        if self.kind is not Kind.MULTI_BUMP:
            return [self]
        return [
            InitialDataSpec(Kind.BUMP, (c,), (w,), (a,))
            for c, w, a in zip(self.centers, self.widths, self.amplitudes)
        ]

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is Kind.PIECEWISE:
            d["breakpoints"] = list(self.breakpoints)
        else:
            d["centers"] = list(self.centers)
            d["widths"] = list(self.widths)
        d["amplitudes"] = list(self.amplitudes)
        if self.target_mass is not None:
            d["target_mass"] = self.target_mass
        if self.disjoint:
            d["disjoint"] = True
        return d


def _cap(r: np.ndarray, center: float, width: float, amp: float) -> np.ndarray:
    x = (r - center) / width
    out = amp * np.cos(0.5 * np.pi * x) ** 2
    out[np.abs(x) >= 1.0] = 0.0
    return out


def _shape(spec: InitialDataSpec, r: np.ndarray) -> np.ndarray:
    if spec.kind is Kind.PIECEWISE:
        return np.interp(r, spec.breakpoints, spec.amplitudes, left=spec.amplitudes[0], right=0.0)
    if spec.kind is Kind.GAUSSIAN:
        (c,), (w,), (a,) = spec.centers, spec.widths, spec.amplitudes
        return a * np.exp(-((r - c) ** 2) / w**2)
    u = np.zeros_like(r)
    for c, w, a in zip(spec.centers, spec.widths, spec.amplitudes):
        u += _cap(r, c, w, a)
    return u


def normalize_to_mass(p: Profile, n: int, target: float) -> Profile:
    if not target > 0:
        raise InitDataError(f"target mass must be > 0, got {target!r}")
    current = mass(p, n)
    if not current > 0:
        raise InitDataError("cannot normalize a profile with zero mass")
    return p.scaled(target / current)


def realize(spec: InitialDataSpec, grid: Grid, n: int) -> Profile:
    """Sample ``spec`` on ``grid``; rescale to ``spec.target_mass`` when set.

    The outer node is forced to zero to match the Dirichlet condition.
    """
    if spec.kind is not Kind.GAUSSIAN and spec.support_radius() > grid.R_max:
        raise InitDataError(
            f"initial support reaches r={spec.support_radius():g} beyond R_max={grid.R_max:g}"
        )
    u = _shape(spec, grid.r)
    u[-1] = 0.0
    prof = Profile(u, grid)
    if spec.target_mass is not None:
        prof = normalize_to_mass(prof, n, spec.target_mass)
    return prof
