"""Uniform radial mesh, weighted trapezoid quadrature and profile observables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .analytic import DomainError, ball_volume_coeff

MIN_NODES = 16


@dataclass(frozen=True)
class Grid:
    R_max: float
    N: int

    def __post_init__(self):
        if not (self.R_max > 0 and math.isfinite(self.R_max)):
            raise DomainError(f"R_max must be a positive finite number, got {self.R_max!r}")
        if int(self.N) != self.N or self.N < MIN_NODES:
            raise DomainError(f"N must be an integer >= {MIN_NODES}, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "R_max", float(self.R_max))

    @property
    def dr(self) -> float:
        return self.R_max / (self.N - 1)

    @cached_property
    def r(self) -> np.ndarray:
        r = np.arange(self.N, dtype=float) * self.dr
        r[-1] = self.R_max
        r.setflags(write=False)
        return r

    def weights(self, n: int) -> np.ndarray:
        """Quadrature weights so that Σ wᵢ fᵢ ≈ ∫_{|x|<R_max} f dx in ℝⁿ."""
        cache = self.__dict__.setdefault("_weights", {})
        if n not in cache:
            w = n * ball_volume_coeff(n) * self.dr * self.r ** (n - 1)
            w[0] *= 0.5
            w[-1] *= 0.5
            w.setflags(write=False)
            cache[n] = w
        return cache[n]


def build_grid(R_max: float, N: int) -> Grid:
    return Grid(R_max, N)


@dataclass(frozen=True, eq=False)
class Profile:
    """Nonnegative density samples on a grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise DomainError(f"profile has shape {v.shape}, grid expects ({self.grid.N},)")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    def scaled(self, c: float) -> "Profile":
        return Profile(c * self.values, self.grid)

    def to_csv(self, path) -> None:
        write_profile_csv(path, self.grid.r, self.values)

    @classmethod
    def from_csv(cls, path, grid: Grid | None = None) -> "Profile":
        r, u = read_profile_csv(path)
        if grid is None:
            grid = Grid(float(r[-1]), len(r))
        return cls(u, grid)


def mass(p: Profile, n: int) -> float:
    return float(np.dot(p.grid.weights(n), p.values))


def lk_norm(p: Profile, n: int, k: float) -> float:
    if math.isinf(k) and k > 0:
        return float(p.values.max())
    if not k >= 1:
        raise DomainError(f"norm index must be >= 1 or inf, got {k!r}")
    integral = float(np.dot(p.grid.weights(n), p.values**k))
    return integral ** (1.0 / k)


def second_moment(p: Profile, n: int) -> float:
    return float(np.dot(p.grid.weights(n), p.values * p.grid.r**2))


def radial_gradient_l2(p: Profile, n: int) -> float:
    """‖∇u‖²₂ with centered differences inside and one-sided ones at the ends."""
    du = np.gradient(p.values, p.grid.dr, edge_order=2)
    return float(np.dot(p.grid.weights(n), du * du))


def write_profile_csv(path, r, u) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "u"])
        for ri, ui in zip(r, u):
            w.writerow([format(float(ri), ".17g"), format(float(ui), ".17g")])


def read_profile_csv(path):
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
