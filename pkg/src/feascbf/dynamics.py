"""Control-affine plants xdot = f(x) + g(x) u and the ACC vehicle model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class AffineSystem:
    n: int
    q: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]

    def drift(self, x) -> np.ndarray:
        return np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float).reshape(self.n)

    def input_matrix(self, x) -> np.ndarray:
        return np.asarray(self.g(np.asarray(x, dtype=float)), dtype=float).reshape(self.n, self.q)

    def xdot(self, x, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return self.drift(x) + self.input_matrix(x) @ u


@dataclass(frozen=True)
class ControlBounds:
    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.u_min, dtype=float))
        hi = np.atleast_1d(np.asarray(self.u_max, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("u_min and u_max must have the same length")
        if np.any(lo > hi):
            raise ValueError("u_min must not exceed u_max")
        object.__setattr__(self, "u_min", lo)
        object.__setattr__(self, "u_max", hi)

    @property
    def q(self) -> int:
        return self.u_min.shape[0]

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return bool(np.all(u >= self.u_min - tol) and np.all(u <= self.u_max + tol))


@dataclass(frozen=True)
class AccParams:
    """Vehicle and scenario constants (SI units). Defaults are the case-study values."""

    mass: float = 1650.0  # kg
    f0: float = 0.1  # N
    f1: float = 5.0  # N s/m
    f2: float = 0.25  # N s^2/m^2
    v_p: float = 13.89  # lead vehicle speed, m/s
    v_d: float = 24.0  # desired speed, m/s
    l0: float = 10.0  # minimum gap, m
    c_a: float = 0.4
    c_d: float = 0.4
    grav: float = 9.81  # m/s^2

    def __post_init__(self):
        for name in ("mass", "f0", "f1", "f2", "v_p", "v_d", "l0", "c_a", "c_d", "grav"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("c_a", "c_d"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must lie in (0, 1]")


def resistance_force(v: float, params: AccParams) -> float:
    """Rolling plus aerodynamic resistance f0*sgn(v) + f1*v + f2*v^2, with sgn(0) = 0."""
    return float(params.f0 * np.sign(v) + params.f1 * v + params.f2 * v * v)


def acc_system(params: AccParams) -> AffineSystem:
    """Ego vehicle with state (v, z): speed and gap to a constant-speed leader."""

    def f(x):
        v = x[0]
        return np.array([-resistance_force(v, params) / params.mass, params.v_p - v])

    def g(x):
        return np.array([[1.0 / params.mass], [0.0]])

    return AffineSystem(n=2, q=1, f=f, g=g)


def acc_bounds(params: AccParams) -> ControlBounds:
    return ControlBounds(
        u_min=[-params.c_d * params.mass * params.grav],
        u_max=[params.c_a * params.mass * params.grav],
    )
