"""Independent reference computations used by the test-suite.

Nothing here calls into the solver under test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PlantedQp:
    H: np.ndarray
    F: np.ndarray
    A: np.ndarray
    b: np.ndarray
    feasible: bool
    center: np.ndarray  # unconstrained minimizer
    radius: float  # the constrained minimizer lies within this distance of center


def _rotation(rng, n):
    if n == 1:
        return np.ones((1, 1))
    theta = rng.uniform(0, 2 * np.pi)
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def _unit_rows(rng, k, n):
    a = rng.normal(size=(k, n))
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def planted_qp(rng: np.random.Generator, feasible_fraction: float = 0.7) -> PlantedQp:
    """Random QP whose status is known by construction.

    Feasible instances contain a ball of radius >= 0.1 around a planted point;
    infeasible ones contain a pair a.w <= b1, -a.w <= b2 with b1 + b2 <= -0.1.
    H has condition number <= 4 so the minimizer stays inside a known disc.
    """
    n = int(rng.integers(1, 3))
    R = _rotation(rng, n)
    eig = rng.uniform(0.5, 2.0, size=n)
    H = R @ np.diag(eig) @ R.T
    H = 0.5 * (H + H.T)
    w_u = rng.uniform(-1, 1, size=n)
    F = -H @ w_u
    c = w_u + rng.uniform(-0.5, 0.5, size=n)
    feasible = rng.uniform() < feasible_fraction
    n_c = int(rng.integers(1 if feasible else 2, 7))
    A = _unit_rows(rng, n_c, n)
    b = A @ c + rng.uniform(0.1, 1.0, size=n_c)
    if not feasible:
        gap = rng.uniform(0.1, 1.0)
        i, j = rng.choice(n_c, size=2, replace=False)
        A[j] = -A[i]
        b[j] = -b[i] - gap
    kappa = eig.max() / eig.min()
    radius = float(np.sqrt(kappa) * np.linalg.norm(c - w_u))
    return PlantedQp(H, F, A, b, feasible, w_u, radius)


@dataclass
class GridAnswer:
    feasible: bool
    w: np.ndarray | None
    objective: float
    gradient_inf: float
    step: float


def grid_qp(H, F, A, b, center, radius, step, tol=1e-12) -> GridAnswer:
    """Brute-force minimum of 0.5 w'Hw + F'w over grid points satisfying A w <= b."""
    n = len(F)
    axes = [np.arange(c - radius - step, c + radius + 2 * step, step) for c in center]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    ok = np.all(mesh @ A.T <= b + tol, axis=1)
    if not np.any(ok):
        return GridAnswer(False, None, np.inf, np.nan, step)
    pts = mesh[ok]
    obj = 0.5 * np.einsum("ij,jk,ik->i", pts, H, pts) + pts @ F
    k = int(np.argmin(obj))
    w = pts[k]
    return GridAnswer(True, w, float(obj[k]), float(np.max(np.abs(H @ w + F))), step)


def grid_1d_min(fun, lo, hi, step):
    """Argmin of a vectorized scalar function over a uniform grid on [lo, hi]."""
    u = np.arange(lo, hi + 0.5 * step, step)
    vals = fun(u)
    k = int(np.nanargmin(vals))
    return float(u[k]), float(vals[k])


def rk4_reference(fun, x0, t_end, n_steps):
    """Plain RK4 on a generic ODE, written independently of the simulator."""
    x = np.array(x0, dtype=float)
    h = t_end / n_steps
    for _ in range(n_steps):
        k1 = fun(x)
        k2 = fun(x + h / 2 * k1)
        k3 = fun(x + h / 2 * k2)
        k4 = fun(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x
