"""Affine-in-control inequality rows for CBF/CLF quadratic programs.

Every builder returns :class:`ConstraintRow` objects over the decision vector
``w = (u_1, ..., u_q, delta)``, read as ``a @ w <= beta``. The CLF slack
``delta`` is always the last entry; rows that do not involve it carry a zero
there.

Lie derivatives are supplied by the caller as closed-form callables;
:func:`lie_derivatives_fd` offers a central-difference cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from feascbf.dynamics import AffineSystem, ControlBounds

StateFn = Callable[[np.ndarray], float]
RowFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ClassK:
    """Linear class-K function s -> slope * s."""

    slope: float
    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise ValueError(f"unsupported class-K kind {self.kind!r}")
        if not self.slope > 0:
            raise ValueError("class-K slope must be positive")

    def __call__(self, s):
        return self.slope * s

    def derivative(self, s=None) -> float:
        return self.slope


@dataclass(frozen=True)
class ConstraintRow:
    a: np.ndarray
    beta: float
    label: str = ""

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if not (np.all(np.isfinite(a)) and np.isfinite(self.beta)):
            raise ValueError(f"row {self.label!r} has non-finite entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta", float(self.beta))

    def residual(self, w) -> float:
        """beta - a @ w; nonnegative when satisfied."""
        return float(self.beta - self.a @ np.asarray(w, dtype=float))

    def satisfied(self, w, tol: float = 0.0) -> bool:
        return self.residual(w) >= -tol


def _as_row(value, q: int) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float)).reshape(q)


@dataclass(frozen=True)
class HocbfSpec:
    """Barrier b(x) >= 0 of relative degree m (1 or 2) with linear class-K chain.

    m = 1 needs ``lf_b`` and ``lg_b``.
    m = 2 needs ``lf_b`` (the first derivative, since L_g b = 0),
    ``lf2_b`` and ``lglf_b``.
    """

    m: int
    q: int
    b: StateFn
    alphas: tuple[ClassK, ...]
    lf_b: Optional[StateFn] = None
    lg_b: Optional[RowFn] = None
    lf2_b: Optional[StateFn] = None
    lglf_b: Optional[RowFn] = None

    def __post_init__(self):
        if self.m not in (1, 2):
            raise NotImplementedError(f"relative degree {self.m} is not supported")
        object.__setattr__(self, "alphas", tuple(self.alphas))
        if len(self.alphas) != self.m:
            raise ValueError(f"need {self.m} class-K functions, got {len(self.alphas)}")
        required = ("lf_b", "lg_b") if self.m == 1 else ("lf_b", "lf2_b", "lglf_b")
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"missing derivative callables: {', '.join(missing)}")

    def control_gain(self, x) -> np.ndarray:
        """L_g L_f^{m-1} b(x), the coefficient of u in the m-th derivative."""
        fn = self.lg_b if self.m == 1 else self.lglf_b
        return _as_row(fn(x), self.q)

    def s_term(self, x) -> float:
        """Lower-order Lie terms S(b); for a linear alpha_1 this is p1 * L_f b."""
        if self.m == 1:
            return 0.0
        return self.alphas[0].derivative() * float(self.lf_b(x))

    def lf_m(self, x) -> float:
        return float(self.lf_b(x) if self.m == 1 else self.lf2_b(x))


@dataclass(frozen=True)
class ClfSpec:
    V: StateFn
    lf_v: StateFn
    lg_v: RowFn
    epsilon: float
    relax_weight: float
    q: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.relax_weight > 0:
            raise ValueError("relax_weight must be positive")


def psi_chain(spec: HocbfSpec, x) -> list[float]:
    """psi_0 = b, psi_i = d/dt psi_{i-1} + alpha_i(psi_{i-1}), up to psi_{m-1}."""
    x = np.asarray(x, dtype=float)
    psi = [float(spec.b(x))]
    if spec.m == 2:
        psi.append(float(spec.lf_b(x)) + spec.alphas[0](psi[0]))
    return psi


def hocbf_rhs(spec: HocbfSpec, x) -> float:
    """L_f^m b + S(b) + alpha_m(psi_{m-1}): the right-hand side of the safety row."""
    x = np.asarray(x, dtype=float)
    psi = psi_chain(spec, x)
    return spec.lf_m(x) + spec.s_term(x) + spec.alphas[-1](psi[-1])


def hocbf_row(spec: HocbfSpec, x) -> ConstraintRow:
    """-L_g L_f^{m-1} b(x) u <= L_f^m b + S(b) + alpha_m(psi_{m-1})."""
    x = np.asarray(x, dtype=float)
    a = np.append(-spec.control_gain(x), 0.0)
    return ConstraintRow(a, hocbf_rhs(spec, x), "hocbf")


def clf_row(spec: ClfSpec, x) -> ConstraintRow:
    """L_f V + L_g V u + eps V <= delta, as (L_g V, -1) @ (u, delta) <= -L_f V - eps V."""
    x = np.asarray(x, dtype=float)
    lg = _as_row(spec.lg_v(x), spec.q)
    beta = -float(spec.lf_v(x)) - spec.epsilon * float(spec.V(x))
    return ConstraintRow(np.append(lg, -1.0), beta, "clf")


def bound_rows(bounds: ControlBounds) -> list[ConstraintRow]:
    rows = []
    q = bounds.q
    for i in range(q):
        e = np.zeros(q + 1)
        e[i] = 1.0
        rows.append(ConstraintRow(e, bounds.u_max[i], f"u{i}_max"))
        rows.append(ConstraintRow(-e, -bounds.u_min[i], f"u{i}_min"))
    return rows


def stack_rows(rows: Sequence[ConstraintRow]) -> tuple[np.ndarray, np.ndarray]:
    if not rows:
        raise ValueError("no rows to stack")
    return np.vstack([r.a for r in rows]), np.array([r.beta for r in rows])


def lie_derivatives_fd(h: StateFn, system: AffineSystem, x, step: float = 1e-6):
    """(L_f h, L_g h) at x using a central-difference gradient of h."""
    x = np.asarray(x, dtype=float)
    grad = np.empty(system.n)
    for i in range(system.n):
        e = np.zeros(system.n)
        e[i] = step
        grad[i] = (h(x + e) - h(x - e)) / (2 * step)
    return float(grad @ system.drift(x)), grad @ system.input_matrix(x)
