"""Feasibility constraints that keep the safety row compatible with control bounds.

The safety row ``-L_g L_f^{m-1} b(x) u <= r(x)`` can only clash with the lower
end of the control box once the box is projected onto the row normal. Keeping

    b_F(x) = r(x) + L_g L_f^{m-1} b(x) u_min >= 0

makes the two compatible. Enforcing ``b_F >= 0`` directly with another CBF can
itself conflict, so the preferred route is a candidate function ``phi`` whose
gradient is parallel to the safety row's: then the phi row, the safety row and
the box always share a point, provided the sufficient conditions checked by
:func:`check_certificate` hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from feascbf.constraints import ClassK, ConstraintRow, HocbfSpec, hocbf_rhs
from feascbf.dynamics import AccParams, ControlBounds, resistance_force
from feascbf.qp import FeasibilityReport, QpProblem, check_feasible

LG_PROPORTIONAL_TOL = 1e-9


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class PhiSpec:
    phi: Callable[[np.ndarray], float]
    lf_phi: Callable[[np.ndarray], float]
    lg_phi: Callable[[np.ndarray], np.ndarray]
    alpha_u: ClassK
    gamma: float
    relative_degree: int = 1
    q: int = 1

    def __post_init__(self):
        if self.relative_degree not in (0, 1):
            raise ValueError("candidate functions have relative degree 0 or 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class FeasibilityCertificate:
    phi_x0_ok: bool
    lf_phi_ok: bool
    lf_phi_worst: float
    lg_proportional_ok: bool
    lg_max_deviation: float
    zero_in_U: bool

    @property
    def verdict(self) -> bool:
        return self.phi_x0_ok and self.lf_phi_ok and self.lg_proportional_ok and self.zero_in_U


def _check_gain_sign(lg_row: np.ndarray) -> None:
    if np.any(lg_row > 0):
        raise ValueError("control gain has a positive component; apply sign_normalize first")
    if not np.any(lg_row < 0):
        raise ValueError("control gain is identically zero")


def transformed_bounds(bounds: ControlBounds, lg_row) -> tuple[float, float]:
    """Project the box through -lg_row: interval [-lg.u_min, -lg.u_max] on -lg.u.

    Every u in the box lands in the interval, and if the interval meets the
    safety half-line then so does the box.
    """
    lg = np.atleast_1d(np.asarray(lg_row, dtype=float))
    _check_gain_sign(lg)
    return float(-lg @ bounds.u_min), float(-lg @ bounds.u_max)


def sign_normalize(bounds: ControlBounds, i: int) -> float:
    """Symmetric limit min(|u_min,i|, u_max,i) for a control whose gain changes sign."""
    lo, hi = bounds.u_min[i], bounds.u_max[i]
    if not (lo < 0 < hi):
        raise ValueError(f"bounds for control {i} do not straddle zero")
    return float(min(abs(lo), hi))


def feasibility_value(spec: HocbfSpec, bounds: ControlBounds, x) -> float:
    """b_F(x) (m = 1) or b_hF(x) (m = 2): slack between the safety row and u_min."""
    x = np.asarray(x, dtype=float)
    lg = spec.control_gain(x)
    _check_gain_sign(lg)
    return hocbf_rhs(spec, x) + float(lg @ bounds.u_min)


def feasibility_row(
    spec: HocbfSpec,
    bounds: ControlBounds,
    x,
    alpha_f: ClassK,
    lf_bf: Optional[Callable] = None,
    lg_bf: Optional[Callable] = None,
) -> ConstraintRow:
    """CBF row enforcing b_F >= 0: -L_g b_F u <= L_f b_F + alpha_f(b_F).

    b_F has relative degree one whatever m is, so its Lie derivatives along f
    and g must be supplied.
    """
    if lf_bf is None or lg_bf is None:
        raise ConfigurationError("feasibility_row needs lf_bf and lg_bf callables")
    x = np.asarray(x, dtype=float)
    bf = feasibility_value(spec, bounds, x)
    lg = np.atleast_1d(np.asarray(lg_bf(x), dtype=float)).reshape(spec.q)
    return ConstraintRow(np.append(-lg, 0.0), float(lf_bf(x)) + alpha_f(bf), "feasibility")


def phi_row(spec: PhiSpec, x) -> ConstraintRow:
    """-L_g phi u <= L_f phi + alpha_u(phi)."""
    if spec.relative_degree != 1:
        raise ValueError("relative-degree-zero candidates go through phi_zero_row")
    x = np.asarray(x, dtype=float)
    lg = np.atleast_1d(np.asarray(spec.lg_phi(x), dtype=float)).reshape(spec.q)
    beta = float(spec.lf_phi(x)) + spec.alpha_u(float(spec.phi(x)))
    return ConstraintRow(np.append(-lg, 0.0), beta, "phi")


def phi_zero_row(phi_u: Callable, x, q: int = 1, tol: float = 1e-9) -> ConstraintRow:
    """Row for phi(x, u) >= 0 when u enters phi directly (and affinely)."""
    x = np.asarray(x, dtype=float)
    c = float(phi_u(x, np.zeros(q)))
    d = np.array([float(phi_u(x, np.eye(q)[i])) - c for i in range(q)])
    # affinity probe at a second, non-basis point
    probe = np.linspace(-2.0, 3.0, q) if q > 1 else np.array([-2.5])
    expected = c + d @ probe
    if abs(float(phi_u(x, probe)) - expected) > tol * max(1.0, abs(expected)):
        raise ValueError("phi(x, u) is not affine in u")
    return ConstraintRow(np.append(-d, 0.0), c, "phi0")


def rows_compatible(rows: Sequence[ConstraintRow]) -> FeasibilityReport:
    """Is the intersection of the given rows nonempty (as a phase-1 check)?"""
    A = np.vstack([r.a for r in rows])
    b = np.array([r.beta for r in rows])
    n = A.shape[1]
    return check_feasible(QpProblem(np.eye(n), np.zeros(n), A, b))


def check_certificate(
    spec: PhiSpec,
    hocbf: HocbfSpec,
    bounds: ControlBounds,
    x0,
    sample_states: Sequence,
) -> FeasibilityCertificate:
    """Evaluate the sufficient conditions for guaranteed feasibility on samples.

    phi(x0) >= 0, L_f phi >= 0, L_g phi = gamma * L_g L_f^{m-1} b and 0 in U.
    """
    if len(sample_states) == 0:
        raise ValueError("need at least one sample state")
    x0 = np.asarray(x0, dtype=float)
    states = [x0] + [np.asarray(s, dtype=float) for s in sample_states]
    lf_vals = np.array([float(spec.lf_phi(s)) for s in states])
    deviation = max(
        float(np.max(np.abs(
            np.atleast_1d(np.asarray(spec.lg_phi(s), dtype=float)).reshape(spec.q)
            - spec.gamma * hocbf.control_gain(s)
        )))
        for s in states
    )
    lf_worst = float(min(lf_vals.min(), 0.0))
    return FeasibilityCertificate(
        phi_x0_ok=bool(spec.phi(x0) >= 0),
        lf_phi_ok=bool(lf_worst >= 0),
        lf_phi_worst=lf_worst,
        lg_proportional_ok=bool(deviation <= LG_PROPORTIONAL_TOL),
        lg_max_deviation=deviation,
        zero_in_U=bool(np.all(bounds.u_min <= 0) and np.all(bounds.u_max >= 0)),
    )


def acc_speed_bound(p1: float, p2: float, params: AccParams) -> float:
    """Largest speed with phi >= 0: v_p + c_d g (p1 + p2) / (p1 p2)."""
    return params.v_p + params.c_d * params.grav * (p1 + p2) / (p1 * p2)


def acc_synthesize_phi(
    p1: float, p2: float, params: AccParams, alpha_u: Optional[ClassK] = None
) -> PhiSpec:
    """Candidate phi for the ACC gap barrier with alpha_1 = p1 s, alpha_2 = p2 s.

    Enforcing the simplified b_hF with a linear CBF of slope k = p1 + p2 and
    matching the gap coefficient against the safety row leaves

        phi(v, z) = gamma (v_p - v) + c_d g,   gamma = p1 p2 / (p1 + p2),

    whose gain is gamma times the safety row's gain. ``alpha_u`` (default
    slope 1) is the class-K function of the CBF row that keeps phi >= 0.
    """
    if not (p1 > 0 and p2 > 0):
        raise ValueError("p1 and p2 must be positive")
    gamma = p1 * p2 / (p1 + p2)
    M = params.mass

    def phi(x):
        return gamma * (params.v_p - x[0]) + params.c_d * params.grav

    def lf_phi(x):
        return gamma * resistance_force(x[0], params) / M

    def lg_phi(x):
        return np.array([-gamma / M])

    return PhiSpec(
        phi=phi,
        lf_phi=lf_phi,
        lg_phi=lg_phi,
        alpha_u=alpha_u if alpha_u is not None else ClassK(1.0),
        gamma=gamma,
        relative_degree=1,
    )
