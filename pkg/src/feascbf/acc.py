"""Adaptive cruise control scenario: rows, cost and the braking-distance baseline."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from feascbf.constraints import (
    ClassK,
    ClfSpec,
    ConstraintRow,
    HocbfSpec,
    bound_rows,
    clf_row,
    hocbf_row,
    hocbf_rhs,
    psi_chain,
)
from feascbf.dynamics import AccParams, acc_bounds, acc_system, resistance_force
from feascbf.feasibility import (
    PhiSpec,
    acc_speed_bound,
    acc_synthesize_phi,
    feasibility_value,
    phi_row,
)
from feascbf.sim import QuadraticCost, SimConfig, SimTrace, run


class Baseline(str, enum.Enum):
    NONE = "None"
    MIN_BRAKING_DISTANCE = "MinBrakingDistance"


BRAKING_ALPHA_SLOPE = 2.0


@dataclass(frozen=True)
class AccScenario:
    params: AccParams = field(default_factory=AccParams)
    p1: float = 1.0
    p2: float = 2.0
    epsilon: float = 10.0
    p_acc: float = 1.0
    feasibility_on: bool = True
    baseline: Baseline = Baseline.NONE
    phi_alpha: float = 1.0  # slope of the class-K function in the phi row

    def __post_init__(self):
        object.__setattr__(self, "baseline", Baseline(self.baseline))
        for name in ("p1", "p2", "epsilon", "p_acc", "phi_alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def gap_barrier(scenario: AccScenario) -> HocbfSpec:
    """b = z - l0 (relative degree two) with alpha_1 = p1 s, alpha_2 = p2 s."""
    P = scenario.params
    return HocbfSpec(
        m=2,
        q=1,
        b=lambda x: x[1] - P.l0,
        alphas=(ClassK(scenario.p1), ClassK(scenario.p2)),
        lf_b=lambda x: P.v_p - x[0],
        lf2_b=lambda x: resistance_force(x[0], P) / P.mass,
        lglf_b=lambda x: np.array([-1.0 / P.mass]),
    )


def speed_clf(scenario: AccScenario) -> ClfSpec:
    """V = (v - v_d)^2."""
    P = scenario.params
    return ClfSpec(
        V=lambda x: (x[0] - P.v_d) ** 2,
        lf_v=lambda x: -2.0 * (x[0] - P.v_d) * resistance_force(x[0], P) / P.mass,
        lg_v=lambda x: np.array([2.0 * (x[0] - P.v_d) / P.mass]),
        epsilon=scenario.epsilon,
        relax_weight=scenario.p_acc,
    )


def braking_barrier(params: AccParams) -> HocbfSpec:
    """b_bk = z - 0.5 (v_p - v)^2 / (c_d g) - l0, relative degree one, slope-2 alpha."""
    P = params
    decel = P.c_d * P.grav

    def b(x):
        return x[1] - 0.5 * (P.v_p - x[0]) ** 2 / decel - P.l0

    def lf_b(x):
        v = x[0]
        return (P.v_p - v) + (P.v_p - v) / decel * (-resistance_force(v, P) / P.mass)

    def lg_b(x):
        return np.array([(P.v_p - x[0]) / (decel * P.mass)])

    return HocbfSpec(m=1, q=1, b=b, alphas=(ClassK(BRAKING_ALPHA_SLOPE),), lf_b=lf_b, lg_b=lg_b)


def build_braking_baseline(scenario: AccScenario):
    """Row builder x -> braking-distance CBF row (replaces the gap HOCBF row)."""
    if scenario.baseline is not Baseline.MIN_BRAKING_DISTANCE:
        raise ValueError("scenario does not request the MinBrakingDistance baseline")
    spec = braking_barrier(scenario.params)

    def row(x) -> ConstraintRow:
        r = hocbf_row(spec, x)
        return ConstraintRow(r.a, r.beta, "braking")

    return row


def reachable_speed_check(scenario: AccScenario) -> bool:
    """Does the phi speed cap still admit the desired speed?"""
    P = scenario.params
    return acc_speed_bound(scenario.p1, scenario.p2, P) >= P.v_d


@dataclass
class AccController:
    scenario: AccScenario
    speed_index: int = 0

    def __post_init__(self):
        P = self.scenario.params
        self.system = acc_system(P)
        self.bounds = acc_bounds(P)
        self.gap = gap_barrier(self.scenario)
        self.clf = speed_clf(self.scenario)
        self.phi: PhiSpec = acc_synthesize_phi(
            self.scenario.p1, self.scenario.p2, P, ClassK(self.scenario.phi_alpha)
        )
        self.braking: Optional[HocbfSpec] = None
        if self.scenario.baseline is Baseline.MIN_BRAKING_DISTANCE:
            self.braking = braking_barrier(P)

    @property
    def uses_phi(self) -> bool:
        return self.scenario.feasibility_on and self.braking is None

    def safety_row(self, x) -> ConstraintRow:
        if self.braking is not None:
            r = hocbf_row(self.braking, x)
            return ConstraintRow(r.a, r.beta, "braking")
        return hocbf_row(self.gap, x)

    def rows(self, x) -> list[ConstraintRow]:
        rows = [clf_row(self.clf, x), *bound_rows(self.bounds), self.safety_row(x)]
        if self.uses_phi:
            rows.append(phi_row(self.phi, x))
        return rows

    def cost(self, x) -> QuadraticCost:
        """((u - F_r)/M)^2 + p_acc delta^2 without the constant term."""
        M = self.scenario.params.mass
        fr = resistance_force(x[0], self.scenario.params)
        H = np.diag([2.0 / M**2, 2.0 * self.scenario.p_acc])
        F = np.array([-2.0 * fr / M**2, 0.0])
        return QuadraticCost(H, F)

    def diagnostics(self, x) -> dict[str, float]:
        x = np.asarray(x, dtype=float)
        psi = psi_chain(self.gap, x)
        return {
            "b": psi[0],
            "psi1": psi[1],
            "phi": float(self.phi.phi(x)),
            "b_hF": feasibility_value(self.gap, self.bounds, x),
            "safety_beta": self.safety_row(x).beta,
        }

    def barrier_values(self, x) -> list[float]:
        if self.braking is not None:
            return psi_chain(self.braking, x)
        return psi_chain(self.gap, x)


def build(scenario: AccScenario) -> AccController:
    return AccController(scenario)


def safety_rhs(scenario: AccScenario, x) -> float:
    """Right-hand side of the gap HOCBF row, in units of acceleration."""
    return hocbf_rhs(gap_barrier(scenario), x)


def simulate(scenario: AccScenario, config: SimConfig) -> SimTrace:
    return run(build(scenario), config)
