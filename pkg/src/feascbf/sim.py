"""Point-wise QP control loop with zero-order hold.

At each sampling instant the controller's rows and cost are frozen at the
current state, the QP is solved, and the optimal control is held constant
while the plant is integrated over the interval with fixed-step RK4. A run
stops at the first infeasible QP; no fallback control is applied.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from feascbf.constraints import ConstraintRow, stack_rows
from feascbf.dynamics import AffineSystem
from feascbf.qp import QpProblem, QpResult, solve

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadraticCost:
    H: np.ndarray
    F: np.ndarray


class Controller(Protocol):
    system: AffineSystem

    def rows(self, x: np.ndarray) -> list[ConstraintRow]: ...

    def cost(self, x: np.ndarray) -> QuadraticCost: ...

    def diagnostics(self, x: np.ndarray) -> dict[str, float]: ...

    def barrier_values(self, x: np.ndarray) -> list[float]: ...


@dataclass(frozen=True)
class SimConfig:
    initial_state: tuple[float, ...]
    dt: float = 0.1
    T: float = 30.0
    substeps: int = 10
    record_timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "initial_state", tuple(float(v) for v in self.initial_state))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if 0 < self.T < self.dt:
            raise ValueError("T must be at least dt")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))


class TraceStatus(str, enum.Enum):
    COMPLETED = "Completed"
    INFEASIBLE = "Infeasible"


@dataclass
class StepRecord:
    t: float
    state: tuple[float, ...]
    u: tuple[float, ...]
    delta: float
    qp_status: str
    values: dict[str, float]
    solve_us: float
    problem: Optional[QpProblem] = field(default=None, repr=False, compare=False)
    result: Optional[QpResult] = field(default=None, repr=False, compare=False)


@dataclass
class SimTrace:
    records: list[StepRecord] = field(default_factory=list)
    status: TraceStatus = TraceStatus.COMPLETED
    infeasible_t: Optional[float] = None
    final_state: Optional[tuple[float, ...]] = None
    negative_speed: bool = False

    def column(self, name: str) -> np.ndarray:
        return np.array([r.values[name] for r in self.records])

    def states(self) -> np.ndarray:
        return np.array([r.state for r in self.records])

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


@dataclass(frozen=True)
class StepOutcome:
    problem: QpProblem
    result: QpResult
    u: Optional[np.ndarray]
    delta: float


def step(rows: Sequence[ConstraintRow], cost: QuadraticCost) -> StepOutcome:
    """Solve one frozen-state QP over (u, delta)."""
    A, b = stack_rows(rows)
    problem = QpProblem(cost.H, cost.F, A, b)
    result = solve(problem)
    if not result.optimal:
        return StepOutcome(problem, result, None, math.nan)
    return StepOutcome(problem, result, result.w_opt[:-1].copy(), float(result.w_opt[-1]))


def integrate_hold(system: AffineSystem, x, u, dt: float, substeps: int = 10) -> np.ndarray:
    """Classical RK4 over [0, dt] with u held constant, in ``substeps`` equal steps."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(u)):
        raise ValueError("control must be finite")
    x = np.asarray(x, dtype=float).copy()
    h = dt / substeps
    for _ in range(substeps):
        k1 = system.xdot(x, u)
        k2 = system.xdot(x + 0.5 * h * k1, u)
        k3 = system.xdot(x + 0.5 * h * k2, u)
        k4 = system.xdot(x + h * k3, u)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state {x} after holding u={u} for {dt}s")
    return x


def run(controller: Controller, config: SimConfig) -> SimTrace:
    x = np.array(config.initial_state, dtype=float)
    trace = SimTrace()
    speed_index = getattr(controller, "speed_index", None)
    if any(v < 0 for v in controller.barrier_values(x)):
        log.warning("initial state lies outside the safe set chain: %s",
                    controller.barrier_values(x))
    for k in range(config.n_steps):
        t = k * config.dt
        rows = controller.rows(x)
        cost = controller.cost(x)
        values = controller.diagnostics(x)
        start = time.perf_counter()
        outcome = step(rows, cost)
        elapsed = (time.perf_counter() - start) * 1e6 if config.record_timing else math.nan
        status = outcome.result.status.value
        u = tuple(outcome.u) if outcome.u is not None else (math.nan,) * controller.system.q
        trace.records.append(StepRecord(
            t=t, state=tuple(float(v) for v in x), u=u, delta=outcome.delta,
            qp_status=status, values=values, solve_us=elapsed,
            problem=outcome.problem, result=outcome.result,
        ))
        if outcome.u is None:
            trace.status = TraceStatus.INFEASIBLE
            trace.infeasible_t = t
            log.info("QP infeasible at t=%.3f (slack %.3g)", t, outcome.result.phase1_slack)
            break
        log.debug("t=%.2f x=%s u=%s delta=%.4g", t, x, outcome.u, outcome.delta)
        x = integrate_hold(controller.system, x, outcome.u, config.dt, config.substeps)
        if speed_index is not None and x[speed_index] < 0:
            trace.negative_speed = True
    trace.final_state = tuple(float(v) for v in x)
    return trace
