"""Dense inequality-constrained QP solver for small control problems.

Solves

    minimize    0.5 * w' H w + F' w
    subject to  A w <= b

with H symmetric positive definite. The solver runs in two passes:

1. A phase-1 pass minimizes the worst constraint violation ``s`` over ``w``.
   For the tiny problems met in point-wise CBF/CLF control (a handful of
   variables and rows) the phase-1 LP is solved exactly by enumerating the
   vertices of its epigraph, which makes the feasible/infeasible verdict
   independent of any iterative tolerance.
2. A primal active-set method over a Cholesky factorization of H, started
   from the phase-1 witness.

If the minimized violation exceeds ``FEAS_TOL`` the problem is reported
infeasible, and that value is returned as the certificate.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

FEAS_TOL = 1e-8
STAT_TOL = 1e-6
COMPL_TOL = 1e-6
DUAL_TOL = 1e-10
SYM_TOL = 1e-12

_MAX_ITER = 200


class QpInputError(ValueError):
    """Raised for malformed QP data (shapes, symmetry, definiteness)."""


class QpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class QpProblem:
    """minimize 0.5 w'Hw + F'w  s.t.  A w <= b."""

    H: np.ndarray
    F: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        F = np.atleast_1d(np.asarray(self.F, dtype=float)).ravel()
        n = F.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        A = np.atleast_2d(A)
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).ravel()
        if H.shape != (n, n):
            raise QpInputError(f"H has shape {H.shape}, expected ({n}, {n})")
        if A.shape[1] != n:
            raise QpInputError(f"A has {A.shape[1]} columns, expected {n}")
        if A.shape[0] != b.shape[0]:
            raise QpInputError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(F))
                and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise QpInputError("QP data must be finite")
        if np.max(np.abs(H - H.T), initial=0.0) > SYM_TOL * max(1.0, np.max(np.abs(H))):
            raise QpInputError("H is not symmetric")
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise QpInputError("H is not positive definite") from None
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_vars(self) -> int:
        return self.F.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.H @ w + self.F @ w)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    slack: float  # minimized worst violation, >= 0
    witness: np.ndarray | None = None


@dataclass(frozen=True)
class QpResult:
    status: QpStatus
    w_opt: np.ndarray | None
    multipliers: np.ndarray | None
    active_set: tuple[int, ...] = ()
    objective: float = math.nan
    phase1_slack: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


@dataclass(frozen=True)
class KktResiduals:
    primal: float
    stationarity: float
    complementarity: float
    dual: float
    ok: bool = field(init=False)

    def __post_init__(self):
        ok = (self.primal <= FEAS_TOL and self.stationarity <= STAT_TOL
              and self.complementarity <= COMPL_TOL and self.dual <= DUAL_TOL)
        object.__setattr__(self, "ok", ok)


def _split_degenerate(A, b):
    """Separate all-zero rows. Returns (kept indices, constant violation)."""
    zero = ~np.any(A != 0.0, axis=1)
    violation = float(np.max(-b[zero], initial=0.0))
    return np.flatnonzero(~zero), max(violation, 0.0)


@functools.lru_cache(maxsize=64)
def _combinations_cached(n: int, k: int) -> tuple:
    return tuple(itertools.combinations(range(n), k))


def _combinations(n: int, k: int) -> np.ndarray:
    return np.array(_combinations_cached(n, k), dtype=int).reshape(-1, k)


def _phase1(A, b):
    """Exact min over w of max(0, max_i(A_i w - b_i)) by vertex enumeration.

    Rows must be nonzero. Returns (w, s).
    """
    m, n = A.shape
    if m == 0:
        return np.zeros(n), 0.0
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > sv[0] * max(m, n) * np.finfo(float).eps))
    basis = Vt[:rank].T
    B = A @ basis
    # Epigraph LP over z = (y, s):  B y - s <= b,  -s <= 0.
    M = np.zeros((m + 1, rank + 1))
    M[:m, :rank] = B
    M[:m, rank] = -1.0
    M[m, rank] = -1.0
    rhs = np.append(b, 0.0)
    row_scale = np.abs(M).sum(axis=1)
    combos = _combinations(m + 1, rank + 1)
    subs = M[combos]
    usable = np.linalg.cond(subs) <= 1e13
    if not np.any(usable):  # pragma: no cover - a pointed bounded LP has a vertex
        raise RuntimeError("phase-1 enumeration found no vertex")
    combos, subs = combos[usable], subs[usable]
    Z = np.linalg.solve(subs, rhs[combos][..., None])[..., 0]
    scale = 1.0 + np.abs(rhs)[None, :] + row_scale[None, :] * np.max(np.abs(Z), axis=1)[:, None]
    ok = np.all(Z @ M.T - rhs[None, :] <= 1e-11 * scale, axis=1)
    if not np.any(ok):  # pragma: no cover
        raise RuntimeError("phase-1 enumeration found no feasible vertex")
    s_vals = np.where(ok, Z[:, rank], np.inf)
    # lowest-index vertex among those within rounding of the minimum
    s_min = s_vals.min()
    best_z = Z[int(np.flatnonzero(s_vals <= s_min + 1e-13 * (1.0 + abs(s_min)))[0])]
    w = basis @ best_z[:rank]
    viol = float(np.max(A @ w - b, initial=0.0))
    return w, max(viol, 0.0)


def check_feasible(problem: QpProblem) -> FeasibilityReport:
    """Decide whether {w : A w <= b} is nonempty.

    When feasible a witness with ``A w <= b + FEAS_TOL`` is returned; otherwise
    ``slack`` holds the minimized worst violation, which certifies emptiness.
    """
    A, b = problem.A, problem.b
    keep, const_violation = _split_degenerate(A, b)
    w, s = _phase1(A[keep], b[keep])
    if A.shape[0]:
        w_viol = float(np.max(A[keep] @ w - b[keep], initial=0.0))
        s = max(s, w_viol)
    slack = max(const_violation, s)
    if slack > FEAS_TOL:
        return FeasibilityReport(False, slack, None)
    return FeasibilityReport(True, slack, w)


def _eqp_step(H, A_w, g, at_minimizer=False):
    """Step p and multipliers for min 0.5 p'Hp + g'p s.t. A_w p = 0.

    Null-space form: p = Z y with Z spanning ker(A_w), so A_w p vanishes to
    rounding and a full working set gives p = 0 exactly.
    """
    n = g.shape[0]
    k = A_w.shape[0]
    if k == 0:
        p = np.zeros(n) if at_minimizer else -scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), g)
        return p, np.zeros(0)
    Q, R = np.linalg.qr(A_w.T, mode="complete")
    Y, Z = Q[:, :k], Q[:, k:]
    if Z.shape[1] == 0 or at_minimizer:
        p = np.zeros(n)
    else:
        reduced = scipy.linalg.cho_factor(Z.T @ H @ Z)
        p = -Z @ scipy.linalg.cho_solve(reduced, Z.T @ g)
    lam = scipy.linalg.solve_triangular(R[:k, :k], -(Y.T @ (g + H @ p)))
    return p, lam


def _initial_working_set(A, residual, tol):
    working = []
    for i in np.flatnonzero(residual >= -tol):
        trial = A[working + [int(i)]]
        if np.linalg.matrix_rank(trial) == len(working) + 1:
            working.append(int(i))
    return working


def solve(problem: QpProblem) -> QpResult:
    """Solve the QP, or certify it infeasible.

    Ties (equally negative multipliers, equal blocking step lengths) go to the
    lowest row index.
    """
    H, F, A, b = problem.H, problem.F, problem.A, problem.b
    m = problem.n_rows
    report = check_feasible(problem)
    if not report.feasible:
        return QpResult(QpStatus.INFEASIBLE, None, None, (), math.nan, report.slack)

    keep, _ = _split_degenerate(A, b)
    Ak, bk = A[keep], b[keep]
    w = report.witness.astype(float).copy()
    row_norm = np.abs(Ak).sum(axis=1)
    act_tol = 1e-9 * (1.0 + np.abs(bk))
    working = _initial_working_set(Ak, Ak @ w - bk, act_tol)

    lam_w = np.zeros(0)
    at_minimizer = False
    for _ in range(_MAX_ITER):
        g = H @ w + F
        A_w = Ak[working]
        p, lam_w = _eqp_step(H, A_w, g, at_minimizer)
        at_minimizer = False
        if not np.any(p):
            if not working:
                break
            lam_scale = 1e-12 * (1.0 + np.max(np.abs(lam_w)))
            j = min(range(len(working)), key=lambda k: (lam_w[k], working[k]))
            if lam_w[j] >= -lam_scale:
                break
            del working[j]
            continue
        alpha = 1.0
        blocking = None
        Ap = Ak @ p
        for i in range(len(bk)):
            if i in working or Ap[i] <= 1e-14 * row_norm[i] * np.max(np.abs(p)):
                continue
            step = max((bk[i] - Ak[i] @ w) / Ap[i], 0.0)
            if step < alpha:
                alpha = step
                blocking = i
        w = w + alpha * p
        if blocking is not None:
            working.append(blocking)
        else:
            at_minimizer = True
    else:  # pragma: no cover - cycling guard
        raise RuntimeError("active-set iteration limit reached")

    multipliers = np.zeros(m)
    for j, i in enumerate(working):
        multipliers[keep[i]] = max(float(lam_w[j]), 0.0)
    active = tuple(sorted(int(keep[i]) for i in working))
    return QpResult(QpStatus.OPTIMAL, w, multipliers, active,
                    problem.objective(w), report.slack)


def kkt_residuals(problem: QpProblem, result: QpResult) -> KktResiduals:
    """Primal, stationarity, complementarity and dual-sign residuals."""
    if not result.optimal:
        raise ValueError("KKT residuals need an optimal result")
    w, lam = result.w_opt, result.multipliers
    slack = problem.A @ w - problem.b
    primal = float(np.max(slack, initial=0.0))
    stat = float(np.max(np.abs(problem.H @ w + problem.F + problem.A.T @ lam)))
    compl = float(np.max(np.abs(lam * slack), initial=0.0))
    dual = float(np.max(-lam, initial=0.0))
    return KktResiduals(primal, stat, compl, dual)
