"""End-to-end acceptance checks for the ACC study.

Each test prints one ``PASS``/``FAIL`` line with the measured quantity next to
the pinned tolerance, so ``pytest -v -s tests/test_acceptance.py`` doubles as
a report.
"""

import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from feascbf.acc import AccScenario, Baseline, gap_barrier, simulate
from feascbf.cli import main
from feascbf.constraints import hocbf_row
from feascbf.dynamics import AccParams, resistance_force
from feascbf.feasibility import acc_speed_bound, acc_synthesize_phi
from feascbf.qp import QpProblem, kkt_residuals, solve
from feascbf.sim import SimConfig, TraceStatus
from tests.oracles import grid_qp, planted_qp

X0 = (6.0, 100.0)
CONFIG = Path(__file__).resolve().parents[1] / "configs" / "table1.json"
P1S = (0.5, 1.0, 2.0)
P2S = (1.0, 2.0, 3.0)
PARAMS = AccParams()

# every Optimal QP solved by the scenario runs below, for the KKT sweep
_SOLVED: list[tuple[QpProblem, object]] = []


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        return ok

    return emit


def _run(**kw):
    trace = simulate(AccScenario(**kw), SimConfig(X0, record_timing=False))
    _SOLVED.extend((r.problem, r.result) for r in trace.records if r.result.optimal)
    return trace


def test_c1_infeasibility_onset(report):
    start = time.perf_counter()
    trace = _run(p1=1.0, p2=2.0, feasibility_on=False)
    elapsed = time.perf_counter() - start
    bound = acc_speed_bound(1.0, 2.0, PARAMS)
    v_inf = trace.records[-1].state[0]
    ok = (trace.status is TraceStatus.INFEASIBLE and abs(v_inf - bound) <= 0.3 and elapsed < 1.0)
    report(1, ok, f"status={trace.status.value} t={trace.infeasible_t} v={v_inf:.4f} "
                  f"target={bound:.3f}+-0.3 runtime={elapsed:.2f}s (<1s)")
    assert trace.status is TraceStatus.INFEASIBLE
    assert elapsed < 1.0
    assert abs(v_inf - bound) <= 0.3


@pytest.fixture(scope="module")
def sweep_on():
    start = time.perf_counter()
    traces = {(p1, p2): _run(p1=p1, p2=p2) for p1 in P1S for p2 in P2S}
    return traces, time.perf_counter() - start


def test_c2_guaranteed_feasibility(report, sweep_on):
    traces, elapsed = sweep_on
    statuses = [t.status for t in traces.values()]
    min_b = min(t.column("b").min() for t in traces.values())
    min_psi1 = min(t.column("psi1").min() for t in traces.values())
    ok = (all(s is TraceStatus.COMPLETED for s in statuses)
          and min_b >= -1e-3 and min_psi1 >= -1e-3 and elapsed < 10.0)
    report(2, ok, f"completed={sum(s is TraceStatus.COMPLETED for s in statuses)}/9 "
                  f"min_b={min_b:.3e} min_psi1={min_psi1:.3e} (>=-1e-3) runtime={elapsed:.2f}s (<10s)")
    assert ok


def test_c3_speed_bound(report, sweep_on):
    traces, _ = sweep_on
    margins = {}
    for (p1, p2), t in traces.items():
        v = np.append(t.states()[:, 0], t.final_state[0])
        margins[(p1, p2)] = acc_speed_bound(p1, p2, PARAMS) + 1e-3 - v.max()
    worst = min(margins, key=margins.get)
    ok = all(m >= 0 for m in margins.values())
    report(3, ok, f"worst margin {margins[worst]:.3e} at p1,p2={worst} (>=0)")
    assert ok


def test_c4_desired_speed_reached(report):
    trace = _run(p1=0.5, p2=1.0)
    v = np.append(trace.states()[:, 0], trace.final_state[0])
    t = np.append(trace.times(), 30.0)
    k = int(np.argmin(np.abs(v - 24.0)))
    ok = trace.status is TraceStatus.COMPLETED and abs(v[k] - 24.0) <= 0.1 and t[k] <= 30.0
    report(4, ok, f"closest |v-24|={abs(v[k] - 24.0):.4f} at t={t[k]:.1f}s (<=0.1 by T=30s); "
                  f"v(T)={v[-1]:.3f}")
    assert ok


def test_c5_baseline_failure(report):
    phi = _run(p1=0.5, p2=1.0)
    braking = _run(p1=0.5, p2=1.0, baseline=Baseline.MIN_BRAKING_DISTANCE)
    ok = (phi.status is TraceStatus.COMPLETED and braking.status is TraceStatus.INFEASIBLE
          and braking.infeasible_t < 30.0)
    report(5, ok, f"phi={phi.status.value} braking={braking.status.value} at t={braking.infeasible_t}")
    assert ok


def test_c6_qp_oracle(report):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    status_miss = gap_miss = 0
    worst = 0.0
    for _ in range(1000):
        pq = planted_qp(rng)
        prob = QpProblem(pq.H, pq.F, pq.A, pq.b)
        h = 1e-3 if prob.n_vars == 1 else 1e-2
        grid = grid_qp(pq.H, pq.F, pq.A, pq.b, pq.center, pq.radius, h)
        res = solve(prob)
        if res.optimal != grid.feasible:
            status_miss += 1
            continue
        if res.optimal:
            gap = abs(res.objective - grid.objective)
            allowed = 2 * h * grid.gradient_inf + 1e-12
            worst = max(worst, gap / allowed)
            gap_miss += gap > allowed
    elapsed = time.perf_counter() - start
    ok = status_miss == 0 and gap_miss == 0 and elapsed < 30.0
    report(6, ok, f"status mismatches={status_miss} gap violations={gap_miss} "
                  f"worst gap/bound={worst:.3f} runtime={elapsed:.2f}s (<30s)")
    assert ok


def test_c7_kkt(report, sweep_on):
    # OFF cells of the same grid add the solves that end near the infeasibility boundary
    for p1 in P1S:
        for p2 in P2S:
            _run(p1=p1, p2=p2, feasibility_on=False)
    bad = 0
    worst = {"primal": 0.0, "stationarity": 0.0, "complementarity": 0.0}
    for prob, res in _SOLVED:
        k = kkt_residuals(prob, res)
        bad += not k.ok
        for name in worst:
            worst[name] = max(worst[name], getattr(k, name))
    detail = " ".join(f"{n}={v:.1e}" for n, v in worst.items())
    report(7, bad == 0, f"{len(_SOLVED)} optimal solves, violations={bad}; worst {detail}")
    assert bad == 0


def test_c8_reformulation_identity(report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10_000):
        v, z = rng.uniform(0.0, 30.0), rng.uniform(0.0, 200.0)
        p1, p2 = rng.uniform(0.1, 5.0, 2)
        x = np.array([v, z])
        beta = hocbf_row(gap_barrier(AccScenario(p1=p1, p2=p2)), x).beta
        phi = acc_synthesize_phi(p1, p2, PARAMS).phi(x)
        # CBF on the simplified b_hF with slope k, solved for u/M
        k = p1 + p2
        gam = p1 * p2 / (p1 + p2)
        side = (resistance_force(v, PARAMS) / PARAMS.mass + (gam + k) * (PARAMS.v_p - v)
                + k * gam * (z - PARAMS.l0) + k * PARAMS.c_d * PARAMS.grav / (p1 + p2))
        worst = max(worst, abs(beta + phi - side) / max(1.0, abs(beta)))
    ok = worst <= 1e-12
    report(8, ok, f"worst scaled residual {worst:.2e} (<=1e-12) over 10^4 states")
    assert ok


def test_c9_determinism(report, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["sweep", "--config", str(CONFIG), "--p1", "0.5,1,2",
                   "--p2", "1,2,3", "--out", str(d)]) for d in dirs]
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    ok = codes == [0, 0] and not mismatch and not errors and len(match) == 19
    report(9, ok, f"{len(match)}/{len(names)} CSV files bit-identical")
    assert ok
