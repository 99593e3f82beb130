"""Phi-constrained controller versus the minimum-braking-distance barrier.

Writes both traces as CSV (t, v, z, u) to --out and prints when the baseline fails.
"""

import argparse
from pathlib import Path

import numpy as np

from feascbf.acc import AccScenario, Baseline, simulate
from feascbf.sim import SimConfig


def dump(trace, path):
    rows = np.column_stack([trace.times(), trace.states(), [r.u[0] for r in trace.records]])
    np.savetxt(path, rows, delimiter=",", header="t,v,z,u", comments="")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p1", type=float, default=0.5)
    ap.add_argument("--p2", type=float, default=1.0)
    ap.add_argument("--out", type=Path, default=Path("out/braking"))
    args = ap.parse_args()

    cfg = SimConfig((6.0, 100.0), record_timing=False)
    phi = simulate(AccScenario(p1=args.p1, p2=args.p2), cfg)
    braking = simulate(
        AccScenario(p1=args.p1, p2=args.p2, baseline=Baseline.MIN_BRAKING_DISTANCE), cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    dump(phi, args.out / "phi.csv")
    dump(braking, args.out / "braking.csv")
    print(f"phi:     {phi.status.value}, max v {phi.states()[:, 0].max():.3f}")
    print(f"braking: {braking.status.value}"
          + (f" at t={braking.infeasible_t:.1f}s, v={braking.records[-1].state[0]:.3f}"
             if braking.infeasible_t is not None else ""))


if __name__ == "__main__":
    main()
