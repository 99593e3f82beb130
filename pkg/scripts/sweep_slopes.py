"""Sweep the class-K slopes with the feasibility row on and off and print a status table."""

import argparse
import itertools

import numpy as np

from feascbf.acc import AccScenario, simulate
from feascbf.feasibility import acc_speed_bound
from feascbf.sim import SimConfig, TraceStatus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p1", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--p2", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--T", type=float, default=30.0)
    args = ap.parse_args()

    cfg = SimConfig((6.0, 100.0), T=args.T, record_timing=False)
    params = AccScenario().params
    print(f"{'p1':>4} {'p2':>4} {'cap':>7} | {'on':>10} {'max v':>7} {'min b':>9} | {'off':>10}")
    for p1, p2 in itertools.product(args.p1, args.p2):
        on = simulate(AccScenario(p1=p1, p2=p2), cfg)
        off = simulate(AccScenario(p1=p1, p2=p2, feasibility_on=False), cfg)
        off_txt = "ok" if off.status is TraceStatus.COMPLETED else f"inf@{off.infeasible_t:.1f}"
        on_txt = "ok" if on.status is TraceStatus.COMPLETED else f"inf@{on.infeasible_t:.1f}"
        print(f"{p1:4g} {p2:4g} {acc_speed_bound(p1, p2, params):7.3f} | "
              f"{on_txt:>10} {np.max(on.states()[:, 0]):7.3f} {on.column('b').min():9.2e} | "
              f"{off_txt:>10}")


if __name__ == "__main__":
    main()
