"""Run the default ACC scenario with the feasibility row off and report where the QP breaks.

Prints the speed and b_hF at the first infeasible step next to the phi speed
cap, and the same quantities with a finer sampling interval.
"""

import argparse

from feascbf.acc import AccScenario, simulate
from feascbf.feasibility import acc_speed_bound
from feascbf.sim import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p1", type=float, default=1.0)
    ap.add_argument("--p2", type=float, default=2.0)
    ap.add_argument("--dt", type=float, nargs="+", default=[0.1, 0.05, 0.01])
    args = ap.parse_args()

    sc = AccScenario(p1=args.p1, p2=args.p2, feasibility_on=False)
    cap = acc_speed_bound(args.p1, args.p2, sc.params)
    print(f"phi speed cap: {cap:.3f} m/s")
    for dt in args.dt:
        trace = simulate(sc, SimConfig((6.0, 100.0), dt=dt, record_timing=False))
        if trace.infeasible_t is None:
            print(f"dt={dt}: completed, max v {trace.states()[:, 0].max():.3f}")
            continue
        last = trace.records[-1]
        crossed = next((r.t for r in trace.records if r.state[0] > cap), None)
        print(f"dt={dt}: infeasible at t={last.t:.2f}s, v={last.state[0]:.4f}, "
              f"gap={last.state[1]:.3f}, b_hF={last.values['b_hF']:.4f}, "
              f"speed cap first exceeded at t={crossed}")


if __name__ == "__main__":
    main()
