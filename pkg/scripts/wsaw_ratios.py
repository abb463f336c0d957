"""Window ratios for the complete-graph SAW and the weakly self-avoiding walk.

Prints the ratio of the measured susceptibility to the n = 0 profile
prediction over a range of N and s, showing the approach to one.

    python3 scripts/wsaw_ratios.py --g 1.0
"""

import argparse

from hierfss import saw


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--g", type=float, default=1.0)
    parser.add_argument("--s", type=float, nargs="+", default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    parser.add_argument("--N", type=int, nargs="+", default=[10**3, 10**4, 10**5])
    args = parser.parse_args()

    print("complete-graph SAW")
    print(f"{'N':>8} " + " ".join(f"s={s:+.1f}".rjust(10) for s in args.s))
    for N in args.N:
        print(f"{N:>8} " + " ".join(f"{saw.saw_window_ratio(N, s):10.6f}" for s in args.s))

    constants = saw.wsaw_window_constants(args.g)
    print(f"\nweakly self-avoiding walk, g={args.g}")
    print(f"nu_c = {constants.nu_c:.13f}  V''(0) = {constants.curvature:.10f}  mixed = {constants.mixed:.10f}")
    print(f"lambda1 = {constants.lambda1:.10f}  lambda2 = {constants.lambda2:.10f}")
    print(f"{'N':>8} " + " ".join(f"s={s:+.1f}".rjust(10) for s in args.s))
    for N in args.N:
        ratios = [saw.wsaw_window_ratio(N, s, args.g, constants=constants)["ratio"] for s in args.s]
        print(f"{N:>8} " + " ".join(f"{r:10.6f}" for r in ratios), flush=True)


if __name__ == "__main__":
    main()
