"""Approach of eps * chi(eps) to the amplitude A_d in the massive regime.

    python3 scripts/massive_amplitude.py --g 0.05
"""

import argparse

from hierfss import pertflow


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--d", type=int, default=5)
    parser.add_argument("--g", type=float, default=0.05)
    parser.add_argument("--kmax", type=int, default=16)
    args = parser.parse_args()

    params = pertflow.FlowParams(d=args.d, n=1, L=2, g0=args.g)
    amp = pertflow.amplitude(params)
    print(f"A_d = {amp:.10f}")
    print(f"{'k':>3} {'eps*chi':>14} {'rel gap':>10}")
    for k in range(4, args.kmax + 1):
        eps = 2.0**-k
        value = eps * pertflow.massive_susceptibility(eps, params)
        print(f"{k:>3} {value:14.10f} {abs(value / amp - 1):10.2e}")


if __name__ == "__main__":
    main()
