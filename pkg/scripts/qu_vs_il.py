"""Midband insertion loss of design 1 against unloaded Q, and the Q_U that
reproduces a given loss (default 0.16 dB). Informative only."""

import argparse

import numpy as np
from scipy.optimize import brentq

from xcoupler.designs import PLAN_1, design_matrix
from xcoupler.response import LossSpec, midband_insertion_loss, sparams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--il", type=float, default=0.16, help="target midband loss, dB")
    args = ap.parse_args()
    m = design_matrix(1)
    f = np.linspace(2.0e9, 5.0e9, 601)

    def il(qu, mode="nearest"):
        return midband_insertion_loss(sparams(m, PLAN_1, f, LossSpec(qu)), PLAN_1, mode)

    print("Q_U      IL |S21| (dB)   IL dissipated (dB)")
    for qu in (50, 100, 150, 300, 640, 880, 1180, 2000, 5000, 1e4):
        print(f"{qu:<8g} {il(qu):<15.4f} {il(qu, 'dissipative'):.4f}")
    print(f"lossless |S21| at f0: {midband_insertion_loss(sparams(m, PLAN_1, f), PLAN_1):.4f} dB (mismatch only)")
    for mode in ("nearest", "dissipative"):
        q = brentq(lambda x: il(x, mode) - args.il, 20, 1e5, xtol=1e-3)
        print(f"Q_U giving {args.il} dB ({mode}): {q:.0f}")


if __name__ == "__main__":
    main()
