"""Plane-curve picture of the error-cancellation constraints.

For k = 5 pulses at several rotation angles, builds the hierarchy of
iterated-integral curves, reports their closure defects and cusp
angles, and writes the curves for plotting to ./demo_out/curves_*.csv.
"""

import os

import numpy as np

import smoothpulse as sp
from smoothpulse.curves import closure_defects, curves_to_csv, cusp_tangent_jump, r_sequence

OUT = os.path.join(os.path.dirname(__file__), "demo_out")


def main():
    os.makedirs(OUT, exist_ok=True)
    thetas = [np.pi / 2, np.pi, 3 * np.pi / 2]
    sols = sp.solve_theta_family(5, thetas)
    print(f"{'theta/pi':>8} {'max closure defect':>20} {'cusp angle/pi':>14}")
    for th in thetas:
        poly = sols[float(th)].coeffs
        h = r_sequence(poly, 5, n_s=2049)
        d = closure_defects(h)
        jump = cusp_tangent_jump(h, poly)
        print(f"{th / np.pi:>8.2f} {d.max():>20.2e} {jump / np.pi:>14.3f}")
        curves_to_csv(h, os.path.join(OUT, f"curves_theta_{th / np.pi:.2f}pi.csv"))
    print(f"\ncurves written to {OUT}/curves_*.csv")


if __name__ == "__main__":
    main()
