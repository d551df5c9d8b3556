"""Finite-size drift of the Tavis-Cummings ground-state curvature peak.

Prints the coupling of max |E0''| for growing N = M, showing how slowly it
approaches the classical critical coupling.
"""
import argparse

import numpy as np

from esqpt.models import TavisCummingsBlock, split_lambda
from esqpt.spectral import eigenvalues


def curvature_peak(N, omega=2.0, omega0=1.0, lams=np.arange(0.3, 0.7001, 0.002)):
    H0, V = split_lambda(TavisCummingsBlock(N, omega, omega0, 0.5, N))
    ground = np.array([eigenvalues(H0 + lam * V)[0] for lam in lams])
    curvature = np.gradient(np.gradient(ground, lams), lams)
    return lams[int(np.argmax(np.abs(curvature[3:-3]))) + 3]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("sizes", nargs="*", type=int, default=[60, 120, 240])
    for N in parser.parse_args().sizes:
        print(f"N = M = {N:4d}: curvature peak at lambda = {curvature_peak(N):.3f}")


if __name__ == "__main__":
    main()
