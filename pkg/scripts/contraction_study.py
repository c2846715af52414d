"""Picard contraction constant r(T) as a function of T and data size.

For small data r(T) grows linearly in T (r(T/2)/r(T) close to 1/2);
for large data the iteration stops contracting and T* drops.

    python scripts/contraction_study.py [--amplitudes 3 6 12]
"""

import argparse

import numpy as np

from dirac_hartree.dynamics import PicardConfig, TorusGeometry, contraction_probe
from dirac_hartree.fields import Grid2D, MixedState, gaussian_packet


def packets(amplitude, N=32, seed=3):
    g = Grid2D(np.pi, N)
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(2):
        c = rng.uniform(-1, 1, 2)
        sp = rng.normal(size=2) + 1j * rng.normal(size=2)
        states.append(gaussian_packet(g, c, 0.6, (1, 0), sp / np.linalg.norm(sp), amplitude))
    return MixedState(tuple(states), [0.6, 0.4]), TorusGeometry(g)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[3.0, 6.0, 12.0])
    ap.add_argument("--T", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.4, 0.8])
    ap.add_argument("--substeps", type=int, default=100)
    args = ap.parse_args()
    cfg = PicardConfig(max_iters=40, tolerance=1e-11, quadrature_substeps=args.substeps)
    for amp in args.amplitudes:
        state, geo = packets(amp)
        reports, t_star = contraction_probe(state, args.T, cfg, geo)
        cells = []
        for rep in reports:
            r = rep.contraction_constant(1e-12 * rep.distances[0])
            cells.append(f"{rep.T:g}:{r:.3f}{'' if rep.converged else '(div)'}")
        print(f"amplitude {amp:5.1f}  T* = {t_star}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
