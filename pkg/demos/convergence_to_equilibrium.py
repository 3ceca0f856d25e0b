"""How fast iterates of M_L**2 forget their starting distribution.

M_L flips rank parity, so the parity-preserving object to iterate is
its square.  Any start converges to a mixture of the two equilibrium
densities weighted only by the start's parity masses; everything else
about the start is forgotten, and geometrically fast.  This script
tracks the l1 distance to the predicted mixture for three starts.
"""

import numpy as np

import selmerlab as sl


def main():
    params = sl.LagrangianParams(2, 64)
    M2 = sl.power(sl.build_lagrangian(params), 2)

    starts = {
        "point mass at rank 0": sl.make_density([1.0], 64),
        "point mass at rank 5": sl.make_density([0, 0, 0, 0, 0, 1.0], 64),
        "uniform on ranks 0..7": sl.make_density([0.125] * 8, 64),
    }

    for label, f in starts.items():
        target = sl.predicted_limit(f, "even", params)
        print(f"start: {label} (odd-rank mass {sl.rho_parity(f):.3f})")
        current = f
        previous = None
        for step in range(0, 13):
            d = sl.l1_distance(current, target)
            ratio = "" if previous in (None, 0.0) else f"   x{d / previous:.3f}"
            if step % 2 == 0:
                print(f"   after {step:2d} double steps: distance {d:.3e}{ratio}")
            previous = d
            current = sl.apply(M2, current)
        print()

    # iterate_limit packages the same loop with a stopping rule
    f = sl.make_density([1.0], 64)
    limit, steps = sl.iterate_limit(M2, f)
    print(f"iterate_limit stops after {steps} double steps;")
    print(
        "distance to the predicted mixture:",
        f"{sl.l1_distance(limit, sl.predicted_limit(f, 'even', params)):.2e}",
    )


if __name__ == "__main__":
    main()
