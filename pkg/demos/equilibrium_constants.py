"""The equilibrium rank constants and their parity normalization.

The stationary weights c_n fall off like p**(-n(n+1)/2), so almost all
mass sits on the first few ranks.  Split by parity they form two
probability densities E+ (even ranks) and E- (odd ranks); this script
prints the head of the table for a few primes and checks that each
parity class really does sum to 1 on the truncated window.
"""

import selmerlab as sl


def main():
    for p in (2, 3, 5):
        params = sl.LagrangianParams(p, 64)
        pair = sl.equilibrium(params)
        c = pair.c
        print(f"p = {p}")
        print("   n          c_n       E+ entry      E- entry")
        for n in range(6):
            print(
                f"   {n}  {c[n]:.9f}  {pair.e_plus.values[n]:.9f}  "
                f"{pair.e_minus.values[n]:.9f}"
            )
        even = pair.e_plus.values.sum()
        odd = pair.e_minus.values.sum()
        print(f"   even-rank mass {even:.15f}, odd-rank mass {odd:.15f}")
        print(f"   rank 0 is the likeliest outcome with mass {c[0]:.6f}\n")

    # The two densities are exchanged by one application of the
    # operator: E+ . M_L = E- and back.
    params = sl.LagrangianParams(2, 64)
    M = sl.build_lagrangian(params)
    pair = sl.equilibrium(params)
    fwd = sl.l1_distance(sl.apply(M, pair.e_plus), pair.e_minus)
    back = sl.l1_distance(sl.apply(M, pair.e_minus), pair.e_plus)
    print(f"fixed-point check at p = 2: |E+ M - E-| = {fwd:.2e}, |E- M - E+| = {back:.2e}")


if __name__ == "__main__":
    main()
