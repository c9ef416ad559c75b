"""Vanishing regularization recovers the maximally robust classifier.

Minimizing loss + lam * ||w||_l1 with proximal gradient steps and then
sending lam -> 0 along a warm-started ladder steers the iterate toward
the minimum-l1-norm separator, which is exactly the max-linf-margin
classifier. The table below tracks the linf margin along the ladder: it
climbs monotonically (up to small optimization noise) and lands within a
few percent of the certified optimum at the weakest penalty.
"""

import numpy as np

from maxrobust.data import generate_gaussian_separable
from maxrobust.models import margin
from maxrobust.norms import NormKind
from maxrobust.optimizers import TrainConfig, regularization_path
from maxrobust.oracle import min_norm_solve


def main():
    ds = generate_gaussian_separable(d=60, n=8, seed=7, augment=False)
    attack = NormKind.LINF
    oracle = min_norm_solve(ds, attack, tol=1e-6).max_margin
    print(f"d={ds.d}, n={ds.n}; penalty l1, attack linf "
          f"(dual pair), certified optimal margin {oracle:.5f}\n")

    lambdas = tuple(10.0 ** -k for k in range(1, 7))
    cfg = TrainConfig(steps=4000, step_size=0.5)
    path = regularization_path(ds, NormKind.L1, lambdas, cfg)

    print(f"  {'lambda':>10} {'linf margin':>12} {'share of optimum':>18}")
    for lam, trace in path:
        m = trace.final_margin(attack)
        print(f"  {lam:>10.0e} {m:>12.5f} {m / oracle:>17.1%}")

    final = path[-1][1].final_margin(attack)
    print(f"\nweakest-penalty margin reaches {final / oracle:.1%} of the optimum;")
    print("the penalty's only lasting role is selecting which separator wins.")


if __name__ == "__main__":
    main()
