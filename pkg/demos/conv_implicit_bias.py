"""Architecture as a robustness choice: conv nets favor spectral margins.

A depth-2 linear circular-convolution network computes the same function
class as a dense linear model, so any difference after training comes
from parametrization alone. Plain gradient descent through the conv
layers implicitly minimizes the fourier-l1 norm of the effective weight,
which maximizes the fourier-linf margin; dense gd on identical data
minimizes the l2 norm instead and leaves spectral robustness on the
table. Explicit fourier-l1 proximal training reaches the same optimum
from the dense parametrization, confirming the mechanism.
"""

import numpy as np

from maxrobust.data import generate_gaussian_separable
from maxrobust.fourier import dft
from maxrobust.models import LinearModel, effective_weight, margin, weight_vector
from maxrobust.norms import NormKind
from maxrobust.optimizers import TrainConfig, train_conv_gd, train_proximal, train_steepest
from maxrobust.oracle import min_norm_solve


def main():
    ds = generate_gaussian_separable(d=32, n=5, seed=4, augment=False)
    attack = NormKind.FOURIER_LINF
    oracle = min_norm_solve(ds, attack, tol=1e-6).max_margin
    print(f"d={ds.d}, n={ds.n}; fourier-linf attacks, certified optimal "
          f"margin {oracle:.5f}\n")

    conv = train_conv_gd(ds, TrainConfig(norm_kind=NormKind.L2, steps=8000,
                                         step_size=0.5), depth=2)
    dense = train_steepest(ds, TrainConfig(norm_kind=NormKind.L2, steps=8000,
                                           step_size=0.5))
    lams = tuple(10.0 ** -k for k in range(1, 8))
    prox_model = None
    w0 = None
    for lam in lams:
        t = train_proximal(ds, NormKind.FOURIER_L1,
                           lam, TrainConfig(steps=3000, step_size=0.5), w0=w0)
        prox_model = t.final_model
        w0 = prox_model.w

    rows = (
        ("conv gd, depth 2", effective_weight(conv.final_model)),
        ("dense gd", weight_vector(dense.final_model)),
        ("dense prox fourier-l1", weight_vector(prox_model)),
    )
    print(f"  {'training':<24} {'fourier-linf margin':>20} {'share':>8}")
    for label, w in rows:
        m = margin(LinearModel(w=w), ds, attack)
        print(f"  {label:<24} {m:>20.5f} {m / oracle:>7.1%}")

    w_conv = effective_weight(conv.final_model)
    w_dense = weight_vector(dense.final_model)
    print("\nspectral sparsity of the learned weights (|F(w)|, normalized):")
    for label, w in (("conv", w_conv), ("dense", w_dense)):
        s = np.abs(dft(w).coeffs)
        s = s / s.max()
        big = int((s > 0.2).sum())
        print(f"  {label:<6} active bins (>20% of peak): {big:>3} of {ds.d}")
    print("\nthe conv net concentrates its spectrum; that concentration is")
    print("the fourier-l1 bias that buys the larger spectral margin.")


if __name__ == "__main__":
    main()
