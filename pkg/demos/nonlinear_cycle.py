"""A nonlinear feedback loop breaks the conditional independence that its
linear twin keeps, as measured by a permutation-calibrated CMI estimate.

Run with ``python demos/nonlinear_cycle.py``; it draws 10^6 samples per model.
"""

from __future__ import annotations

from hedg import cmi_estimate, nonlinear_example


def main(seed: int = 1, permutations: int = 19) -> None:
    for linear in (False, True):
        s = nonlinear_example(seed, linear=linear)
        r = cmi_estimate(s, "X", "Z", ["Y", "W"], permutations=permutations, seed=seed)
        label = "linear" if linear else "nonlinear"
        q = r.null_quantiles
        print(f"{label:>9}: CMI(X;Z|Y,W) = {r.statistic:.3g}  null q95 = {q[0.95]:.3g}  q99 = {q[0.99]:.3g}")


if __name__ == "__main__":
    main()
