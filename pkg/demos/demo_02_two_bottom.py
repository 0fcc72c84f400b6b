"""
Reconciling the smallest hierarchy
==================================

With one upper series U = B1 + B2 the Bayesian update has a closed form. The
reconciled bottoms move by a share of the incoherence ``u_hat - (b1 + b2)``.
LG ignores the covariance between the bottoms and the upper forecast noise,
pMinT uses it.
"""

import numpy as np

from probrecon import (
    CovarianceModel,
    HierarchySpec,
    Method,
    build_summing_matrix,
    gain_matrix,
    reconcile,
    two_bottom_gains,
)

summing = build_summing_matrix(HierarchySpec(("B1", "B2"), (("U", ("B1", "B2")),)))

# %%
# Unit variances and no correlation: each bottom absorbs a third of the gap.
cov = CovarianceModel(np.eye(2), [[1.0]], np.zeros((2, 1)))
print("G =", gain_matrix(cov, summing.A, Method.PMINT).ravel())
dist = reconcile(Method.PMINT, [3.0, 1.0, 1.0], cov, summing)
print("reconciled mean", dist.full_mean, "\nbottom covariance\n", dist.bottom_cov)

# %%
# A perfect upper forecast (zero noise variance) forces the bottoms to sum to it.
exact = CovarianceModel(np.eye(2), [[0.0]], np.zeros((2, 1)))
dist = reconcile(Method.LG, [3.0, 1.0, 1.0], exact, summing)
print("sum of reconciled bottoms:", dist.bottom_mean.sum())

# %%
# Cross-covariances between each bottom and the upper residual change the
# weights. ``two_bottom_gains`` evaluates the scalar formulas directly.
s1, s2, s12, su, su1, su2 = 2.0, 3.0, 0.5, 1.0, 0.2, -0.3
g1, g2, g1s, g2s = two_bottom_gains(s1, s2, s12, su, su1, su2)
print(f"LG gains    {g1:.4f} {g2:.4f}")
print(f"pMinT gains {g1s:.4f} {g2s:.4f}")

# %%
# The same numbers come out of the matrix path.
cov = CovarianceModel([[s1, s12], [s12, s2]], [[su]], [[-su1], [-su2]])
print(gain_matrix(cov, summing.A, Method.LG).ravel(), gain_matrix(cov, summing.A, Method.PMINT).ravel())

# %%
# The mean does not depend on k_h, the variance scales with it.
one = reconcile(Method.PMINT, [3.0, 1.0, 1.0], cov, summing, h=3, kh_mode="one")
three = reconcile(Method.PMINT, [3.0, 1.0, 1.0], cov, summing, h=3, kh_mode="h")
print(one.bottom_mean, three.bottom_mean)
print(np.diag(three.bottom_cov) / np.diag(one.bottom_cov))
