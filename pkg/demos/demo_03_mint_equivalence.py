"""
pMinT point forecasts are MinT point forecasts
==============================================

MinT reconciles with ``y_tilde = S P y_hat`` where
``P = (S' W^-1 S)^-1 S' W^-1``. The Bayesian update can be written in the
same form with ``P = [G | I - G A]``. When the gain is built from the same
covariance ``W`` (partitioned into bottom, upper and cross blocks) the two
projections coincide.
"""

import numpy as np

from probrecon import (
    Method,
    build_summing_matrix,
    estimate_covariance,
    gain_matrix,
    mint_p_matrix,
    pmint_p_matrix,
)
from probrecon.synth import synthetic_hierarchy

rng = np.random.default_rng(0)
summing = build_summing_matrix(synthetic_hierarchy())

# %%
# Residuals with an arbitrary correlation structure and a shrinkage estimate.
L = rng.normal(size=(summing.m, summing.m))
residuals = rng.normal(size=(200, summing.m)) @ L.T
cov = estimate_covariance(residuals, summing.n)
print(f"shrinkage intensity {cov.shrink_lambda:.3f}")

P_mint = mint_p_matrix(cov.W1, summing)
P_pmint = pmint_p_matrix(gain_matrix(cov, summing.A, Method.PMINT), summing.A)
print("max |P_MinT - P_pMinT| =", np.max(np.abs(P_mint - P_pmint)))

# %%
# LG drops the cross-covariance and therefore gives a different projection.
P_lg = pmint_p_matrix(gain_matrix(cov, summing.A, Method.LG), summing.A)
print("max |P_MinT - P_LG|    =", np.max(np.abs(P_mint - P_lg)))

# %%
# Any valid projection reproduces coherent inputs: P S = I.
print(np.allclose(P_pmint @ summing.S, np.eye(summing.n)))
