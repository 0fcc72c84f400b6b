"""
Scoring a joint forecast with the energy score
==============================================

The energy score rewards samples close to the observation and penalises
samples close to each other less than proportionally, so it is minimised in
expectation by the true distribution.
"""

import numpy as np

from probrecon import energy_score, sample_gaussian

# %%
# Two samples straddling the observation.
print(energy_score(np.array([[0.0], [2.0]]), np.array([1.0])))  # 0.5

# %%
# Sharp and correct beats wide, wide beats sharp and wrong.
truth = np.array([0.0, 0.0])
rng = np.random.default_rng(1)
obs = rng.multivariate_normal(truth, np.eye(2), size=300)
for label, mean, scale in (("calibrated", truth, 1.0), ("too wide", truth, 9.0),
                           ("biased", truth + 3, 1.0)):
    scores = [
        energy_score(sample_gaussian(mean, scale * np.eye(2), 500, seed=i), y)
        for i, y in enumerate(obs)
    ]
    print(f"{label:>10}: mean ES {np.mean(scores):.3f}")

# %%
# Sampling a rank-deficient hierarchy covariance keeps every draw coherent.
S = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
X = sample_gaussian(S @ [1.0, 2.0], S @ np.diag([1.0, 4.0]) @ S.T, 5, seed=3)
print(X)
print("max |U - B1 - B2| =", np.max(np.abs(X[:, 0] - X[:, 1] - X[:, 2])))
