import numpy as np
import pytest

from probrecon.hierarchy import HierarchySpec, build_summing_matrix

FIG1_DOC = """
{"bottom": ["R11", "R12", "R21", "R22"],
 "aggregates": [{"name": "Total", "children": ["R1", "R2"]},
                {"name": "R1", "children": ["R11", "R12"]},
                {"name": "R2", "children": ["R21", "R22"]}]}
"""


@pytest.fixture
def fig1_doc():
    return FIG1_DOC


@pytest.fixture
def fig1():
    return build_summing_matrix(
        HierarchySpec(
            ("R11", "R12", "R21", "R22"),
            (("Total", ("R1", "R2")), ("R1", ("R11", "R12")), ("R2", ("R21", "R22"))),
        )
    )


@pytest.fixture
def two_bottom():
    return build_summing_matrix(HierarchySpec(("B1", "B2"), (("U", ("B1", "B2")),)))


def random_hierarchy(rng, max_bottom=8, max_upper=6):
    """Random grouped structure: each upper sums a random nonempty subset."""
    n = int(rng.integers(1, max_bottom + 1))
    k = int(rng.integers(1, max_upper + 1))
    bottoms = tuple(f"b{i}" for i in range(n))
    aggs = []
    for j in range(k):
        mask = rng.random(n) < 0.5
        if not mask.any():
            mask[rng.integers(n)] = True
        aggs.append((f"u{j}", tuple(b for b, keep in zip(bottoms, mask) if keep)))
    return build_summing_matrix(HierarchySpec(bottoms, aggs))


def random_spd(rng, m, ridge=0.1):
    X = rng.normal(size=(m, m))
    return X @ X.T / m + ridge * np.eye(m)


def condition_joint(mean, cov, n, u_obs):
    """Textbook Gaussian conditioning of the first n coordinates on the rest."""
    S11, S12, S22 = cov[:n, :n], cov[:n, n:], cov[n:, n:]
    K = S12 @ np.linalg.inv(S22)
    return mean[:n] + K @ (u_obs - mean[n:]), S11 - K @ S12.T


def explicit_joint(b_hat, cov, A, kh):
    """Joint of (B, U_hat) written from B ~ N(b_hat, kh Sb), U_hat = A B + eps."""
    n, k = cov.n, cov.n_upper
    # stack (B, eps) with its joint covariance, then map linearly
    Z = kh * np.block([[cov.Sigma_b1, cov.M1], [cov.M1.T, cov.Sigma_u1]])
    L = np.block([[np.eye(n), np.zeros((n, k))], [A, np.eye(k)]])
    mean = np.concatenate([b_hat, A @ b_hat])
    return mean, L @ Z @ L.T


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
