import numpy as np
import pytest

from probrecon.errors import ValidationError
from probrecon.hierarchy import build_summing_matrix, check_coherence
from probrecon.synth import DEFAULT_SIGMA, SynthConfig, simulate_hierarchy, synthetic_hierarchy


def test_hierarchy_shape():
    sm = build_summing_matrix(synthetic_hierarchy())
    assert sm.names == ("Total", "A", "B", "AA", "AB", "BA", "BB")
    np.testing.assert_array_equal(sm.A, [[1, 1, 1, 1], [1, 1, 0, 0], [0, 0, 1, 1]])


def test_panel_is_exactly_coherent():
    panel, phi = simulate_hierarchy(SynthConfig(T=200, seed=3))
    sm = build_summing_matrix(synthetic_hierarchy())
    assert panel.values.shape == (200, 7)
    assert check_coherence(panel, sm, tol=0.0)[0]
    assert np.all(np.abs(phi) < 1)


def test_eta_cancels_from_aggregates():
    cfg = SynthConfig(T=300, seed=5)
    panel, _, parts = simulate_hierarchy(cfg, return_components=True)
    z = parts["z"]
    # A = AA + AB carries no eta: it equals the noise-free state sum
    np.testing.assert_allclose(panel.column("A"), z[:, 0] + z[:, 1], rtol=0, atol=1e-9)
    np.testing.assert_allclose(panel.column("B"), z[:, 2] + z[:, 3], rtol=0, atol=1e-9)
    np.testing.assert_allclose(panel.column("AA") - z[:, 0], parts["eta"], atol=1e-12)
    np.testing.assert_allclose(panel.column("AB") - z[:, 1], -parts["eta"], atol=1e-12)


def test_deterministic_per_seed():
    a, pa = simulate_hierarchy(SynthConfig(T=50, seed=9))
    b, pb = simulate_hierarchy(SynthConfig(T=50, seed=9))
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(pa, pb)
    c, _ = simulate_hierarchy(SynthConfig(T=50, seed=10))
    assert not np.array_equal(a.values, c.values)


def test_innovation_covariance():
    cfg = SynthConfig(T=100_000, seed=1, sigma=np.eye(4), eta_var=0.0)
    _, phi, parts = simulate_hierarchy(cfg, return_components=True)
    z = parts["z"]
    innov = z[1:] - phi * z[:-1]
    np.testing.assert_allclose(np.cov(innov, rowvar=False), np.eye(4), atol=0.05)


def test_default_sigma_recovered():
    cfg = SynthConfig(T=100_000, seed=2, eta_var=0.0)
    _, phi, parts = simulate_hierarchy(cfg, return_components=True)
    z = parts["z"]
    innov = z[1:] - phi * z[:-1]
    np.testing.assert_allclose(np.cov(innov, rowvar=False), DEFAULT_SIGMA, atol=0.15)


def test_stationary_moments():
    cfg = SynthConfig(T=100_000, seed=4)
    panel, phi = simulate_hierarchy(cfg)
    for i, name in enumerate(("AA", "AB", "BA", "BB")):
        x = panel.column(name)
        expected = DEFAULT_SIGMA[i, i] / (1 - phi[i] ** 2) + cfg.eta_var
        assert np.var(x) == pytest.approx(expected, rel=0.1)
    _, _, parts = simulate_hierarchy(cfg, return_components=True)
    z = parts["z"][:, 0]
    lag1 = np.corrcoef(z[1:], z[:-1])[0, 1]
    assert lag1 == pytest.approx(phi[0], abs=0.02)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"T": 5},
        {"eta_var": -1.0},
        {"sigma": np.ones((4, 4))},
        {"sigma": np.eye(3)},
        {"noise_signs": (1, -1)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SynthConfig(**kwargs)
