"""Synthetic hierarchy: four correlated AR(1) bottoms with cancelling noise.

Hierarchy ``Total = A + B``, ``A = AA + AB``, ``B = BA + BB``. Each bottom is a
stationary AR(1) with coefficients drawn uniformly in ``(-1, 1)`` and jointly
Gaussian innovations. A scalar noise ``eta_t`` is added to AA and BA and
subtracted from AB and BB, so it vanishes from every aggregate.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hierarchy import HierarchySpec, aggregate_bottom, build_summing_matrix
from .scoring import make_rng

__all__ = [
    "DEFAULT_SIGMA",
    "SynthConfig",
    "synthetic_hierarchy",
    "simulate_hierarchy",
]

DEFAULT_SIGMA = np.array(
    [
        [5.0, 3.0, 2.0, 1.0],
        [3.0, 5.0, 2.0, 1.0],
        [2.0, 2.0, 5.0, 3.0],
        [1.0, 1.0, 3.0, 5.0],
    ]
)
BURN_IN = 100


def synthetic_hierarchy():
    """Specification of the 7-series, 4-bottom tree (Total, A, B, AA, AB, BA, BB)."""
    return HierarchySpec(
        ("AA", "AB", "BA", "BB"),
        (("Total", ("A", "B")), ("A", ("AA", "AB")), ("B", ("BA", "BB"))),
    )


@dataclass(frozen=True)
class SynthConfig:
    T: int = 1000
    seed: int = 0
    sigma: np.ndarray = field(default_factory=lambda: DEFAULT_SIGMA.copy())
    eta_var: float = 10.0
    noise_signs: tuple = (1.0, -1.0, 1.0, -1.0)
    burn_in: int = BURN_IN

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (4, 4) or not np.allclose(sigma, sigma.T):
            raise ValidationError("sigma must be a symmetric 4 x 4 matrix")
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise ValidationError("sigma is not positive definite") from None
        if self.T < 10:
            raise ValidationError("T must be at least 10")
        if self.eta_var < 0:
            raise ValidationError("eta_var must be nonnegative")
        if len(self.noise_signs) != 4:
            raise ValidationError("noise_signs needs one entry per bottom series")
        object.__setattr__(self, "sigma", sigma)


def simulate_hierarchy(config, return_components=False):
    """Simulate one panel of the synthetic hierarchy.

    Returns
    -------
    panel : SeriesPanel
        ``T x 7`` exactly coherent observations.
    phi : ndarray
        The four AR(1) coefficients drawn for this panel.
    components : dict, optional
        ``{"z": T x 4 noise-free AR states, "eta": T observation noise}`` when
        ``return_components`` is true.
    """
    rng = make_rng(config.seed)
    phi = rng.uniform(-1.0, 1.0, size=4)
    chol = np.linalg.cholesky(config.sigma)
    steps = config.T + config.burn_in
    w = rng.standard_normal((steps, 4)) @ chol.T
    z = np.zeros(4)
    states = np.empty((steps, 4))
    for t in range(steps):
        z = phi * z + w[t]
        states[t] = z
    states = states[config.burn_in:]
    eta = rng.standard_normal(config.T) * np.sqrt(config.eta_var)
    bottoms = states + np.outer(eta, np.asarray(config.noise_signs, dtype=float))
    summing = build_summing_matrix(synthetic_hierarchy())
    panel = aggregate_bottom(bottoms, summing)
    if return_components:
        return panel, phi, {"z": states, "eta": eta}
    return panel, phi
