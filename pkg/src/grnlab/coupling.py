"""Pointwise two-state switching: the reaction part of the generator.

Per cell the coupling matrix is M = [[-nu, mu], [nu, -mu]] with columns
summing to zero, so its exact exponential preserves the per-cell total
u1+u2 and maps nonnegative data to nonnegative data.  Using the closed-form
exponential (rank-1 equilibrium projection plus decaying complement) makes
per-step mass conservation a hard invariant of the splitting solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeTime, RateError, SizeMismatch
from .grid import GridDensity
from .model import CanonicalModel


@dataclass(frozen=True)
class SwitchingMatrixField:
    """Rates nu, mu collocated at the n cell centers."""

    nu: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if nu.shape != mu.shape or nu.ndim != 1:
            raise SizeMismatch("nu and mu must be equal-length 1-d arrays")
        if not (np.all(nu > 0) and np.all(mu > 0)):
            raise RateError("switching rates must be strictly positive")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.nu.size

    @classmethod
    def from_model(cls, model: CanonicalModel, n: int) -> "SwitchingMatrixField":
        nu, mu = model.rates_on(n)
        return cls(nu, mu)


def apply_B(field: SwitchingMatrixField, u: GridDensity) -> GridDensity:
    """Per-cell matrix-vector product with M."""
    if field.n != u.n:
        raise SizeMismatch(f"field has n={field.n}, density has n={u.n}")
    return GridDensity(
        -field.nu * u.comp1 + field.mu * u.comp2,
        field.nu * u.comp1 - field.mu * u.comp2,
    )


def exp_B(field: SwitchingMatrixField, t: float, u: GridDensity) -> GridDensity:
    """Exact per-cell exponential exp(t*M) applied to u.

    exp(t*M) = P + exp(-(nu+mu)t) (I - P) with P the rank-1 projection onto
    the coupling equilibrium (mu, nu)/(nu+mu).  Assembled as a sum of
    nonnegative products so positivity survives rounding exactly.
    """
    if t < 0:
        raise NegativeTime(f"exp_B needs t >= 0, got {t}")
    if field.n != u.n:
        raise SizeMismatch(f"field has n={field.n}, density has n={u.n}")
    if t == 0.0:
        return GridDensity(u.comp1.copy(), u.comp2.copy())
    s = field.nu + field.mu
    decay = np.exp(-s * t)
    relaxed = -np.expm1(-s * t)  # 1 - decay, accurate for small s*t
    m = u.comp1 + u.comp2
    pi1 = field.mu / s
    pi2 = field.nu / s
    return GridDensity(
        relaxed * pi1 * m + decay * u.comp1,
        relaxed * pi2 * m + decay * u.comp2,
    )
