"""Monte-Carlo simulation of the piecewise-deterministic process.

A particle in mode 1 flows along x' = -b*x (toward 0) and leaves the mode
with rate nu(x); in mode 2 it flows along x' = d*(1-x) (toward 1) and leaves
with rate mu(x).  The forward equation of this process is exactly the
transformed PDE system, which is what the cross-validation against the
splitting solver tests.  Switch times are sampled by thinning against the
exact rate maxima of the piecewise-linear tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._accel import NUMBA_ENABLED
from .errors import (
    BadMode,
    EmptyEnsemble,
    NegativeTime,
    NonpositiveRateBound,
)
from .grid import GridDensity
from .model import CanonicalModel, RateFunction


@dataclass(frozen=True)
class InitSpec:
    """Initial law: all particles in one mode, uniform or at a point."""

    kind: str = "uniform"  # "uniform" | "point"
    mode: int = 1
    x: float = 0.0  # used by kind="point"

    def __post_init__(self):
        if self.kind not in ("uniform", "point"):
            raise ValueError(f"unknown init kind {self.kind!r}")
        if self.mode not in (1, 2):
            raise BadMode(f"init mode must be 1 or 2, got {self.mode}")
        if self.kind == "point" and not 0.0 <= self.x <= 1.0:
            raise ValueError(f"point init needs x in [0, 1], got {self.x}")


@dataclass(frozen=True)
class ParticleEnsemble:
    positions: np.ndarray
    modes: np.ndarray
    seed: int
    generator_id: str = _kernels.GENERATOR_ID

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "modes", np.asarray(self.modes, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.positions.size


def flow(mode: int, x0, b: float, d: float, tau) -> np.ndarray | float:
    """Closed-form deterministic flow for time tau in the given mode."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise NegativeTime(f"flow needs tau >= 0, got {tau}")
    x0 = np.asarray(x0, dtype=float)
    if mode == 1:
        out = x0 * np.exp(-b * tau_arr)
    elif mode == 2:
        out = 1.0 - (1.0 - x0) * np.exp(-d * tau_arr)
    else:
        raise BadMode(f"mode must be 1 or 2, got {mode}")
    if out.ndim == 0:
        return float(out)
    return out


def _rate_arrays(rate: RateFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    slopes = np.diff(rate.values) / np.diff(rate.nodes)
    return rate.nodes, rate.values, slopes


def simulate(
    model: CanonicalModel,
    init: InitSpec,
    N: int,
    T: float,
    seed: int,
    kernel: str = "auto",
) -> ParticleEnsemble:
    """Evolve N independent particles to time T.

    Particle k consumes a splitmix64 stream derived from (seed, k); runs with
    equal (seed, N, T) are identical, whichever kernel executes them.
    kernel: "auto" (numba serial loop when available, else vectorized NumPy),
    "serial" or "vectorized".
    """
    if N < 1:
        raise EmptyEnsemble(f"need at least one particle, got N={N}")
    if T < 0:
        raise NegativeTime(f"horizon must be >= 0, got {T}")
    lam1 = model.nu_t.max
    lam2 = model.mu_t.max
    if not (lam1 > 0 and lam2 > 0):
        raise NonpositiveRateBound(f"rate bounds {lam1}, {lam2} must be positive")

    states = _kernels.init_states(seed, N)
    if init.kind == "uniform":
        states, u0 = _kernels.draw_uniforms(states)
        x = u0.astype(float)
    else:
        x = np.full(N, float(init.x))
    modes = np.full(N, init.mode, dtype=np.int64)

    nu_nodes, nu_values, nu_slopes = _rate_arrays(model.nu_t)
    mu_nodes, mu_values, mu_slopes = _rate_arrays(model.mu_t)
    args = (
        x,
        modes,
        states,
        float(T),
        float(model.b),
        float(model.d),
        nu_nodes,
        nu_values,
        nu_slopes,
        mu_nodes,
        mu_values,
        mu_slopes,
        lam1,
        lam2,
    )

    if kernel == "auto":
        kernel = "serial" if NUMBA_ENABLED else "vectorized"
    if kernel == "serial":
        if NUMBA_ENABLED:
            _kernels.simulate_serial(*args)
        else:
            # plain-Python loop over numpy scalars: silence wraparound warnings
            with np.errstate(over="ignore"):
                _kernels.simulate_serial(*args)
    elif kernel == "vectorized":
        _kernels.simulate_vectorized(*args)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")

    return ParticleEnsemble(positions=x, modes=modes, seed=seed)


def density_estimate(ens: ParticleEnsemble, n_cells: int) -> GridDensity:
    """Histogram the ensemble into a unit-mass two-component grid density.

    Integer bin counts make the estimate independent of particle order.
    """
    idx = np.minimum((ens.positions * n_cells).astype(np.int64), n_cells - 1)
    c1 = np.bincount(idx[ens.modes == 1], minlength=n_cells)
    c2 = np.bincount(idx[ens.modes == 2], minlength=n_cells)
    scale = n_cells / ens.n  # count/(N*h)
    return GridDensity(c1 * scale, c2 * scale)
