"""Uniform-grid representations of two-component densities and dual functions.

Densities are cell averages (finite-volume convention) so that the discrete
L1 norm ``h * (sum|comp1| + sum|comp2|)`` is the exact integral of the
piecewise-constant representative, and pushforwards can conserve mass to
machine precision.  Dual (L-infinity) grid functions use the same per-cell
layout with the sup norm.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import NonMonotoneMap, SizeMismatch

# 3-point Gauss-Legendre on [-1, 1]; exact for polynomials up to degree 5.
_GAUSS_X = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
_GAUSS_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def cell_edges(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def cell_centers(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def _as_values(values, n: int | None = None) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    if out.ndim != 1:
        raise SizeMismatch(f"expected a 1-d value array, got shape {out.shape}")
    if n is not None and out.size != n:
        raise SizeMismatch(f"expected {n} cells, got {out.size}")
    return out


@dataclass(frozen=True)
class GridDensity:
    """Two-component cell-averaged density on the unit interval."""

    comp1: np.ndarray
    comp2: np.ndarray

    def __post_init__(self):
        c1 = _as_values(self.comp1)
        c2 = _as_values(self.comp2, c1.size)
        object.__setattr__(self, "comp1", c1)
        object.__setattr__(self, "comp2", c2)

    @property
    def n(self) -> int:
        return self.comp1.size

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @classmethod
    def zero(cls, n: int) -> "GridDensity":
        return cls(np.zeros(n), np.zeros(n))

    def stack(self) -> np.ndarray:
        return np.concatenate([self.comp1, self.comp2])

    @classmethod
    def from_stack(cls, vec: np.ndarray) -> "GridDensity":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 2
        return cls(vec[:n], vec[n:])


@dataclass(frozen=True)
class DualGridFunction:
    """Two-component L-infinity test function, one value per cell."""

    comp1: np.ndarray
    comp2: np.ndarray

    def __post_init__(self):
        c1 = _as_values(self.comp1)
        c2 = _as_values(self.comp2, c1.size)
        object.__setattr__(self, "comp1", c1)
        object.__setattr__(self, "comp2", c2)

    @property
    def n(self) -> int:
        return self.comp1.size

    @classmethod
    def ones(cls, n: int) -> "DualGridFunction":
        return cls(np.ones(n), np.ones(n))

    def stack(self) -> np.ndarray:
        return np.concatenate([self.comp1, self.comp2])

    @classmethod
    def from_stack(cls, vec: np.ndarray) -> "DualGridFunction":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 2
        return cls(vec[:n], vec[n:])


def l1_norm(f: GridDensity) -> float:
    """Composite L1 norm: ||f1||_1 + ||f2||_1 on the unit interval."""
    return float((np.abs(f.comp1).sum() + np.abs(f.comp2).sum()) * f.h)


def mass(f: GridDensity) -> float:
    """Signed total mass, the invariant linear functional of the dynamics."""
    return float((f.comp1.sum() + f.comp2.sum()) * f.h)


def sup_norm(g: DualGridFunction) -> float:
    return float(max(np.abs(g.comp1).max(), np.abs(g.comp2).max()))


def pair(f: GridDensity, g: DualGridFunction) -> float:
    """Duality pairing <f, g> = integral of f1*g1 + f2*g2."""
    if f.n != g.n:
        raise SizeMismatch(f"density has n={f.n}, dual function has n={g.n}")
    return float((f.comp1 @ g.comp1 + f.comp2 @ g.comp2) * f.h)


def sample_scalar(fun: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Cell averages of a scalar function via per-cell 3-point Gauss rule.

    ``fun`` must accept ndarray input (vectorized evaluation).
    """
    centers = cell_centers(n)
    half = 0.5 / n
    nodes = centers[:, None] + half * _GAUSS_X[None, :]
    vals = np.asarray(fun(nodes), dtype=float)
    if vals.shape != nodes.shape:
        vals = np.broadcast_to(vals, nodes.shape)
    return (vals @ _GAUSS_W) / 2.0


def sample_to_grid(fun1, fun2, n: int) -> GridDensity:
    """Cell-average both components of a pair of functions on [0, 1]."""
    zero = lambda x: np.zeros_like(x)  # noqa: E731
    return GridDensity(
        sample_scalar(fun1 if fun1 is not None else zero, n),
        sample_scalar(fun2 if fun2 is not None else zero, n),
    )


def _pushforward_cumulative(
    cum: np.ndarray, mapped_edges: np.ndarray, out_edges: np.ndarray
) -> np.ndarray:
    """Masses of output cells given source cumulative mass at mapped edges.

    ``cum[k]`` is the source mass left of source edge k, and ``mapped_edges[k]``
    is where that edge lands.  Between consecutive mapped edges the cumulative
    mass is linear in the image coordinate (piecewise-constant source), so a
    single interpolation is exact; clamping at the ends realizes
    zero-extension outside the mapped range.
    """
    out_cum = np.interp(out_edges, mapped_edges, cum)
    return np.diff(out_cum)


def conservative_remap(values, mapped_edges) -> np.ndarray:
    """Pushforward of a cell-averaged scalar density under a monotone map.

    ``mapped_edges[k]`` is the image of source cell edge k (n+1 entries,
    strictly monotone).  Output cell i receives exactly the source mass whose
    image lies in [i*h, (i+1)*h]; total mass is conserved to rounding as long
    as the mapped range stays inside [0, 1] (mass pushed outside is dropped,
    matching zero-extension semantics).
    """
    vals = _as_values(values)
    n = vals.size
    me = np.asarray(mapped_edges, dtype=float)
    if me.shape != (n + 1,):
        raise SizeMismatch(f"need {n + 1} mapped edges, got {me.shape}")
    diffs = np.diff(me)
    if np.all(diffs > 0):
        pass
    elif np.all(diffs < 0):
        me = me[::-1]
        vals = vals[::-1]
    else:
        raise NonMonotoneMap("mapped edges are not strictly monotone")
    h = 1.0 / n
    cum = np.concatenate(([0.0], np.cumsum(vals) * h))
    out = _pushforward_cumulative(cum, me, cell_edges(n))
    return out * n


def write_density_csv(path, f: GridDensity) -> None:
    """Dump a density as ``x_center,comp1,comp2`` rows (RFC-4180, with header)."""
    centers = cell_centers(f.n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_center", "comp1", "comp2"])
        for x, a, b in zip(centers, f.comp1, f.comp2):
            writer.writerow([repr(float(x)), repr(float(a)), repr(float(b))])


def read_density_csv(path) -> GridDensity:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["x_center", "comp1", "comp2"]:
            raise SizeMismatch(f"unexpected density CSV header: {header}")
        rows = [(float(r[1]), float(r[2])) for r in reader]
    c1 = np.array([r[0] for r in rows])
    c2 = np.array([r[1] for r in rows])
    return GridDensity(c1, c2)
