"""Exact realizations of the two restricted shift semigroups on [0, 1].

T1 pushes mass toward 0 along x -> x*exp(-t), T2 toward 1 along
x -> 1-(1-x)*exp(-t); both act here as exact pushforwards of the
piecewise-constant cell representation (edge-integral bookkeeping), so
stochasticity holds to rounding rather than to scheme order.  The resolvents
and their duals are integrated analytically against the cell basis: the only
approximation anywhere in this module is the representation of f itself.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NegativeTime, NonpositiveLambda
from .grid import cell_edges, conservative_remap

# exp() saturates around 709; the pushforward only needs "far outside [0,1]".
_MAX_LOG = 700.0


def reflect(f: np.ndarray) -> np.ndarray:
    """Restricted reflection Qf(x) = f(1-x); an involution on cell values."""
    return np.asarray(f, dtype=float)[::-1].copy()


def apply_T1(t: float, f: np.ndarray) -> np.ndarray:
    """Shift-toward-0 semigroup at time t, as an exact conservative remap."""
    if t < 0:
        raise NegativeTime(f"semigroup time must be >= 0, got {t}")
    f = np.asarray(f, dtype=float)
    if t == 0.0:
        return f.copy()
    scale = math.exp(-min(t, _MAX_LOG))
    return conservative_remap(f, cell_edges(f.size) * scale)


def apply_T2(t: float, f: np.ndarray) -> np.ndarray:
    """Shift-toward-1 semigroup; similar to T1 via the reflection Q."""
    return reflect(apply_T1(t, reflect(f)))


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise NonpositiveLambda(f"resolvent needs lambda > 0, got {lam}")
    return lam


def _power_diff(edges: np.ndarray, expo: float) -> np.ndarray:
    """(edges[1:]**expo - edges[:-1]**expo) / expo, stabilized for small expo.

    Only used with edges[0] > 0; computed as e_j**expo * expm1(expo * log-ratio)
    to avoid cancellation when expo is close to 0.
    """
    lo = edges[:-1]
    hi = edges[1:]
    return np.power(lo, expo) * np.expm1(expo * np.log(hi / lo)) / expo


def resolvent_C1(lam: float, f: np.ndarray) -> np.ndarray:
    """R(lam, C1) f(x) = x^(lam-1) * integral_x^1 f(y) y^(-lam) dy, cell-averaged.

    For piecewise-constant f every factor integrates in closed form, including
    the x^(lam-1) endpoint behaviour on the first cell; the result is assembled
    as nonnegative-weight combinations so f >= 0 gives output >= 0 exactly.
    """
    lam = _check_lambda(lam)
    f = np.asarray(f, dtype=float)
    n = f.size
    h = 1.0 / n
    edges = cell_edges(n)

    # P[j] = integral over cell j of x^(lam-1) dx
    P = np.empty(n)
    P[0] = edges[1] ** lam / lam
    P[1:] = _power_diff(edges[1:], lam)

    # Gright[j] = integral_{e_{j+1}}^1 f(y) y^(-lam) dy  (never needs cell 0)
    p = 1.0 - lam
    if lam == 1.0:
        tail_int = np.log(edges[2:] / edges[1:-1])  # cells 1..n-1
    else:
        tail_int = _power_diff(edges[1:], p)
    Gright = np.zeros(n)
    Gright[:-1] = np.cumsum((f[1:] * tail_int)[::-1])[::-1]

    # D[j] = integral over cell j of x^(lam-1) * (e_{j+1}^p - x^p)/p dx >= 0;
    # quadrature weights, clipped at 0 against rounding.
    if lam == 1.0:
        D = h - edges[:-1] * np.log(edges[1:] / np.maximum(edges[:-1], edges[1] * 1e-300))
        D[0] = h
    else:
        D = (edges[1:] ** p * P - h) / p
        D[0] = h / lam
    D = np.maximum(D, 0.0)

    return (Gright * P + f * D) / h


def resolvent_C2(lam: float, f: np.ndarray) -> np.ndarray:
    """R(lam, C2) = Q R(lam, C1) Q via the reflection similarity."""
    return reflect(resolvent_C1(lam, reflect(f)))


def dual_resolvent_C1(lam: float, g: np.ndarray) -> np.ndarray:
    """R(lam, C1') g(y) = y^(-lam) * integral_0^y g(x) x^(lam-1) dx, cell-averaged."""
    lam = _check_lambda(lam)
    g = np.asarray(g, dtype=float)
    n = g.size
    h = 1.0 / n
    edges = cell_edges(n)

    P = np.empty(n)
    P[0] = edges[1] ** lam / lam
    P[1:] = _power_diff(edges[1:], lam)
    Hleft = np.concatenate(([0.0], np.cumsum(g * P)))[:-1]

    p = 1.0 - lam
    I = np.zeros(n)  # integral of y^(-lam) over cell j; cell 0 only via Hleft=0
    if lam == 1.0:
        I[1:] = np.log(edges[2:] / edges[1:-1])
    else:
        I[1:] = _power_diff(edges[1:], p)

    E = np.empty(n)  # integral of y^(-lam)(y^lam - e_j^lam)/lam over cell j
    E[0] = h / lam
    E[1:] = (h - edges[1:-1] ** lam * I[1:]) / lam
    E = np.maximum(E, 0.0)

    return (Hleft * I + g * E) / h


def dual_resolvent_C2(lam: float, g: np.ndarray) -> np.ndarray:
    """R(lam, C2') g(y) = (1-y)^(-lam) * integral_y^1 g(x)(1-x)^(lam-1) dx."""
    return reflect(dual_resolvent_C1(lam, reflect(g)))
