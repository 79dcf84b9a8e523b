"""Stationary density of the coupled system and the rank-1 projection onto it.

Adding the two stationary equations shows the combined flux
b*x*w1 + d*(x-1)*w2 is constant, and the boundary conditions force that
constant to zero.  Eliminating w2 then reduces the stationary system to a
single first-order ODE for W(x) = b*x*w1(x):

    W'(x)/W(x) = nu(x)/(b*x) - mu(x)/(d*(1-x)),

so W = x^alpha (1-x)^beta exp(g(x)) with alpha = nu(0)/b, beta = mu(1)/d and
g collecting the regular parts of the rate variation.  For piecewise-linear
rates g is a piecewise closed form (logs and linear terms), and the endpoint
power factors are integrated over the first/last cell by an exact power
substitution, so both components can blow up integrably at their endpoint
without losing quadrature accuracy.  For constant rates the density is a Beta
profile and cell averages come from regularized incomplete Beta differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import QuadratureFailure
from .grid import GridDensity, cell_edges, mass
from .model import CanonicalModel, RateFunction

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class EquilibriumDensity:
    """Unit-mass stationary density with its normalization bookkeeping."""

    w: GridDensity
    normalizing_constant: float
    method: str

    @property
    def n(self) -> int:
        return self.w.n


def project(w: EquilibriumDensity, u: GridDensity) -> GridDensity:
    """Rank-1 projection P u = mass(u) * w; idempotent and mass-preserving."""
    m = mass(u)
    return GridDensity(m * w.w.comp1, m * w.w.comp2)


def _closed_form_cell_integrals(model: CanonicalModel, n: int):
    nu = model.nu_t.values[0]
    mu = model.mu_t.values[0]
    alpha = nu / model.b
    beta = mu / model.d
    edges = cell_edges(n)
    # w1 ~ x^(alpha-1) (1-x)^beta, w2 ~ (b/d) x^alpha (1-x)^(beta-1)
    B1 = special.beta(alpha, beta + 1.0)
    B2 = special.beta(alpha + 1.0, beta)
    total = B1 + (model.b / model.d) * B2
    int1 = np.diff(special.betainc(alpha, beta + 1.0, edges)) * (B1 / total)
    int2 = np.diff(special.betainc(alpha + 1.0, beta, edges)) * (
        (model.b / model.d) * B2 / total
    )
    return int1, int2, 1.0 / total


def _piecewise_log_correction(rate: RateFunction, scale: float):
    """Return g(x) = integral_0^x (rate(s) - rate(0)) / (scale * s) ds, vectorized.

    Per linear piece rate(s) = p + q*s the integrand is (p - rate(0))/s + q,
    which integrates to exact logs plus linear terms; the piece touching 0 has
    p = rate(0), so no log appears there.
    """
    nodes = rate.nodes
    values = rate.values
    r0 = values[0]
    q = np.diff(values) / np.diff(nodes)
    p = values[:-1] - q * nodes[:-1]
    safe_lo = np.maximum(nodes[:-1], 1e-300)
    piece = (p - r0) * np.log(np.maximum(nodes[1:], 1e-300) / safe_lo) + q * np.diff(nodes)
    piece[0] = q[0] * (nodes[1] - nodes[0])  # first piece: coefficient of the log is 0
    cum = np.concatenate(([0.0], np.cumsum(piece)))

    def g(x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(q) - 1)
        lo = nodes[idx]
        partial = (p[idx] - r0) * np.log(
            np.maximum(x, 1e-300) / np.maximum(lo, 1e-300)
        ) + q[idx] * (x - lo)
        near_zero = (idx == 0) & (nodes[0] == 0.0)
        if np.any(near_zero):
            partial = np.where(near_zero, q[0] * (x - nodes[0]), partial)
        return (cum[idx] + partial) / scale

    return g


def _quadrature_cell_integrals(model: CanonicalModel, n: int):
    nu0 = float(model.nu_t(0.0))
    mu1 = float(model.mu_t(1.0))
    alpha = nu0 / model.b
    beta = mu1 / model.d
    if alpha <= 1e-12 or beta <= 1e-12:
        raise QuadratureFailure(
            f"stationary density not integrable: endpoint exponents "
            f"alpha={alpha:.3e}, beta={beta:.3e} must be positive"
        )

    g_nu = _piecewise_log_correction(model.nu_t, model.b)
    mu_reflected = RateFunction(1.0 - model.mu_t.nodes[::-1], model.mu_t.values[::-1])
    g_mu_ref = _piecewise_log_correction(mu_reflected, model.d)

    def smooth(x):
        # exp(g) with g = regular nu-part from 0 plus regular mu-part from 1
        return np.exp(g_nu(x) + g_mu_ref(1.0 - x))

    def w1_regular(x):
        # w1 without its x^(alpha-1) factor (times b)
        return np.power(1.0 - x, beta) * smooth(x) / model.b

    def w2_regular(x):
        return np.power(x, alpha) * smooth(x) / model.d

    edges = cell_edges(n)
    int1 = np.empty(n)
    int2 = np.empty(n)

    def gauss(fun, lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = mid + half * _GL_NODES
        return half * (fun(nodes) @ _GL_WEIGHTS)

    for j in range(n):
        lo, hi = edges[j], edges[j + 1]
        if j == 0:
            # integral_0^h x^(alpha-1) f(x) dx = (h^alpha/alpha) integral_0^1 f(h u^(1/alpha)) du
            int1[0] = (hi**alpha / alpha) * gauss(
                lambda u: w1_regular(hi * np.power(u, 1.0 / alpha)), 0.0, 1.0
            )
        else:
            int1[j] = gauss(lambda x: np.power(x, alpha - 1.0) * w1_regular(x), lo, hi)
        jr = n - 1 - j  # mirrored cell index for the (1-x)^(beta-1) factor
        lor, hir = edges[jr], edges[jr + 1]
        if jr == n - 1:
            width = 1.0 - lor
            int2[jr] = (width**beta / beta) * gauss(
                lambda u: w2_regular(1.0 - width * np.power(u, 1.0 / beta)), 0.0, 1.0
            )
        else:
            int2[jr] = gauss(
                lambda x: np.power(1.0 - x, beta - 1.0) * w2_regular(x), lor, hir
            )
    total = int1.sum() + int2.sum()
    return int1 / total, int2 / total, 1.0 / total


def stationary_density(
    model: CanonicalModel, n: int, method: str = "auto"
) -> EquilibriumDensity:
    """Unit-mass stationary density on an n-cell grid.

    method: "auto" picks the Beta closed form for constant rates and the
    exact-exponent quadrature otherwise; "closed_form"/"quadrature" force a
    path (closed_form requires constant rates).
    """
    if method == "auto":
        method = "closed_form" if model.has_constant_rates else "quadrature"
    if method == "closed_form":
        if not model.has_constant_rates:
            raise QuadratureFailure("closed-form equilibrium needs constant rates")
        int1, int2, const = _closed_form_cell_integrals(model, n)
    elif method == "quadrature":
        int1, int2, const = _quadrature_cell_integrals(model, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = GridDensity(int1 * n, int2 * n)
    return EquilibriumDensity(w=w, normalizing_constant=const, method=method)


def flux_residual(model: CanonicalModel, eq: EquilibriumDensity) -> float:
    """Max over cells of |b*x*w1 + d*(x-1)*w2| at cell centers.

    Zero for the exact stationary density; the discrete value inherits the
    cell-averaging error of the representation.
    """
    from .grid import cell_centers

    x = cell_centers(eq.n)
    res = model.b * x * eq.w.comp1 + model.d * (x - 1.0) * eq.w.comp2
    return float(np.abs(res).max())
