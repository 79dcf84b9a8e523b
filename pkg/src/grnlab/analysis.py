"""Long-time diagnostics: convergence measurement and hypothesis checks.

This module turns the ingredients of the uniform-convergence argument into
computable checks: the (epsilon, gamma, lambda0) parameter construction, the
strict positivity of the dual resolvent acting on nonnegative test functions,
the first Dyson-Phillips correction U1 and the flow-map kernel it dominates,
and the operator-norm distance of the solution semigroup from the rank-1
equilibrium projection (estimated over the cell-indicator basis, the discrete
extreme points of the unit ball).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumDensity, stationary_density
from .errors import InversionFailure, NonpositiveLambda
from .evolve import (
    LaplaceQuadConfig,
    ResolventMatrix,
    SplittingConfig,
    assemble_resolvent,
    dual_apply,
    propagator_matrices,
)
from .grid import DualGridFunction, GridDensity, cell_centers, sup_norm
from .model import CanonicalModel
from .transport import apply_T1, apply_T2

_MAX_LOG = 700.0


@dataclass(frozen=True)
class EpsilonGammaLambda:
    """Computable choice of the comparison parameters.

    Invariants: eps below both rate minima and below gamma minus the larger
    rate sup; lambda0 above gamma, 2*eps, b and d, so 2*eps/lambda0 < 1.
    """

    eps: float
    gamma: float
    lam0: float

    def feasible(self, model: CanonicalModel) -> bool:
        max_rate = max(model.nu_t.max, model.mu_t.max)
        min_rate = min(model.nu_t.min, model.mu_t.min)
        return (
            0 < self.eps < min_rate
            and self.eps < self.gamma - max_rate
            and self.gamma > max_rate
            and self.lam0 > max(self.gamma, 2 * self.eps)
            and 2 * self.eps / self.lam0 < 1
        )


def choose_parameters(model: CanonicalModel) -> EpsilonGammaLambda:
    """Fixed-constant realization of the strict inequalities.

    gamma = 1.1 * max rate sup, eps = half the tightest headroom,
    lambda0 = 1.1 * max(gamma, 2*eps, b, d).
    """
    max_rate = max(model.nu_t.max, model.mu_t.max)
    min_rate = min(model.nu_t.min, model.mu_t.min)
    gamma = 1.1 * max_rate
    eps = 0.5 * min(gamma - max_rate, min_rate)
    lam0 = 1.1 * max(gamma, 2.0 * eps, model.b, model.d)
    return EpsilonGammaLambda(eps=eps, gamma=gamma, lam0=lam0)


def default_lambda_grid(model: CanonicalModel) -> list[float]:
    """{1, 2, 5, 10} * max(b, d), raised above lambda0 where necessary."""
    lam0 = choose_parameters(model).lam0
    base = max(model.b, model.d)
    return sorted({max(m * base, 1.05 * lam0) for m in (1.0, 2.0, 5.0, 10.0)})


def dual_positivity_check(
    model: CanonicalModel,
    lam: float,
    g: DualGridFunction,
    n: int = 128,
    quad: LaplaceQuadConfig | None = None,
    resolvent: ResolventMatrix | None = None,
    margin_factor: float = 0.0,
) -> tuple[float, bool]:
    """Minimum of R(lam)' g over all cells/components, and a pass flag.

    g must be nonnegative with positive mass.  Passes when the minimum
    exceeds margin_factor * sup(g); strict positivity (the default margin 0)
    is the property the convergence theorem needs.
    """
    if not lam > 0:
        raise NonpositiveLambda(f"need lambda > 0, got {lam}")
    if np.any(g.comp1 < 0) or np.any(g.comp2 < 0):
        raise ValueError("test function must be nonnegative")
    if sup_norm(g) == 0:
        raise ValueError("test function must be non-zero")
    Rm = resolvent if resolvent is not None else assemble_resolvent(model, lam, n, quad)
    dual = dual_apply(Rm, g)
    c = float(min(dual.comp1.min(), dual.comp2.min()))
    return c, c > margin_factor * sup_norm(g)


def _uncoupled_T(model: CanonicalModel, s: float, u: GridDensity) -> GridDensity:
    return GridDensity(
        apply_T1(model.b * s, u.comp1),
        apply_T2(model.d * s, u.comp2),
    )


def dyson_u1(
    model: CanonicalModel, eps: float, t: float, f: GridDensity, panels: int = 64
) -> GridDensity:
    """First Dyson-Phillips term U1(t) f = integral of T(t-s) E T(s) f ds.

    T is the uncoupled block-diagonal pair of scaled shifts and E the flat
    eps * [[1,1],[1,1]] coupling; composite Simpson in s with >= 64 panels.
    """
    if panels < 64:
        panels = 64
    panels += panels % 2
    ds = t / panels
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= ds / 3.0
    acc1 = np.zeros(f.n)
    acc2 = np.zeros(f.n)
    for k, w in enumerate(weights):
        s = k * ds
        v = _uncoupled_T(model, s, f)
        mixed = eps * (v.comp1 + v.comp2)
        out = _uncoupled_T(model, t - s, GridDensity(mixed, mixed))
        acc1 += w * out.comp1
        acc2 += w * out.comp2
    return GridDensity(acc1, acc2)


@dataclass(frozen=True)
class KernelLowerBound:
    """Flow-composition kernel k_t(x, y) dominated by the U1 cross entry.

    orientation "12" composes shift-toward-0 after shift-toward-1 (used when
    d <= b), "21" is the mirrored case.  Support of k_t(x, .) lies between
    the images of the flow map at s=0 and s=t, intersected with [0, 1].
    """

    t: float
    x: np.ndarray
    y: np.ndarray
    k: np.ndarray  # shape (len(x), len(y))
    orientation: str


def _phi_and_slope(x, s, b: float, d: float, t: float):
    """phi(x, s) = 1 - (1 - x e^{b(t-s)}) e^{ds} and |d phi / d s|.

    phi is strictly monotone in s (decreasing: the s-derivative is
    -(d e^{ds} + (b-d) x e^{b(t-s)} e^{ds}), negative for d <= b), which is
    what makes the substitution to a kernel integral well-defined.
    """
    grow = np.exp(np.minimum(b * (t - s), _MAX_LOG))
    eds = np.exp(d * s)
    phi = 1.0 - (1.0 - x * grow) * eds
    slope = d * eds + (b - d) * x * grow * eds
    return phi, slope


def phi_kernel(model: CanonicalModel, t: float, n: int = 64) -> KernelLowerBound:
    """Kernel 1/|dphi/ds| on the reachable band, by bisection in s.

    Uses the composition orientation that keeps the slope positive:
    "12" when d <= b, else the mirrored "21".
    """
    if not t > 0:
        raise ValueError(f"kernel time must be positive, got {t}")
    if model.d <= model.b:
        orientation = "12"
        b, d = model.b, model.d
    else:
        orientation = "21"
        b, d = model.d, model.b  # mirrored problem has the roles swapped
    xs = cell_centers(n)
    ys = cell_centers(n)
    k = np.zeros((n, n))

    phi0, _ = _phi_and_slope(xs, 0.0, b, d, t)  # upper end of the band
    phit, _ = _phi_and_slope(xs, t, b, d, t)  # lower end
    lo_y = np.maximum(phit, 0.0)
    hi_y = np.minimum(phi0, 1.0)

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = (Y >= lo_y[:, None]) & (Y <= hi_y[:, None])
    if np.any(inside):
        xi = X[inside]
        yi = Y[inside]
        s_lo = np.zeros(xi.size)
        s_hi = np.full(xi.size, t)
        # phi(x, .) decreases from phi0 to phit; bisect for phi = y
        for _ in range(60):
            s_mid = 0.5 * (s_lo + s_hi)
            phi_mid, _ = _phi_and_slope(xi, s_mid, b, d, t)
            go_right = phi_mid > yi
            s_lo = np.where(go_right, s_mid, s_lo)
            s_hi = np.where(go_right, s_hi, s_mid)
        s_star = 0.5 * (s_lo + s_hi)
        phi_star, slope = _phi_and_slope(xi, s_star, b, d, t)
        if np.any(np.abs(phi_star - yi) > 1e-9):
            raise InversionFailure("flow-map bisection failed to converge")
        vals = np.zeros(xi.size)
        np.divide(1.0, slope, out=vals, where=slope > 0)
        k[inside] = vals

    if orientation == "21":
        k = k[::-1, ::-1]
    return KernelLowerBound(t=t, x=xs, y=ys, k=k, orientation=orientation)


def partial_integral_check(
    model: CanonicalModel,
    eps: float,
    t: float,
    trials: int = 5,
    n: int = 64,
    seed: int = 7,
    panels: int = 128,
) -> tuple[bool, float]:
    """Check that the U1 cross entry dominates the kernel integral operator.

    For random nonnegative scalar f the component-1 response of U1 to (0, f)
    must dominate eps * integral k_t(., y) f(y) dy up to 1e-8 * ||f||_1;
    the dropped flow-expansion factor exp(b(t-s)) exp(ds) >= 1 means the
    margin should come out strictly positive.  Returns (passed, min margin).
    """
    kb = phi_kernel(model, t, n)
    if kb.orientation == "12":
        comp_in, comp_out = 2, 1
    else:
        comp_in, comp_out = 1, 2
    rng = np.random.default_rng(seed)
    h = 1.0 / n
    min_margin = math.inf
    passed = True
    probes = [np.ones(n)] + [rng.random(n) for _ in range(max(0, trials - 1))]
    for f in probes:
        if comp_in == 2:
            u = GridDensity(np.zeros(n), f)
        else:
            u = GridDensity(f, np.zeros(n))
        u1 = dyson_u1(model, eps, t, u, panels=panels)
        lhs = u1.comp1 if comp_out == 1 else u1.comp2
        rhs = eps * (kb.k @ f) * h
        tol = 1e-8 * float(np.abs(f).sum() * h)
        margin = float((lhs - rhs).min())
        min_margin = min(min_margin, margin)
        if margin < -tol:
            passed = False
    return passed, min_margin


@dataclass(frozen=True)
class ConvergenceReport:
    """Operator-norm distance from the rank-1 projection, over time."""

    times: list[float]
    norm_estimates: list[float]
    fitted_rate: float
    fit_r_squared: float
    n: int
    dt: float
    tail_window: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "norm_estimates": list(self.norm_estimates),
            "fitted_rate": self.fitted_rate,
            "fit_r_squared": self.fit_r_squared,
            "n": self.n,
            "dt": self.dt,
            "tail_window": list(self.tail_window),
        }


def _fit_decay(times: np.ndarray, norms: np.ndarray) -> tuple[float, float]:
    logs = np.log(np.maximum(norms, 1e-300))
    slope, intercept = np.polyfit(times, logs, 1)
    pred = slope * times + intercept
    ss_res = float(((logs - pred) ** 2).sum())
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -float(slope), r2


def norm_convergence(
    model: CanonicalModel,
    times,
    n: int,
    dt: float,
    equilibrium: EquilibriumDensity | None = None,
) -> ConvergenceReport:
    """Estimate ||S(t) - P|| over the cell-indicator basis at each time.

    Every unit-mass basis density (single cell, either component) is evolved
    to each time; the estimate is the max L1 distance to its projection.
    The decay rate is fitted on the tail half of the times.
    """
    times = [float(t) for t in times]
    eq = equilibrium if equilibrium is not None else stationary_density(model, n)
    w_stack = eq.w.stack()
    h = 1.0 / n
    cfg = SplittingConfig(dt=dt, order=2)
    mats = propagator_matrices(model, cfg, n, times)
    estimates = []
    for _, U in mats:
        # columns have input mass h; unit-mass input is the column / h
        diff = U / h - w_stack[:, None]
        estimates.append(float((np.abs(diff).sum(axis=0) * h).max()))
    arr_t = np.array(times)
    arr_e = np.array(estimates)
    tail = max(2, len(times) // 2)
    rate, r2 = _fit_decay(arr_t[-tail:], arr_e[-tail:])
    return ConvergenceReport(
        times=times,
        norm_estimates=estimates,
        fitted_rate=rate,
        fit_r_squared=r2,
        n=n,
        dt=dt,
        tail_window=[float(t) for t in arr_t[-tail:]],
    )
