"""Particle-simulation kernels: numba serial loop and vectorized NumPy twin.

Each particle k owns a splitmix64 counter stream derived from (seed, k), so
trajectories are reproducible regardless of execution order, worker count or
kernel choice.  The serial kernel is the numba-compiled hot path; the
vectorized kernel advances all still-active particles one thinning proposal
at a time with identical draw consumption, giving the same streams and (up
to libm one-ulp exp differences) the same trajectories.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import maybe_njit

U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
U64_MIX2 = np.uint64(0x94D049BB133111EB)
U64_S30 = np.uint64(30)
U64_S27 = np.uint64(27)
U64_S31 = np.uint64(31)
U64_S11 = np.uint64(11)
INV_2_53 = 1.0 / 9007199254740992.0  # map the top 53 bits to [0, 1)

GENERATOR_ID = "splitmix64-thinning-v1"


@maybe_njit(cache=True)
def _mix(z):
    """splitmix64 output scramble; elementwise on arrays, exact on scalars."""
    z = (z ^ (z >> U64_S30)) * U64_MIX1
    z = (z ^ (z >> U64_S27)) * U64_MIX2
    return z ^ (z >> U64_S31)


def init_states(seed: int, n: int) -> np.ndarray:
    """Per-particle stream states derived deterministically from (seed, k)."""
    ks = np.arange(1, n + 1, dtype=np.uint64)
    return _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + ks * U64_GOLDEN)


def draw_uniforms(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Advance every stream once and return uniforms in [0, 1)."""
    states = states + U64_GOLDEN
    u = (_mix(states) >> U64_S11) * INV_2_53
    return states, u


@maybe_njit(cache=True)
def _rate_at(x, nodes, values, slopes):
    i = np.searchsorted(nodes, x, side="right") - 1
    if i < 0:
        i = 0
    last = nodes.size - 2
    if i > last:
        i = last
    return values[i] + (x - nodes[i]) * slopes[i]


@maybe_njit(cache=True)
def simulate_serial(
    x,
    mode,
    state,
    T,
    b,
    d,
    nu_nodes,
    nu_values,
    nu_slopes,
    mu_nodes,
    mu_values,
    mu_slopes,
    lam1,
    lam2,
):
    """Thinning simulation, one particle at a time; arrays updated in place."""
    n = x.size
    for k in range(n):
        s = state[k]
        xv = x[k]
        m = mode[k]
        t = 0.0
        while True:
            lam = lam1 if m == 1 else lam2
            s = s + U64_GOLDEN
            u1 = (_mix(s) >> U64_S11) * INV_2_53
            tau = -math.log(1.0 - u1) / lam
            rem = T - t
            if tau >= rem:
                if m == 1:
                    xv = xv * math.exp(-b * rem)
                else:
                    xv = 1.0 - (1.0 - xv) * math.exp(-d * rem)
                break
            if m == 1:
                xv = xv * math.exp(-b * tau)
            else:
                xv = 1.0 - (1.0 - xv) * math.exp(-d * tau)
            t = t + tau
            if m == 1:
                r = _rate_at(xv, nu_nodes, nu_values, nu_slopes)
            else:
                r = _rate_at(xv, mu_nodes, mu_values, mu_slopes)
            s = s + U64_GOLDEN
            u2 = (_mix(s) >> U64_S11) * INV_2_53
            if u2 * lam < r:
                m = 3 - m
        if xv < 0.0:
            xv = 0.0
        elif xv > 1.0:
            xv = 1.0
        x[k] = xv
        mode[k] = m
        state[k] = s


def _rates_vec(x, nodes, values, slopes):
    i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 2)
    return values[i] + (x - nodes[i]) * slopes[i]


def simulate_vectorized(
    x,
    mode,
    state,
    T,
    b,
    d,
    nu_nodes,
    nu_values,
    nu_slopes,
    mu_nodes,
    mu_values,
    mu_slopes,
    lam1,
    lam2,
):
    """NumPy fallback: same streams and draw order as the serial kernel."""
    t = np.zeros(x.size)
    active = np.ones(x.size, dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = state[idx] + U64_GOLDEN
        state[idx] = s
        u1 = (_mix(s) >> U64_S11) * INV_2_53
        is1 = mode[idx] == 1
        lam = np.where(is1, lam1, lam2)
        tau = -np.log(1.0 - u1) / lam
        rem = T - t[idx]
        fin = tau >= rem
        dt_flow = np.where(fin, rem, tau)
        xi = x[idx]
        x[idx] = np.where(
            is1,
            xi * np.exp(-b * dt_flow),
            1.0 - (1.0 - xi) * np.exp(-d * dt_flow),
        )
        active[idx[fin]] = False
        cont = idx[~fin]
        if cont.size == 0:
            continue
        t[cont] += tau[~fin]
        xc = x[cont]
        is1c = mode[cont] == 1
        r = np.where(
            is1c,
            _rates_vec(xc, nu_nodes, nu_values, nu_slopes),
            _rates_vec(xc, mu_nodes, mu_values, mu_slopes),
        )
        s2 = state[cont] + U64_GOLDEN
        state[cont] = s2
        u2 = (_mix(s2) >> U64_S11) * INV_2_53
        flip = u2 * np.where(is1c, lam1, lam2) < r
        mode[cont[flip]] = 3 - mode[cont[flip]]
    np.clip(x, 0.0, 1.0, out=x)
