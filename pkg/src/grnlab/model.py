"""Raw model parameters on I = [a/b, c/d] and the canonical form on [0, 1].

Rates are piecewise-linear tables: they are closed under the affine state
transform (remap the nodes, keep the values) and their exact minima/maxima
over the domain are attained at nodes, which downstream parameter rules and
thinning bounds rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParameterError, RateError
from .grid import GridDensity, cell_centers, cell_edges, _pushforward_cumulative

_MIN_INTERVAL_LENGTH = 1e-12
_SPAN_TOL = 1e-9


@dataclass(frozen=True)
class RateFunction:
    """Strictly positive piecewise-linear rate on [nodes[0], nodes[-1]]."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise RateError("rate table needs at least two nodes")
        if values.shape != nodes.shape:
            raise RateError("rate nodes and values must have equal length")
        if not np.all(np.diff(nodes) > 0):
            raise RateError("rate nodes must be strictly increasing")
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            raise RateError(f"nonpositive rate value at node index {bad[0]}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    @property
    def min(self) -> float:
        """Exact minimum over the domain (attained at a node)."""
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return bool(self.values.max() == self.values.min())

    @classmethod
    def constant(cls, value: float, lo: float = 0.0, hi: float = 1.0) -> "RateFunction":
        return cls(np.array([lo, hi]), np.array([value, value]))

    def spans(self, lo: float, hi: float) -> bool:
        scale = max(1.0, abs(lo), abs(hi))
        return (
            abs(self.nodes[0] - lo) <= _SPAN_TOL * scale
            and abs(self.nodes[-1] - hi) <= _SPAN_TOL * scale
        )

    def to_dict(self) -> dict:
        return {"nodes": self.nodes.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RateFunction":
        return cls(np.asarray(d["nodes"], dtype=float), np.asarray(d["values"], dtype=float))


@dataclass(frozen=True)
class RawModel:
    """Parameters (a, b, c, d, nu, mu) of the untransformed system."""

    a: float
    b: float
    c: float
    d: float
    nu: RateFunction
    mu: RateFunction

    @property
    def lo(self) -> float:
        return self.a / self.b

    @property
    def hi(self) -> float:
        return self.c / self.d

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class CanonicalModel:
    """Transformed system on [0, 1]: velocities -b*x and d*(1-x), rates nu_t, mu_t."""

    b: float
    d: float
    nu_t: RateFunction
    mu_t: RateFunction

    def velocity1(self, x):
        return -self.b * np.asarray(x, dtype=float)

    def velocity2(self, x):
        return self.d * (1.0 - np.asarray(x, dtype=float))

    def rates_on(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Rates collocated at the n cell centers."""
        centers = cell_centers(n)
        return self.nu_t(centers), self.mu_t(centers)

    @property
    def has_constant_rates(self) -> bool:
        return self.nu_t.is_constant and self.mu_t.is_constant

    def to_dict(self) -> dict:
        # A canonical model is a raw model with a=0, c=d; serialized that way
        # the output of `transform` is itself a loadable model file.
        return {
            "a": 0.0,
            "b": self.b,
            "c": self.d,
            "d": self.d,
            "nu": self.nu_t.to_dict(),
            "mu": self.mu_t.to_dict(),
        }


def validate(raw: RawModel) -> None:
    """Check the standing assumptions; raise on the first violation."""
    if not raw.b > 0:
        raise ParameterError(f"b>0 violated: b={raw.b}")
    if not raw.d > 0:
        raise ParameterError(f"d>0 violated: d={raw.d}")
    if not raw.lo < raw.hi:
        raise ParameterError(f"a/b<c/d violated: a/b={raw.lo}, c/d={raw.hi}")
    if raw.length < _MIN_INTERVAL_LENGTH:
        raise ParameterError(
            f"interval degenerate: c/d - a/b = {raw.length:.3e} < {_MIN_INTERVAL_LENGTH}"
        )
    for name, rate in (("nu", raw.nu), ("mu", raw.mu)):
        bad = np.flatnonzero(~(rate.values > 0))
        if bad.size:
            raise RateError(f"{name}: nonpositive rate value at node index {bad[0]}")
        if not rate.spans(raw.lo, raw.hi):
            raise RateError(
                f"{name}: table spans [{rate.nodes[0]}, {rate.nodes[-1]}], "
                f"model interval is [{raw.lo}, {raw.hi}]"
            )


def _pull_back_rate(rate: RateFunction, lo: float, length: float) -> RateFunction:
    nodes = (rate.nodes - lo) / length
    nodes[0] = 0.0
    nodes[-1] = 1.0
    return RateFunction(nodes, rate.values.copy())


def canonicalize(raw: RawModel) -> CanonicalModel:
    """Affine map of I onto [0, 1].

    With x = a/b + xt*L the component velocities a-b*x and c-d*x become
    -b*xt*L and d*(1-xt)*L, so dividing by the Jacobian L gives canonical
    velocities -b*xt and d*(1-xt); the rates are composed with the map.
    """
    validate(raw)
    return CanonicalModel(
        b=raw.b,
        d=raw.d,
        nu_t=_pull_back_rate(raw.nu, raw.lo, raw.length),
        mu_t=_pull_back_rate(raw.mu, raw.lo, raw.length),
    )


def transform_density(
    raw: RawModel, u: GridDensity, support: tuple[float, float] | None = None
) -> GridDensity:
    """Push a density on (a sub-interval of) I forward to [0, 1].

    ``u`` holds cell averages on a uniform grid over ``support`` (default the
    whole interval I).  The result is the mass-preserving pushforward
    v(xt) = L * u(a/b + xt*L) on the unit grid with the same cell count.
    """
    validate(raw)
    lo, hi = support if support is not None else (raw.lo, raw.hi)
    if lo < raw.lo - 1e-12 or hi > raw.hi + 1e-12 or not lo < hi:
        raise DomainError(
            f"density support [{lo}, {hi}] exceeds model interval [{raw.lo}, {raw.hi}]"
        )
    n = u.n
    src_edges = np.linspace(lo, hi, n + 1)
    mapped = (src_edges - raw.lo) / raw.length
    mapped[0] = max(mapped[0], 0.0)
    mapped[-1] = min(mapped[-1], 1.0)
    h_src = (hi - lo) / n
    out_edges = cell_edges(n)

    def push(vals: np.ndarray) -> np.ndarray:
        cum = np.concatenate(([0.0], np.cumsum(vals) * h_src))
        return _pushforward_cumulative(cum, mapped, out_edges) * n

    return GridDensity(push(u.comp1), push(u.comp2))


def load_raw_model(path) -> RawModel:
    with open(Path(path)) as fh:
        doc = json.load(fh)
    try:
        return RawModel(
            a=float(doc["a"]),
            b=float(doc["b"]),
            c=float(doc["c"]),
            d=float(doc["d"]),
            nu=RateFunction.from_dict(doc["nu"]),
            mu=RateFunction.from_dict(doc["mu"]),
        )
    except KeyError as exc:
        raise ParameterError(f"model file {path} is missing key {exc}") from exc


def save_raw_model(path, raw: RawModel) -> None:
    doc = {
        "a": raw.a,
        "b": raw.b,
        "c": raw.c,
        "d": raw.d,
        "nu": raw.nu.to_dict(),
        "mu": raw.mu.to_dict(),
    }
    with open(Path(path), "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def save_canonical_model(path, cm: CanonicalModel) -> None:
    with open(Path(path), "w") as fh:
        json.dump(cm.to_dict(), fh, indent=2)
        fh.write("\n")
