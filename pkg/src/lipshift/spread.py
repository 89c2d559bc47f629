"""The spread function t_n and its empirical counterpart.

t_n(x) is the unique positive solution of

    t^2 * P([x - t, x + t] \\cap [0, 1]) = log(n) / n.

Since both factors are nondecreasing in t, the map t -> t^2 P([x +- t]) is
nondecreasing, so plain bisection on [sqrt(log n / n), 1] converges to the
smallest (hence the) solution.  Everything here is vectorized over x.
"""

from __future__ import annotations

import numpy as np

from .densities import DesignDistribution, interval_mass
from .errors import (
    InvalidParameterError,
    NoBoundAvailableError,
    NondifferentiablePointError,
)

__all__ = [
    "SpreadFunction",
    "EmpiricalSpread",
    "spread_at",
    "spread_derivative",
    "closed_form_bounds",
    "empirical_spread",
    "vanishing_density_bounds",
]


class SpreadFunction:
    """Evaluator for t_n bound to a (distribution, n) pair.

    ``tol`` is the relative residual target for the defining equation.  An
    optional uniform cache grid speeds up repeated bulk evaluation; cached
    lookups interpolate linearly, with error bounded by the grid spacing
    because t_n is 1-Lipschitz.
    """

    def __init__(self, distribution: DesignDistribution, n: int, tol: float = 1e-12,
                 cache_nodes: int | None = None):
        if n <= 1:
            raise InvalidParameterError(f"spread function needs n > 1, got {n}")
        self.distribution = distribution
        self.n = int(n)
        self.tol = float(tol)
        self.threshold = np.log(n) / n
        self._cache_x = None
        self._cache_t = None
        if cache_nodes is not None:
            if cache_nodes < 2:
                raise InvalidParameterError("cache needs at least 2 nodes")
            self._cache_x = np.linspace(0.0, 1.0, int(cache_nodes))
            self._cache_t = self.at(self._cache_x)

    def at(self, x):
        """Solve the defining equation by bisection; vectorized over x."""
        x = np.asarray(x, float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        lo = np.full_like(x, np.sqrt(self.threshold) * (1.0 - 1e-9))
        hi = np.ones_like(x)
        d = self.distribution
        for _ in range(200):
            t = 0.5 * (lo + hi)
            below = t**2 * interval_mass(d, x - t, x + t) < self.threshold
            lo = np.where(below, t, lo)
            hi = np.where(below, hi, t)
        t = 0.5 * (lo + hi)
        return float(t[0]) if scalar else t

    def cached_at(self, x):
        """Linear interpolation on the cache grid (build with cache_nodes)."""
        if self._cache_x is None:
            raise InvalidParameterError("no cache was built for this spread function")
        return np.interp(np.asarray(x, float), self._cache_x, self._cache_t)

    def derivative(self, x: float) -> float:
        """Closed-form derivative of t_n; undefined where t_n(x) hits x or 1-x.

        Uses the implicit-function form: with t = t_n(x),

            t'(x) = [p(x-t) 1(t<=x) - p(x+t) 1(t<=1-x)]
                    / [2 log(n)/(n t^3) + p(x+t) 1(t<=1-x) + p(x-t) 1(t<=x)].
        """
        x = float(x)
        if not 0.0 < x < 1.0:
            raise NondifferentiablePointError(f"derivative defined on (0,1) only, got x={x}")
        t = self.at(x)
        if abs(t - x) <= 1e-6 or abs(t - (1.0 - x)) <= 1e-6:
            raise NondifferentiablePointError(
                f"x={x} is within 1e-6 of a kink of the spread function"
            )
        p = self.distribution.density
        left = 1.0 if t <= x else 0.0
        right = 1.0 if t <= 1.0 - x else 0.0
        num = float(p(x - t)) * left - float(p(x + t)) * right
        den = 2.0 * self.threshold / t**3 + float(p(x + t)) * right + float(p(x - t)) * left
        return num / den

    def closed_form_bounds(self, x):
        """Published (lower, upper) envelope for t_n(x), by distribution kind.

        * constant or tabulated strictly positive density: the cube-root
          sandwich with the density's inf and sup;
        * power(alpha): the two-regime bounds split at
          a_n = (log n / (2^(a+1) n))^(1/(a+3));
        * example3: the smooth-density sandwich
          (log n/(3 n p(x)))^(1/3) <= t_n <= (2 log n/(n p(x)))^(1/3).
        """
        x = np.asarray(x, float)
        d = self.distribution
        ln = self.threshold
        if d.kind == "uniform":
            lo = (ln / 2.0) ** (1.0 / 3.0)
            hi = ln ** (1.0 / 3.0)
            return np.broadcast_to(lo, x.shape).copy() if x.ndim else lo, \
                np.broadcast_to(hi, x.shape).copy() if x.ndim else hi
        if d.kind == "power":
            a = d.params["alpha"]
            a_n = (ln / 2.0 ** (a + 1.0)) ** (1.0 / (a + 3.0))
            lo_in = (ln / 2.0 ** (a + 1.0)) ** (1.0 / (a + 3.0))
            hi_in = ln ** (1.0 / (a + 3.0))
            with np.errstate(divide="ignore"):
                xa = np.maximum(x, a_n) ** a
            lo_out = (ln / (2.0 ** (a + 1.0) * (a + 1.0) * xa)) ** (1.0 / 3.0)
            hi_out = (ln / xa) ** (1.0 / 3.0)
            lo = np.where(x <= a_n, lo_in, lo_out)
            hi = np.where(x <= a_n, hi_in, hi_out)
            return (float(lo), float(hi)) if lo.ndim == 0 else (lo, hi)
        if d.kind == "example3":
            p = d.density(x)
            lo = (ln / (3.0 * p)) ** (1.0 / 3.0)
            hi = (2.0 * ln / p) ** (1.0 / 3.0)
            return (float(lo), float(hi)) if np.ndim(lo) == 0 else (lo, hi)
        if d.kind == "tabulated":
            v = d.params["values"]
            if v.min() > 0.0:
                lo = (ln / (2.0 * v.max())) ** (1.0 / 3.0)
                hi = (ln / v.min()) ** (1.0 / 3.0)
                shape = np.shape(x)
                if shape:
                    return np.full(shape, lo), np.full(shape, hi)
                return lo, hi
        raise NoBoundAvailableError(f"no closed-form spread bound for kind {d.kind!r}")


def vanishing_density_bounds(n: int, alpha: float, bound: float):
    """(lower, upper) for t_n at a zero of the density with local growth x^alpha.

    Assumes 1/bound <= p(x)/|x - x0|^alpha <= bound near the zero; then

        ((a+1) log n / (bound n))^(1/(a+3)) <= t_n(x0)
            <= ((a+1) bound log n / n)^(1/(a+3)).
    """
    if n <= 1 or alpha <= 0 or bound <= 0:
        raise InvalidParameterError("need n > 1, alpha > 0, bound > 0")
    ln = np.log(n) / n
    e = 1.0 / (alpha + 3.0)
    return ((alpha + 1.0) * ln / bound) ** e, ((alpha + 1.0) * bound * ln) ** e


class EmpiricalSpread:
    """Plug-in spread estimate from observed design points.

    t_hat(x) = inf{t : t^2 #{i : |X_i - x| <= t} / n >= log n / n}.  With
    r_1 <= ... <= r_n the sorted distances to x, the infimum equals
    min_k max(r_k, sqrt(log n / k)) -- the counting function only jumps at
    the r_k, and between jumps the best t is the root of t^2 k/n = log n/n.
    """

    def __init__(self, points):
        pts = np.sort(np.asarray(points, float))
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidParameterError("empirical spread needs at least 2 points")
        self.points = pts
        self.n = pts.size
        self._floor = np.sqrt(np.log(self.n) / np.arange(1, self.n + 1))

    def at(self, x):
        x = np.asarray(x, float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        # n x grid distance matrix, sorted per column
        r = np.sort(np.abs(self.points[:, None] - x[None, :]), axis=0)
        out = np.min(np.maximum(r, self._floor[:, None]), axis=0)
        return float(out[0]) if scalar else out


# free-function aliases mirroring the method API

def spread_at(s: SpreadFunction, x):
    return s.at(x)


def spread_derivative(s: SpreadFunction, x: float) -> float:
    return s.derivative(x)


def closed_form_bounds(s: SpreadFunction, x):
    return s.closed_form_bounds(x)


def empirical_spread(e: EmpiricalSpread, x):
    return e.at(x)
