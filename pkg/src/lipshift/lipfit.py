"""Least squares estimators on [0, 1] and the losses used to judge them.

The Lipschitz-constrained LSE

    min sum_i (y_i - f_i)^2   s.t.  |f_{i+1} - f_i| <= L (x_{i+1} - x_i)

is solved exactly by dynamic programming on the derivative of the value
function.  In one dimension the adjacent-pair constraints imply all pairwise
ones, so the feasible set is a chain of slabs.  Sweeping left to right, the
partial value function

    V_k(z) = w_k (z - y_k)^2 + min_{|z - z'| <= u_{k-1}} V_{k-1}(z')

is convex piecewise quadratic, so V_k' is nondecreasing piecewise linear and
can be carried as a list of breakpoints.  The box-constrained minimization
clips V' around its root, which shifts the negative branch left by the gap
budget and the positive branch right.  A backward pass then recovers the
unique minimizer.  The same file houses the isotonic min-max LSE, a fixed
bandwidth kernel smoother, and the sup/L2 losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .densities import DesignDistribution
from .errors import InvalidInputError, InvalidParameterError, ZeroDensityError

__all__ = [
    "RegressionSample",
    "LipschitzFit",
    "fit_lipschitz_lse",
    "evaluate",
    "fit_isotonic_lse",
    "isotonic_minmax",
    "isotonic_evaluate",
    "kernel_smoother",
    "weighted_sup_loss",
    "l2_risk",
]


@dataclass(frozen=True)
class RegressionSample:
    """(x, y) pairs stored sorted by x."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        if x.size == 0 or x.shape != y.shape:
            raise InvalidInputError("sample needs matching nonempty x and y")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", x[order])
        object.__setattr__(self, "y", y[order])

    @property
    def n(self):
        return self.x.size


@dataclass(frozen=True)
class LipschitzFit:
    knots: np.ndarray
    values: np.ndarray
    budget: float
    objective: float
    kkt_residual: float

    def evaluate(self, x):
        """Piecewise-linear between knots, constant beyond the data range."""
        return np.interp(np.asarray(x, float), self.knots, self.values)


def _merge_duplicates(x, y):
    """Collapse tied x to one weighted pseudo-point at the group mean.

    Returns (xu, ybar, w, extra) where extra is the within-group sum of
    squares, a constant offset of the objective.
    """
    xu, start = np.unique(x, return_index=True)
    if xu.size == x.size:
        return xu, y.copy(), np.ones_like(y), 0.0
    idx = np.searchsorted(xu, x)
    w = np.bincount(idx, minlength=xu.size).astype(float)
    ysum = np.bincount(idx, weights=y, minlength=xu.size)
    ybar = ysum / w
    extra = float(np.sum(y**2) - np.sum(w * ybar**2))
    return xu, ybar, w, extra


def _pwl_root(xs, vs, s_left, s_right):
    """Root of a nondecreasing piecewise-linear function with end slopes."""
    if vs[0] > 0.0:
        return xs[0] - vs[0] / s_left
    if vs[-1] < 0.0:
        return xs[-1] - vs[-1] / s_right
    i = int(np.searchsorted(vs, 0.0, side="left"))
    if vs[i] == 0.0:
        return xs[i]
    # vs[i-1] < 0 < vs[i]
    return xs[i - 1] - vs[i - 1] * (xs[i] - xs[i - 1]) / (vs[i] - vs[i - 1])


def fit_lipschitz_lse(sample: RegressionSample, L: float, tol: float = 1e-8) -> LipschitzFit:
    """Exact minimizer of the slope-constrained least squares problem."""
    if not 0.0 < L <= 1.0:
        raise InvalidParameterError(f"Lipschitz budget must be in (0, 1], got {L}")
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    x, y = sample.x, sample.y
    xu, ybar, w, extra = _merge_duplicates(x, y)
    k = xu.size
    gaps = L * np.diff(xu)

    # V_1'(z) = 2 w_1 (z - ybar_1)
    xs = np.array([ybar[0]])
    vs = np.array([0.0])
    s_left = s_right = 2.0 * w[0]
    mids = np.empty(k - 1)
    for i in range(1, k):
        u = gaps[i - 1]
        m = _pwl_root(xs, vs, s_left, s_right)
        mids[i - 1] = m
        neg = vs < 0.0
        pos = vs > 0.0
        xs = np.concatenate([xs[neg] - u, [m - u, m + u], xs[pos] + u])
        vs = np.concatenate([vs[neg], [0.0, 0.0], vs[pos]])
        vs = vs + 2.0 * w[i] * (xs - ybar[i])
        s_left += 2.0 * w[i]
        s_right += 2.0 * w[i]

    f = np.empty(k)
    f[-1] = _pwl_root(xs, vs, s_left, s_right)
    for i in range(k - 2, -1, -1):
        f[i] = np.clip(mids[i], f[i + 1] - gaps[i], f[i + 1] + gaps[i])

    objective = float(np.sum(w * (f - ybar) ** 2) + extra)
    residual = _kkt_residual(f, ybar, w, gaps)
    return LipschitzFit(knots=xu, values=f, budget=float(L),
                        objective=objective, kkt_residual=residual)


def _kkt_residual(f, ybar, w, gaps, active_tol=1e-7):
    """Stationarity violation of the chain-constrained quadratic program.

    Running multipliers nu_j (upper minus lower, per gap) follow from the
    stationarity equations in one sweep: nu_j = nu_{j-1} + 2 w_j (f_j - y_j).
    At the optimum nu ends at zero, vanishes on inactive gaps, and has the
    sign of the active constraint elsewhere.
    """
    nu = np.cumsum(2.0 * w * (f - ybar))
    res = abs(nu[-1])
    if f.size == 1:
        return res
    d = np.diff(f)
    inner = nu[:-1]
    slack = gaps - np.abs(d)
    upper = d > 0.0
    viol = np.where(slack > active_tol * (1.0 + gaps), np.abs(inner),
                    np.where(upper, np.maximum(0.0, -inner), np.maximum(0.0, inner)))
    return float(max(res, viol.max()))


def evaluate(fit: LipschitzFit, x):
    return fit.evaluate(x)


def fit_isotonic_lse(sample: RegressionSample) -> np.ndarray:
    """Nondecreasing least squares fit at the design points (pool adjacent
    violators); identical to the min-max partial-sum formula."""
    y = sample.y
    # blocks as (total, count) pairs merged while out of order
    totals = [y[0]]
    counts = [1]
    for v in y[1:]:
        totals.append(v)
        counts.append(1)
        while len(totals) > 1 and totals[-2] * counts[-1] >= totals[-1] * counts[-2]:
            totals[-2] += totals[-1]
            counts[-2] += counts[-1]
            totals.pop()
            counts.pop()
    out = np.empty(y.size)
    pos = 0
    for t, c in zip(totals, counts):
        out[pos:pos + c] = t / c
        pos += c
    return out


def isotonic_minmax(sample: RegressionSample) -> np.ndarray:
    """Direct min over i of max over j of (S_i - S_j)/(i - j) at each design
    point; quadratic cost, kept as an independent cross-check of the fit."""
    y = sample.y
    n = y.size
    s = np.concatenate([[0.0], np.cumsum(y)])
    out = np.empty(n)
    for k in range(1, n + 1):
        i = np.arange(k, n + 1)
        j = np.arange(0, k)
        ratios = (s[i][:, None] - s[j][None, :]) / (i[:, None] - j[None, :])
        out[k - 1] = ratios.max(axis=1).min()
    return out


def isotonic_evaluate(sample: RegressionSample, x) -> np.ndarray:
    """Piecewise-constant extension of the isotonic fit: the value at x is
    min_{i >= k+(x)} max_{j <= k-(x)} (S_i - S_j)/(i - j), which equals the
    fitted value at the first design point >= x (last one, right of all)."""
    fitted = fit_isotonic_lse(sample)
    x = np.asarray(x, float)
    idx = np.minimum(np.searchsorted(sample.x, x, side="left"), sample.n - 1)
    return fitted[idx]


def kernel_smoother(sample: RegressionSample, d: DesignDistribution, h: float, x: float) -> float:
    """Triangular-kernel smoother (1/(n h p(x))) sum y_i K((x_i - x)/h)."""
    if h <= 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {h}")
    px = float(d.density(x))
    if px <= 0.0:
        raise ZeroDensityError(f"density vanishes at x={x}")
    u = (sample.x - x) / h
    kern = np.maximum(1.0 - np.abs(u), 0.0)
    return float(np.sum(sample.y * kern) / (sample.n * h * px))


def weighted_sup_loss(fit_eval, f0, t, grid) -> float:
    """max over the grid of |fit(x) - f0(x)| / t(x)."""
    grid = np.asarray(grid, float)
    if grid.size == 0:
        raise InvalidInputError("loss grid is empty")
    tx = np.asarray(t(grid), float)
    if np.any(tx <= 0.0):
        raise InvalidParameterError("weight function must be positive on the grid")
    return float(np.max(np.abs(np.asarray(fit_eval(grid)) - np.asarray(f0(grid))) / tx))


def l2_risk(fit_eval, f0, q: DesignDistribution, nodes: int = 4097) -> float:
    """Simpson quadrature of (fit - f0)^2 q over [0, 1]."""
    if nodes < 16:
        raise InvalidParameterError(f"need at least 16 quadrature nodes, got {nodes}")
    if nodes % 2 == 0:
        nodes += 1
    xs = np.linspace(0.0, 1.0, nodes)
    integrand = (np.asarray(fit_eval(xs)) - np.asarray(f0(xs))) ** 2 * q.density(xs)
    return float(simpson(integrand, x=xs))
