"""Executable versions of the proof devices behind the local rate results.

Four constructions, each stated as code so its claimed properties can be
asserted numerically:

* a local perturbation of a 1-Lipschitz function psi that stays between a
  reference f and psi on a controlled support interval;
* the explicit 3^k candidate set that covers Lipschitz functions supported
  on [a, b] at sup-distance r;
* the Kullback-Leibler divergence between two regression experiments with
  standard normal noise;
* the disjoint-bump hypothesis family driving the two-sample minimax lower
  bound, with its separation and KL budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .densities import DesignDistribution, interval_mass, mixture
from .errors import (
    DegenerateScaleError,
    InvalidParameterError,
    NonDoublingError,
    NoViolationError,
    SizeCapError,
)
from .spread import SpreadFunction

__all__ = [
    "Perturbation",
    "HypothesisFamily",
    "build_perturbation",
    "lipschitz_cover",
    "cover_center_for",
    "kl_divergence",
    "build_lower_bound_family",
    "transfer_exponent_check",
]


@dataclass(frozen=True)
class Perturbation:
    x_star: float
    x_tilde: float
    s_n: float
    x_ell: float
    x_u: float
    delta: float
    _psi: callable
    _f: callable

    def h(self, x):
        """The shifted tent psi(x~) - f(x~) + delta |x - x~| + f(x) - s_n/2."""
        x = np.asarray(x, float)
        return (self._psi(self.x_tilde) - self._f(self.x_tilde)
                + self.delta * np.abs(x - self.x_tilde) + self._f(x) - self.s_n / 2.0)

    def g(self, x):
        """psi outside [x_ell, x_u], the tent h inside."""
        x = np.asarray(x, float)
        inside = (x >= self.x_ell) & (x <= self.x_u)
        return np.where(inside, self.h(x), self._psi(x))


def _check_lipschitz(fn, grid, const, label):
    vals = np.asarray(fn(grid), float)
    slopes = np.abs(np.diff(vals)) / np.diff(grid)
    if np.any(slopes > const + 1e-7):
        raise InvalidParameterError(f"{label} exceeds Lipschitz budget {const} on the grid")


def _refine_crossing(diff, lo, hi):
    """Bisect for a root of diff between lo (diff >= 0) and hi (diff < 0)."""
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if diff(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) < 1e-10:
            break
    return 0.5 * (lo + hi)


def build_perturbation(psi, f, delta: float, s: SpreadFunction, K: float, grid) -> Perturbation:
    """Construct the controlled perturbation between f and psi.

    Requires that psi exceeds f by at least K t_n somewhere (otherwise there
    is nothing to perturb and a no-violation error is raised).  All argmax
    and crossing searches run on the supplied grid, with one bisection
    refinement for the support endpoints.
    """
    grid = np.sort(np.asarray(grid, float))
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError(f"delta must be in (0, 1), got {delta}")
    _check_lipschitz(psi, grid, 1.0, "psi")
    _check_lipschitz(f, grid, 1.0 - delta, "f")
    t = s.at(grid)
    gap = (np.asarray(psi(grid), float) - np.asarray(f(grid), float))
    if np.max(gap / t) < K:
        raise NoViolationError("psi - f stays below K t_n everywhere on the grid")
    x_star = float(grid[np.argmax(gap / t)])
    shifted = gap - (delta / 2.0) * np.abs(grid - x_star)
    x_tilde = float(grid[np.argmax(shifted)])
    t_tilde = s.at(x_tilde)
    t_star = s.at(x_star)
    s_n = min(2.0 * K * t_tilde, 2.0 * K * t_star + (delta / 2.0) * abs(x_star - x_tilde))

    pert = Perturbation(x_star=x_star, x_tilde=x_tilde, s_n=float(s_n),
                        x_ell=0.0, x_u=1.0, delta=float(delta), _psi=psi, _f=f)
    diff = lambda x: float(pert.h(x) - psi(x))  # noqa: E731  (>= 0 outside the support)
    j = int(np.searchsorted(grid, x_tilde))
    # walk left for the nearest grid point where h meets psi again, then refine
    x_ell = 0.0
    for i in range(j, -1, -1):
        if diff(grid[i]) >= 0.0:
            x_ell = _refine_crossing(diff, grid[i], grid[min(i + 1, grid.size - 1)])
            break
    x_u = 1.0
    for i in range(j, grid.size):
        if diff(grid[i]) >= 0.0:
            x_u = _refine_crossing(diff, grid[i], grid[max(i - 1, 0)])
            break
    object.__setattr__(pert, "x_ell", float(x_ell))
    object.__setattr__(pert, "x_u", float(x_u))
    return pert


@dataclass(frozen=True)
class LipschitzCover:
    """Candidate centers covering {u in Lip(1): supp(u) in [a, b]} at radius r.

    Every center is 0 on the first cell of width r and moves with slope +1,
    -1, or 0 on each later cell; values are tabulated at the cell nodes.
    """

    a: float
    b: float
    r: float
    nodes: np.ndarray
    values: np.ndarray  # (count, nodes) table

    def __len__(self):
        return self.values.shape[0]

    def evaluate(self, i: int, x):
        x = np.asarray(x, float)
        out = np.interp(x, self.nodes, self.values[i])
        return np.where((x < self.a) | (x > self.b), 0.0, out)


def lipschitz_cover(a: float, b: float, r: float) -> LipschitzCover:
    if a >= b:
        raise InvalidParameterError(f"need a < b, got [{a}, {b}]")
    if r <= 0.0:
        raise InvalidParameterError(f"radius must be positive, got {r}")
    k = int(np.floor((b - a) / r))
    if k > 12:
        raise SizeCapError(f"cover would need up to 3^{k} centers; cap is 3^12")
    nodes = np.concatenate([np.arange(a, b, r), [b]])
    cells = nodes.size - 1  # first cell is pinned to 0
    if cells <= 1:
        values = np.zeros((1, nodes.size))
        return LipschitzCover(a, b, r, nodes, values)
    widths = np.diff(nodes)[1:]
    choices = np.stack(np.meshgrid(*([[-1.0, 0.0, 1.0]] * (cells - 1)), indexing="ij"),
                       axis=-1).reshape(-1, cells - 1)
    steps = choices * widths
    values = np.zeros((choices.shape[0], nodes.size))
    values[:, 2:] = np.cumsum(steps, axis=1)
    return LipschitzCover(a, b, r, nodes, values)


def cover_center_for(g, cover: LipschitzCover, probes_per_cell: int = 65) -> np.ndarray:
    """Pick the covering center for g by the per-cell band rule.

    On each cell after the first, move up if g escapes the +r band around
    the current level somewhere in the cell, down if it escapes the -r band,
    and stay level otherwise.  For g in Lip(1) vanishing outside [a, b] the
    produced center is within r of g in sup-norm.  Returns node values.
    """
    nodes, r = cover.nodes, cover.r
    vals = np.zeros(nodes.size)
    for i in range(1, nodes.size - 1):
        probes = np.linspace(nodes[i], nodes[i + 1], probes_per_cell)
        gp = np.asarray(g(probes), float)
        width = nodes[i + 1] - nodes[i]
        if np.any(gp - vals[i] > r):
            vals[i + 1] = vals[i] + width
        elif np.any(gp - vals[i] < -r):
            vals[i + 1] = vals[i] - width
        else:
            vals[i + 1] = vals[i]
    return vals


def kl_divergence(f, g, P: DesignDistribution, Q: DesignDistribution,
                  n: int, m: int, nodes: int = 4097) -> float:
    """(n/2) int (f-g)^2 p + (m/2) int (f-g)^2 q, standard normal noise."""
    if nodes < 64:
        raise InvalidParameterError(f"need at least 64 quadrature nodes, got {nodes}")
    if n < 0 or m < 0:
        raise InvalidParameterError("sample sizes must be non-negative")
    if nodes % 2 == 0:
        nodes += 1
    xs = np.linspace(0.0, 1.0, nodes)
    sq = (np.asarray(f(xs), float) - np.asarray(g(xs), float)) ** 2
    out = 0.0
    if n:
        out += 0.5 * n * float(simpson(sq * P.density(xs), x=xs))
    if m:
        out += 0.5 * m * float(simpson(sq * Q.density(xs), x=xs))
    return out


@dataclass(frozen=True)
class HypothesisFamily:
    """Disjoint tent bumps f_j(x) = (height_j - |x - center_j|)_+ plus f_0 = 0."""

    centers: np.ndarray
    heights: np.ndarray
    psi_n: float
    n: int
    m: int
    size_constraint_met: bool

    @property
    def count(self):
        return self.centers.size

    def f(self, j: int, x):
        """Hypothesis j; j = 0 is the zero function."""
        x = np.asarray(x, float)
        if j == 0:
            return np.zeros_like(x)
        c, h = self.centers[j - 1], self.heights[j - 1]
        return np.maximum(h - np.abs(x - c), 0.0)


def build_lower_bound_family(P: DesignDistribution, Q: DesignDistribution,
                             n: int, m: int) -> HypothesisFamily:
    """Bump hypotheses on the intervals where the pooled design carries mass.

    Splits [0, 1] into cells of width 2 psi_N with psi_N = (log N/N)^(1/3),
    keeps cells of mixture mass >= psi_N, and puts a tent of height
    t_{n,m}(center)/6 on each kept cell, where t_{n,m} is the smaller of the
    two spread functions.
    """
    if n < 2 or m < 2:
        raise InvalidParameterError("family needs n, m >= 2")
    N = n + m
    psi = (np.log(N) / N) ** (1.0 / 3.0)
    if psi > 0.25:
        raise InvalidParameterError(f"scale psi_N = {psi:.3f} > 1/4; increase n + m")
    M = int(np.ceil(1.0 / (2.0 * psi)))
    k = np.arange(1, M + 1)
    centers = (2.0 * k - 1.0) * psi
    mixed = mixture(P, Q, n / N)
    masses = interval_mass(mixed, centers - psi, np.minimum(centers + psi, 1.0))
    keep = masses >= psi
    if not np.any(keep):
        raise DegenerateScaleError("no cell carries mass psi_N under the pooled design")
    centers = centers[keep]
    t_nm = np.minimum(SpreadFunction(P, n).at(centers), SpreadFunction(Q, m).at(centers))
    c_inf = mixed.sup_density
    ok = N ** 0.25 <= (N / np.log(N)) ** (1.0 / 3.0) / (6.0 * (2.0 * c_inf - 1.0))
    return HypothesisFamily(centers=centers, heights=t_nm / 6.0, psi_n=float(psi),
                            n=n, m=m, size_constraint_met=bool(ok))


def transfer_exponent_check(P: DesignDistribution, Q: DesignDistribution,
                            gamma: float, eta_grid, x_grid) -> float:
    """max over eta of eta^gamma int q(x) / P([x +- eta]) dx.

    A value that stays bounded as the eta grid refines toward 0 indicates
    transfer exponent at most gamma for the pair (P, Q).
    """
    eta_grid = np.asarray(eta_grid, float)
    x_grid = np.asarray(x_grid, float)
    if eta_grid.size == 0 or x_grid.size == 0:
        raise InvalidParameterError("grids must be nonempty")
    q = Q.density(x_grid)
    best = -np.inf
    for eta in eta_grid:
        mass = interval_mass(P, x_grid - eta, x_grid + eta)
        if np.any(mass <= 0.0):
            raise NonDoublingError(f"zero interval mass at radius {eta}")
        best = max(best, eta**gamma * float(np.trapezoid(q / mass, x_grid)))
    return best
