"""Monte Carlo rate experiments.

Generates data from y = f0(x) + noise over a grid of sample sizes, runs the
requested estimators with replication, evaluates losses on a fixed grid, and
fits log-log slopes of the mean loss against n.  Everything is driven by a
JSON config and fully determined by (config, seed): replicate r at sample
size n draws from the stream seeded with [seed, n, r], so adding replicates
or sample sizes never disturbs existing draws.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import densities
from .densities import DesignDistribution
from .errors import ConfigError, ExperimentError, InvalidInputError
from .lipfit import (
    RegressionSample,
    fit_lipschitz_lse,
    isotonic_evaluate,
    l2_risk,
    weighted_sup_loss,
)
from .spread import SpreadFunction
from .transfer import TwoSampleData, fit_transfer

__all__ = [
    "ExperimentConfig",
    "RateReport",
    "make_f0",
    "generate",
    "run_rate_experiment",
    "fit_loglog_slope",
]

EVAL_GRID_SIZE = 201
KNOWN_ESTIMATORS = ("lse", "kernel", "isotonic", "transfer")
KNOWN_LOSSES = ("weighted_sup", "sup", "l2_q")


def make_f0(spec: dict, delta: float):
    """Regression function from its config entry; checks the Lip(1 - delta)
    budget analytically per kind."""
    kind = spec.get("kind", "zero").lower()
    if kind == "zero":
        return (lambda x: np.zeros_like(np.asarray(x, float))), 0.0
    if kind == "triangle":
        c = float(spec.get("center", 0.5))
        s = float(spec.get("slope", 0.5))
        lip = abs(s)
        f0 = lambda x: s * np.maximum(0.25 - np.abs(np.asarray(x, float) - c), 0.0)  # noqa: E731
    elif kind == "sine":
        a = float(spec.get("amplitude", 0.1))
        freq = float(spec.get("frequency", 1.0))
        lip = abs(a) * 2.0 * np.pi * freq
        f0 = lambda x: a * np.sin(2.0 * np.pi * freq * np.asarray(x, float))  # noqa: E731
    else:
        raise ConfigError(f"unknown f0 kind: {kind!r}")
    if lip > 1.0 - delta + 1e-12:
        raise ConfigError(f"f0 has Lipschitz constant {lip:.4f} > 1 - delta = {1 - delta:.4f}")
    return f0, lip


@dataclass
class ExperimentConfig:
    distribution: DesignDistribution
    f0_spec: dict
    delta: float = 0.1
    n_grid: list = field(default_factory=lambda: [256, 512, 1024])
    m_grid: list | None = None
    replicates: int = 20
    seed: int = 0
    estimators: list = field(default_factory=lambda: ["lse"])
    losses: list = field(default_factory=lambda: ["sup"])
    target_distribution: DesignDistribution | None = None
    noise_sd: float = 1.0
    bandwidth: str | float = "rate"  # "rate" -> (log n/n)^(1/3), or a number
    budget: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must be in (0, 1), got {self.delta}")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        if list(self.n_grid) != sorted(self.n_grid) or len(self.n_grid) == 0:
            raise ConfigError("n_grid must be nonempty and ascending")
        for e in self.estimators:
            if e not in KNOWN_ESTIMATORS:
                raise ConfigError(f"unknown estimator {e!r}")
        for l in self.losses:
            if l not in KNOWN_LOSSES:
                raise ConfigError(f"unknown loss {l!r}")
        if "transfer" in self.estimators:
            if self.target_distribution is None or self.m_grid is None:
                raise ConfigError("transfer runs need target_distribution and m_grid")
        self.f0, self.f0_lip = make_f0(self.f0_spec, self.delta)

    @classmethod
    def from_json(cls, obj):
        """Build from a JSON dict (or path contents already parsed)."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            dist = densities.from_spec(obj["distribution"])
        except KeyError as exc:
            raise ConfigError("config needs a 'distribution' entry") from exc
        target = obj.get("target_distribution")
        kwargs = dict(
            distribution=dist,
            f0_spec=obj.get("f0", {"kind": "zero"}),
            delta=obj.get("delta", 0.1),
            n_grid=list(obj.get("n_grid", [256, 512, 1024])),
            m_grid=list(obj["m_grid"]) if "m_grid" in obj else None,
            replicates=obj.get("replicates", 20),
            seed=obj.get("seed", 0),
            estimators=list(obj.get("estimators", ["lse"])),
            losses=list(obj.get("losses", ["sup"])),
            target_distribution=densities.from_spec(target) if target else None,
            noise_sd=obj.get("noise_sd", 1.0),
            bandwidth=obj.get("bandwidth", "rate"),
            budget=obj.get("budget", 1.0),
        )
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _draw(dist, f0, noise_sd, n, seed) -> RegressionSample:
    rng = np.random.default_rng(seed)
    x = np.atleast_1d(np.asarray(dist.ppf(rng.random(n)), float))
    y = f0(x) + noise_sd * rng.standard_normal(n)
    return RegressionSample(x, y)


def generate(config: ExperimentConfig, n: int, seed) -> RegressionSample:
    """One dataset: X from the design, y = f0(X) + noise_sd * N(0, 1)."""
    return _draw(config.distribution, config.f0, config.noise_sd, n, seed)


def _kernel_eval_grid(sample: RegressionSample, d: DesignDistribution, h: float, grid):
    """Triangular-kernel smoother evaluated on a whole grid at once."""
    u = (sample.x[None, :] - grid[:, None]) / h
    kern = np.maximum(1.0 - np.abs(u), 0.0)
    px = d.density(grid)
    return kern @ sample.y / (sample.n * h * px)


@dataclass
class RateReport:
    rows: list  # per (estimator, loss, n[, m]) aggregate dicts
    losses: list  # per-replicate records
    slopes: dict  # (estimator, loss) -> {"slope":, "stderr":}
    metadata: dict

    def to_json(self) -> str:
        return json.dumps({
            "rows": self.rows,
            "slopes": {f"{e}/{l}": v for (e, l), v in self.slopes.items()},
            "metadata": self.metadata,
        }, indent=2, sort_keys=True)

    def write(self, report_path, losses_path):
        with open(report_path, "w") as fh:
            fh.write(self.to_json() + "\n")
        with open(losses_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["estimator", "loss", "n", "m", "replicate", "value"])
            for rec in self.losses:
                writer.writerow([rec["estimator"], rec["loss"], rec["n"],
                                 rec.get("m", ""), rec["replicate"], repr(rec["value"])])


def fit_loglog_slope(points):
    """OLS slope (with standard error) of log(loss) on log(n)."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise InvalidInputError("slope fitting needs at least 3 points")
    if any(v <= 0.0 for _, v in pts):
        raise InvalidInputError("slope fitting needs strictly positive losses")
    lx = np.log([n for n, _ in pts])
    ly = np.log([v for _, v in pts])
    (slope, icept), cov = np.polyfit(lx, ly, 1, cov=True)
    return float(slope), float(np.sqrt(cov[0, 0]))


def _replicate_losses(config, n, m, rep, grid, spread_grid, f0_grid):
    """All requested (estimator, loss) values for one replicate."""
    out = {}
    sample = generate(config, n, [config.seed, n, rep])
    evals = {}
    if "lse" in config.estimators:
        evals["lse"] = fit_lipschitz_lse(sample, config.budget).evaluate(grid)
    if "isotonic" in config.estimators:
        evals["isotonic"] = isotonic_evaluate(sample, grid)
    if "kernel" in config.estimators:
        h = (np.log(n) / n) ** (1.0 / 3.0) if config.bandwidth == "rate" else float(config.bandwidth)
        evals["kernel"] = _kernel_eval_grid(sample, config.distribution, h, grid)
    if "transfer" in config.estimators:
        target = _draw(config.target_distribution, config.f0, config.noise_sd,
                       m, [config.seed + 1, m, rep])
        data = TwoSampleData(sample, target, config.distribution, config.target_distribution)
        evals["transfer"] = fit_transfer(data, config.budget).evaluate(grid)
    q = config.target_distribution or config.distribution
    for est, fx in evals.items():
        err = fx - f0_grid
        for loss in config.losses:
            if loss == "sup":
                out[(est, loss)] = float(np.max(np.abs(err)))
            elif loss == "weighted_sup":
                out[(est, loss)] = float(np.max(np.abs(err) / spread_grid))
            else:  # l2_q, trapezoid on the evaluation grid against the target density
                out[(est, loss)] = float(np.trapezoid(err**2 * q.density(grid), grid))
    return out


def run_rate_experiment(config: ExperimentConfig) -> RateReport:
    grid = np.linspace(0.0, 1.0, EVAL_GRID_SIZE)
    f0_grid = config.f0(grid)
    rows, loss_records = [], []
    failures = 0
    total = 0
    m_grid = config.m_grid if config.m_grid is not None else [None] * len(config.n_grid)
    if len(m_grid) != len(config.n_grid):
        # cross product is not supported; pair the grids index by index
        raise ConfigError("m_grid must have the same length as n_grid")
    for n, m in zip(config.n_grid, m_grid):
        spread_grid = SpreadFunction(config.distribution, n).at(grid) \
            if "weighted_sup" in config.losses else None
        cell = {}
        for rep in range(config.replicates):
            total += 1
            try:
                vals = _replicate_losses(config, n, m, rep, grid, spread_grid, f0_grid)
            except Exception:
                failures += 1
                continue
            for key, v in vals.items():
                cell.setdefault(key, []).append(v)
                loss_records.append({"estimator": key[0], "loss": key[1], "n": n,
                                     "m": m, "replicate": rep, "value": v})
        for (est, loss), vals in sorted(cell.items()):
            vals = np.asarray(vals)
            rows.append({
                "estimator": est, "loss": loss, "n": n, "m": m,
                "mean": float(vals.mean()), "median": float(np.median(vals)),
                "stderr": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0,
                "replicates": int(vals.size),
            })
    if failures > 0.05 * total:
        raise ExperimentError(f"{failures}/{total} replicates failed")
    slopes = {}
    if len(config.n_grid) >= 3:
        for est in config.estimators:
            for loss in config.losses:
                pts = [(r["n"], r["mean"]) for r in rows
                       if r["estimator"] == est and r["loss"] == loss]
                # machine-precision losses (e.g. noiseless exact recovery)
                # carry no rate information; leave the slope undefined
                if len(pts) >= 3 and all(v > 1e-12 for _, v in pts):
                    s, se = fit_loglog_slope(pts)
                    slopes[(est, loss)] = {"slope": s, "stderr": se}
    metadata = {
        "seed": config.seed,
        "replicate_failures": failures,
        "grid_size": EVAL_GRID_SIZE,
        "doubling_constant": densities.doubling_constant(config.distribution, 0.1),
        "f0_lipschitz": config.f0_lip,
    }
    return RateReport(rows=rows, losses=loss_records, slopes=slopes, metadata=metadata)
