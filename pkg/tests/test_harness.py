import json

import numpy as np
import pytest

from lipshift import densities
from lipshift.errors import ConfigError, ExperimentError, InvalidInputError
from lipshift.harness import (
    ExperimentConfig,
    fit_loglog_slope,
    generate,
    make_f0,
    run_rate_experiment,
)


def _config(**over):
    base = dict(distribution=densities.uniform(),
                f0_spec={"kind": "sine", "amplitude": 0.1, "frequency": 1.0},
                n_grid=[64, 128, 256], replicates=3, seed=1)
    base.update(over)
    return ExperimentConfig(**base)


# --- regression functions -----------------------------------------------

def test_triangle_f0_values_and_lipschitz():
    f0, lip = make_f0({"kind": "triangle", "center": 0.5, "slope": 0.5}, 0.1)
    assert lip == 0.5
    assert f0(0.5) == pytest.approx(0.125)
    assert f0(0.25) == 0.0 and f0(0.9) == 0.0
    assert f0(0.4) == pytest.approx(0.075)


def test_sine_f0_lipschitz_budget():
    f0, lip = make_f0({"kind": "sine", "amplitude": 0.9 / (2 * np.pi), "frequency": 1.0}, 0.1)
    assert lip == pytest.approx(0.9)
    with pytest.raises(ConfigError):
        make_f0({"kind": "sine", "amplitude": 0.2, "frequency": 1.0}, 0.1)


def test_unknown_f0_kind():
    with pytest.raises(ConfigError):
        make_f0({"kind": "spline"}, 0.1)


# --- data generation ----------------------------------------------------

def test_generate_deterministic_in_seed():
    cfg = _config()
    a = generate(cfg, 50, [1, 50, 0])
    b = generate(cfg, 50, [1, 50, 0])
    c = generate(cfg, 50, [1, 50, 1])
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)


def test_generate_zero_noise_recovers_f0():
    cfg = _config(noise_sd=0.0)
    s = generate(cfg, 100, 7)
    assert np.allclose(s.y, cfg.f0(s.x))


def test_generate_mean_matches_f0():
    cfg = _config(f0_spec={"kind": "zero"})
    s = generate(cfg, 200_000, 11)
    assert abs(np.mean(s.y)) < 3.0 / np.sqrt(200_000)
    assert np.std(s.y) == pytest.approx(1.0, abs=0.01)


# --- slope fitting ------------------------------------------------------

def test_slope_exact_power_law():
    ns = [100, 200, 400, 800]
    slope, se = fit_loglog_slope([(n, 3.0 * n ** (-1 / 3)) for n in ns])
    assert slope == pytest.approx(-1 / 3, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_slope_constant_is_zero():
    slope, _ = fit_loglog_slope([(n, 2.5) for n in (10, 100, 1000)])
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_slope_noisy_within_three_stderr():
    rng = np.random.default_rng(2)
    ns = np.geomspace(100, 10_000, 8)
    vals = ns ** -0.5 * np.exp(0.05 * rng.standard_normal(8))
    slope, se = fit_loglog_slope(list(zip(ns, vals)))
    assert abs(slope + 0.5) <= 3.0 * se


def test_slope_input_checks():
    with pytest.raises(InvalidInputError):
        fit_loglog_slope([(10, 1.0), (20, 0.5)])
    with pytest.raises(InvalidInputError):
        fit_loglog_slope([(10, 1.0), (20, 0.5), (40, 0.0)])


# --- config parsing -----------------------------------------------------

def test_config_from_json_roundtrip():
    obj = {"distribution": {"kind": "power", "alpha": 1.0},
           "f0": {"kind": "triangle", "slope": 0.3},
           "n_grid": [32, 64, 128], "replicates": 2, "seed": 9,
           "estimators": ["lse", "isotonic"], "losses": ["sup", "l2_q"]}
    cfg = ExperimentConfig.from_json(json.dumps(obj))
    assert cfg.distribution.kind == "power"
    assert cfg.seed == 9 and cfg.replicates == 2
    assert cfg.f0_lip == pytest.approx(0.3)


@pytest.mark.parametrize("bad", [
    {"f0": {"kind": "zero"}},                                # missing distribution
    {"distribution": {"kind": "uniform"}, "n_grid": [64, 32]},
    {"distribution": {"kind": "uniform"}, "estimators": ["forest"]},
    {"distribution": {"kind": "uniform"}, "losses": ["hinge"]},
    {"distribution": {"kind": "uniform"}, "replicates": 0},
    {"distribution": {"kind": "uniform"}, "delta": 1.5},
    {"distribution": {"kind": "uniform"}, "estimators": ["transfer"]},
])
def test_config_rejects_bad_entries(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(json.dumps(bad))


def test_transfer_needs_matching_grids():
    cfg = _config(estimators=["transfer"], m_grid=[64, 128],
                  target_distribution=densities.uniform())
    with pytest.raises(ConfigError):
        run_rate_experiment(cfg)


# --- experiments --------------------------------------------------------

def test_experiment_deterministic():
    r1 = run_rate_experiment(_config())
    r2 = run_rate_experiment(_config())
    assert r1.rows == r2.rows
    assert r1.losses == r2.losses


def test_adding_replicates_keeps_earlier_draws():
    small = run_rate_experiment(_config(replicates=2))
    large = run_rate_experiment(_config(replicates=4))
    key = lambda rec: (rec["estimator"], rec["loss"], rec["n"], rec["replicate"])  # noqa: E731
    small_map = {key(r): r["value"] for r in small.losses}
    large_map = {key(r): r["value"] for r in large.losses}
    for k, v in small_map.items():
        assert large_map[k] == v


def test_zero_noise_losses_vanish_and_no_slope():
    cfg = _config(f0_spec={"kind": "zero"}, noise_sd=0.0)
    report = run_rate_experiment(cfg)
    assert all(rec["value"] <= 1e-12 for rec in report.losses)
    assert report.slopes == {}


def test_report_contains_all_cells_and_metadata():
    cfg = _config(estimators=["lse", "isotonic"], losses=["sup", "weighted_sup"])
    report = run_rate_experiment(cfg)
    combos = {(r["estimator"], r["loss"], r["n"]) for r in report.rows}
    assert len(combos) == 2 * 2 * 3
    assert report.metadata["replicate_failures"] == 0
    assert report.metadata["f0_lipschitz"] == pytest.approx(0.1 * 2 * np.pi)
    assert report.metadata["doubling_constant"] <= 2.0 + 1e-9
    assert set(report.slopes) == {(e, l) for e in ("lse", "isotonic")
                                  for l in ("sup", "weighted_sup")}


def test_lse_sup_loss_decreases_with_n():
    cfg = _config(n_grid=[64, 256, 1024], replicates=10)
    report = run_rate_experiment(cfg)
    means = [r["mean"] for r in report.rows
             if r["estimator"] == "lse" and r["loss"] == "sup"]
    assert means[0] > means[1] > means[2]
    assert report.slopes[("lse", "sup")]["slope"] < -0.1


def test_report_write_and_json(tmp_path):
    report = run_rate_experiment(_config())
    report.write(tmp_path / "report.json", tmp_path / "losses.csv")
    obj = json.loads((tmp_path / "report.json").read_text())
    assert "rows" in obj and "slopes" in obj and "metadata" in obj
    lines = (tmp_path / "losses.csv").read_text().strip().splitlines()
    assert lines[0] == "estimator,loss,n,m,replicate,value"
    assert len(lines) == 1 + len(report.losses)


def test_failure_rate_guard():
    # a target distribution is configured but m is tiny, so every transfer
    # replicate dies and the failure guard trips
    cfg = _config(estimators=["transfer"], m_grid=[1, 1, 1],
                  target_distribution=densities.uniform())
    with pytest.raises(ExperimentError):
        run_rate_experiment(cfg)
