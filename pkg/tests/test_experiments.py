"""Experiment runner: plateau detector, rate fits, hydrodynamic scaling."""
import json
import os

import numpy as np
import pytest

import fragimm as f
from fragimm import rng as rngmod
from fragimm.errors import GateRefusalError
from fragimm.experiments import (fit_log_linear, hydrodynamic_check,
                                 plateau_verdict, run, small_particle_probe)
from fragimm.immigration import FiConfig, simulate_fi


# ---------------------------------------------------------------------------
# plateau detector on synthetic data (the detector's own oracle)
# ---------------------------------------------------------------------------

def _grid():
    return sorted(np.geomspace(1e-1, 1e-4, 10))


def _synthetic_counts(alpha, x_values, grid, rng, zero_fraction=0.1):
    """Counts following the exact scaling law with Poisson noise."""
    out = []
    for x in x_values:
        if rng.random() < zero_fraction:
            out.append([0] * len(grid))
            continue
        out.append([int(rng.poisson(x * e ** -(1.0 + alpha))) for e in grid])
    return out


def test_plateau_detector_accepts_exact_scaling():
    g = np.random.default_rng(3)
    grid = _grid()
    counts = _synthetic_counts(-0.5, [6.0 + 4.0 * g.random() for _ in range(60)],
                               grid, g)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] == "pass", rep


def test_plateau_detector_rejects_wrong_exponent():
    # data with a shallower declared exponent than generated: the scaled
    # counts trend across the decade and the detector must fail
    g = np.random.default_rng(5)
    grid = _grid()
    counts = _synthetic_counts(-0.3, [5.0 + 3.0 * g.random() for _ in range(60)],
                               grid, g)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] == "fail", rep
    # the opposite mismatch starves the counts instead: never a pass either
    counts = _synthetic_counts(-0.8, [5.0 + 3.0 * g.random() for _ in range(60)],
                               grid, g)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] in ("fail", "inconclusive"), rep


def test_plateau_detector_inconclusive_on_coarse_grid():
    g = np.random.default_rng(7)
    grid = [1e-1, 3e-2, 1e-2]
    counts = _synthetic_counts(-0.5, [8.0] * 20, grid, g)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] == "inconclusive"


def test_plateau_detector_inconclusive_without_resolution():
    # tiny counts never certify the band
    g = np.random.default_rng(9)
    grid = _grid()
    counts = _synthetic_counts(-0.5, [0.05] * 40, grid, g)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] == "inconclusive"


def test_plateau_detector_requires_empty_replicas():
    g = np.random.default_rng(11)
    grid = _grid()
    counts = _synthetic_counts(-0.5, [8.0] * 60, grid, g, zero_fraction=0.0)
    rep = plateau_verdict(-0.5, grid, counts)
    assert rep["status"] == "fail"
    assert rep["fraction_zero"] == 0.0


def test_probe_refuses_outside_regime():
    raw = {
        "alpha": -1.5,
        "dislocation": {"family": "discrete_finite",
                        "atoms": [[1.0, [0.5, 0.5]]]},
        "immigration": {"family": "single_powerlaw", "exponent": 3.0,
                        "x_min": 1.0},
        "flags": {"h2": True, "h3": True, "h4": True},
    }
    with pytest.raises(GateRefusalError):
        small_particle_probe(raw, "unused")


# ---------------------------------------------------------------------------
# rate fit helper
# ---------------------------------------------------------------------------

def test_fit_log_linear_recovers_slope():
    ts = np.array([1.0, 2.0, 4.0, 8.0])
    ds = 0.9 * np.exp(-0.4 * ts)
    fit = fit_log_linear(ts, ds, np.full(4, 1e-4))
    assert fit["status"] == "ok"
    assert fit["slope"] == pytest.approx(-0.4, abs=1e-6)


def test_fit_log_linear_filters_noise_floor():
    ts = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    ds = np.array([0.5, 0.25, 0.06, 0.004, 0.004])
    ses = np.array([0.01, 0.01, 0.01, 0.01, 0.01])
    fit = fit_log_linear(ts, ds, ses)
    assert fit["n_used"] == 3  # the two noise-floor points are dropped


def test_fit_log_linear_insufficient_signal():
    ts = np.array([1.0, 2.0, 4.0])
    ds = np.array([0.001, 0.001, 0.001])
    fit = fit_log_linear(ts, ds, np.full(3, 0.01))
    assert fit["status"] == "insufficient signal"


# ---------------------------------------------------------------------------
# hydrodynamic scaling
# ---------------------------------------------------------------------------

def test_hydrodynamic_discrepancy_decreases(tmp_path):
    raw = {
        "alpha": 0.0,
        "dislocation": {"family": "binary_uniform", "c": 0.0},
        "immigration": {"family": "single_exponential", "rate": 1.0},
        "eps": 5e-3, "seed": 13,
        "hydro": {"n_scaling": [1, 4, 16], "mass": 1.0, "t": 2.0,
                  "n_reps": 150, "det_reps": 15000,
                  "bins": [0.05, 3.0, 10]},
    }
    rep = hydrodynamic_check(raw, str(tmp_path / "h"))
    d = rep["discrepancies"]
    assert rep["decreasing"], d
    # law-of-large-numbers shape: 4x particles about halves the L1 gap
    assert d[-1] < 0.6 * d[0], d


def test_hydrodynamic_n1_equals_plain_run(tmp_path):
    # the n = 1 leg is a plain process run under the replica's derived seed
    seed, t = 13, 2.0
    cfg = FiConfig(0.0, f.binary_uniform(), f.single_exponential(1.0),
                   eps=5e-3)
    g = rngmod.stream(seed, rngmod.KIND_EXPERIMENT, 0, 0)
    n_init = int(g.poisson(1.0))
    u0 = [1.0] * n_init
    direct = simulate_fi(cfg, u0, t, rngmod.derive_seed(seed, 6, 0, 0))
    again = simulate_fi(cfg, u0, t, rngmod.derive_seed(seed, 6, 0, 0))
    assert direct.masses == again.masses


def test_experiment_run_dispatch(tmp_path):
    raw = {
        "experiment": "hydrodynamic", "alpha": 0.0,
        "dislocation": {"family": "binary_uniform", "c": 0.0},
        "immigration": {"family": "single_exponential", "rate": 1.0},
        "eps": 1e-2, "seed": 3,
        "hydro": {"n_scaling": [1, 4], "mass": 1.0, "t": 1.0,
                  "n_reps": 40, "det_reps": 4000, "bins": [0.05, 2.0, 6]},
        "out": str(tmp_path / "exp"),
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    rep = run(str(p))
    assert os.path.exists(tmp_path / "exp" / "hydro.csv")
    assert os.path.exists(tmp_path / "exp" / "manifest.json")
