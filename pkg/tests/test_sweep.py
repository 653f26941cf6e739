import csv
import math

import pytest

from ldprobust.harness.config import ExperimentConfig
from ldprobust.harness.sweep import load_experiment_data, run_seed, run_sweep


def small_config(tmp_path, **kw):
    base = dict(dataset="synthetic", n_train=120, n_test=40, hidden_dims=[8], n_clients=3, rounds=2,
                batch_size=16, epsilon_grid=[0.5, 1, 2, 4, math.inf], n_repeats=5, alpha=0.1,
                master_seed=3, out=str(tmp_path / "sweep.csv"))
    base.update(kw)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_sweep_row_counts_and_baseline(tmp_path):
    cfg = small_config(tmp_path)
    path, reports, aggregates = run_sweep(cfg)
    rows = read_rows(path)
    header, body = rows[0], rows[1:]
    assert header[:7] == ["epsilon", "seed", "alpha", "psi", "mean_kl", "clean_acc", "adv_acc"]
    detail = [r for r in body if r[1] not in ("mean", "std")]
    agg = [r for r in body if r[1] == "mean"]
    assert len(detail) == 25 and len(agg) == 5
    assert any(r[0] == "inf" for r in detail)
    assert [r[0] for r in agg] == ["0.5", "1.0", "2.0", "4.0", "inf"]
    assert all(math.isfinite(float(r[3])) and float(r[3]) > 0 for r in body)


def test_sweep_is_reproducible(tmp_path):
    cfg = small_config(tmp_path, epsilon_grid=[1.0, math.inf], n_repeats=2)
    a = run_sweep(cfg, out=tmp_path / "a.csv")[0].read_bytes()
    b = run_sweep(cfg, out=tmp_path / "b.csv")[0].read_bytes()
    assert a == b
    c = run_sweep(cfg.with_overrides(workers=2), out=tmp_path / "c.csv")[0].read_bytes()
    assert a == c


def test_adding_grid_points_keeps_existing_rows(tmp_path):
    cfg = small_config(tmp_path, epsilon_grid=[1.0], n_repeats=2)
    first = read_rows(run_sweep(cfg, out=tmp_path / "a.csv")[0])[1:3]
    wider = read_rows(run_sweep(cfg.with_overrides(epsilon_grid=[1.0, 8.0]), out=tmp_path / "b.csv")[0])[1:3]
    assert first == wider


def test_run_seed_independent_cells():
    seeds = {run_seed(0, e, r) for e in range(6) for r in range(5)}
    assert len(seeds) == 30


def test_load_experiment_data_sizes():
    train, test = load_experiment_data(ExperimentConfig(dataset="synthetic", n_train=50, n_test=20))
    assert len(train) == 50 and len(test) == 20 and train.n_classes == 2
