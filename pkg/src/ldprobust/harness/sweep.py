"""Epsilon sweep: train under each privacy budget several times, then attack."""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..adversarial import AttackConfig
from ..errors import NumericError
from ..federated import derive_seed, run_training
from ..metrics import CSV_COLUMNS, STD_COLUMNS, aggregate_runs, psi_robustness
from .datasets import load_cifar10_bin, load_mnist_idx, make_synthetic_linear, stratified_split

log = logging.getLogger(__name__)

DATA_STREAM = 7


def load_experiment_data(config):
    """Return ``(train, test)`` datasets sized as the config asks."""
    seed = derive_seed(config.master_seed, DATA_STREAM)
    if config.dataset == "synthetic":
        pool, _ = make_synthetic_linear(config.n_train + config.n_test, seed)
        return stratified_split(pool, config.n_train, config.n_test, seed)
    if config.dataset == "mnist":
        pool = load_mnist_idx(config.train_images, config.train_labels)
        test_pool = load_mnist_idx(config.test_images, config.test_labels) if config.test_images else None
    else:
        pool = load_cifar10_bin(config.cifar_train)
        test_pool = load_cifar10_bin(config.cifar_test) if config.cifar_test else None
    if test_pool is None:
        return stratified_split(pool, config.n_train, config.n_test, seed)
    train, _ = stratified_split(pool, config.n_train, 0, seed)
    test, _ = stratified_split(test_pool, config.n_test, 0, seed)
    return train, test


def run_seed(master_seed, eps_index, repeat):
    """Seed for one (epsilon, repeat) cell; independent of the grid's size."""
    return derive_seed(master_seed, eps_index, repeat)


def run_cell(config, train, test, eps_index, repeat):
    eps = config.epsilon_grid[eps_index]
    seed = run_seed(config.master_seed, eps_index, repeat)
    params, _ = run_training(train, config.round_config(eps), seed,
                             hidden_dims=config.hidden_dims, n_classes=train.n_classes)
    report = psi_robustness(params, test.as_batch(), AttackConfig(config.alpha), epsilon=eps, seed=seed)
    if not (math.isfinite(report.psi) and report.psi > 0 and math.isfinite(report.mean_kl)):
        raise NumericError(f"epsilon={eps} seed={seed}: psi={report.psi}, mean_kl={report.mean_kl}")
    log.info("eps=%s repeat=%d psi=%.4g clean=%.3f adv=%.3f", eps, repeat, report.psi,
             report.clean_accuracy, report.adversarial_accuracy)
    return report


def run_sweep(config, out=None, data=None):
    """Run the full grid, writing one CSV row per run and one aggregate row per epsilon.

    Rows are flushed as they complete. Returns ``(path, reports, aggregates)``.
    """
    path = Path(out or config.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    train, test = data if data is not None else load_experiment_data(config)
    cells = [(ei, rep) for ei in range(len(config.epsilon_grid)) for rep in range(config.n_repeats)]
    reports = []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS + STD_COLUMNS)
        fh.flush()

        def emit(report):
            reports.append(report)
            writer.writerow(report.csv_row() + [""] * len(STD_COLUMNS))
            fh.flush()

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                for report in pool.map(lambda c: run_cell(config, train, test, *c), cells):
                    emit(report)
        else:
            for cell in cells:
                emit(run_cell(config, train, test, *cell))
        aggregates = aggregate_runs(reports)
        for row in aggregates:
            writer.writerow(row.csv_row())
    return path, reports, aggregates
