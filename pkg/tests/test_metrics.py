import math

import numpy as np
import pytest

from ldprobust.adversarial import AttackConfig
from ldprobust.errors import InvalidArgument
from ldprobust.metrics import (PSI_FLOOR, RobustnessReport, aggregate_runs, psi_from_kl,
                               psi_from_predictions, psi_robustness)
from ldprobust.model import LabeledBatch, init_params


def report(eps=1.0, psi=1.0, alpha=0.1, seed=0, kl=1.0, clean=0.5, adv=0.2):
    return RobustnessReport(eps, seed, alpha, psi, kl, clean, adv)


def test_psi_zero_alpha_hits_floor():
    rng = np.random.default_rng(0)
    batch = LabeledBatch(rng.random((10, 4)), rng.integers(0, 3, 10))
    rep = psi_robustness(init_params([4, 5, 3], 0), batch, AttackConfig(0.0))
    assert rep.mean_kl == pytest.approx(0.0, abs=1e-15)
    assert rep.psi == pytest.approx(1 / PSI_FLOOR)
    assert rep.clean_accuracy == rep.adversarial_accuracy


def test_psi_hand_set_predictions():
    clean = np.array([[0.5, 0.5], [0.3, 0.7]])
    adv = np.array([[0.25, 0.75], [0.3, 0.7]])
    kl_a = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
    mean_kl, psi = psi_from_predictions(clean, adv)
    assert mean_kl == pytest.approx(kl_a / 2, abs=1e-12)
    assert mean_kl == pytest.approx(0.0719, abs=1e-4)
    assert psi == pytest.approx(2 / kl_a, rel=1e-12)
    assert psi == pytest.approx(13.91, abs=0.01)


def test_psi_positive_and_antitone():
    assert psi_from_kl(0.0) > 0
    assert psi_from_kl(0.1) > psi_from_kl(0.2) > 0


def test_psi_real_attack_and_order_invariance():
    rng = np.random.default_rng(1)
    batch = LabeledBatch(rng.random((12, 4)), rng.integers(0, 3, 12))
    p = init_params([4, 6, 3], 1)
    rep = psi_robustness(p, batch, AttackConfig(0.2))
    assert rep.mean_kl > 0 and math.isfinite(rep.psi)
    perm = rng.permutation(12)
    rep2 = psi_robustness(p, batch.subset(perm), AttackConfig(0.2))
    assert rep2.mean_kl == pytest.approx(rep.mean_kl, rel=1e-12)


def test_psi_empty_batch():
    with pytest.raises(InvalidArgument):
        psi_robustness(init_params([2, 2], 0), LabeledBatch(np.zeros((0, 2)), []), AttackConfig(0.1))


def test_aggregate_identical():
    rows = aggregate_runs([report(psi=2.5)] * 5)
    assert len(rows) == 1
    assert rows[0].psi == 2.5 and rows[0].psi_std == 0.0 and rows[0].n_runs == 5


def test_aggregate_sample_std():
    rows = aggregate_runs([report(psi=float(v)) for v in (1, 2, 3, 4, 5)])
    assert rows[0].psi == pytest.approx(3.0)
    assert rows[0].psi_std == pytest.approx(math.sqrt(2.5))


def test_aggregate_groups_sorted_and_order_invariant():
    reps = [report(eps=e, psi=p) for e, p in [(math.inf, 1), (2.0, 2), (0.5, 3), (2.0, 4), (0.5, 5)]]
    rows = aggregate_runs(reps)
    assert [r.epsilon for r in rows] == [0.5, 2.0, math.inf]
    assert [r.psi for r in rows] == [4.0, 3.0, 1.0]
    again = aggregate_runs(list(reversed(reps)))
    assert [r.psi for r in again] == [r.psi for r in rows]


def test_aggregate_guards():
    with pytest.raises(InvalidArgument):
        aggregate_runs([])
    with pytest.raises(InvalidArgument):
        aggregate_runs([report(alpha=0.1), report(alpha=0.2)])


def test_csv_rows():
    rep = report(eps=math.inf, seed=3)
    assert rep.csv_row()[:3] == ["inf", "3", "0.1"]
    agg = aggregate_runs([rep, rep])[0]
    assert agg.csv_row()[1] == "mean"
    assert len(agg.csv_row()) == 11
