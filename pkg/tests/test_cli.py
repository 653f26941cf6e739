import csv
import json

import numpy as np

from ldprobust.adversarial import load_adversarial_batch
from ldprobust.harness.cli import main
from ldprobust.harness.datasets import write_mnist_idx
from ldprobust.model import load_checkpoint


def write_config(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    return str(path)


SYNTH = "dataset: synthetic\nn_train: 80\nn_test: 20\nhidden_dims: [6]\nn_clients: 2\nrounds: 2\n"


def test_certify(capsys):
    assert main(["certify", "--fuzz", "20"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["fuzz"]["instances"] == 100 and out["fuzz"]["disagreements"] == 0
    ident = [r for r in out["named"] if r["mechanism"] == "identity"][0]
    assert ident["max_privacy_loss"] == "inf" and ident["agree"]


def test_thresholds(capsys):
    assert main(["thresholds", "--x=-0.5,0", "--step", "0.01"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["alpha1"] - 0.56) < 1e-9 and out["alpha2"] == 1.0
    assert main(["thresholds", "--x=0.0,0"]) == 2


def test_train_then_attack(tmp_path, capsys):
    cfg = write_config(tmp_path, SYNTH)
    ckpt = tmp_path / "m.ckpt"
    assert main(["train", "--config", cfg, "--out", str(ckpt), "--epsilon", "inf"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert load_checkpoint(ckpt).layer_dims == [2, 6, 2]
    rows = list(csv.DictReader(open(info["round_log"])))
    assert len(rows) == 2 and rows[-1]["epsilon"] == "inf"

    adv = tmp_path / "adv.bin"
    assert main(["attack", "--config", cfg, "--checkpoint", str(ckpt), "--out", str(adv), "--alpha", "0.1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    x, y = load_adversarial_batch(adv)
    assert x.shape == (20, 2) and y.shape == (20,) and rep["psi"] > 0


def test_sweep_cli(tmp_path, capsys):
    cfg = write_config(tmp_path, SYNTH + "epsilon_grid: [1, .inf]\nn_repeats: 2\n")
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--seed", "4"]) == 0
    assert len(out.read_text().splitlines()) == 1 + 4 + 2


def test_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--config", write_config(tmp_path, "nonsense_key: 1\n")]) == 2
    images = np.zeros((2, 28, 28), np.uint8)
    write_mnist_idx(images, np.zeros(2, np.uint8), tmp_path / "i", tmp_path / "l")
    (tmp_path / "i").write_bytes(b"\xff" * 20)
    cfg = write_config(tmp_path, "dataset: mnist\ntrain_images: i\ntrain_labels: l\n")
    assert main(["sweep", "--config", cfg]) == 3
    ckpt = tmp_path / "bad.ckpt"
    ckpt.write_bytes(b"garbage")
    assert main(["attack", "--config", write_config(tmp_path, SYNTH), "--checkpoint", str(ckpt)]) == 3


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    import ldprobust.harness.cli as cli
    from ldprobust.errors import NumericError

    def boom(cfg):
        raise NumericError("psi=nan")

    monkeypatch.setattr(cli, "run_sweep", boom)
    assert main(["sweep", "--config", write_config(tmp_path, SYNTH)]) == 4
    assert "numeric failure" in capsys.readouterr().err
