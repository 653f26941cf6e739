"""Command-line entry point: certify, train, attack, thresholds, sweep."""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..adversarial import AttackConfig, BandOracle, compute_alpha_thresholds, fgsm_batch, save_adversarial_batch
from ..divergence import DiscreteMechanism, fuzz_equivalence, ldp_robustness_equivalence
from ..errors import ConfigError, DataFormatError, InvalidArgument, NumericError
from ..federated import run_training, write_round_log
from ..mechanisms import randomized_response_matrix
from ..metrics import psi_robustness
from ..model import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_config, parse_epsilon
from .sweep import load_experiment_data, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig(dataset="synthetic")
    return cfg.with_overrides(master_seed=args.seed, out=args.out)


def _json_float(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def cmd_certify(args):
    results = fuzz_equivalence(args.fuzz, seed=args.seed or 0)
    bad = [(idx, rec) for idx, _, rec in results if not rec.agree]
    named = []
    for k in args.k:
        for eps in args.epsilon:
            rec = ldp_robustness_equivalence(randomized_response_matrix(k, eps), eps)
            named.append({"mechanism": "randomized_response", "k": k, **rec.to_dict()})
    ident = ldp_robustness_equivalence(DiscreteMechanism.identity(3), 5.0)
    named.append({"mechanism": "identity", "k": 3, **ident.to_dict()})
    out = {
        "fuzz": {"mechanisms": args.fuzz, "instances": len(results), "disagreements": len(bad)},
        "named": [{k: _json_float(v) for k, v in row.items()} for row in named],
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK if not bad and all(row["agree"] for row in named) else EXIT_FAIL


def cmd_train(args):
    cfg = _config(args)
    eps = parse_epsilon(args.epsilon) if args.epsilon is not None else cfg.epsilon_grid[0]
    train, test = load_experiment_data(cfg)
    params, logs = run_training(train, cfg.round_config(eps), cfg.master_seed,
                                hidden_dims=cfg.hidden_dims, n_classes=train.n_classes, eval_data=test)
    out = Path(args.out or "model.ckpt")
    save_checkpoint(params, out)
    log_path = Path(args.log) if args.log else out.with_suffix(".rounds.csv")
    write_round_log(logs, log_path)
    print(json.dumps({"checkpoint": str(out), "round_log": str(log_path), "epsilon": _json_float(eps),
                      "final_loss": logs[-1].global_loss, "final_accuracy": logs[-1].global_accuracy}))
    return EXIT_OK


def cmd_attack(args):
    cfg = _config(args)
    params = load_checkpoint(args.checkpoint)
    _, test = load_experiment_data(cfg)
    batch = test.as_batch()
    attack = AttackConfig(args.alpha if args.alpha is not None else cfg.alpha)
    x_adv = fgsm_batch(params, batch.inputs, batch.labels, attack)
    out = Path(args.out or "adversarial.bin")
    save_adversarial_batch(x_adv, batch.labels, out)
    rep = psi_robustness(params, batch, attack, seed=cfg.master_seed)
    print(json.dumps({"adversarial_batch": str(out), "n": len(batch), "alpha": rep.alpha, "psi": rep.psi,
                      "mean_kl": rep.mean_kl, "clean_acc": rep.clean_accuracy,
                      "adv_acc": rep.adversarial_accuracy}))
    return EXIT_OK


def cmd_thresholds(args):
    oracle = BandOracle(band=args.band)
    x = np.array([float(v) for v in args.x.split(",")])
    y = oracle(x)
    if y is None:
        raise InvalidArgument(f"point {args.x} lies in the unlabelable band")
    th = compute_alpha_thresholds(oracle, x, y, grid_step=args.step)
    print(json.dumps({"x": x.tolist(), "label": y, "band": args.band, "grid_step": args.step, **th.to_dict()}))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    if args.workers:
        cfg = cfg.with_overrides(workers=args.workers)
    path, reports, aggregates = run_sweep(cfg)
    for row in aggregates:
        print(f"eps={_json_float(row.epsilon)!s:>6}  psi={row.psi:12.6g} ± {row.psi_std:.3g}  "
              f"clean={row.clean_accuracy:.3f}  adv={row.adversarial_accuracy:.3f}")
    print(f"wrote {len(reports)} runs + {len(aggregates)} aggregate rows to {path}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (flat YAML)")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ldprobust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="check LDP <=> E-robustness on discrete mechanisms")
    p.add_argument("--fuzz", type=int, default=1000, help="number of random mechanisms")
    p.add_argument("--k", type=int, nargs="+", default=[2, 3, 5, 10])
    p.add_argument("--epsilon", type=float, nargs="+", default=[0.1, math.log(2), 1.0, math.log(3), 2.0])
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("train", parents=[common], help="single federated training run")
    p.add_argument("--epsilon", help="privacy budget (number or 'inf'); default: first grid value")
    p.add_argument("--log", help="per-round CSV log path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", parents=[common], help="FGSM the test split against a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("thresholds", parents=[common], help="alpha1/alpha2 on the synthetic band oracle")
    p.add_argument("--x", default="-0.5,0", help="comma-separated point in [-1, 1]^2")
    p.add_argument("--band", type=float, default=0.05)
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("sweep", parents=[common], help="full epsilon sweep")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgument as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
