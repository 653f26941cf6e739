from .config import ExperimentConfig, load_config
from .datasets import (Dataset, load_cifar10_bin, load_mnist_idx, make_synthetic_linear,
                       stratified_split, write_mnist_idx)
from .sweep import load_experiment_data, run_sweep
