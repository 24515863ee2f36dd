"""mindisc: unsupervised domain adaptation by joint minimum-discrepancy training.

A labeled source domain and an unlabeled target domain share one small
fully connected classifier; training simultaneously minimizes source
cross-entropy, covariance-alignment and multi-kernel MMD distances at the
representation and logit taps, and the entropy of target predictions.
"""
from .backend import HAS_NUMBA, USE_NUMBA, active_backend
from .data import (
    BatchPair,
    Dataset,
    batch_iter,
    epoch_pairs,
    gen_gaussian_shift,
    gen_two_moons,
    load_csv,
    write_csv,
)
from .evaluation import (
    DEFAULT_METHODS,
    BenchmarkTable,
    TransferTask,
    accuracy,
    export_embedding,
    run_benchmark,
)
from .losses import (
    KernelBank,
    LossValueGrad,
    coral_loss,
    cross_entropy_loss,
    entropy_loss,
    median_bandwidths,
    mmd2_loss,
)
from .network import (
    ForwardTrace,
    LayerSpec,
    Network,
    OptState,
    ParamGrads,
    backward,
    forward,
    init_network,
    sgd_step,
    specs_from_dims,
)
from .numerics import covariance, frobenius_sq, make_rng, pca2d, softmax
from .trainer import (
    Checkpoint,
    LossReport,
    TrainConfig,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    total_objective,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BatchPair", "BenchmarkTable", "Checkpoint", "Dataset", "DEFAULT_METHODS",
    "ForwardTrace", "HAS_NUMBA", "KernelBank", "LayerSpec", "LossReport",
    "LossValueGrad", "Network", "OptState", "ParamGrads", "TrainConfig",
    "TrainResult", "TransferTask", "USE_NUMBA", "accuracy", "active_backend",
    "backward", "batch_iter", "coral_loss", "covariance", "cross_entropy_loss",
    "entropy_loss", "epoch_pairs", "export_embedding", "forward",
    "frobenius_sq", "gen_gaussian_shift", "gen_two_moons", "init_network",
    "load_checkpoint", "load_csv", "make_rng", "median_bandwidths",
    "mmd2_loss", "pca2d", "run_benchmark", "save_checkpoint", "sgd_step",
    "softmax", "specs_from_dims", "total_objective", "train", "write_csv",
]
