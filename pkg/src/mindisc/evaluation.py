"""Accuracy scoring, multi-task benchmark tables, and 2-D embedding export."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import EmptyDataset, InvalidParam, UnlabeledDataset
from .network import Network, forward
from .numerics import pca2d
from .trainer import TrainConfig, train

# the standard method suite: supervised-only baseline, each discrepancy
# metric alone, and the joint objective
DEFAULT_METHODS: tuple[tuple[str, dict], ...] = (
    ("baseline", {"lambda_coral_rep": 0.0, "lambda_coral_logit": 0.0,
                  "lambda_mmd_rep": 0.0, "lambda_mmd_logit": 0.0,
                  "lambda_entropy": 0.0}),
    ("coral", {"lambda_mmd_rep": 0.0, "lambda_mmd_logit": 0.0}),
    ("mmd", {"lambda_coral_rep": 0.0, "lambda_coral_logit": 0.0}),
    ("joint", {}),
)


def predictions(net: Network, features) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    logits = forward(net, features).logits
    return np.argmax(logits, axis=1)


def accuracy(net: Network, dataset: Dataset) -> float:
    """Percentage of correctly classified rows: 100 * correct / total."""
    if dataset.n == 0:
        raise EmptyDataset("cannot score an empty dataset")
    if dataset.labels is None:
        raise UnlabeledDataset("accuracy needs labels")
    preds = predictions(net, dataset.features)
    return 100.0 * int((preds == dataset.labels).sum()) / dataset.n


@dataclass(frozen=True)
class TransferTask:
    """One source -> target evaluation pair; target labels are for scoring only."""

    name: str
    source: Dataset
    target: Dataset

    def __post_init__(self):
        if self.source.num_classes != self.target.num_classes:
            raise InvalidParam("source and target must declare the same class count")


@dataclass(frozen=True)
class BenchCell:
    task: str
    method: str
    seed: int
    accuracy: float


@dataclass(frozen=True)
class BenchmarkTable:
    """Per-(task, method, seed) accuracies plus one mean row per method."""

    cells: tuple[BenchCell, ...]
    method_means: tuple[tuple[str, float], ...]

    def to_csv(self) -> str:
        lines = ["task,method,seed,accuracy"]
        for c in self.cells:
            lines.append(f"{c.task},{c.method},{c.seed},{repr(c.accuracy)}")
        for method, mean in self.method_means:
            lines.append(f"all,{method},mean,{repr(mean)}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="\n")


def _run_cell(task: TransferTask, overrides: dict, seed: int, base: TrainConfig) -> float:
    config = replace(base, seed=seed, **overrides)
    result = train(config, task.source, task.target)
    return accuracy(result.net, task.target)


def run_benchmark(tasks, methods, seeds, base_config: TrainConfig,
                  jobs: int = 1) -> BenchmarkTable:
    """Train every (task, method, seed) cell independently and score the target.

    Rows are ordered lexicographically by (task, method, seed); each method
    gets a mean over all its cells. Cells are independent, so ``jobs`` > 1
    runs them on a thread pool and assembles results in the same order.
    """
    tasks = list(tasks)
    methods = list(methods)
    seeds = list(seeds)
    if not tasks or not methods or not seeds:
        raise InvalidParam("need at least one task, method, and seed")
    work = sorted(
        ((t, name, overrides, s) for t in tasks for name, overrides in methods for s in seeds),
        key=lambda w: (w[0].name, w[1], w[3]),
    )
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            accs = list(pool.map(lambda w: _run_cell(w[0], w[2], w[3], base_config), work))
    else:
        accs = [_run_cell(t, overrides, s, base_config) for t, _, overrides, s in work]
    cells = tuple(BenchCell(t.name, name, s, a)
                  for (t, name, _, s), a in zip(work, accs))
    means = []
    for method in sorted({name for _, name, _, _ in work}):
        vals = [c.accuracy for c in cells if c.method == method]
        means.append((method, float(np.mean(vals))))
    return BenchmarkTable(cells, tuple(means))


def export_embedding(net: Network, source: Dataset, target: Dataset, path) -> int:
    """Project pooled rep-tap activations to 2-D and write x,y,domain,label rows.

    Unlabeled rows carry label -1. Returns the number of data rows written.
    """
    if source.n == 0 or target.n == 0:
        raise EmptyDataset("embedding needs non-empty datasets")
    rep_s = forward(net, source.features).rep
    rep_t = forward(net, target.features).rep
    emb = pca2d(np.vstack((rep_s, rep_t)))
    lines = ["x,y,domain,label"]
    for ds, start in ((source, 0), (target, source.n)):
        for i in range(ds.n):
            x, y = emb[start + i]
            label = int(ds.labels[i]) if ds.labels is not None else -1
            lines.append(f"{repr(float(x))},{repr(float(y))},{ds.domain_name},{label}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return source.n + target.n
