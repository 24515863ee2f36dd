"""End-to-end optimization loop for the joint adaptation objective.

Per step: forward the source and target batches through the shared
network, evaluate cross-entropy, two covariance-alignment terms, two MMD
terms (rep and logit taps) and target entropy, backpropagate the
lambda-weighted sum, and apply a momentum SGD step.
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .data import BatchPair, Dataset, epoch_pairs
from .errors import (
    ClassCountMismatch,
    ConfigError,
    CorruptCheckpoint,
    InvalidParam,
    NonFiniteLoss,
    UnlabeledDataset,
    VersionMismatch,
)
from .losses import (
    KernelBank,
    coral_loss,
    cross_entropy_loss,
    entropy_loss,
    median_bandwidths,
    mmd2_loss,
)
from .network import (
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

CHECKPOINT_MAGIC = b"MDCK"
CHECKPOINT_VERSION = 1

_ACT_CODES = {"relu": 0, "identity": 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults are desk-scale: batch 32 and lr 1e-3 rather than the
    large-scale 128/1e-4, with momentum 0.9 and weight decay 5e-4. The
    entropy term is down-weighted to 0.1 because unit weight tends to
    collapse predictions to one class on small synthetic problems.
    """

    layer_specs: tuple[LayerSpec, ...]
    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lambda_ce: float = 1.0
    lambda_coral_rep: float = 1.0
    lambda_coral_logit: float = 1.0
    lambda_mmd_rep: float = 1.75
    lambda_mmd_logit: float = 1.75
    lambda_entropy: float = 0.1
    kernel_count: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_specs", tuple(self.layer_specs))
        if len(self.layer_specs) < 2:
            raise InvalidParam("need >= 2 layers (a rep tap and a logit tap)")
        if self.epochs < 0:
            raise InvalidParam("epochs must be >= 0")
        if self.batch_size < 2:
            raise InvalidParam("batch_size must be >= 2")
        if not self.lr > 0:
            raise InvalidParam("lr must be > 0")
        if not 0 <= self.momentum < 1:
            raise InvalidParam("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise InvalidParam("weight_decay must be >= 0")
        for name in ("lambda_ce", "lambda_coral_rep", "lambda_coral_logit",
                     "lambda_mmd_rep", "lambda_mmd_logit", "lambda_entropy"):
            if getattr(self, name) < 0:
                raise InvalidParam(f"{name} must be >= 0")
        if not self.lambda_ce > 0:
            raise InvalidParam("lambda_ce must be > 0 (the classifier must train)")
        if self.kernel_count < 1:
            raise InvalidParam("kernel_count must be >= 1")
        if self.seed < 0:
            raise InvalidParam("seed must be >= 0")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layer_specs[0].in_dim,) + tuple(s.out_dim for s in self.layer_specs)


@dataclass(frozen=True)
class LossReport:
    """Unweighted per-term values for one step; total is the weighted sum."""

    step: int
    ce: float
    coral_rep: float
    coral_logit: float
    mmd_rep: float
    mmd_logit: float
    entropy: float
    total: float

    HEADER = "step,ce,coral_rep,coral_logit,mmd_rep,mmd_logit,entropy,total"

    def csv_row(self) -> str:
        return ",".join([str(self.step)] + [
            repr(v) for v in (self.ce, self.coral_rep, self.coral_logit,
                              self.mmd_rep, self.mmd_logit, self.entropy, self.total)
        ])


@dataclass
class TrainResult:
    net: Network
    opt_state: OptState
    history: list[LossReport]
    steps: int


def _accumulate(acc, lam, grad):
    # lambda == 0 contributes nothing, and skipping it keeps the pure
    # supervised path bit-identical to a plain CE loop
    if lam == 0.0:
        return acc
    term = lam * grad
    return term if acc is None else acc + term


def total_objective(net: Network, batch: BatchPair, config: TrainConfig,
                    bank: KernelBank, step: int = 0) -> tuple[LossReport, ParamGrads]:
    """All six loss terms on one batch pair, plus exact parameter gradients.

    The kernel bank is treated as a constant (no gradient flows through the
    bandwidth choice). Every term's value is always reported; terms with a
    zero lambda contribute no gradient.
    """
    trace_s = forward(net, batch.source_features)
    trace_t = forward(net, batch.target_features)

    ce = cross_entropy_loss(trace_s.logits, batch.source_labels)
    c_rep = coral_loss(trace_s.rep, trace_t.rep)
    c_log = coral_loss(trace_s.logits, trace_t.logits)
    m_rep = mmd2_loss(trace_s.rep, trace_t.rep, bank)
    m_log = mmd2_loss(trace_s.logits, trace_t.logits, bank)
    ent = entropy_loss(trace_t.logits)

    total = (config.lambda_ce * ce.value
             + config.lambda_coral_rep * c_rep.value
             + config.lambda_coral_logit * c_log.value
             + config.lambda_mmd_rep * m_rep.value
             + config.lambda_mmd_logit * m_log.value
             + config.lambda_entropy * ent.value)

    gs_rep = _accumulate(None, config.lambda_coral_rep, c_rep.grad_source)
    gs_rep = _accumulate(gs_rep, config.lambda_mmd_rep, m_rep.grad_source)
    gs_logit = _accumulate(None, config.lambda_ce, ce.grad_source)
    gs_logit = _accumulate(gs_logit, config.lambda_coral_logit, c_log.grad_source)
    gs_logit = _accumulate(gs_logit, config.lambda_mmd_logit, m_log.grad_source)
    gt_rep = _accumulate(None, config.lambda_coral_rep, c_rep.grad_target)
    gt_rep = _accumulate(gt_rep, config.lambda_mmd_rep, m_rep.grad_target)
    gt_logit = _accumulate(None, config.lambda_coral_logit, c_log.grad_target)
    gt_logit = _accumulate(gt_logit, config.lambda_mmd_logit, m_log.grad_target)
    gt_logit = _accumulate(gt_logit, config.lambda_entropy, ent.grad_target)

    contribs = [(trace_s, gs_rep, gs_logit)]
    if gt_rep is not None or gt_logit is not None:
        contribs.append((trace_t, gt_rep, gt_logit))
    grads = backward(net, contribs)

    report = LossReport(step, ce.value, c_rep.value, c_log.value,
                        m_rep.value, m_log.value, ent.value, total)
    return report, grads


def steps_per_epoch(config: TrainConfig, source: Dataset, target: Dataset) -> int:
    return min(source.n, target.n) // config.batch_size


def train(config: TrainConfig, source: Dataset, target: Dataset, *,
          net: Network | None = None, opt_state: OptState | None = None,
          start_step: int = 0) -> TrainResult:
    """Run (epochs x batches) optimization steps; deterministic under seed.

    Target labels are never read: the loop sees an unlabeled view. Pass
    ``net``/``opt_state``/``start_step`` from a checkpoint to resume; the
    per-epoch batch streams are keyed by (seed, epoch), so a resumed run is
    bit-identical to an uninterrupted one.
    """
    if source.labels is None:
        raise UnlabeledDataset("training source must be labeled")
    target = target.unlabeled()
    if source.num_classes != config.layer_specs[-1].out_dim:
        raise ClassCountMismatch(
            f"network emits {config.layer_specs[-1].out_dim} classes, "
            f"dataset declares {source.num_classes}"
        )
    if net is None:
        net = init_network(config.layer_specs, config.seed)
    bpe = steps_per_epoch(config, source, target)
    total_steps = config.epochs * bpe
    history: list[LossReport] = []
    pairs: list[BatchPair] = []
    pairs_epoch = -1
    for step in range(start_step, total_steps):
        epoch, k = divmod(step, bpe)
        if epoch != pairs_epoch:
            pairs = epoch_pairs(source, target, config.batch_size, config.seed, epoch)
            pairs_epoch = epoch
        batch = pairs[k]
        trace_s = forward(net, batch.source_features)
        trace_t = forward(net, batch.target_features)
        bank = median_bandwidths(trace_s.rep, trace_t.rep, config.kernel_count)
        report, grads = total_objective(net, batch, config, bank, step)
        if not math.isfinite(report.total):
            raise NonFiniteLoss(f"non-finite loss at step {step}", step=step)
        net, opt_state = sgd_step(net, grads, config.lr, config.momentum,
                                  config.weight_decay, opt_state)
        history.append(report)
    if opt_state is None:
        opt_state = OptState([np.zeros_like(w) for w in net.weights],
                             [np.zeros_like(b) for b in net.biases])
    return TrainResult(net, opt_state, history, total_steps)


def write_history_csv(history, path) -> None:
    lines = [LossReport.HEADER] + [r.csv_row() for r in history]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


# --- checkpoint serialization -------------------------------------------
#
# Little-endian binary: magic "MDCK", u32 version, u64 step count, then
# five u64-length-prefixed sections (layer specs, weights, biases,
# velocities, config as key=value text), then CRC-32 of everything before.


@dataclass(frozen=True)
class Checkpoint:
    version: int
    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    vel_w: list[np.ndarray]
    vel_b: list[np.ndarray]
    config: TrainConfig
    step: int

    def network(self) -> Network:
        return Network(self.specs, [w.copy() for w in self.weights],
                       [b.copy() for b in self.biases])

    def opt_state(self) -> OptState:
        return OptState([v.copy() for v in self.vel_w], [v.copy() for v in self.vel_b])


_CONFIG_FIELDS = ("batch_size", "epochs", "kernel_count", "lambda_ce",
                  "lambda_coral_logit", "lambda_coral_rep", "lambda_entropy",
                  "lambda_mmd_logit", "lambda_mmd_rep", "lr", "momentum",
                  "seed", "weight_decay")


def config_to_text(config: TrainConfig) -> str:
    lines = [f"layers = {','.join(str(d) for d in config.dims)}"]
    for name in _CONFIG_FIELDS:
        v = getattr(config, name)
        lines.append(f"{name} = {v if isinstance(v, int) else repr(v)}")
    return "\n".join(sorted(lines)) + "\n"


def config_from_text(text: str) -> TrainConfig:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    try:
        dims = [int(d) for d in kv.pop("layers").split(",")]
        ints = {k: int(kv.pop(k)) for k in ("batch_size", "epochs", "kernel_count", "seed")}
        floats = {k: float(kv.pop(k)) for k in list(kv)}
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad checkpoint config: {exc}") from exc
    return TrainConfig(layer_specs=specs_from_dims(dims), **ints, **floats)


def _arrays_bytes(arrays) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def save_checkpoint(net: Network, opt_state: OptState | None, config: TrainConfig,
                    path, step: int = 0) -> None:
    if opt_state is None or not opt_state.vel_w:
        opt_state = OptState([np.zeros_like(w) for w in net.weights],
                             [np.zeros_like(b) for b in net.biases])
    specs_payload = struct.pack("<I", net.num_layers)
    for s in net.specs:
        specs_payload += struct.pack("<IIB", s.in_dim, s.out_dim, _ACT_CODES[s.activation])
    sections = [
        specs_payload,
        _arrays_bytes(net.weights),
        _arrays_bytes(net.biases),
        _arrays_bytes(opt_state.vel_w) + _arrays_bytes(opt_state.vel_b),
        config_to_text(config).encode("utf-8"),
    ]
    blob = CHECKPOINT_MAGIC + struct.pack("<IQ", CHECKPOINT_VERSION, step)
    for payload in sections:
        blob += struct.pack("<Q", len(payload)) + payload
    blob += struct.pack("<I", zlib.crc32(blob))
    with open(path, "wb") as f:
        f.write(blob)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptCheckpoint("checkpoint truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 20 or blob[:4] != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint("not a checkpoint file")
    (crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) != crc:
        raise CorruptCheckpoint("checksum mismatch")
    r = _Reader(blob[:-4])
    r.take(4)
    version, step = r.unpack("<IQ")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")

    payloads = []
    for _ in range(5):
        (length,) = r.unpack("<Q")
        payloads.append(r.take(length))
    if r.pos != len(r.blob):
        raise CorruptCheckpoint("trailing bytes after final section")

    sr = _Reader(payloads[0])
    (n_layers,) = sr.unpack("<I")
    specs = []
    for _ in range(n_layers):
        in_dim, out_dim, act = sr.unpack("<IIB")
        if act not in _ACT_NAMES:
            raise CorruptCheckpoint(f"unknown activation code {act}")
        specs.append(LayerSpec(in_dim, out_dim, _ACT_NAMES[act]))
    specs = tuple(specs)

    def split_arrays(payload: bytes, shapes):
        need = sum(int(np.prod(s)) for s in shapes) * 8
        if len(payload) != need:
            raise CorruptCheckpoint("array section has wrong length")
        arrays = []
        pos = 0
        for shape in shapes:
            count = int(np.prod(shape))
            arr = np.frombuffer(payload, dtype="<f8", count=count, offset=pos).astype(np.float64)
            arrays.append(arr.reshape(shape))
            pos += count * 8
        return arrays

    w_shapes = [(s.in_dim, s.out_dim) for s in specs]
    b_shapes = [(s.out_dim,) for s in specs]
    weights = split_arrays(payloads[1], w_shapes)
    biases = split_arrays(payloads[2], b_shapes)
    vels = split_arrays(payloads[3], w_shapes + b_shapes)
    config = config_from_text(payloads[4].decode("utf-8"))
    return Checkpoint(version, specs, weights, biases,
                      vels[:n_layers], vels[n_layers:], config, step)
