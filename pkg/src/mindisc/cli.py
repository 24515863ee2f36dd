"""Command-line surface: generate, train, eval, benchmark, embed.

Configs are plain ``key = value`` text with ``#`` comments. ``--set
key=value`` overrides the file; the MINDISC_SEED environment variable
supplies a seed only when neither the file nor --set does. Exit codes:
2 config/argument error, 3 I/O or data-format error, 4 non-finite loss,
5 model/data mismatch.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import data as data_mod
from . import evaluation, trainer
from .errors import (
    ClassCountMismatch,
    ConfigError,
    CorruptCheckpoint,
    EmptyDataset,
    InvalidParam,
    InvalidSpec,
    LabelOutOfRange,
    MalformedRow,
    MindiscError,
    NonFiniteLoss,
    NonFiniteValue,
    ShapeMismatch,
    UnlabeledDataset,
    VersionMismatch,
)
from .network import specs_from_dims
from .trainer import TrainConfig

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_MISMATCH = 5

SEED_ENV = "MINDISC_SEED"

_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_bool(s: str) -> bool:
    try:
        return _BOOLS[s.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {s!r}") from None


def _parse_dims(s: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in s.split(","))
    except ValueError:
        raise ConfigError(f"layers must be comma-separated integers, got {s!r}") from None
    if len(dims) < 3:
        raise ConfigError("layers needs at least [input, hidden, classes]")
    return dims


# key -> (caster, is_path); hyperparameter keys feed TrainConfig directly
_HYPER_KEYS = {
    "layers": _parse_dims,
    "epochs": int,
    "batch_size": int,
    "kernel_count": int,
    "seed": int,
    "lr": float,
    "momentum": float,
    "weight_decay": float,
    "lambda_ce": float,
    "lambda_coral_rep": float,
    "lambda_coral_logit": float,
    "lambda_mmd_rep": float,
    "lambda_mmd_logit": float,
    "lambda_entropy": float,
}

_TRAIN_DATA_KEYS = {
    "source": str,
    "target": str,
    "num_classes": int,
    "header": _parse_bool,
    "target_labeled": _parse_bool,
    "checkpoint": str,
    "history": str,
}

_PATH_KEYS = {"source", "target", "checkpoint", "history"}

_BENCH_KEYS = {
    "seeds": int,
    "methods": str,
    "suite": str,
    "num_classes": int,
    "header": _parse_bool,
}


def parse_kv_text(text: str, origin: str) -> dict[str, str]:
    """Parse ``key = value`` lines; comments and blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {stripped!r}")
        out[key.strip()] = value.strip()
    return out


def _merge_raw(config_path: str | None, sets: list[str]):
    """Raw key/value map plus per-key provenance ('file' or 'set')."""
    raw: dict[str, str] = {}
    origin: dict[str, str] = {}
    base_dir = Path.cwd()
    if config_path is not None:
        path = Path(config_path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw.update(parse_kv_text(text, str(path)))
        origin.update({k: "file" for k in raw})
        base_dir = path.parent
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        raw[key.strip()] = value.strip()
        origin[key.strip()] = "set"
    return raw, origin, base_dir


def _cast(key: str, value: str, caster):
    try:
        return caster(value)
    except (ValueError, TypeError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _resolve(key: str, value: str, origin: str, base_dir: Path) -> Path:
    p = Path(value)
    if p.is_absolute():
        return p
    root = base_dir if origin == "file" else Path.cwd()
    return (root / p).resolve()


@dataclass(frozen=True)
class TrainSettings:
    """Fully resolved training invocation: hyperparameters plus paths."""

    config: TrainConfig
    source: Path
    target: Path
    num_classes: int
    header: bool
    target_labeled: bool
    checkpoint: Path
    history: Path

    def to_text(self) -> str:
        lines = [
            f"source = {self.source}",
            f"target = {self.target}",
            f"num_classes = {self.num_classes}",
            f"header = {str(self.header).lower()}",
            f"target_labeled = {str(self.target_labeled).lower()}",
            f"checkpoint = {self.checkpoint}",
            f"history = {self.history}",
        ]
        return "".join(sorted(l + "\n" for l in lines)) + trainer.config_to_text(self.config)


def load_train_settings(config_path: str | None, sets: list[str]) -> TrainSettings:
    raw, origin, base_dir = _merge_raw(config_path, sets)
    known = {**_HYPER_KEYS, **_TRAIN_DATA_KEYS}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
    if "seed" not in raw and os.environ.get(SEED_ENV):
        raw["seed"] = os.environ[SEED_ENV]
        origin["seed"] = "env"
    if "source" not in raw or "target" not in raw:
        raise ConfigError("config must provide 'source' and 'target' dataset paths")

    hyper = {}
    for key, caster in _HYPER_KEYS.items():
        if key in raw:
            hyper[key] = _cast(key, raw[key], caster)
    dims = hyper.pop("layers", (2, 64, 64, 2))
    config = TrainConfig(layer_specs=specs_from_dims(dims), **hyper)

    def path_of(key: str, default: str | None = None) -> Path:
        if key in raw:
            return _resolve(key, raw[key], origin[key], base_dir)
        return (base_dir / default).resolve()

    return TrainSettings(
        config=config,
        source=path_of("source"),
        target=path_of("target"),
        num_classes=_cast("num_classes", raw.get("num_classes", "2"), int),
        header=_cast("header", raw.get("header", "false"), _parse_bool),
        target_labeled=_cast("target_labeled", raw.get("target_labeled", "true"), _parse_bool),
        checkpoint=path_of("checkpoint", "model.ckpt"),
        history=path_of("history", "history.csv"),
    )


# --- subcommands ----------------------------------------------------------


def cmd_generate(args) -> int:
    if args.generator == "two-moons":
        if args.n < 2:
            raise ConfigError("--n must be >= 2")
        if args.noise < 0:
            raise ConfigError("--noise must be >= 0")
        ds = data_mod.gen_two_moons(args.n, args.noise, args.rotation, args.seed)
        data_mod.write_csv(ds, args.out)
        print(f"wrote {ds.n} rows, {ds.num_classes} classes -> {args.out}")
        return 0
    # gaussian-shift
    if args.classes < 1:
        raise ConfigError("--classes must be >= 1")
    if args.n < args.classes:
        raise ConfigError(f"--n must be >= --classes ({args.classes})")
    if args.cov_scale <= 0:
        raise ConfigError("--cov-scale must be > 0")
    try:
        shift = [float(x) for x in args.mean_shift.split(",")]
    except ValueError:
        raise ConfigError(f"--mean-shift must be comma-separated floats, got {args.mean_shift!r}") from None
    if len(shift) != args.dim:
        raise ConfigError(f"--mean-shift must have --dim = {args.dim} entries")
    src, tgt = data_mod.gen_gaussian_shift(args.n, args.dim, shift, args.cov_scale,
                                           args.classes, args.seed)
    data_mod.write_csv(src, args.out_source)
    data_mod.write_csv(tgt, args.out_target)
    print(f"wrote {src.n}+{tgt.n} rows, {src.num_classes} classes -> "
          f"{args.out_source}, {args.out_target}")
    return 0


def cmd_train(args) -> int:
    settings = load_train_settings(args.config, args.set or [])
    config = settings.config
    source = data_mod.load_csv(settings.source, settings.num_classes, labeled=True,
                               header=settings.header)
    target = data_mod.load_csv(settings.target, settings.num_classes,
                               labeled=settings.target_labeled, header=settings.header)
    net = opt_state = None
    start_step = 0
    if args.resume:
        cp = trainer.load_checkpoint(args.resume)
        if cp.specs != config.layer_specs:
            raise ConfigError("checkpoint layers do not match the config")
        net, opt_state, start_step = cp.network(), cp.opt_state(), cp.step
    result = trainer.train(config, source, target, net=net,
                           opt_state=opt_state, start_step=start_step)
    trainer.save_checkpoint(result.net, result.opt_state, config,
                            settings.checkpoint, step=result.steps)
    trainer.write_history_csv(result.history, settings.history)
    print(f"trained steps {start_step}..{result.steps} -> {settings.checkpoint}")
    return 0


def cmd_eval(args) -> int:
    cp = trainer.load_checkpoint(args.checkpoint)
    net = cp.network()
    try:
        ds = data_mod.load_csv(args.data, net.num_classes, labeled=True, header=args.header)
    except LabelOutOfRange as exc:
        raise ClassCountMismatch(
            f"dataset labels exceed the checkpoint's {net.num_classes} classes: {exc}"
        ) from exc
    print(f"accuracy={evaluation.accuracy(net, ds):.2f}")
    return 0


def cmd_embed(args) -> int:
    cp = trainer.load_checkpoint(args.checkpoint)
    net = cp.network()
    source = data_mod.load_csv(args.source, net.num_classes,
                               labeled=not args.unlabeled_source, header=args.header)
    target = data_mod.load_csv(args.target, net.num_classes,
                               labeled=not args.unlabeled_target, header=args.header)
    rows = evaluation.export_embedding(net, source, target, args.out)
    print(f"wrote {rows} embedding rows -> {args.out}")
    return 0


def _suite_tasks(name: str) -> list[evaluation.TransferTask]:
    if name != "two-moons-sweep":
        raise ConfigError(f"unknown suite: {name}")
    source = data_mod.gen_two_moons(500, 0.15, 0.0, seed=11)
    tasks = []
    for rotation, seed in ((15.0, 21), (30.0, 22), (45.0, 23)):
        target = data_mod.gen_two_moons(500, 0.15, rotation, seed=seed)
        tasks.append(evaluation.TransferTask(f"0to{rotation:g}", source, target))
    return tasks


def cmd_benchmark(args) -> int:
    raw, origin, base_dir = _merge_raw(args.config, args.set or [])
    task_keys = {}
    for key in list(raw):
        if key.startswith("task."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("source", "target") or not parts[1]:
                raise ConfigError(f"unknown config key: {key}")
            task_keys[key] = raw.pop(key)
    known = {**_HYPER_KEYS, **_BENCH_KEYS}
    known.pop("seed", None)
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")

    hyper = {k: _cast(k, raw[k], c) for k, c in _HYPER_KEYS.items() if k != "seed" and k in raw}
    dims = hyper.pop("layers", (2, 64, 64, 2))
    base_config = TrainConfig(layer_specs=specs_from_dims(dims), **hyper)

    seeds_count = args.seeds if args.seeds is not None else _cast(
        "seeds", raw.get("seeds", "5"), int)
    if seeds_count < 1:
        raise ConfigError("--seeds must be >= 1")
    seeds = list(range(1, seeds_count + 1))

    method_names = [m.strip() for m in raw.get("methods", "").split(",") if m.strip()] or \
        [name for name, _ in evaluation.DEFAULT_METHODS]
    by_name = dict(evaluation.DEFAULT_METHODS)
    methods = []
    for name in method_names:
        if name not in by_name:
            raise ConfigError(f"unknown method: {name} (known: {', '.join(by_name)})")
        methods.append((name, by_name[name]))

    suite = args.suite or raw.get("suite")
    if suite:
        tasks = _suite_tasks(suite)
    elif task_keys:
        num_classes = _cast("num_classes", raw.get("num_classes", "2"), int)
        header = _cast("header", raw.get("header", "false"), _parse_bool)
        names = sorted({k.split(".")[1] for k in task_keys})
        tasks = []
        for name in names:
            for side in ("source", "target"):
                if f"task.{name}.{side}" not in task_keys:
                    raise ConfigError(f"task {name} is missing its {side} path")
            src = data_mod.load_csv(
                _resolve("task", task_keys[f"task.{name}.source"], origin.get(f"task.{name}.source", "file"), base_dir),
                num_classes, labeled=True, header=header)
            tgt = data_mod.load_csv(
                _resolve("task", task_keys[f"task.{name}.target"], origin.get(f"task.{name}.target", "file"), base_dir),
                num_classes, labeled=True, header=header)
            tasks.append(evaluation.TransferTask(name, src, tgt))
    else:
        raise ConfigError("benchmark needs --suite or task.* config entries")

    table = evaluation.run_benchmark(tasks, methods, seeds, base_config, jobs=args.jobs)
    table.write(args.out)
    print(f"wrote {len(table.cells)} cells + {len(table.method_means)} mean rows -> {args.out}")
    return 0


# --- parser ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mindisc",
        description="Domain adaptation by joint covariance alignment, multi-kernel "
                    "MMD, and target-entropy minimization.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write synthetic dataset CSVs",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    gensub = gen.add_subparsers(dest="generator", required=True, parser_class=_Parser)
    moons = gensub.add_parser("two-moons", help="two interleaved arcs with rotation shift",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    moons.add_argument("--n", type=int, default=500, help="total number of points (>= 2)")
    moons.add_argument("--noise", type=float, default=0.15, help="Gaussian noise sd (>= 0)")
    moons.add_argument("--rotation", type=float, default=0.0, help="rotation in degrees")
    moons.add_argument("--seed", type=int, default=_env_seed(), help="generator seed")
    moons.add_argument("--out", required=True, help="output CSV path")
    moons.set_defaults(func=cmd_generate)
    gauss = gensub.add_parser("gaussian-shift", help="class Gaussians with mean/covariance shift",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    gauss.add_argument("--n", type=int, default=500, help="points per domain (>= --classes)")
    gauss.add_argument("--dim", type=int, default=2, help="feature dimensionality")
    gauss.add_argument("--classes", type=int, default=2, help="number of classes")
    gauss.add_argument("--mean-shift", default="0,0", help="comma floats, length --dim")
    gauss.add_argument("--cov-scale", type=float, default=1.0, help="target covariance scale (> 0)")
    gauss.add_argument("--seed", type=int, default=_env_seed(), help="generator seed")
    gauss.add_argument("--out-source", required=True, help="source CSV path")
    gauss.add_argument("--out-target", required=True, help="target CSV path")
    gauss.set_defaults(func=cmd_generate)

    tr = sub.add_parser("train", help="train from a config file; writes checkpoint + history",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    tr.add_argument("--config", required=True, help="key = value config file")
    tr.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    tr.add_argument("--resume", help="checkpoint to continue from")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="print a checkpoint's accuracy on a labeled CSV",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True, help="labeled CSV (label in last column)")
    ev.add_argument("--header", action="store_true", help="skip one header line")
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("benchmark", help="train every (task, method, seed) cell; write the table",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bench.add_argument("--out", required=True, help="output CSV path")
    bench.add_argument("--suite", help="builtin task suite (two-moons-sweep)")
    bench.add_argument("--seeds", type=int, help="run seeds 1..N per cell")
    bench.add_argument("--config", help="optional config with hyperparameters and task.* entries")
    bench.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    bench.add_argument("--jobs", type=int, default=1, help="parallel training cells")
    bench.set_defaults(func=cmd_benchmark)

    emb = sub.add_parser("embed", help="export a 2-D embedding of rep-tap activations",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    emb.add_argument("--checkpoint", required=True)
    emb.add_argument("--source", required=True, help="source CSV")
    emb.add_argument("--target", required=True, help="target CSV")
    emb.add_argument("--out", required=True, help="output CSV path")
    emb.add_argument("--unlabeled-source", action="store_true", help="source CSV has no label column")
    emb.add_argument("--unlabeled-target", action="store_true", help="target CSV has no label column")
    emb.add_argument("--header", action="store_true", help="skip one header line")
    emb.set_defaults(func=cmd_embed)
    return parser


def _env_seed() -> int:
    value = os.environ.get(SEED_ENV, "")
    if not value:
        return 0
    try:
        return int(value)
    except ValueError:
        return 0


_EXIT_BY_ERROR = (
    ((ConfigError, InvalidParam, InvalidSpec), EXIT_CONFIG),
    ((NonFiniteLoss,), EXIT_DIVERGED),
    ((ClassCountMismatch, ShapeMismatch, LabelOutOfRange, UnlabeledDataset), EXIT_MISMATCH),
    ((MalformedRow, NonFiniteValue, EmptyDataset, CorruptCheckpoint, VersionMismatch), EXIT_IO),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MindiscError as exc:
        for types, code in _EXIT_BY_ERROR:
            if isinstance(exc, types):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
