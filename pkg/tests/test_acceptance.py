"""Acceptance suite.

Each test prints one `criterion N: PASS/FAIL` line. The shift-protocol
fixtures (two moons, 30-degree target rotation, 500 points per domain,
noise 0.15, 2-64-64-2 network, 50 epochs, batch 32, seeds 1..5) are shared
across the criteria that reuse those runs.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

import mindisc as md
from mindisc.cli import main as cli_main
from mindisc.data import BatchPair
from mindisc.network import Network, forward
from mindisc.numerics import make_rng
from mindisc.trainer import total_objective

from _utils import central_diff, max_fd_error_two_sample, rel_err, reference_supervised_train

SEEDS = (1, 2, 3, 4, 5)
FD_TOL = 1e-4
METHODS = dict(md.DEFAULT_METHODS)


def check(criterion, ok, detail=""):
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


@pytest.fixture(scope="module")
def protocol():
    return {
        "source": md.gen_two_moons(500, 0.15, 0.0, seed=11),
        "target30": md.gen_two_moons(500, 0.15, 30.0, seed=23),
        "target0": md.gen_two_moons(500, 0.15, 0.0, seed=23),
        "config": md.TrainConfig(layer_specs=md.specs_from_dims([2, 64, 64, 2]),
                                 epochs=50, batch_size=32),
    }


@pytest.fixture(scope="module")
def shift_runs(protocol):
    """All four methods x five seeds on the 30-degree task, timed."""
    accs = {name: [] for name in METHODS}
    nets = {name: {} for name in METHODS}
    start = time.perf_counter()
    for name, overrides in METHODS.items():
        for seed in SEEDS:
            config = replace(protocol["config"], seed=seed, **overrides)
            result = md.train(config, protocol["source"], protocol["target30"])
            accs[name].append(md.accuracy(result.net, protocol["target30"]))
            nets[name][seed] = result.net
    elapsed = time.perf_counter() - start
    return {"accs": accs, "nets": nets, "elapsed": elapsed}


@pytest.fixture(scope="module")
def entropy_off_runs(protocol):
    """The lambda_entropy = 0 twins of every adaptation method, same seeds."""
    nets = {}
    for name, overrides in METHODS.items():
        if name == "baseline":
            continue
        nets[name] = {}
        for seed in SEEDS:
            config = replace(protocol["config"], seed=seed,
                             **{**overrides, "lambda_entropy": 0.0})
            nets[name][seed] = md.train(config, protocol["source"],
                                        protocol["target30"]).net
    return nets


def test_criterion_1_gradient_correctness():
    start = time.perf_counter()

    worst = 0.0
    for s in range(100):
        Ds, Dt = (make_rng(1000 + s).standard_normal((8, 4)),
                  make_rng(11000 + s).standard_normal((8, 4)))
        worst = max(worst, max_fd_error_two_sample(md.coral_loss, Ds, Dt))
    coral_worst = worst

    worst = 0.0
    for s in range(100):
        Ds, Dt = (make_rng(2000 + s).standard_normal((8, 4)),
                  make_rng(12000 + s).standard_normal((8, 4)))
        bank = md.median_bandwidths(Ds, Dt, 3)
        worst = max(worst, max_fd_error_two_sample(
            lambda a, b: md.mmd2_loss(a, b, bank), Ds, Dt))
    mmd_worst = worst

    worst = 0.0
    for s in range(100):
        Z = make_rng(3000 + s).standard_normal((8, 4))
        fd = central_diff(lambda M: md.entropy_loss(M).value, Z.copy())
        worst = max(worst, float(rel_err(md.entropy_loss(Z).grad_target, fd).max()))
    ent_worst = worst

    worst = 0.0
    for s in range(100):
        rng = make_rng(4000 + s)
        Z = rng.standard_normal((8, 4))
        y = rng.integers(0, 4, 8)
        fd = central_diff(lambda M: md.cross_entropy_loss(M, y).value, Z.copy())
        worst = max(worst, float(rel_err(md.cross_entropy_loss(Z, y).grad_source, fd).max()))
    ce_worst = worst

    config = md.TrainConfig(layer_specs=md.specs_from_dims([4, 6, 3]),
                            epochs=1, batch_size=8)
    worst = 0.0
    h = 1e-5
    for s in range(100):
        rng = make_rng(5000 + s)
        batch = BatchPair(rng.standard_normal((8, 4)), rng.integers(0, 3, 8),
                          rng.standard_normal((8, 4)))
        net = md.init_network(config.layer_specs, 5000 + s)
        bank = md.median_bandwidths(forward(net, batch.source_features).rep,
                                    forward(net, batch.target_features).rep, 5)
        _, grads = total_objective(net, batch, config, bank)
        for li in range(2):
            for arr, g in ((net.weights[li], grads.weights[li]),
                           (net.biases[li], grads.biases[li])):
                fd = np.zeros_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    fp = total_objective(net, batch, config, bank)[0].total
                    arr[idx] = orig - h
                    fm = total_objective(net, batch, config, bank)[0].total
                    arr[idx] = orig
                    fd[idx] = (fp - fm) / (2 * h)
                worst = max(worst, float(rel_err(g, fd).max()))
    objective_worst = worst

    elapsed = time.perf_counter() - start
    all_worst = max(coral_worst, mmd_worst, ent_worst, ce_worst, objective_worst)
    check(1, all_worst <= FD_TOL and elapsed < 30.0,
          f"(worst rel err {all_worst:.2e}: coral {coral_worst:.1e}, mmd {mmd_worst:.1e}, "
          f"entropy {ent_worst:.1e}, ce {ce_worst:.1e}, objective {objective_worst:.1e}; "
          f"{elapsed:.1f}s of 30s budget)")


def test_criterion_2_loss_identities():
    ok = True
    for s in range(50):
        X = make_rng(6000 + s).standard_normal((6, 3)) * 2.0
        ok &= abs(md.coral_loss(X, X.copy()).value) <= 1e-12
        bank = md.median_bandwidths(X, X.copy(), 5)
        ok &= abs(md.mmd2_loss(X, X.copy(), bank).value) <= 1e-12

    coral = md.coral_loss([[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 2.0]]).value
    ok &= abs(coral - 0.5625) <= 1e-12

    mmd = md.mmd2_loss([[1.0, 0.0]], [[0.0, 1.0]], md.KernelBank([1.0], [1.0])).value
    ok &= abs(mmd - (2.0 - 2.0 * math.exp(-1.0))) <= 1e-12

    entropies_ok = all(
        abs(md.entropy_loss(np.zeros((1, c))).value - math.log(c)) <= 1e-12
        for c in range(2, 11)
    )
    ok &= entropies_ok
    check(2, ok, f"(coral={coral}, mmd={mmd}, uniform entropies {'ok' if entropies_ok else 'bad'})")


def test_criterion_3_reduction_equivalence():
    source = md.gen_two_moons(96, 0.15, 0.0, seed=100)
    target = md.gen_two_moons(96, 0.15, 30.0, seed=101)
    config = md.TrainConfig(layer_specs=md.specs_from_dims([2, 8, 2]), epochs=3,
                            batch_size=16, seed=9, lambda_coral_rep=0.0,
                            lambda_coral_logit=0.0, lambda_mmd_rep=0.0,
                            lambda_mmd_logit=0.0, lambda_entropy=0.0)
    result = md.train(config, source, target)
    ref_w, ref_b = reference_supervised_train([2, 8, 2], source, target, epochs=3,
                                              batch_size=16, lr=config.lr,
                                              momentum=config.momentum,
                                              weight_decay=config.weight_decay, seed=9)
    same = all(np.array_equal(a, b) for a, b in zip(result.net.weights, ref_w)) and \
        all(np.array_equal(a, b) for a, b in zip(result.net.biases, ref_b))
    check(3, same, "(adaptation weights at zero reproduce the plain supervised loop bitwise)")


def test_criterion_4_adaptation_gain(shift_runs):
    accs = shift_runs["accs"]
    joint = float(np.mean(accs["joint"]))
    baseline = float(np.mean(accs["baseline"]))
    coral = float(np.mean(accs["coral"]))
    mmd = float(np.mean(accs["mmd"]))
    gain_ok = joint >= baseline + 5.0
    ablation_ok = joint >= max(coral, mmd) - 1.0
    time_ok = shift_runs["elapsed"] < 120.0
    check(4, gain_ok and ablation_ok and time_ok,
          f"(joint {joint:.2f} vs baseline {baseline:.2f} [gain {joint - baseline:+.2f}], "
          f"coral {coral:.2f}, mmd {mmd:.2f}; {shift_runs['elapsed']:.0f}s of 120s budget)")


def test_criterion_5_entropy_effect(protocol, shift_runs, entropy_off_runs):
    target = protocol["target30"]

    def mean_entropy(net):
        return md.entropy_loss(forward(net, target.features).logits).value

    ok = True
    details = []
    for name in ("coral", "mmd", "joint"):
        with_h = float(np.mean([mean_entropy(shift_runs["nets"][name][s]) for s in SEEDS]))
        without = float(np.mean([mean_entropy(entropy_off_runs[name][s]) for s in SEEDS]))
        ok &= with_h < without
        details.append(f"{name} {with_h:.4f}<{without:.4f}")
    check(5, ok, f"({'; '.join(details)})")


def test_criterion_6_null_shift_safety(protocol):
    accs = {"baseline": [], "joint": []}
    for name in accs:
        for seed in SEEDS:
            config = replace(protocol["config"], seed=seed, **METHODS[name])
            result = md.train(config, protocol["source"], protocol["target0"])
            accs[name].append(md.accuracy(result.net, protocol["target0"]))
    diff = abs(float(np.mean(accs["joint"])) - float(np.mean(accs["baseline"])))
    check(6, diff <= 3.0,
          f"(joint {np.mean(accs['joint']):.2f} vs baseline {np.mean(accs['baseline']):.2f}, "
          f"|diff| {diff:.2f} <= 3)")


def test_criterion_7_determinism_and_resume(tmp_path):
    src, tgt = tmp_path / "src.csv", tmp_path / "tgt.csv"
    for args in (["generate", "two-moons", "--n", "64", "--noise", "0.15", "--rotation", "0",
                  "--seed", "100", "--out", str(src)],
                 ["generate", "two-moons", "--n", "64", "--noise", "0.15", "--rotation", "30",
                  "--seed", "101", "--out", str(tgt)]):
        assert cli_main(args) == 0

    def config_for(epochs, stem):
        path = tmp_path / f"{stem}.cfg"
        path.write_text(
            f"source = src.csv\ntarget = tgt.csv\nlayers = 2,8,2\n"
            f"epochs = {epochs}\nbatch_size = 32\nseed = 3\n"
            f"checkpoint = {stem}.ckpt\nhistory = {stem}.csv\n"
        )
        return path

    # identical invocations are byte-identical end to end
    cfg = config_for(5, "runA")
    assert cli_main(["train", "--config", str(cfg)]) == 0
    ckpt_first = (tmp_path / "runA.ckpt").read_bytes()
    hist_first = (tmp_path / "runA.csv").read_bytes()
    assert cli_main(["train", "--config", str(cfg)]) == 0
    deterministic = ((tmp_path / "runA.ckpt").read_bytes() == ckpt_first
                     and (tmp_path / "runA.csv").read_bytes() == hist_first)

    # resume after 10 steps (= 5 epochs at 2 steps/epoch) equals 20 straight
    resumed_cfg = config_for(10, "runB")
    assert cli_main(["train", "--config", str(resumed_cfg),
                     "--resume", str(tmp_path / "runA.ckpt")]) == 0
    straight_cfg = config_for(10, "runC")
    assert cli_main(["train", "--config", str(straight_cfg)]) == 0
    resumed = md.load_checkpoint(tmp_path / "runB.ckpt")
    straight = md.load_checkpoint(tmp_path / "runC.ckpt")
    resume_ok = all(np.array_equal(a, b) for a, b in zip(resumed.weights, straight.weights)) \
        and all(np.array_equal(a, b) for a, b in zip(resumed.vel_w, straight.vel_w)) \
        and resumed.step == straight.step == 20

    check(7, deterministic and resume_ok,
          f"(rerun byte-identical: {deterministic}; resume 10+10 == straight 20: {resume_ok})")


def test_criterion_8_accuracy_formatting(tmp_path, capsys):
    config = md.TrainConfig(layer_specs=md.specs_from_dims([2, 2, 2]),
                            epochs=1, batch_size=8)
    net = Network(config.layer_specs, [np.eye(2), np.eye(2)],
                  [np.zeros(2), np.zeros(2)])
    ckpt = tmp_path / "id.ckpt"
    md.save_checkpoint(net, None, config, ckpt)

    data = tmp_path / "d.csv"
    rows = ["1.0,0.0,0"] * 747 + ["1.0,0.0,1"] * 253  # predicts 0 everywhere: t = 747
    data.write_text("\n".join(rows) + "\n")

    assert cli_main(["eval", "--checkpoint", str(ckpt), "--data", str(data)]) == 0
    out = capsys.readouterr().out.strip()
    check(8, out == "accuracy=74.70", f"(printed {out!r})")


def test_criterion_9_embedding_centroids(protocol, shift_runs, tmp_path):
    source, target = protocol["source"], protocol["target30"]

    def centroid_distance(net, path):
        md.export_embedding(net, source, target, path)
        rows = np.array([[float(v) for v in line.split(",")[:2]]
                         for line in path.read_text().splitlines()[1:]])
        return float(np.linalg.norm(rows[:source.n].mean(axis=0)
                                    - rows[source.n:].mean(axis=0)))

    decreased = 0
    pairs = []
    for seed in SEEDS:
        untrained = md.init_network(protocol["config"].layer_specs, seed)
        d0 = centroid_distance(untrained, tmp_path / f"untrained_{seed}.csv")
        d1 = centroid_distance(shift_runs["nets"]["joint"][seed],
                               tmp_path / f"trained_{seed}.csv")
        decreased += d1 < d0
        pairs.append(f"{d0:.3f}->{d1:.3f}")
    check(9, decreased >= 4, f"({decreased}/5 seeds decreased: {', '.join(pairs)})")
