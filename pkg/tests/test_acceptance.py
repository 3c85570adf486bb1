"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line, printed together at the end of the
pytest run under "acceptance criteria". Criterion 8 lists what is
deliberately not reproduced, so it has no check.
"""

import time

import numpy as np
import pytest

from offload_rl import presets
from offload_rl.clustering import cluster_with_bandwidth, kmeans_1d
from offload_rl.config import load_config
from offload_rl.profile import build_vgg5
from offload_rl.rl.agent import actor_loss_and_grad, critic_loss_and_grad, gaussian_log_prob, init_agent, actor_forward
from offload_rl.rl.mlp import MlpParams
from offload_rl.rl.checkpoint import load_checkpoint, save_checkpoint
from offload_rl.runners import offload_sweep, run_compare, run_cross_model, run_train
from offload_rl.sim import step

import oracles


def test_criterion_1_profile_fidelity(criterion):
    t0 = time.perf_counter()
    p = build_vgg5()
    fr = [op.device_fraction for op in p.offloading_points]
    bd = list(p.boundaries())
    ok = (np.allclose(fr, [0.1, 0.66, 0.94, 1.0], atol=0.02)
          and np.allclose(bd, [0.38, 0.79, 0.96], atol=0.02)
          and time.perf_counter() - t0 < 1.0)
    criterion(1, "profile fidelity", ok, f"fractions {np.round(fr, 3).tolist()}, boundaries {np.round(bd, 3).tolist()}")
    assert ok


def test_criterion_2_cost_model_argmin(criterion):
    t0 = time.perf_counter()
    res = offload_sweep()
    cells = res.argmin_matches()
    devs = res.device_argmin_matches()
    elapsed = time.perf_counter() - t0
    ok = (len(cells) == 8 and all(cells.values()) and len(devs) == 4 and all(devs.values())
          and max(res.mare.values()) <= 0.15 and elapsed < 1.0)
    criterion(2, "cost-model argmin reproduction", ok,
              f"{sum(cells.values())}/8 cells, {sum(devs.values())}/4 devices, "
              f"MARE vgg5 {res.mare['vgg5']:.3f} vgg8 {res.mare['vgg8']:.3f}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_clustering(criterion):
    t0 = time.perf_counter()
    g = kmeans_1d(presets.TESTBED_NATIVE, 3)
    table_iv = [sorted(x.members) for x in g.groups] == [sorted(m) for m in presets.PUBLISHED_GROUPS]
    centers = [x.centroid for x in g.groups]
    means_ok = all(abs(x.centroid - np.mean([presets.TESTBED_NATIVE[d] for d in x.members])) <= 1e-6 for x in g.groups)
    centers_ok = np.allclose(centers, [0.07, 3.7, 5.14], atol=1e-6)

    s = presets.bandwidth_scenario(rounds=2, noise=0.0)
    obs = step(s, 0, s.native_strategy())
    bw = cluster_with_bandwidth(obs, 3, times=presets.TESTBED_NATIVE)
    table_vi = [sorted(x.members) for x in bw.groups] == [sorted(m) for m in presets.PUBLISHED_BW_GROUPS]

    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(1, 26))
        k = int(rng.integers(1, min(n, 6) + 1))
        xs = rng.exponential(2.0, size=n)
        a = kmeans_1d(list(xs), k, seed=int(rng.integers(1 << 30)))
        cost = sum((xs[int(d)] - grp.centroid) ** 2 for grp in a.groups for d in grp.members)
        if not cost <= oracles.dp_kmeans_cost(xs, k) * (1 + 1e-9) + 1e-12:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = table_iv and means_ok and centers_ok and table_vi and mismatches == 0 and elapsed < 5.0
    criterion(3, "clustering reproduction", ok,
              f"centers {np.round(centers, 4).tolist()}, Table IV {table_iv}, Table VI {table_vi}, "
              f"{200 - mismatches}/200 optimal, {elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def het_training(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = load_config("heterogeneity").with_overrides(output_dir=out)
    t0 = time.perf_counter()
    res = run_train(cfg)
    return out, res, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_4_rl_convergence(criterion, het_training):
    _, res, elapsed = het_training
    final = res.final_average()
    ok = final[0] > 0.96 and final[1] < 0.38 and final[2] < 0.38 and elapsed < 300
    criterion(4, "RL convergence on the heterogeneity scenario", ok,
              f"final means {np.round(final, 3).tolist()}, best OPs {[op for op, _ in res.bands]}, "
              f"entry rounds {res.convergence_rounds()}, {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_5_bandwidth_adaptation(criterion, tmp_path):
    cfg = load_config("bandwidth").with_overrides(output_dir=tmp_path)
    t0 = time.perf_counter()
    res = run_train(cfg)
    elapsed = time.perf_counter() - t0
    final = res.final_average()
    in_band = [bool(lo <= m <= hi) for m, (_, (lo, hi)) in zip(final, res.bands)]
    entry = res.convergence_rounds()
    # the low-bandwidth group is listed last
    later = entry[-1] is not None and all(e is not None and e < entry[-1] for e in entry[:-1])
    ok = all(in_band) and later and elapsed < 300
    criterion(5, "bandwidth-adaptation convergence", ok,
              f"final means {np.round(final, 3).tolist()}, best OPs {[op for op, _ in res.bands]}, "
              f"in band {in_band}, entry rounds {entry}, {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_6_end_to_end_reduction(criterion, het_training):
    out, _, _ = het_training
    t0 = time.perf_counter()
    cmp = run_compare(load_config("compare").with_overrides(output_dir=out))
    cross = run_cross_model(load_config("cross_model").with_overrides(output_dir=out))
    per_arm = (time.perf_counter() - t0) / 4
    first, total = cmp.ratio_first(), cmp.ratio_total()
    # the uniform-bandwidth segment is the first 50 rounds
    cross_red = 1.0 - cross.ratio_first()
    ok = first <= 0.70 and total <= 0.80 and cross_red >= 0.45 and per_arm < 60
    criterion(6, "end-to-end reduction", ok,
              f"rounds 0-49 ratio {first:.3f}, total ratio {total:.3f}, "
              f"VGG-8 uniform-segment reduction {cross_red:.1%}, {per_arm:.1f}s per arm")
    assert ok


def _rel(a, b):
    # elementwise, with the usual floor for coordinates whose gradient is exactly zero
    return oracles.rel_error(a, b)


def _extended(params: MlpParams) -> MlpParams:
    return MlpParams([w.astype(np.longdouble) for w in params.weights],
                     [b.astype(np.longdouble) for b in params.biases])


def _sampled_fd(loss, params, grads, rng, n_coords=40, eps=1e-6):
    """Central differences on randomly chosen coordinates of the full network.

    The loss is evaluated on an extended-precision copy, so round-off in the
    difference quotient stays far below the tolerance even for coordinates
    whose gradient is tiny.
    """
    ext = _extended(params)
    arrays, garrays = ext.arrays(), grads.arrays()
    sizes = [a.size for a in arrays]
    offsets = np.cumsum([0] + sizes)
    picks = rng.choice(offsets[-1], size=min(n_coords, offsets[-1]), replace=False)
    num, ana = [], []
    for flat in picks:
        i = int(np.searchsorted(offsets, flat, side="right") - 1)
        a, idx = arrays[i], np.unravel_index(flat - offsets[i], arrays[i].shape)
        old = a[idx]
        a[idx] = old + eps
        up = loss(ext)
        a[idx] = old - eps
        down = loss(ext)
        a[idx] = old
        num.append(float((up - down) / (2 * eps)))
        ana.append(garrays[i][idx])
    return np.array(ana), np.array(num)


def test_criterion_7_numerical_soundness(criterion, tmp_path):
    t0 = time.perf_counter()
    worst = 0.0
    for inst in range(50):
        rng = np.random.default_rng(inst)
        p = init_agent(3, seed=inst)
        states = rng.random((12, p.state_dim))
        means = actor_forward(p, states)
        raw = means + 0.3 * rng.normal(size=means.shape)
        old = gaussian_log_prob(raw, means, 0.3) + 0.1 * rng.normal(size=12)
        adv = rng.normal(size=12)
        f = lambda net: oracles.clipped_surrogate_loss(net.weights, net.biases, states, raw, old, adv, 0.3, 0.2)
        _, g = actor_loss_and_grad(p.actor, states, raw, old, adv, 0.3, 0.2)
        worst = max(worst, _rel(*_sampled_fd(f, p.actor, g, rng)))
        returns = rng.normal(size=12)
        f = lambda net: oracles.critic_loss(net.weights, net.biases, states, returns)
        _, g = critic_loss_and_grad(p.critic, states, returns)
        worst = max(worst, _rel(*_sampled_fd(f, p.critic, g, rng)))
    grads_ok = worst < 1e-4

    p = init_agent(3, seed=11)
    path = save_checkpoint(p, tmp_path / "a.npz")
    q, _ = load_checkpoint(path)
    pairs = zip(p.actor.arrays() + p.critic.arrays(), q.actor.arrays() + q.critic.arrays())
    ckpt_ok = all(np.array_equal(a, b) and a.dtype == b.dtype for a, b in pairs)
    ckpt_ok = ckpt_ok and q.action_std == p.action_std

    cfg = load_config("heterogeneity")
    cfg = cfg.with_overrides(seeds=[3])
    cfg.scenario.rounds = cfg.train.rounds = 60
    ra = run_train(cfg.with_overrides(output_dir=tmp_path / "r1"))
    rb = run_train(cfg.with_overrides(output_dir=tmp_path / "r2"))
    replay_ok = (np.array_equal(ra.mean_actions[3], rb.mean_actions[3])
                 and (tmp_path / "r1/heterogeneity/train_seed3.csv").read_bytes()
                 == (tmp_path / "r2/heterogeneity/train_seed3.csv").read_bytes()
                 and ra.checkpoints[3].read_bytes() == rb.checkpoints[3].read_bytes())
    elapsed = time.perf_counter() - t0
    ok = grads_ok and ckpt_ok and replay_ok and elapsed < 30
    criterion(7, "numerical soundness", ok,
              f"worst gradient rel. error {worst:.2e} over 50 instances, checkpoint bit-exact {ckpt_ok}, "
              f"replay bit-exact {replay_ok}, {elapsed:.1f}s")
    assert ok


def test_criterion_8_out_of_scope(criterion):
    # nothing to run: recorded so the report lists every criterion
    criterion(8, "not reproduced by design", True,
              "accuracy curves, the deployment-overhead measurement and testbed wall-clock seconds", status="N/A")
