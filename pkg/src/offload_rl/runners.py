"""Experiment runners: offloading sweep, agent training, deployment,
comparison against classic FL and reuse of an agent on another model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import presets
from .clustering import GroupAssignment
from .config import ExperimentConfig, Mode
from .cost import best_op, calibrate_device, iteration_time
from .errors import ConfigError
from .profile import ModelProfile
from .reports import Chart, Series, write_csv, write_svg
from .rl.agent import compute_reward
from .rl.checkpoint import load_checkpoint, save_checkpoint
from .rl.train import Policy, TrainConfig, deploy, train_agent
from .sim import RoundObservation, Scenario, baseline_times, step

log = logging.getLogger(__name__)

FINAL_WINDOW = 50
UNIFORM_ROUNDS = 50  # rounds before the first bandwidth drop

RUN_HEADER = ["round", "arm", "device", "group", "op", "device_seconds", "round_seconds", "reward"]


@dataclass
class RunRecord:
    """Long-format per-round, per-device rows of one simulated run."""

    arm: str
    device_ids: list
    rows: list = field(default_factory=list)

    @classmethod
    def from_observations(cls, arm: str, observations, groups=None, baselines=None) -> "RunRecord":
        rec = cls(arm, [d.device_id for d in observations[0].devices] if observations else [])
        for i, obs in enumerate(observations):
            g: GroupAssignment | None = groups[i] if groups else None
            mapping = g.mapping() if g is not None else {}
            reward = compute_reward(obs, baselines) if baselines else None
            for d in obs.devices:
                rec.rows.append(
                    (obs.round, arm, d.device_id, mapping.get(d.device_id), d.op_index,
                     d.round_seconds, obs.round_seconds, reward)
                )
        return rec

    def round_seconds(self) -> np.ndarray:
        seen = {}
        for r in self.rows:
            seen[r[0]] = r[6]
        return np.array([seen[k] for k in sorted(seen)])

    def device_seconds(self, device_id) -> np.ndarray:
        return np.array([r[5] for r in self.rows if r[2] == device_id])

    def ops(self, device_id) -> list[int]:
        return [r[4] for r in self.rows if r[2] == device_id]

    def write(self, path) -> Path:
        return write_csv(path, RUN_HEADER, self.rows)


def op_band(profile: ModelProfile, op_index: int) -> tuple[float, float]:
    """Range of actions that map to ``op_index``: [lo, hi)."""
    b = profile.boundaries()
    lo = 0.0 if op_index == 1 else b[op_index - 2]
    hi = 1.0 if op_index == len(profile.offloading_points) else b[op_index - 1]
    return lo, hi


def optimal_bands(scenario: Scenario, groups: GroupAssignment, round: int = 0) -> list[tuple[int, tuple[float, float]]]:
    """Per group: the cost-model best OP for its representative and the
    action band mapping to it."""
    by_id = {d.id: d for d in scenario.devices}
    out = []
    for g in groups.groups:
        dev = by_id[g.representative]
        op = best_op(scenario.profile, dev, scenario.server, scenario.link(dev.id, round))
        out.append((op.index, op_band(scenario.profile, op.index)))
    return out


def in_band(x, band) -> np.ndarray:
    lo, hi = band
    x = np.asarray(x)
    # the top band is closed at 1.0
    return (x >= lo) & ((x < hi) | (hi >= 1.0))


def sustained_entry(series, band) -> int | None:
    """First index from which ``series`` stays inside ``band`` to the end."""
    ok = in_band(series, band)
    if len(ok) == 0 or not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return int(bad[-1] + 1) if len(bad) else 0


# ---------------------------------------------------------------- sweep


@dataclass
class SweepResult:
    cells: list  # (model, column, op, predicted, published, rel_error, predicted_best, published_best)
    reductions: list  # (model, column, uplink_mbps, native, best, best_op, reduction_pct, published_reduction_pct)
    device_cells: list  # (device, op, predicted, published, predicted_best, published_best)
    mare: dict

    def argmin_matches(self) -> dict:
        out = {}
        for model, col, op, *_, pred_best, pub_best in self.cells:
            if pred_best:
                out[(model, col)] = op == presets.PUBLISHED_BEST_OP[model][col]
        return out

    def device_argmin_matches(self) -> dict:
        return {dev: op == presets.DEVICE_BEST_OP[dev] for dev, op, _, _, pred_best, _ in self.device_cells if pred_best}


def offload_sweep(models=("vgg5", "vgg8")) -> SweepResult:
    cells, reductions, device_cells, mare = [], [], [], {}
    for model in models:
        profile = presets.profile_for(model)
        server = presets.server_for(model)
        dev = presets.reference_device(model)
        errs = []
        for col in presets.BANDWIDTH_COLUMNS:
            link = presets.link_for(col)
            pred = [iteration_time(profile, op, dev, server, link).total_seconds for op in profile.offloading_points]
            pub = presets.OFFLOAD_TABLES[model][col]
            best = best_op(profile, dev, server, link).index
            pub_best = presets.PUBLISHED_BEST_OP[model][col]
            for op, p, m in zip(profile.offloading_points, pred, pub):
                rel = abs(p - m) / m
                errs.append(rel)
                cells.append((model, col, op.index, p, m, rel, op.index == best, op.index == pub_best))
            native = pred[-1]
            reductions.append(
                (model, col, presets.BANDWIDTH_COLUMNS[col][0], native, pred[best - 1], best,
                 100.0 * (1.0 - pred[best - 1] / native), 100.0 * (1.0 - min(pub) / pub[-1]))
            )
        mare[model] = float(np.mean(errs))
    if "vgg5" in models:
        profile, server = presets.profile_for("vgg5"), presets.server_for("vgg5")
        link = presets.link_for("wifi75")
        for name, row in presets.DEVICE_OP_TABLE.items():
            dev = calibrate_device(profile, row[-1], id=name)
            best = best_op(profile, dev, server, link).index
            for op, m in zip(profile.offloading_points, row):
                p = iteration_time(profile, op, dev, server, link).total_seconds
                device_cells.append((name, op.index, p, m, op.index == best, op.index == presets.DEVICE_BEST_OP[name]))
    return SweepResult(cells, reductions, device_cells, mare)


def run_offload_sweep(cfg: ExperimentConfig) -> SweepResult:
    res = offload_sweep(tuple(cfg.models))
    out = cfg.run_dir()
    if cfg.csv:
        write_csv(out / "sweep_cells.csv",
                  ["model", "column", "op", "predicted_s", "published_s", "rel_error", "predicted_best", "published_best"],
                  res.cells)
        write_csv(out / "sweep_reductions.csv",
                  ["model", "column", "uplink_mbps", "native_s", "best_s", "best_op", "reduction_pct", "published_reduction_pct"],
                  res.reductions)
        write_csv(out / "sweep_devices.csv",
                  ["device", "op", "predicted_s", "published_s", "predicted_best", "published_best"], res.device_cells)
        write_csv(out / "sweep_mare.csv", ["model", "mean_abs_rel_error"], sorted(res.mare.items()))
    if cfg.svg:
        chart = Chart("Per-iteration time reduction at the best OP", "uplink (Mbps)", "reduction vs native (%)")
        for model in cfg.models:
            rows = sorted((r for r in res.reductions if r[0] == model), key=lambda r: r[2])
            chart.series.append(Series(f"{model} model", [r[2] for r in rows], [r[6] for r in rows]))
            chart.series.append(Series(f"{model} measured", [r[2] for r in rows], [r[7] for r in rows]))
        write_svg(out / "sweep_reductions.svg", chart)
    return res


# ---------------------------------------------------------------- training


@dataclass
class TrainResult:
    seeds: list
    mean_actions: dict  # seed -> (rounds, G) array
    final_means: dict  # seed -> (G,) mean over the final window
    bands: list  # per group (best OP, (lo, hi))
    checkpoints: dict

    def seed_average(self) -> np.ndarray:
        return np.mean([self.mean_actions[s] for s in self.seeds], axis=0)

    def final_average(self) -> np.ndarray:
        return np.mean([self.final_means[s] for s in self.seeds], axis=0)

    def convergence_rounds(self) -> list[int | None]:
        avg = self.seed_average()
        return [sustained_entry(avg[:, g], band) for g, (_, band) in enumerate(self.bands)]


def initial_groups(scenario: Scenario, tcfg: TrainConfig) -> GroupAssignment:
    policy = Policy(scenario, tcfg)
    obs = step(scenario, 0, scenario.native_strategy())
    policy.observe_initial(obs)
    return policy.groups(obs)


def _train_cfg(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    return replace(cfg.train, seed=seed)


def run_train(cfg: ExperimentConfig) -> TrainResult:
    out = cfg.run_dir()
    res = TrainResult(list(cfg.seeds), {}, {}, [], {})
    for seed in cfg.seeds:
        scenario = cfg.scenario.build(seed)
        tcfg = _train_cfg(cfg, seed)
        params, tlog = train_agent(scenario, tcfg)
        means = tlog.mean_actions(tcfg.n_groups)
        res.mean_actions[seed] = means
        res.final_means[seed] = means[-FINAL_WINDOW:].mean(axis=0)
        if not res.bands:
            res.bands = optimal_bands(scenario, initial_groups(scenario, tcfg))
        path = cfg.checkpoint_path(seed) if cfg.checkpoint else out / f"agent_seed{seed}.npz"
        res.checkpoints[seed] = save_checkpoint(
            params, path, extra={"scenario": scenario.name, "seed": seed, "train": tcfg.to_dict()}
        )
        if cfg.csv:
            write_csv(out / f"train_seed{seed}.csv", ["round", "group", "mean_action", "reward", "std"],
                      [(r, g, m, rew, sd) for r, g, m, _, _, rew, sd in tlog.rows])
        log.info("seed %d final means %s", seed, np.round(res.final_means[seed], 3))
    _emit_actions(cfg, res)
    return res


def _emit_actions(cfg: ExperimentConfig, res: TrainResult) -> None:
    stack = np.array([res.mean_actions[s] for s in res.seeds])  # (seeds, rounds, G)
    avg, lo, hi = stack.mean(0), stack.min(0), stack.max(0)
    rounds = np.arange(avg.shape[0])
    out = cfg.run_dir()
    if cfg.csv:
        rows = [(int(r), g, avg[r, g], lo[r, g], hi[r, g]) for r in rounds for g in range(avg.shape[1])]
        write_csv(out / "actions.csv", ["round", "group", "mean_action", "min_over_seeds", "max_over_seeds"], rows)
        conv = res.convergence_rounds()
        write_csv(out / "final_actions.csv", ["group", "best_op", "band_lo", "band_hi", "final_mean", "convergence_round"],
                  [(g, op, b[0], b[1], res.final_average()[g], conv[g]) for g, (op, b) in enumerate(res.bands)])
    if cfg.svg:
        profile = presets.profile_for(cfg.scenario.model)
        write_svg(out / "actions.svg", actions_chart(rounds, avg, lo, hi, profile, cfg.name))


def actions_chart(rounds, avg, lo, hi, profile: ModelProfile, title: str) -> Chart:
    chart = Chart(f"Mean action per group ({title})", "round", "mean action", y_range=(0.0, 1.0))
    for g in range(avg.shape[1]):
        chart.series.append(Series(f"G{g + 1}", list(rounds), list(avg[:, g]), band=(list(lo[:, g]), list(hi[:, g]))))
    for i, b in enumerate(profile.boundaries()):
        chart.hlines.append((b, f"OP{i + 1}|OP{i + 2}"))
    return chart


# ---------------------------------------------------------------- deployment


def _load_agent(cfg: ExperimentConfig, seed: int):
    path = cfg.checkpoint_path(seed)
    params, extra = load_checkpoint(path)
    return params, extra


def _deploy_cfg(cfg: ExperimentConfig, seed: int, params) -> TrainConfig:
    tcfg = _train_cfg(cfg, seed)
    if tcfg.n_groups != params.n_groups:
        tcfg = replace(tcfg, n_groups=params.n_groups)
    return tcfg


def run_deploy(cfg: ExperimentConfig) -> dict:
    out = {}
    for seed in cfg.seeds:
        params, _ = _load_agent(cfg, seed)
        scenario = cfg.scenario.build(seed)
        rec = deploy(params, scenario, _deploy_cfg(cfg, seed, params))
        run = RunRecord.from_observations("fedadapt", rec.observations, rec.groups, baseline_times(scenario))
        if cfg.csv:
            run.write(cfg.run_dir() / f"deploy_seed{seed}.csv")
        out[seed] = run
    return out


@dataclass
class CompareResult:
    model: str
    seeds: list
    fedadapt: dict  # seed -> RunRecord
    classic: dict
    divergence: dict = field(default_factory=dict)  # seed -> [(round, device, op, best_op)]

    def _ratio(self, sl: slice) -> float:
        fed = sum(self.fedadapt[s].round_seconds()[sl].sum() for s in self.seeds)
        cls = sum(self.classic[s].round_seconds()[sl].sum() for s in self.seeds)
        return float(fed / cls)

    def ratio_first(self, n: int = UNIFORM_ROUNDS) -> float:
        """FedAdapt / classic average round time over rounds ``0..n-1``."""
        return self._ratio(slice(0, n))

    def ratio_total(self) -> float:
        return self._ratio(slice(None))

    def device_reduction(self, sl: slice = slice(None)) -> dict:
        """Per device: 1 - FedAdapt / classic time summed over ``sl``."""
        ids = self.fedadapt[self.seeds[0]].device_ids
        return {
            d: 1.0 - sum(self.fedadapt[s].device_seconds(d)[sl].sum() for s in self.seeds)
            / sum(self.classic[s].device_seconds(d)[sl].sum() for s in self.seeds)
            for d in ids
        }


def classic_run(scenario: Scenario) -> list[RoundObservation]:
    native = scenario.native_strategy()
    return [step(scenario, t, native) for t in range(scenario.total_rounds)]


def _compare(cfg: ExperimentConfig, model: str, flag_divergence: bool) -> CompareResult:
    res = CompareResult(model, list(cfg.seeds), {}, {})
    for seed in cfg.seeds:
        params, _ = _load_agent(cfg, seed)
        scenario = cfg.scenario.build(seed, model=model)
        base = baseline_times(scenario)
        rec = deploy(params, scenario, _deploy_cfg(cfg, seed, params))
        res.fedadapt[seed] = RunRecord.from_observations("fedadapt", rec.observations, rec.groups, base)
        # same (seed, round) noise draws as the FedAdapt arm
        res.classic[seed] = RunRecord.from_observations("classic", classic_run(scenario), None, base)
        if flag_divergence:
            res.divergence[seed] = divergences(scenario, rec.observations)
    return res


def divergences(scenario: Scenario, observations) -> list:
    by_id = {d.id: d for d in scenario.devices}
    out = []
    for obs in observations[1:]:
        for d in obs.devices:
            best = best_op(scenario.profile, by_id[d.device_id], scenario.server, scenario.link(d.device_id, obs.round))
            if best.index != d.op_index:
                out.append((obs.round, d.device_id, d.op_index, best.index))
    return out


def _emit_compare(cfg: ExperimentConfig, res: CompareResult, tag: str) -> None:
    out = cfg.run_dir()
    seeds = res.seeds
    fed = np.mean([res.fedadapt[s].round_seconds() for s in seeds], axis=0)
    cls = np.mean([res.classic[s].round_seconds() for s in seeds], axis=0)
    if cfg.csv:
        for s in seeds:
            write_csv(out / f"{tag}_rounds_seed{s}.csv", RUN_HEADER, res.fedadapt[s].rows + res.classic[s].rows)
        write_csv(out / f"{tag}_round_times.csv", ["round", "fedadapt_seconds", "classic_seconds"],
                  [(r, float(a), float(b)) for r, (a, b) in enumerate(zip(fed, cls))])
        red_uni = res.device_reduction(slice(0, UNIFORM_ROUNDS))
        red_all = res.device_reduction()
        write_csv(out / f"{tag}_devices.csv", ["device", "reduction_uniform", "reduction_total"],
                  [(d, red_uni[d], red_all[d]) for d in red_uni])
        write_csv(out / f"{tag}_summary.csv", ["metric", "value"], [
            ("model", res.model),
            ("seeds", " ".join(map(str, seeds))),
            (f"ratio_rounds_0_{UNIFORM_ROUNDS - 1}", res.ratio_first()),
            ("ratio_total", res.ratio_total()),
            ("reduction_uniform", 1.0 - res.ratio_first()),
            ("reduction_total", 1.0 - res.ratio_total()),
        ])
        if res.divergence:
            write_csv(out / f"{tag}_divergence.csv", ["seed", "round", "device", "op", "best_op"],
                      [(s, *row) for s in seeds for row in res.divergence[s]])
    if cfg.svg:
        chart = Chart(f"Round time, FedAdapt vs classic FL ({res.model})", "round", "round time (s)")
        rounds = list(range(len(fed)))
        chart.series.append(Series("FedAdapt", rounds, list(fed)))
        chart.series.append(Series("classic FL", rounds, list(cls)))
        for dev, start, _ in presets.DROP_SLOTS:
            if start < len(fed):
                chart.vlines.append((start, dev))
        write_svg(out / f"{tag}_round_times.svg", chart)


def run_compare(cfg: ExperimentConfig) -> CompareResult:
    res = _compare(cfg, cfg.scenario.model, flag_divergence=False)
    _emit_compare(cfg, res, "compare")
    return res


def run_cross_model(cfg: ExperimentConfig) -> CompareResult:
    """Deploy agents trained on one model, unchanged, on ``target_model``."""
    if not cfg.target_model:
        raise ConfigError("cross-model run needs target_model")
    res = _compare(cfg, cfg.target_model, flag_divergence=True)
    _emit_compare(cfg, res, "cross_model")
    return res


RUNNERS = {
    Mode.SWEEP: run_offload_sweep,
    Mode.TRAIN: run_train,
    Mode.DEPLOY: run_deploy,
    Mode.COMPARE: run_compare,
    Mode.CROSS_MODEL: run_cross_model,
}


def run(cfg: ExperimentConfig):
    return RUNNERS[cfg.mode](cfg)
