"""Training and deployment loops: observe, group, act, map actions to OPs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from ..clustering import DEFAULT_LOW_BW_THRESHOLD_BPS, GroupAssignment, cluster_with_bandwidth, kmeans_1d
from ..errors import ScenarioError
from ..profile import ModelProfile
from ..sim import RoundObservation, Scenario, baseline_times, step
from .agent import (
    AgentParams,
    PpoOptimizers,
    Trajectory,
    action_to_op,
    actor_forward,
    compute_reward,
    critic_forward,
    decay_std,
    init_agent,
    ppo_update,
    sample_action,
)

log = logging.getLogger(__name__)

BANDWIDTH_CAP_BPS = 100e6


@dataclass
class TrainConfig:
    rounds: int = 500
    n_groups: int = 3
    update_every: int = 10
    epochs: int = 50
    seed: int = 0
    # "every_round" re-groups from the latest observation; "first_round" freezes
    # the grouping computed from the initial device-native round
    recluster: str = "every_round"
    bandwidth_aware: bool = True
    low_bw_threshold_bps: float = DEFAULT_LOW_BW_THRESHOLD_BPS
    # time feature used for grouping: "initial" (native round) or "latest"
    cluster_times: str = "initial"
    std_decay_start: int = 200
    std_decay_rate: float = 0.9
    std_floor: float = 0.01
    action_std: float = 0.5
    gamma: float = 0.9
    clip_epsilon: float = 0.2
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    optimizer: str = "adam"
    normalize_advantages: bool = False
    reward_norm: str = "log"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingLog:
    rows: list = field(default_factory=list)  # (round, group, mean_action, action, op, reward, std)

    def mean_actions(self, n_groups: int) -> np.ndarray:
        """Array of shape (rounds, n_groups) with the policy mean per group."""
        rounds = 1 + max((r[0] for r in self.rows), default=-1)
        out = np.zeros((rounds, n_groups))
        for r, g, mean, *_ in self.rows:
            out[r, g] = mean
        return out

    def rewards(self) -> np.ndarray:
        seen = {}
        for r, _, _, _, _, reward, _ in self.rows:
            seen[r] = reward
        return np.array([seen[r] for r in sorted(seen)])


class Policy:
    """Holds the per-run context an agent needs between rounds."""

    def __init__(self, scenario: Scenario, config: TrainConfig):
        self.scenario = scenario
        self.config = config
        self.profile: ModelProfile = scenario.profile
        self.baselines = baseline_times(scenario)
        iters = scenario.iterations_per_round
        self.time_scale = max(self.baselines.values()) / iters if self.baselines else 1.0
        self.initial_times: dict | None = None
        self.frozen: GroupAssignment | None = None

    def observe_initial(self, obs: RoundObservation) -> None:
        self.initial_times = obs.iteration_times()

    def groups(self, obs: RoundObservation) -> GroupAssignment:
        cfg = self.config
        if cfg.recluster == "first_round" and self.frozen is not None:
            return self.frozen
        times = self.initial_times if cfg.cluster_times == "initial" and self.initial_times else obs.iteration_times()
        if len(times) < cfg.n_groups:
            raise ScenarioError(f"{len(times)} devices cannot fill {cfg.n_groups} groups")
        if cfg.bandwidth_aware:
            g = cluster_with_bandwidth(obs, cfg.n_groups, cfg.low_bw_threshold_bps, seed=cfg.seed, times=times)
        else:
            g = kmeans_1d(times, cfg.n_groups, seed=cfg.seed)
        if cfg.recluster == "first_round":
            self.frozen = g
        return g

    def state(self, obs: RoundObservation, groups: GroupAssignment) -> np.ndarray:
        return build_state(obs, groups, self.profile, self.time_scale)

    def strategy(self, groups: GroupAssignment, actions) -> tuple:
        ops = [action_to_op(float(a), self.profile).index for a in actions]
        by_group = groups.mapping()
        return tuple(ops[by_group[d]] for d in self.scenario.device_ids)


def build_state(
    obs: RoundObservation,
    groups: GroupAssignment,
    profile: ModelProfile,
    time_scale: float,
    bandwidth_cap_bps: float = BANDWIDTH_CAP_BPS,
) -> np.ndarray:
    """Per group: representative's iteration time over ``time_scale``, its
    uplink over the bandwidth cap, and the device fraction of the OP it just
    ran. Features are clipped to [0, 1]."""
    feats = []
    for g in groups.groups:
        d = obs.device(g.representative)
        feats.extend(
            (
                d.iteration_seconds / time_scale,
                d.uplink_bps / bandwidth_cap_bps,
                profile.op(d.op_index).device_fraction,
            )
        )
    return np.clip(np.asarray(feats), 0.0, 1.0)


def infer_strategy(
    params: AgentParams,
    observation: RoundObservation,
    groups: GroupAssignment,
    profile: ModelProfile,
    device_ids,
    time_scale: float,
) -> tuple:
    """Deterministic strategy from the policy means; members share their
    group's OP."""
    if groups.n_groups != params.n_groups:
        raise ScenarioError(f"agent expects {params.n_groups} groups, got {groups.n_groups}")
    members = groups.mapping()
    missing = [d for d in device_ids if d not in members]
    if missing or len(members) != len(device_ids):
        raise ScenarioError(f"grouping does not match devices (missing {missing})")
    means = actor_forward(params, build_state(observation, groups, profile, time_scale))
    ops = [action_to_op(float(m), profile).index for m in means]
    return tuple(ops[members[d]] for d in device_ids)


def train_agent(scenario: Scenario, config: TrainConfig | None = None) -> tuple[AgentParams, TrainingLog]:
    """Train on ``scenario`` (normally with truncated 5-iteration rounds)."""
    cfg = config or TrainConfig()
    if scenario.total_rounds < cfg.rounds:
        raise ScenarioError(f"scenario has {scenario.total_rounds} rounds, training needs {cfg.rounds}")
    policy = Policy(scenario, cfg)
    params = init_agent(
        cfg.n_groups, seed=cfg.seed, action_std=cfg.action_std, gamma=cfg.gamma,
        clip_epsilon=cfg.clip_epsilon, actor_lr=cfg.actor_lr, critic_lr=cfg.critic_lr,
    )
    optim = PpoOptimizers(params, cfg.optimizer)
    rng = np.random.default_rng([cfg.seed, 1])
    trajectory = Trajectory()
    tlog = TrainingLog()

    obs = step(scenario, 0, scenario.native_strategy())
    policy.observe_initial(obs)
    for t in range(cfg.rounds):
        groups = policy.groups(obs)
        state = policy.state(obs, groups)
        means = actor_forward(params, state)
        value = critic_forward(params, state)
        sample = sample_action(means, params.action_std, rng)
        strategy = policy.strategy(groups, sample.action)
        obs = step(scenario, t, strategy)
        reward = compute_reward(obs, policy.baselines, groups, cfg.reward_norm)
        trajectory.add(state, sample.raw, sample.log_prob, reward, value)
        for g in range(cfg.n_groups):
            members = groups.groups[g].members
            tlog.rows.append(
                (t, g, float(means[g]), float(sample.action[g]),
                 strategy[scenario.device_ids.index(members[0])], reward, params.action_std)
            )
        if (t + 1) % cfg.update_every == 0:
            tail = critic_forward(params, policy.state(obs, policy.groups(obs)))
            params = ppo_update(
                params, trajectory, cfg.epochs, optim, tail_value=float(tail),
                normalize_advantages=cfg.normalize_advantages,
            )
            trajectory.clear()
            params = decay_std(params, t + 1, cfg.std_decay_start, cfg.std_decay_rate, cfg.update_every, cfg.std_floor)
            log.debug("round %d reward %.4f std %.4f means %s", t + 1, reward, params.action_std, np.round(means, 3))
    return params, tlog


@dataclass
class DeployRecord:
    observations: list = field(default_factory=list)
    groups: list = field(default_factory=list)


def deploy(params: AgentParams, scenario: Scenario, config: TrainConfig | None = None) -> DeployRecord:
    """Run every round of ``scenario`` under the trained policy.

    Round 0 runs device-native to produce the first observation; every later
    round acts on the observation of the round before it.
    """
    cfg = config or TrainConfig(n_groups=params.n_groups)
    policy = Policy(scenario, cfg)
    rec = DeployRecord()
    obs = step(scenario, 0, scenario.native_strategy())
    policy.observe_initial(obs)
    rec.observations.append(obs)
    rec.groups.append(None)
    for t in range(1, scenario.total_rounds):
        groups = policy.groups(obs)
        strategy = infer_strategy(params, obs, groups, scenario.profile, scenario.device_ids, policy.time_scale)
        obs = step(scenario, t, strategy)
        rec.observations.append(obs)
        rec.groups.append(groups)
    return rec
