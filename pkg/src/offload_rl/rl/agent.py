"""Actor-critic agent emitting one offloading action per device group,
trained with the clipped PPO surrogate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import NumericalError
from ..profile import ModelProfile, OffloadingPoint
from .mlp import HIDDEN_SIZES, MlpParams, init_mlp, make_optimizer, mlp_backward, mlp_forward

FEATURES_PER_GROUP = 3
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class AgentParams:
    actor: MlpParams
    critic: MlpParams
    action_std: float = 0.5
    initial_std: float = 0.5
    gamma: float = 0.9
    clip_epsilon: float = 0.2
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4

    def __post_init__(self):
        if not self.action_std > 0:
            raise ValueError("action_std must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")

    @property
    def n_groups(self) -> int:
        return self.actor.weights[-1].shape[1]

    @property
    def state_dim(self) -> int:
        return self.actor.weights[0].shape[0]

    def copy(self) -> "AgentParams":
        return replace(self, actor=self.actor.copy(), critic=self.critic.copy())


def init_agent(n_groups: int, seed: int = 0, **hyper) -> AgentParams:
    rng = np.random.default_rng(seed)
    dim = FEATURES_PER_GROUP * n_groups
    actor = init_mlp([dim, *HIDDEN_SIZES, n_groups], rng)
    critic = init_mlp([dim, *HIDDEN_SIZES, 1], rng)
    std = hyper.pop("action_std", 0.5)
    return AgentParams(actor, critic, action_std=std, initial_std=hyper.pop("initial_std", std), **hyper)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def actor_forward(params: AgentParams, state) -> np.ndarray:
    """Action means in [0, 1]; one row per state, one column per group."""
    state = np.asarray(state, dtype=float)
    z, _ = mlp_forward(params.actor, state)
    means = _sigmoid(z)
    return means[0] if state.ndim == 1 else means


def critic_forward(params: AgentParams, state) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    v, _ = mlp_forward(params.critic, state)
    return v[0, 0] if state.ndim == 1 else v[:, 0]


class ActionSample(NamedTuple):
    action: np.ndarray  # clamped to [0, 1], what gets executed
    raw: np.ndarray  # the Gaussian draw before clamping
    log_prob: float


def gaussian_log_prob(raw, means, std: float):
    raw, means = np.asarray(raw, float), np.asarray(means, float)
    z = (raw - means) / std
    return np.sum(-0.5 * z * z - math.log(std) - LOG_SQRT_2PI, axis=-1)


def sample_action(means, action_std: float, rng: np.random.Generator) -> ActionSample:
    means = np.asarray(means, dtype=float)
    raw = means + action_std * rng.standard_normal(means.shape)
    return ActionSample(np.clip(raw, 0.0, 1.0), raw, float(gaussian_log_prob(raw, means, action_std)))


def action_to_op(mu: float, profile: ModelProfile) -> OffloadingPoint:
    """Nearest OP by device fraction; an action exactly on a boundary goes to
    the larger OP."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"action {mu} outside [0, 1]")
    idx = 0
    for b in profile.boundaries():
        if mu >= b:
            idx += 1
    return profile.offloading_points[idx]


REWARD_NORMS = {
    "log": math.log,
    # speed-up minus one; unbounded below like "log" but linear above
    "ratio": lambda x: x - 1.0,
}


def compute_reward(observation, baselines, groups=None, norm: str = "log") -> float:
    """Mean over devices of f(baseline / measured round time), f = log by default.

    Zero when every device matches its no-offloading time, positive when
    offloading makes devices faster. ``groups`` is accepted for interface
    symmetry; the reward is device-level.
    """
    try:
        f = REWARD_NORMS[norm]
    except KeyError:
        raise ValueError(f"unknown reward norm {norm!r}") from None
    terms = []
    for d in observation.devices:
        t = d.round_seconds
        b = baselines[d.device_id]
        if not (t > 0 and b > 0):
            raise ValueError(f"non-positive time for {d.device_id}: measured {t}, baseline {b}")
        terms.append(f(b / t))
    if not terms:
        raise ValueError("observation has no devices")
    return float(np.mean(terms))


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)  # raw (unclamped) samples
    log_probs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def add(self, state, raw_action, log_prob, reward, value) -> None:
        self.states.append(np.asarray(state, float))
        self.actions.append(np.asarray(raw_action, float))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.rewards)

    def clear(self) -> None:
        for lst in (self.states, self.actions, self.log_probs, self.rewards, self.values):
            lst.clear()


def discounted_returns(rewards: Sequence[float], gamma: float, tail_value: float = 0.0) -> np.ndarray:
    out = np.empty(len(rewards))
    running = tail_value
    for i in range(len(rewards) - 1, -1, -1):
        running = rewards[i] + gamma * running
        out[i] = running
    return out


def actor_loss_and_grad(
    actor: MlpParams,
    states: np.ndarray,
    raw_actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    std: float,
    clip_epsilon: float,
):
    """Negative clipped surrogate (to be minimized) and its gradient."""
    z, cache = mlp_forward(actor, states)
    means = _sigmoid(z)
    logp = gaussian_log_prob(raw_actions, means, std)
    ratio = np.exp(logp - old_log_probs)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    n = len(advantages)
    loss = -float(np.mean(np.minimum(surr1, surr2)))
    # gradient flows only through the unclipped branch when it is the minimum
    active = surr1 <= surr2
    dlogp = np.where(active, -ratio * advantages / n, 0.0)
    dmeans = dlogp[:, None] * (raw_actions - means) / std**2
    dz = dmeans * means * (1.0 - means)
    return loss, mlp_backward(actor, cache, dz)


def critic_loss_and_grad(critic: MlpParams, states: np.ndarray, returns: np.ndarray):
    v, cache = mlp_forward(critic, states)
    err = v[:, 0] - returns
    loss = float(np.mean(err * err))
    return loss, mlp_backward(critic, cache, (2.0 * err / len(err))[:, None])


class PpoOptimizers:
    """Optimizer state carried across update cycles."""

    def __init__(self, params: AgentParams, name: str = "adam"):
        self.actor = make_optimizer(name, params.actor_lr)
        self.critic = make_optimizer(name, params.critic_lr)


def ppo_update(
    params: AgentParams,
    trajectory: Trajectory,
    epochs: int = 50,
    optimizers: PpoOptimizers | None = None,
    tail_value: float = 0.0,
    normalize_advantages: bool = False,
) -> AgentParams:
    """``epochs`` full-batch gradient steps on the clipped surrogate and the
    value regression; returns new parameters."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    new = params.copy()
    if optimizers is None:
        optimizers = PpoOptimizers(new)
    states = np.vstack(trajectory.states)
    raw = np.vstack(trajectory.actions)
    old_logp = np.asarray(trajectory.log_probs)
    returns = discounted_returns(trajectory.rewards, params.gamma, tail_value)
    adv = returns - np.asarray(trajectory.values)
    if normalize_advantages and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    for epoch in range(epochs):
        a_loss, a_grad = actor_loss_and_grad(
            new.actor, states, raw, old_logp, adv, new.action_std, new.clip_epsilon
        )
        c_loss, c_grad = critic_loss_and_grad(new.critic, states, returns)
        if not (np.isfinite(a_loss) and np.isfinite(c_loss) and a_grad.is_finite() and c_grad.is_finite()):
            raise NumericalError(
                f"non-finite PPO update at epoch {epoch}: actor loss {a_loss}, critic loss {c_loss}, "
                f"returns range [{returns.min():.3g}, {returns.max():.3g}]"
            )
        optimizers.actor.step(new.actor, a_grad)
        optimizers.critic.step(new.critic, c_grad)
    return new


def decay_std(
    params: AgentParams,
    round: int,
    start: int = 200,
    rate: float = 0.9,
    every: int = 10,
    floor: float = 0.01,
) -> AgentParams:
    """Exploration std after ``round`` completed rounds: the initial value
    until ``start``, then one factor of ``rate`` per ``every`` rounds."""
    if round < 0:
        raise ValueError("round must be non-negative")
    if round < start:
        return params
    steps = (round - start) // every + 1
    return replace(params, action_std=max(floor, params.initial_std * rate**steps))
