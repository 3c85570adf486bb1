from .agent import (
    ActionSample,
    AgentParams,
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
from .checkpoint import load_checkpoint, read_header, save_checkpoint
from .train import TrainConfig, TrainingLog, build_state, deploy, infer_strategy, train_agent

__all__ = [
    "ActionSample", "AgentParams", "Trajectory", "action_to_op", "actor_forward",
    "compute_reward", "critic_forward", "decay_std", "init_agent", "ppo_update",
    "sample_action", "TrainConfig", "TrainingLog", "build_state", "deploy",
    "infer_strategy", "train_agent", "load_checkpoint", "read_header", "save_checkpoint",
]
