"""Agent checkpoints: a JSON header plus raw float64 arrays in one .npz file.

Arrays are stored unconverted, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .agent import AgentParams
from .mlp import MlpParams

FORMAT = "offload-rl-agent"
VERSION = 1
_HYPER = ("action_std", "initial_std", "gamma", "clip_epsilon", "actor_lr", "critic_lr")


def _header(params: AgentParams, extra: dict | None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "n_groups": params.n_groups,
        "actor_sizes": params.actor.sizes,
        "critic_sizes": params.critic.sizes,
        # repr keeps floats exact through JSON
        **{k: repr(float(getattr(params, k))) for k in _HYPER},
        "extra": extra or {},
    }


def save_checkpoint(params: AgentParams, path, extra: dict | None = None) -> Path:
    """Write ``params`` to ``path`` (``.npz`` is appended if missing)."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(path.suffix + ".npz")
    arrays = {"header": np.frombuffer(json.dumps(_header(params, extra), sort_keys=True).encode(), dtype=np.uint8)}
    for net in ("actor", "critic"):
        mlp: MlpParams = getattr(params, net)
        for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
            arrays[f"{net}_w{i}"] = np.ascontiguousarray(w, dtype=np.float64)
            arrays[f"{net}_b{i}"] = np.ascontiguousarray(b, dtype=np.float64)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def read_header(path) -> dict:
    with _open(path) as data:
        return _parse_header(data, path)


def _open(path):
    try:
        return np.load(Path(path), allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc


def _parse_header(data, path) -> dict:
    if "header" not in data.files:
        raise CheckpointError(f"{path}: no header, not an agent checkpoint")
    try:
        header = json.loads(data["header"].tobytes().decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    if header.get("format") != FORMAT:
        raise CheckpointError(f"{path}: unknown format {header.get('format')!r}")
    if header.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')} (expected {VERSION})")
    return header


def _load_mlp(data, net: str, sizes: list, path) -> MlpParams:
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        try:
            w, b = data[f"{net}_w{i}"], data[f"{net}_b{i}"]
        except KeyError as exc:
            raise CheckpointError(f"{path}: missing array {exc}") from exc
        if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
            raise CheckpointError(f"{path}: {net} layer {i} has shape {w.shape}, header says {(fan_in, fan_out)}")
        weights.append(np.array(w, dtype=np.float64))
        biases.append(np.array(b, dtype=np.float64))
    return MlpParams(weights, biases)


def load_checkpoint(path) -> tuple[AgentParams, dict]:
    """Returns ``(params, extra)`` where ``extra`` is whatever was saved with them."""
    with _open(path) as data:
        header = _parse_header(data, path)
        actor = _load_mlp(data, "actor", header["actor_sizes"], path)
        critic = _load_mlp(data, "critic", header["critic_sizes"], path)
    if actor.sizes[-1] != header["n_groups"]:
        raise CheckpointError(f"{path}: actor output {actor.sizes[-1]} != n_groups {header['n_groups']}")
    try:
        hyper = {k: float(header[k]) for k in _HYPER}
        params = AgentParams(actor, critic, **hyper)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: bad hyper-parameters: {exc}") from exc
    if not (actor.is_finite() and critic.is_finite()):
        raise CheckpointError(f"{path}: non-finite weights")
    return params, header.get("extra", {})
