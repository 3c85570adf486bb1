"""Round-based timing simulation of synchronous split federated learning."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .cost import DeviceSpec, LinkSpec, ServerSpec, iteration_time
from .errors import ScenarioError
from .profile import ModelProfile

# A strategy is one 1-based OP index per device, in scenario device order.
OffloadingStrategy = tuple


@dataclass(frozen=True)
class Scenario:
    profile: ModelProfile
    devices: tuple[DeviceSpec, ...]
    server: ServerSpec
    bandwidth_trace: Mapping[str, Sequence[LinkSpec]]
    iterations_per_round: int = 100
    total_rounds: int = 100
    noise: float = 0.05
    seed: int = 0
    overhead_seconds: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.iterations_per_round <= 0:
            raise ScenarioError("iterations_per_round must be positive")
        if self.noise < 0:
            raise ScenarioError("noise must be non-negative")
        ids = [d.id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate device ids")
        for d in ids:
            trace = self.bandwidth_trace.get(d)
            if trace is None:
                raise ScenarioError(f"no bandwidth trace for device {d}")
            if len(trace) < self.total_rounds:
                raise ScenarioError(
                    f"trace for {d} covers {len(trace)} rounds, need {self.total_rounds}"
                )

    @property
    def device_ids(self) -> list[str]:
        return [d.id for d in self.devices]

    def link(self, device_id: str, round: int) -> LinkSpec:
        return self.bandwidth_trace[device_id][round]

    def native_strategy(self) -> OffloadingStrategy:
        return tuple(self.profile.native_op.index for _ in self.devices)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class DeviceObservation:
    device_id: str
    op_index: int
    iteration_seconds: float
    round_seconds: float
    uplink_bps: float
    downlink_bps: float


@dataclass(frozen=True)
class RoundObservation:
    round: int
    devices: tuple[DeviceObservation, ...]
    round_seconds: float
    overhead_seconds: float = 0.0

    def iteration_times(self) -> dict[str, float]:
        return {d.device_id: d.iteration_seconds for d in self.devices}

    def uplinks(self) -> dict[str, float]:
        return {d.device_id: d.uplink_bps for d in self.devices}

    def device(self, device_id: str) -> DeviceObservation:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    @property
    def strategy(self) -> OffloadingStrategy:
        return tuple(d.op_index for d in self.devices)


def lognormal_params(rel_std: float) -> tuple[float, float]:
    """(mu, sigma) of a lognormal with mean 1 and the given relative std."""
    sigma2 = math.log1p(rel_std * rel_std)
    return -0.5 * sigma2, math.sqrt(sigma2)


def noise_factors(scenario: Scenario, round: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-device multiplicative timing noise for one round.

    Without an explicit ``rng`` the draws depend only on ``(seed, round)``,
    so two arms with different strategies see identical noise.
    """
    k = len(scenario.devices)
    if scenario.noise == 0:
        return np.ones(k)
    if rng is None:
        rng = np.random.default_rng([scenario.seed, round])
    mu, sigma = lognormal_params(scenario.noise)
    return rng.lognormal(mu, sigma, size=k)


def validate_strategy(scenario: Scenario, strategy: Sequence[int]) -> OffloadingStrategy:
    strategy = tuple(int(s) for s in strategy)
    if len(strategy) != len(scenario.devices):
        raise ScenarioError(f"strategy has {len(strategy)} entries for {len(scenario.devices)} devices")
    n_ops = len(scenario.profile.offloading_points)
    bad = [s for s in strategy if not 1 <= s <= n_ops]
    if bad:
        raise ScenarioError(f"invalid OP indices {bad}; profile has OP1..OP{n_ops}")
    return strategy


def step(
    scenario: Scenario,
    round: int,
    strategy: Sequence[int],
    rng: np.random.Generator | None = None,
) -> RoundObservation:
    """Simulate one FL round; the round lasts as long as its slowest device."""
    if not 0 <= round < scenario.total_rounds:
        raise ScenarioError(f"round {round} outside 0..{scenario.total_rounds - 1}")
    strategy = validate_strategy(scenario, strategy)
    profile = scenario.profile
    active = sum(not profile.op(s).is_native for s in strategy)
    factors = noise_factors(scenario, round, rng)
    iters = scenario.iterations_per_round
    obs = []
    for dev, op_idx, factor in zip(scenario.devices, strategy, factors):
        link = scenario.link(dev.id, round)
        cost = iteration_time(profile, profile.op(op_idx), dev, scenario.server, link, active)
        seconds = iters * cost.total_seconds * float(factor)
        obs.append(
            DeviceObservation(dev.id, op_idx, seconds / iters, seconds, link.uplink_bps, link.downlink_bps)
        )
    slowest = max((o.round_seconds for o in obs), default=0.0)
    return RoundObservation(round, tuple(obs), slowest + scenario.overhead_seconds, scenario.overhead_seconds)


def baseline_times(scenario: Scenario) -> dict[str, float]:
    """Noiseless device-native round time of every device."""
    profile = scenario.profile
    native = profile.native_op
    out = {}
    for dev in scenario.devices:
        link = scenario.link(dev.id, 0) if scenario.total_rounds else LinkSpec(1.0, 1.0)
        out[dev.id] = scenario.iterations_per_round * iteration_time(
            profile, native, dev, scenario.server, link
        ).total_seconds
    return out


def constant_trace(device_ids: Sequence[str], link: LinkSpec, total_rounds: int) -> dict[str, list[LinkSpec]]:
    return {d: [link] * total_rounds for d in device_ids}


def make_bandwidth_schedule(
    device_ids: Sequence[str],
    base_bps: float,
    drop_bps: float,
    slots: Sequence[tuple[str, int, int]],
    total_rounds: int,
) -> dict[str, list[LinkSpec]]:
    """Symmetric ``base_bps`` links, with the uplink dropped to ``drop_bps``
    for each ``(device_id, first_round, last_round)`` slot (inclusive)."""
    base = LinkSpec(base_bps, base_bps)
    dropped = LinkSpec(drop_bps, base_bps)
    trace = {d: [base] * total_rounds for d in device_ids}
    taken: dict[str, list[tuple[int, int]]] = {}
    for dev, start, end in slots:
        if dev not in trace:
            raise ScenarioError(f"slot for unknown device {dev}")
        if start > end or start < 0:
            raise ScenarioError(f"bad slot {start}..{end} for {dev}")
        for a, b in taken.get(dev, []):
            if start <= b and a <= end:
                raise ScenarioError(f"overlapping slots for {dev}: {a}..{b} and {start}..{end}")
        taken.setdefault(dev, []).append((start, end))
        for r in range(start, min(end, total_rounds - 1) + 1):
            trace[dev][r] = dropped
    return trace

