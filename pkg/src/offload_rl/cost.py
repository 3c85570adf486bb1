"""Per-iteration split-training cost model and its calibration.

For a device splitting at an OP with device fraction ``mu``::

    T = mu * W / C_device + (1 - mu) * W / C_server + L(mu) / Net

``W`` is the training FLOPs of one batch. ``L(mu)`` is split by direction:
activations and labels go up the uplink, gradients come back on the
downlink. Phases are summed, not pipelined.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .profile import ModelProfile, OffloadingPoint


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    compute_rate: float
    label: str = ""

    def __post_init__(self):
        if not self.compute_rate > 0:
            raise ValueError(f"device {self.id}: compute_rate must be > 0")


@dataclass(frozen=True)
class ServerSpec:
    compute_rate: float
    # divide the rate among devices offloading concurrently; off = no contention
    share_across_devices: bool = False
    fit_rmse: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.compute_rate > 0:
            raise ValueError("server compute_rate must be > 0")

    def effective_rate(self, active_devices: int = 1) -> float:
        if self.share_across_devices and active_devices > 1:
            return self.compute_rate / active_devices
        return self.compute_rate


@dataclass(frozen=True)
class LinkSpec:
    uplink_bps: float
    downlink_bps: float

    def __post_init__(self):
        if not (self.uplink_bps > 0 and self.downlink_bps > 0):
            raise ValueError("link bandwidths must be > 0")

    @classmethod
    def symmetric(cls, bps: float) -> "LinkSpec":
        return cls(bps, bps)

    @classmethod
    def mbps(cls, up: float, down: float | None = None) -> "LinkSpec":
        return cls(up * 1e6, (up if down is None else down) * 1e6)


@dataclass(frozen=True)
class CostBreakdown:
    device_seconds: float
    server_seconds: float
    comm_seconds: float

    @property
    def total_seconds(self) -> float:
        return self.device_seconds + self.server_seconds + self.comm_seconds


def batch_workload(profile: ModelProfile) -> float:
    """Training FLOPs of one iteration (one batch)."""
    return profile.total_flops * profile.batch_size


def comm_seconds(op: OffloadingPoint, link: LinkSpec) -> float:
    if op.is_native:
        return 0.0
    return 8.0 * op.uplink_bytes / link.uplink_bps + 8.0 * op.downlink_bytes / link.downlink_bps


def iteration_time(
    profile: ModelProfile,
    op: OffloadingPoint,
    device: DeviceSpec,
    server: ServerSpec,
    link: LinkSpec,
    active_devices: int = 1,
) -> CostBreakdown:
    if op not in profile.offloading_points:
        raise ValueError(f"OP{op.index} does not belong to profile {profile.name}")
    work = batch_workload(profile)
    mu = op.device_fraction
    dev = mu * work / device.compute_rate
    if op.is_native:
        return CostBreakdown(dev, 0.0, 0.0)
    srv = (1.0 - mu) * work / server.effective_rate(active_devices)
    return CostBreakdown(dev, srv, comm_seconds(op, link))


def calibrate_device(
    profile: ModelProfile, native_time_s: float, id: str = "device", label: str = ""
) -> DeviceSpec:
    """Device compute rate that reproduces ``native_time_s`` per iteration."""
    if not native_time_s > 0:
        raise ValueError(f"native time must be positive, got {native_time_s}")
    return DeviceSpec(id=id, compute_rate=batch_workload(profile) / native_time_s, label=label)


def calibrate_server(
    profile: ModelProfile,
    measurements: Sequence[tuple[OffloadingPoint, LinkSpec, float]],
    device: DeviceSpec,
    share_across_devices: bool = False,
) -> ServerSpec:
    """Least-squares server rate from measured split iteration times.

    Predicted totals are linear in ``1 / C_server``, so the fit is closed
    form. Device-native rows carry no information and are skipped. The RMS
    residual in seconds is stored on the result as ``fit_rmse``.
    """
    work = batch_workload(profile)
    a, r = [], []
    for op, link, measured in measurements:
        if op.is_native:
            continue
        fixed = op.device_fraction * work / device.compute_rate + comm_seconds(op, link)
        a.append((1.0 - op.device_fraction) * work)
        r.append(measured - fixed)
    if not a:
        raise ValueError("server calibration needs at least one split (non-native) measurement")
    a_arr, r_arr = np.asarray(a), np.asarray(r)
    inv_rate = float(a_arr @ r_arr / (a_arr @ a_arr))
    if not inv_rate > 0:
        raise ValueError(
            "measurements leave no time for server compute; check bandwidths and device rate"
        )
    resid = a_arr * inv_rate - r_arr
    return ServerSpec(
        compute_rate=1.0 / inv_rate,
        share_across_devices=share_across_devices,
        fit_rmse=float(math.sqrt(np.mean(resid**2))),
    )


def best_op(
    profile: ModelProfile, device: DeviceSpec, server: ServerSpec, link: LinkSpec
) -> OffloadingPoint:
    """Fastest OP for one device; ties go to the larger device fraction."""
    return min(
        profile.offloading_points,
        key=lambda op: (
            iteration_time(profile, op, device, server, link).total_seconds,
            -op.device_fraction,
        ),
    )


class Method(str, enum.Enum):
    CLASSIC_FL = "classic_fl"
    SL = "sl"
    SFL = "sfl"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class MethodResult:
    method: Method
    device_flops_total: float
    round_seconds: float
    per_device_seconds: tuple[float, ...]


def method_comparison(
    profile: ModelProfile,
    devices: Sequence[DeviceSpec],
    server: ServerSpec,
    links: Sequence[LinkSpec],
    method: Method | str,
    ops: Sequence[OffloadingPoint] | OffloadingPoint | None = None,
    iterations: int = 1,
) -> MethodResult:
    """Device-side FLOPs and round time of one training round.

    ``ops`` is ignored for classic FL, a single uniform OP for SL/SFL and one
    OP per device for the adaptive method.
    """
    method = Method(method)
    if len(devices) != len(links):
        raise ValueError("need one link per device")
    work = batch_workload(profile) * iterations
    if method is Method.CLASSIC_FL:
        chosen = [profile.native_op] * len(devices)
    elif method in (Method.SL, Method.SFL):
        if not isinstance(ops, OffloadingPoint):
            raise ValueError(f"{method.value} needs a single uniform OP")
        chosen = [ops] * len(devices)
    else:
        if ops is None or isinstance(ops, OffloadingPoint) or len(ops) != len(devices):
            raise ValueError("adaptive method needs exactly one OP per device")
        chosen = list(ops)

    # sequential SL never shares the server; parallel methods may
    active = 1 if method is Method.SL else sum(not op.is_native for op in chosen)
    per_device = tuple(
        iteration_time(profile, op, dev, server, link, active_devices=active).total_seconds
        * iterations
        for op, dev, link in zip(chosen, devices, links)
    )
    flops = sum(op.device_fraction * work for op in chosen)
    if not per_device:
        return MethodResult(method, 0.0, 0.0, ())
    total = sum(per_device) if method is Method.SL else max(per_device)
    return MethodResult(method, flops, total, per_device)
