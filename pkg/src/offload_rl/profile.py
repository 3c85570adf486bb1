"""Layered CNN profiles: per-layer FLOPs, activation sizes and the catalog of
offloading points (OPs) at which the network can be split between a device
and the server.

Architectures are written in a compact notation, e.g.::

    C32-MP(OP1)-C64-MP(OP2)-C64(OP3)-FC128-FC10(OP4)

``C<n>`` is a 3x3 same-padded convolution with ``n`` filters, ``MP`` a 2x2
stride-2 max pool and ``FC<n>`` a dense layer. ``(OPi)`` marks a split point
after that layer. The last layer must carry an OP (device-native training).

Training FLOPs are forward FLOPs times ``TRAINING_FLOP_MULTIPLIER`` (one
forward plus two backward passes). The multiplier is a single constant for
the whole profile, so it cancels in every device fraction, and calibrated
compute rates absorb it as well.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError

TRAINING_FLOP_MULTIPLIER = 3.0
ELEMENT_BYTES = 4
LABEL_BYTES = 8
KERNEL_SIZE = 3
POOL_SIZE = 2

CIFAR10_INPUT = (32, 32, 3)


class LayerKind(str, enum.Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    FC = "fc"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    filters_or_neurons: int
    input_shape: tuple[int, ...]
    output_shape: tuple[int, ...]
    kernel: int = 0
    flops: float = 0.0
    activation_bytes: int = 0

    @property
    def label(self) -> str:
        if self.kind is LayerKind.CONV:
            return f"C{self.filters_or_neurons}"
        if self.kind is LayerKind.MAXPOOL:
            return "MP"
        return f"FC{self.filters_or_neurons}"


@dataclass(frozen=True)
class OffloadingPoint:
    index: int
    after_layer: int
    device_fraction: float
    transfer_bytes_per_batch: int
    uplink_bytes: int = 0
    downlink_bytes: int = 0

    @property
    def is_native(self) -> bool:
        return self.device_fraction >= 1.0


@dataclass(frozen=True)
class ModelProfile:
    name: str
    layers: tuple[LayerSpec, ...]
    offloading_points: tuple[OffloadingPoint, ...]
    input_shape: tuple[int, ...] = CIFAR10_INPUT
    batch_size: int = 100
    architecture: str = field(default="", compare=False)

    @property
    def total_flops(self) -> float:
        return sum(layer.flops for layer in self.layers)

    @property
    def fractions(self) -> list[float]:
        return [op.device_fraction for op in self.offloading_points]

    @property
    def native_op(self) -> OffloadingPoint:
        return self.offloading_points[-1]

    def op(self, index: int) -> OffloadingPoint:
        """Look up an offloading point by its 1-based index."""
        if not 1 <= index <= len(self.offloading_points):
            raise ValueError(
                f"{self.name} has OPs 1..{len(self.offloading_points)}, got {index}"
            )
        return self.offloading_points[index - 1]

    def boundaries(self) -> list[float]:
        """Midpoints between adjacent OP device fractions."""
        f = self.fractions
        return [(a + b) / 2.0 for a, b in zip(f, f[1:])]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "architecture": self.architecture,
            "input_shape": list(self.input_shape),
            "batch_size": self.batch_size,
        }


def layer_flops(layer: LayerSpec, multiplier: float = TRAINING_FLOP_MULTIPLIER) -> float:
    """FLOPs of one sample through ``layer``.

    ``multiplier=1`` gives forward-only counts; the default gives training
    counts.
    """
    if any(d <= 0 for d in layer.input_shape) or any(d <= 0 for d in layer.output_shape):
        raise ValueError(f"zero-sized shape in {layer.label}: {layer.input_shape} -> {layer.output_shape}")
    if layer.kind is LayerKind.CONV:
        h, w, c_out = layer.output_shape
        c_in = layer.input_shape[-1]
        forward = 2.0 * layer.kernel**2 * c_in * h * w * c_out
    elif layer.kind is LayerKind.FC:
        forward = 2.0 * _numel(layer.input_shape) * layer.output_shape[0]
    else:
        h, w, c = layer.output_shape
        forward = float(h * w * c * POOL_SIZE**2)
    return forward * multiplier


def transfer_bytes(profile: ModelProfile, op: OffloadingPoint) -> int:
    """Bytes exchanged per training iteration when splitting at ``op``."""
    if op not in profile.offloading_points:
        raise ValueError(f"OP{op.index} does not belong to profile {profile.name}")
    return op.transfer_bytes_per_batch


def _numel(shape: Sequence[int]) -> int:
    n = 1
    for d in shape:
        n *= d
    return n


_TOKEN = re.compile(r"^(C(\d+)|MP|FC(\d+))(\(OP(\d+)\))?$")


def parse_architecture(text: str) -> list[tuple[LayerKind, int, bool]]:
    """Parse ``C32-MP(OP1)-...`` into ``(kind, width, has_op)`` triples."""
    out = []
    tokens = [t.strip() for t in text.replace(" ", "").split("-") if t.strip()]
    if not tokens:
        raise ConfigError("empty architecture string")
    for tok in tokens:
        m = _TOKEN.match(tok.upper())
        if m is None:
            raise ConfigError(f"cannot parse layer token {tok!r}")
        if m.group(2):
            out.append((LayerKind.CONV, int(m.group(2)), m.group(4) is not None))
        elif m.group(3):
            out.append((LayerKind.FC, int(m.group(3)), m.group(4) is not None))
        else:
            out.append((LayerKind.MAXPOOL, 0, m.group(4) is not None))
    return out


def build_profile(
    name: str,
    architecture: str,
    input_shape: Sequence[int] = CIFAR10_INPUT,
    batch_size: int = 100,
) -> ModelProfile:
    """Propagate shapes through ``architecture`` and build the OP catalog."""
    if batch_size <= 0:
        raise ConfigError("batch_size must be positive")
    parsed = parse_architecture(architecture)
    shape = tuple(int(d) for d in input_shape)
    layers: list[LayerSpec] = []
    op_after: list[int] = []
    for i, (kind, width, has_op) in enumerate(parsed):
        if width == 0 and kind is not LayerKind.MAXPOOL:
            raise ConfigError(f"layer {i} has zero width")
        if kind is LayerKind.CONV:
            if len(shape) != 3:
                raise ConfigError(f"conv layer {i} after a dense layer")
            out = (shape[0], shape[1], width)
            kernel = KERNEL_SIZE
        elif kind is LayerKind.MAXPOOL:
            if len(shape) != 3 or shape[0] % POOL_SIZE or shape[1] % POOL_SIZE:
                raise ConfigError(f"pool layer {i} cannot halve shape {shape}")
            out = (shape[0] // POOL_SIZE, shape[1] // POOL_SIZE, shape[2])
            kernel = POOL_SIZE
        else:
            out = (width,)
            kernel = 0
        proto = LayerSpec(kind, width, shape, out, kernel)
        layers.append(
            LayerSpec(
                kind,
                width,
                shape,
                out,
                kernel,
                flops=layer_flops(proto),
                activation_bytes=_numel(out) * ELEMENT_BYTES,
            )
        )
        if has_op:
            op_after.append(i)
        shape = out

    if not op_after or op_after[-1] != len(layers) - 1:
        raise ConfigError("the last layer must carry the device-native OP")

    total = sum(layer.flops for layer in layers)
    points = []
    for idx, after in enumerate(op_after, start=1):
        if after == len(layers) - 1:
            frac, up, down = 1.0, 0, 0
        else:
            frac = sum(layer.flops for layer in layers[: after + 1]) / total
            act = layers[after].activation_bytes * batch_size
            up = act + LABEL_BYTES * batch_size
            down = act
        points.append(OffloadingPoint(idx, after, frac, up + down, up, down))

    return ModelProfile(
        name=name,
        layers=tuple(layers),
        offloading_points=tuple(points),
        input_shape=tuple(int(d) for d in input_shape),
        batch_size=batch_size,
        architecture=architecture,
    )


VGG5_ARCHITECTURE = "C32-MP(OP1)-C64-MP(OP2)-C64(OP3)-FC128-FC10(OP4)"
VGG8_ARCHITECTURE = "C32-C32-MP(OP1)-C64-C64-MP(OP2)-C128-C128(OP3)-FC128-FC10(OP4)"


def build_vgg5(batch_size: int = 100) -> ModelProfile:
    return build_profile("vgg5", VGG5_ARCHITECTURE, batch_size=batch_size)


def build_vgg8(batch_size: int = 100) -> ModelProfile:
    return build_profile("vgg8", VGG8_ARCHITECTURE, batch_size=batch_size)


BUILTIN_PROFILES = {"vgg5": build_vgg5, "vgg8": build_vgg8}


def profile_from_dict(data: dict | str) -> ModelProfile:
    """Build a profile from a config entry: a builtin name or a mapping with
    ``name``/``architecture`` and optional ``input_shape``/``batch_size``."""
    if isinstance(data, str):
        try:
            return BUILTIN_PROFILES[data.lower()]()
        except KeyError:
            raise ConfigError(f"unknown builtin profile {data!r}") from None
    if "architecture" not in data:
        name = data.get("name", "")
        if name.lower() in BUILTIN_PROFILES:
            return BUILTIN_PROFILES[name.lower()](batch_size=int(data.get("batch_size", 100)))
        raise ConfigError("profile entry needs an 'architecture' string")
    return build_profile(
        data.get("name", "custom"),
        data["architecture"],
        input_shape=tuple(data.get("input_shape", CIFAR10_INPUT)),
        batch_size=int(data.get("batch_size", 100)),
    )
