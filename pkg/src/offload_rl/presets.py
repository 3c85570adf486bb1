"""Published testbed measurements and the scenarios built from them.

All times are seconds per training iteration (batch of 100). The server
rate is fitted separately for each model: one shared rate cannot reproduce
both measurement tables (see ``server_for``).
"""

from __future__ import annotations

from functools import lru_cache

from .cost import DeviceSpec, LinkSpec, ServerSpec, calibrate_device, calibrate_server
from .profile import ModelProfile, build_vgg5, build_vgg8
from .sim import Scenario, constant_trace, make_bandwidth_schedule

MBPS = 1e6

# (uplink, downlink) in Mbps
BANDWIDTH_COLUMNS = {
    "wifi75": (75.0, 75.0),
    "wifi50": (50.0, 50.0),
    "4g+": (25.0, 50.0),
    "4g": (10.0, 20.0),
}

# Single Pi 4 (1.5 GHz) against the edge server; rows are OP1..OP4.
OFFLOAD_TABLES = {
    "vgg5": {
        "wifi75": (2.38, 3.61, 5.24, 4.36),
        "wifi50": (2.70, 3.90, 5.26, 4.36),
        "4g+": (3.52, 4.36, 5.42, 4.36),
        "4g": (6.07, 5.31, 6.73, 4.36),
    },
    "vgg8": {
        "wifi75": (4.75, 7.52, 10.74, 10.61),
        "wifi50": (5.29, 8.37, 11.98, 10.61),
        "4g+": (6.08, 8.32, 12.00, 10.61),
        "4g": (8.84, 9.95, 15.93, 10.61),
    },
}
PUBLISHED_BEST_OP = {
    "vgg5": {"wifi75": 1, "wifi50": 1, "4g+": 1, "4g": 4},
    "vgg8": {"wifi75": 1, "wifi50": 1, "4g+": 1, "4g": 1},
}
# Columns used to fit the server rate; the 4G column is held out.
SERVER_FIT_COLUMNS = ("wifi75", "wifi50", "4g+")

# Per-device VGG-5 times at 75 Mbps, OP1..OP4.
DEVICE_OP_TABLE = {
    "jetson": (0.51, 0.28, 0.27, 0.17),
    "pi4_1": (2.38, 3.61, 5.24, 4.36),
    "pi3": (2.99, 3.97, 4.93, 4.47),
    "pi4_2": (2.63, 4.68, 5.88, 5.15),
}
DEVICE_BEST_OP = {"jetson": 4, "pi4_1": 1, "pi3": 1, "pi4_2": 1}

# First-round (device-native) VGG-5 iteration times of the five-device testbed.
TESTBED_NATIVE = {
    "jetson": 0.07,
    "pi4_1": 3.58,
    "pi3_1": 3.75,
    "pi3_2": 3.77,
    "pi4_2": 5.14,
}
TESTBED_LABELS = {
    "jetson": "Jetson Xavier NX",
    "pi4_1": "Pi4 1.5GHz",
    "pi3_1": "Pi3 1.2GHz",
    "pi3_2": "Pi3 1.2GHz",
    "pi4_2": "Pi4 0.7GHz",
}
PUBLISHED_GROUPS = [["jetson"], ["pi4_1", "pi3_1", "pi3_2"], ["pi4_2"]]
PUBLISHED_BW_GROUPS = [["jetson"], ["pi4_1", "pi3_1", "pi4_2"], ["pi3_2"]]

# Bandwidth drop order for the 100-round comparison run.
DROP_SLOTS = [
    ("jetson", 50, 59),
    ("pi4_1", 60, 69),
    ("pi4_2", 70, 79),
    ("pi3_1", 80, 89),
    ("pi3_2", 90, 99),
]
BASE_BPS = 75 * MBPS
DROP_BPS = 10 * MBPS
LOW_BW_DEVICE = "pi3_2"

PROFILES = {"vgg5": build_vgg5, "vgg8": build_vgg8}


def link_for(column: str) -> LinkSpec:
    up, down = BANDWIDTH_COLUMNS[column]
    return LinkSpec.mbps(up, down)


@lru_cache(maxsize=None)
def profile_for(name: str) -> ModelProfile:
    return PROFILES[name]()


def reference_device(model: str) -> DeviceSpec:
    """The single-device study's Pi 4, calibrated from its native time."""
    return calibrate_device(profile_for(model), OFFLOAD_TABLES[model]["wifi75"][3], id="pi4", label="Pi4 1.5GHz")


def server_measurements(model: str, columns=SERVER_FIT_COLUMNS):
    profile = profile_for(model)
    rows = []
    for col in columns:
        for op, seconds in zip(profile.offloading_points, OFFLOAD_TABLES[model][col]):
            rows.append((op, link_for(col), seconds))
    return rows


@lru_cache(maxsize=None)
def server_for(model: str) -> ServerSpec:
    return calibrate_server(profile_for(model), server_measurements(model), reference_device(model))


def model_time_scale(model: str) -> float:
    """Native-time ratio of ``model`` to VGG-5 on the reference Pi 4.

    Device rates measured in FLOPs/s do not transfer between models (the
    Pi 4 runs VGG-8 far more efficiently per FLOP), so testbed devices are
    moved to another model by scaling their VGG-5 native times.
    """
    return OFFLOAD_TABLES[model]["wifi75"][3] / OFFLOAD_TABLES["vgg5"]["wifi75"][3]


def testbed_devices(model: str = "vgg5", native: dict | None = None) -> tuple[DeviceSpec, ...]:
    native = TESTBED_NATIVE if native is None else native
    profile = profile_for(model)
    scale = model_time_scale(model)
    return tuple(
        calibrate_device(profile, t * scale, id=d, label=TESTBED_LABELS.get(d, d))
        for d, t in native.items()
    )


def heterogeneity_scenario(
    model: str = "vgg5",
    iterations: int = 5,
    rounds: int = 500,
    noise: float = 0.05,
    seed: int = 0,
) -> Scenario:
    """Five-device testbed on a steady 75 Mbps network."""
    devices = testbed_devices(model)
    trace = constant_trace([d.id for d in devices], LinkSpec.symmetric(BASE_BPS), rounds)
    return Scenario(
        profile_for(model), devices, server_for(model), trace,
        iterations_per_round=iterations, total_rounds=rounds, noise=noise, seed=seed,
        name=f"heterogeneity-{model}",
    )


def bandwidth_scenario(
    model: str = "vgg5",
    iterations: int = 5,
    rounds: int = 500,
    noise: float = 0.05,
    seed: int = 0,
    low_device: str = LOW_BW_DEVICE,
) -> Scenario:
    """As the heterogeneity scenario, with one device's uplink held at 10 Mbps."""
    devices = testbed_devices(model)
    trace = constant_trace([d.id for d in devices], LinkSpec.symmetric(BASE_BPS), rounds)
    trace[low_device] = [LinkSpec(DROP_BPS, BASE_BPS)] * rounds
    return Scenario(
        profile_for(model), devices, server_for(model), trace,
        iterations_per_round=iterations, total_rounds=rounds, noise=noise, seed=seed,
        name=f"bandwidth-{model}",
    )


def comparison_scenario(
    model: str = "vgg5",
    iterations: int = 100,
    rounds: int = 100,
    noise: float = 0.05,
    seed: int = 0,
) -> Scenario:
    """100 FL rounds: 50 at 75 Mbps, then each device dropped to 10 Mbps
    uplink for its own 10-round slot."""
    devices = testbed_devices(model)
    trace = make_bandwidth_schedule([d.id for d in devices], BASE_BPS, DROP_BPS, DROP_SLOTS, rounds)
    return Scenario(
        profile_for(model), devices, server_for(model), trace,
        iterations_per_round=iterations, total_rounds=rounds, noise=noise, seed=seed,
        name=f"compare-{model}",
    )


SCENARIOS = {
    "heterogeneity": heterogeneity_scenario,
    "bandwidth": bandwidth_scenario,
    "compare": comparison_scenario,
}
