"""Device grouping by training speed, with an optional dedicated group for
low-bandwidth devices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from . import kernels

DEFAULT_LOW_BW_THRESHOLD_BPS = 20e6
DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class Group:
    members: tuple
    centroid: float
    representative: Hashable
    low_bandwidth: bool = False


@dataclass(frozen=True)
class GroupAssignment:
    groups: tuple[Group, ...]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_of(self, device_id) -> int:
        for g, group in enumerate(self.groups):
            if device_id in group.members:
                return g
        raise KeyError(device_id)

    def mapping(self) -> dict:
        return {d: g for g, group in enumerate(self.groups) for d in group.members}


def _as_mapping(values, ids=None) -> dict:
    if isinstance(values, Mapping):
        return {k: float(v) for k, v in values.items()}
    values = list(values)
    if ids is None:
        ids = range(len(values))
    ids = list(ids)
    if len(ids) != len(values):
        raise ValueError("ids and values differ in length")
    return {i: float(v) for i, v in zip(ids, values)}


def _kmeanspp(xs: np.ndarray, k: int, rng: np.random.Generator) -> list[float]:
    centers = [xs[rng.integers(len(xs))]]
    for _ in range(1, k):
        d2 = np.min((xs[:, None] - np.asarray(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers.append(xs[rng.integers(len(xs))])
        else:
            centers.append(xs[rng.choice(len(xs), p=d2 / total)])
    return centers


def _make_group(ids: list, vals: list[float], low_bandwidth: bool = False) -> Group:
    centroid = float(np.mean(vals))
    rep = min(zip(ids, vals), key=lambda iv: (abs(iv[1] - centroid), iv[0]))[0]
    return Group(tuple(ids), centroid, rep, low_bandwidth)


def kmeans_1d(
    values: Mapping | Sequence[float],
    n_groups: int,
    seed: int = 0,
    ids: Sequence | None = None,
    restarts: int = DEFAULT_RESTARTS,
    exact_seed: bool = True,
) -> GroupAssignment:
    """Lloyd's k-means on per-device scalars with k-means++ restarts.

    k-means++ restarts alone still stop in a local optimum on a few percent
    of small inputs. With ``exact_seed`` one more run starts from the optimal
    contiguous segmentation (1-D optimal clusters are contiguous), so the
    best run is globally optimal.

    Inputs are put in canonical ``(value, id)`` order before seeding, so the
    result does not depend on the order devices are listed in. Groups come
    back sorted by centroid; each representative is the member closest to
    its centroid (ties to the smallest id).
    """
    data = _as_mapping(values, ids)
    n = len(data)
    if not 1 <= n_groups <= max(n, 1) or n == 0:
        raise ValueError(f"cannot split {n} devices into {n_groups} groups")
    order = sorted(data, key=lambda d: (data[d], d))
    xs = np.array([data[d] for d in order])
    rng = np.random.default_rng(seed)

    inits = [_kmeanspp(xs, n_groups, rng) for _ in range(max(1, restarts))]
    if exact_seed:
        _, starts = kernels.dp_kmeans_1d(xs, n_groups)
        bounds = list(starts) + [n]
        inits.append([float(xs[a:b].mean()) for a, b in zip(bounds, bounds[1:])])
    best = None
    for init in inits:
        labels, centers, cost, _ = kernels.lloyd_1d(xs, init)
        if best is None or cost < best[0] - 1e-15:
            best = (cost, labels)
    _, labels = best

    groups = []
    for g in range(n_groups):
        members = [order[i] for i in range(n) if labels[i] == g]
        groups.append(_make_group(members, [data[d] for d in members]))
    groups.sort(key=lambda grp: (grp.centroid, grp.members))
    return GroupAssignment(tuple(groups))


def within_cluster_cost(assignment: GroupAssignment, values: Mapping) -> float:
    return float(
        sum((values[d] - g.centroid) ** 2 for g in assignment.groups for d in g.members)
    )


def cluster_with_bandwidth(
    observation,
    n_groups: int,
    low_bw_threshold_bps: float = DEFAULT_LOW_BW_THRESHOLD_BPS,
    seed: int = 0,
    times: Mapping | None = None,
) -> GroupAssignment:
    """Devices with uplink strictly below the threshold share one extra group,
    listed last; the rest are k-means clustered into ``n_groups - 1`` groups.

    ``times`` overrides the per-device clustering feature (defaults to the
    observed iteration time). Without low-bandwidth devices this is plain
    :func:`kmeans_1d` with ``n_groups``. When too few fast-link devices are
    left to fill ``n_groups - 1`` groups, it also falls back to plain
    k-means over everyone.
    """
    if times is None:
        times = observation.iteration_times()
    uplinks = observation.uplinks()
    low = sorted((d for d in uplinks if uplinks[d] < low_bw_threshold_bps), key=lambda d: (times[d], d))
    rest = {d: times[d] for d in times if d not in set(low)}
    if not low or n_groups < 2 or len(rest) < n_groups - 1:
        return kmeans_1d(dict(times), n_groups, seed=seed)
    fast = kmeans_1d(rest, n_groups - 1, seed=seed)
    low_group = _make_group(low, [times[d] for d in low], low_bandwidth=True)
    return GroupAssignment(fast.groups + (low_group,))
