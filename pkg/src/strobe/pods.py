"""Alternating blue/red pod partitions of the waypoint index range.

A pod is a contiguous inclusive index span [start, end].  Pods of the same
color are optimized concurrently, so every pod must be long enough (>= ell)
that same-color neighbours stay outside each other's stencil reach, and at
most `workers` pods of each color exist.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum


class Color(Enum):
    BLUE = "B"
    RED = "R"


@dataclass(frozen=True)
class Pod:
    start: int
    end: int
    color: Color

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad pod span [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def index_range(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class PodPartition:
    pods: tuple
    ell: int
    workers: int
    waypoint_count: int

    def __post_init__(self):
        object.__setattr__(self, "pods", tuple(self.pods))
        if not self.pods:
            raise ValueError("partition has no pods")
        cursor = 0
        for k, pod in enumerate(self.pods):
            if pod.start != cursor:
                raise ValueError("pods do not tile the index range contiguously")
            if pod.length < self.ell:
                raise ValueError(f"pod {k} shorter than ell={self.ell}")
            if k > 0 and pod.color == self.pods[k - 1].color:
                raise ValueError("pod colors do not alternate")
            cursor = pod.end + 1
        if cursor != self.waypoint_count:
            raise ValueError("pods do not cover exactly the waypoint range")
        for color in Color:
            if sum(1 for p in self.pods if p.color == color) > self.workers:
                raise ValueError(f"more than {self.workers} pods of color {color.value}")

    def of_color(self, color: Color) -> tuple:
        return tuple(p for p in self.pods if p.color == color)

    def to_json(self) -> str:
        payload = [
            {"start": p.start, "end": p.end, "color": p.color.value} for p in self.pods
        ]
        return json.dumps(payload)


def pods_of_color(partition: PodPartition, color: Color) -> tuple:
    return partition.of_color(color)


def split_path(waypoint_count: int, workers: int, ell: int) -> PodPartition:
    """Partition waypoint indices {0..waypoint_count-1} into alternating pods.

    Pod count P = max(1, min(2 * workers, floor(waypoint_count / ell))), pod
    lengths as even as possible (two adjacent sizes, larger ones first),
    colors alternating starting with blue.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if waypoint_count < ell:
        raise ValueError(f"path of {waypoint_count} waypoints is shorter than ell={ell}")
    count = max(1, min(2 * workers, waypoint_count // ell))
    size_max = math.ceil(waypoint_count / count)
    size_min = size_max - 1
    n_max = waypoint_count - count * size_min
    sizes = [size_max] * n_max + [size_min] * (count - n_max)
    pods = []
    cursor = 0
    for k, size in enumerate(sizes):
        color = Color.BLUE if k % 2 == 0 else Color.RED
        pods.append(Pod(cursor, cursor + size - 1, color))
        cursor += size
    return PodPartition(tuple(pods), ell, workers, waypoint_count)


def add_pod(partial: list, remaining: int, size: int, ell: int) -> list:
    """One step of the incremental pod-size builder; kept as a fallback for
    externally supplied sizes.

    `partial` is the list of pod lengths built so far.  Appends a pod of
    `size` if that many waypoints remain, otherwise appends the remainder if
    it is still a legal pod (>= ell), otherwise folds the remainder into the
    last pod so no undersized pod is ever emitted.
    """
    if remaining < 0:
        raise ValueError("remaining waypoint count is negative")
    if size < ell:
        raise ValueError("target pod size below ell")
    out = list(partial)
    if remaining == 0:
        return out
    if remaining >= size:
        out.append(size)
    elif remaining >= ell:
        out.append(remaining)
    else:
        if not out:
            raise ValueError("cannot absorb a short remainder with no pods built")
        out[-1] += remaining
    return out


def partition_from_sizes(sizes, workers: int, ell: int) -> PodPartition:
    """Build an alternating partition from explicit pod lengths."""
    pods = []
    cursor = 0
    for k, size in enumerate(sizes):
        color = Color.BLUE if k % 2 == 0 else Color.RED
        pods.append(Pod(cursor, cursor + int(size) - 1, color))
        cursor += int(size)
    return PodPartition(tuple(pods), ell, workers, cursor)
