"""The 8-corner world-box baseline and ground-truth sampling oracles.

The baseline maps the 8 parameter-space corners of a bin through the true
mapping and classifies their axis-aligned hull against the frustum with
per-corner signed distances.  For curved mappings that hull does not
necessarily enclose the whole image: the bulge between corners can escape
it, which is exactly the failure mode the comparison report flags as
UNSOUND whenever a method claims OUTSIDE for a tile in which the sampling
oracle finds a frustum-contained point.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cull import Classification
from .frustum import Frustum
from .quadratic import Box3

__all__ = [
    "Aabb3",
    "ClassificationRun",
    "UnsoundFlag",
    "ComparisonReport",
    "world_aabb_of_bin",
    "classify_aabb8",
    "sample_oracle",
    "compare_classifications",
]

# World-space axis-aligned box; same invariants as the parameter-space box.
Aabb3 = Box3

DEFAULT_ORACLE_LATTICE = (33, 33, 5)


def world_aabb_of_bin(map_fn, center, bin_offsets: Box3) -> Aabb3:
    """Hull of the true-mapped corners of an (uninflated) bin.

    map_fn maps (n, 3) parameter points to world points.  Only the 8
    corners are mapped, so for curved mappings the interior of the image
    may stick out of the returned box.
    """
    corners = np.asarray(center, dtype=float) + bin_offsets.corners()
    world = np.asarray(map_fn(corners), dtype=float)
    return Aabb3(world.min(axis=0), world.max(axis=0))


def classify_aabb8(box: Aabb3, frustum: Frustum) -> Classification:
    """Classic per-plane signed-distance test of the 8 box corners."""
    dists = frustum.signed_distances(box.corners())  # (8, 6)
    if bool(np.any(dists.min(axis=0) > 0.0)):
        return Classification.OUTSIDE
    if bool(np.all(dists.max(axis=0) <= 0.0)):
        return Classification.INSIDE
    return Classification.INTERSECT


@lru_cache(maxsize=64)
def _unit_lattice(dims: tuple[int, int, int]) -> np.ndarray:
    axes = [np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.5]) for n in dims]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=-1)


def _oracle_dims(widths, lattice) -> tuple[int, int, int]:
    n_lat, n_lon, n_h = lattice
    dims = []
    for n, w in zip((n_h, n_lat, n_lon), widths):  # bin axes are (r, lat, lon)
        if w == 0.0:
            dims.append(1)
        else:
            if n < 2:
                raise ValueError(
                    f"lattice dims must be >= 2 on non-degenerate axes, got {lattice}")
            dims.append(int(n))
    return tuple(dims)


def sample_oracle(map_fn, center, bin_offsets: Box3, frustum: Frustum,
                  lattice: tuple[int, int, int] = DEFAULT_ORACLE_LATTICE) -> Classification:
    """Classify a bin by densely sampling its true image.

    ``lattice`` gives (n_lat, n_lon, n_height) counts; axes with zero width
    collapse to a single sample.  One-sided by construction: a sampled point
    inside the frustum proves the bin is not fully outside, while an all-out
    sample is strong evidence, not proof, of OUTSIDE.
    """
    widths = bin_offsets.hi - bin_offsets.lo
    unit = _unit_lattice(_oracle_dims(widths, lattice))
    pts = np.asarray(center, dtype=float) + bin_offsets.lo + unit * widths
    inside = frustum.contains_points(np.asarray(map_fn(pts), dtype=float))
    if bool(inside.all()):
        return Classification.INSIDE
    if not bool(inside.any()):
        return Classification.OUTSIDE
    return Classification.INTERSECT


@dataclass(frozen=True)
class ClassificationRun:
    """Per-frame tile classifications produced by one method (or the oracle)."""

    method: str
    frames: dict  # frame index -> {tile_id: Classification}


@dataclass(frozen=True)
class UnsoundFlag:
    frame: int
    tile: str
    method: str
    claimed: str
    oracle: str


@dataclass
class ComparisonReport:
    """Pairwise state table between two methods plus oracle disagreements."""

    method_a: str
    method_b: str
    frame_pairs: dict = field(default_factory=dict)     # frame -> Counter[(sa, sb)]
    aggregate_pairs: Counter = field(default_factory=Counter)
    frame_states: dict = field(default_factory=dict)    # frame -> {tile: (sa, sb, oracle)}
    unsound: list = field(default_factory=list)
    traversal_intersects: dict = field(default_factory=dict)  # method -> {frame: n}

    def add_unsound(self, frame: int, tile: str, method: str,
                    claimed: str, oracle: str) -> None:
        flag = UnsoundFlag(frame, tile, method, claimed, oracle)
        if flag not in self.unsound:
            self.unsound.append(flag)

    def unsound_count(self, method: str) -> int:
        return sum(1 for f in self.unsound if f.method == method)

    def intersect_counts(self, frame: int) -> tuple[int, int]:
        counter = self.frame_pairs[frame]
        a = sum(n for (sa, _), n in counter.items() if sa == "INTERSECT")
        b = sum(n for (_, sb), n in counter.items() if sb == "INTERSECT")
        return a, b

    def intersect_ratio(self, frame: int):
        """INTERSECT count of method A over method B for one frame."""
        a, b = self.intersect_counts(frame)
        return a / b if b else None

    def set_traversal_intersects(self, method: str, frame: int, count: int) -> None:
        self.traversal_intersects.setdefault(method, {})[frame] = count

    def traversal_ratio(self, frame: int):
        a = self.traversal_intersects.get(self.method_a, {}).get(frame)
        b = self.traversal_intersects.get(self.method_b, {}).get(frame)
        if a is None or b is None or b == 0:
            return None
        return a / b

    def to_json(self) -> str:
        frames = {}
        for frame in sorted(self.frame_pairs):
            counter = self.frame_pairs[frame]
            a, b = self.intersect_counts(frame)
            frames[str(frame)] = {
                "pairs": {f"{sa}|{sb}": n for (sa, sb), n in sorted(counter.items())},
                "intersect_a": a,
                "intersect_b": b,
                "intersect_ratio": self.intersect_ratio(frame),
                "traversal_ratio": self.traversal_ratio(frame),
            }
        doc = {
            "method_a": self.method_a,
            "method_b": self.method_b,
            "frames": frames,
            "aggregate_pairs": {f"{sa}|{sb}": n
                                for (sa, sb), n in sorted(self.aggregate_pairs.items())},
            "traversal_intersects": {m: {str(k): v for k, v in sorted(d.items())}
                                     for m, d in sorted(self.traversal_intersects.items())},
            "unsound": [vars(f) for f in self.unsound],
            "unsound_counts": {m: self.unsound_count(m)
                               for m in sorted({f.method for f in self.unsound})},
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["frame", "tile", self.method_a, self.method_b,
                         "oracle", "unsound"])
        flagged = {(f.frame, f.tile, f.method) for f in self.unsound}
        for frame in sorted(self.frame_states):
            for tile in sorted(self.frame_states[frame]):
                sa, sb, so = self.frame_states[frame][tile]
                marks = [m for m in (self.method_a, self.method_b)
                         if (frame, tile, m) in flagged]
                writer.writerow([frame, tile, sa, sb, so, ";".join(marks)])
        return out.getvalue()


def compare_classifications(run_a: ClassificationRun, run_b: ClassificationRun,
                            oracle: ClassificationRun) -> ComparisonReport:
    """Tabulate per-tile state pairs and oracle disagreements.

    All runs must cover identical frames and tile sets; a mismatch means the
    harness fed inconsistent runs and raises.  A method claiming OUTSIDE for
    a tile where the oracle found a contained point is flagged UNSOUND.
    """
    if set(run_a.frames) != set(run_b.frames) or set(run_a.frames) != set(oracle.frames):
        raise ValueError("runs cover different frame sets")
    report = ComparisonReport(run_a.method, run_b.method)
    for frame in sorted(run_a.frames):
        tiles_a = run_a.frames[frame]
        tiles_b = run_b.frames[frame]
        tiles_o = oracle.frames[frame]
        if set(tiles_a) != set(tiles_b) or set(tiles_a) != set(tiles_o):
            raise ValueError(f"tile sets differ at frame {frame}")
        counter = Counter()
        states = {}
        for tile, state_a in tiles_a.items():
            state_b = tiles_b[tile]
            state_o = tiles_o[tile]
            counter[(state_a.value, state_b.value)] += 1
            states[tile] = (state_a.value, state_b.value, state_o.value)
            for method, state in ((run_a.method, state_a), (run_b.method, state_b)):
                if state is Classification.OUTSIDE and state_o is not Classification.OUTSIDE:
                    report.add_unsound(frame, tile, method,
                                       state.value, state_o.value)
        report.frame_pairs[frame] = counter
        report.frame_states[frame] = states
        report.aggregate_pairs.update(counter)
    return report
