"""Geodetic tile quadtree over a heightfield, with visibility traversal.

The globe is tiled by a 2^L x 2^(L+1) grid of latitude/longitude rectangles
per level L (square in angle for the default full ranges), each carrying the
min/max terrain height inside it.  A tile maps to a parameter-space bin
(radius, latitude, longitude) whose curved image is classified against the
frustum either with the quadratic bin test or with the 8-corner world-box
baseline; traversal recurses only into tiles that straddle the frustum
boundary.
"""

from __future__ import annotations

import enum
import math
import struct
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import classify_aabb8, world_aabb_of_bin
from .cull import Classification, CullConfig, _classify_bin_scalars
from .frustum import Frustum
from .mapping import GeodeticParams, _sphere_jet_rows, sphere_point
from .quadratic import Box3

__all__ = [
    "GeoTile",
    "HeightField",
    "TerrainConfig",
    "TraversalStats",
    "MinMaxPyramid",
    "Method",
    "SynthKind",
    "IngestError",
    "tile_from_indices",
    "root_tiles",
    "subdivide",
    "tile_bin",
    "build_minmax_pyramid",
    "load_heightfield",
    "write_heightfield",
    "synth_heightfield",
    "classify_tile",
    "traverse",
]

FULL_LAT_RANGE = (-math.pi / 2, math.pi / 2)
FULL_LON_RANGE = (-math.pi, math.pi)

# Ingestion clamp: keeps below-sea-level land (Dead Sea) without letting
# corrupt samples blow up bin extents.
HEIGHT_CLAMP = (-500.0, 9000.0)

PORTABLE_MAGIC = b"ABINHF01"


class Method(enum.Enum):
    ANALYTIC_BIN = "ANALYTIC_BIN"
    AABB8 = "AABB8"


class SynthKind(enum.Enum):
    FLAT = "FLAT"
    SINGLE_PEAK = "SINGLE_PEAK"
    SINUSOIDAL = "SINUSOIDAL"


class IngestError(ValueError):
    """Heightfield ingestion failure; message names the offending field."""


@dataclass(frozen=True)
class GeoTile:
    """Quadtree tile: angular rectangle plus its height interval."""

    level: int
    i: int
    j: int
    lat_range: tuple[float, float]
    lon_range: tuple[float, float]
    height_range: tuple[float, float]

    def __post_init__(self):
        if self.level < 0 or self.i < 0 or self.j < 0:
            raise ValueError("level and indices must be non-negative")
        lat_lo, lat_hi = self.lat_range
        lon_lo, lon_hi = self.lon_range
        h_lo, h_hi = self.height_range
        if not lat_lo < lat_hi or not lon_lo < lon_hi:
            raise ValueError("lat and lon intervals must have positive width")
        if h_lo > h_hi:
            raise ValueError("height interval inverted")
        eps = 1e-12
        if lat_lo < -math.pi / 2 - eps or lat_hi > math.pi / 2 + eps:
            raise ValueError(f"latitude range outside [-pi/2, pi/2]: {self.lat_range}")
        if lon_lo < -math.pi - eps or lon_hi > math.pi + eps:
            raise ValueError(f"longitude range outside [-pi, pi]: {self.lon_range}")

    @property
    def tile_id(self) -> str:
        return f"{self.level}/{self.i}/{self.j}"


@dataclass(frozen=True)
class HeightField:
    """Uniform lat/lon grid of terrain heights, row 0 at the north edge."""

    samples: np.ndarray
    lat_range: tuple[float, float]
    lon_range: tuple[float, float]
    nodata: float = -9999.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.size == 0:
            raise ValueError("samples must be a non-empty 2D grid")
        object.__setattr__(self, "samples", s)

    @property
    def rows(self) -> int:
        return self.samples.shape[0]

    @property
    def cols(self) -> int:
        return self.samples.shape[1]

    def sample_lats(self) -> np.ndarray:
        lo, hi = self.lat_range
        if self.rows == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(hi, lo, self.rows)

    def sample_lons(self) -> np.ndarray:
        lo, hi = self.lon_range
        if self.cols == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, self.cols)


@dataclass(frozen=True)
class TerrainConfig:
    """Quadtree extents and the culling configuration used per tile."""

    start_level: int = 4
    max_level: int = 4
    lat_range: tuple[float, float] = FULL_LAT_RANGE
    lon_range: tuple[float, float] = FULL_LON_RANGE
    altitude_range: tuple[float, float] = (0.0, 9000.0)
    cull: CullConfig = field(default_factory=CullConfig)

    def __post_init__(self):
        if not 0 <= self.start_level <= self.max_level <= 24:
            raise ValueError(
                f"need 0 <= start_level <= max_level <= 24, got "
                f"{self.start_level}..{self.max_level}")
        if self.altitude_range[0] > self.altitude_range[1]:
            raise ValueError("altitude_range inverted")


@dataclass
class TraversalStats:
    visited: int = 0
    outside: int = 0
    inside: int = 0
    intersect: int = 0
    leaves_rendered: int = 0
    max_depth_reached: int = 0
    elapsed_ns: int = 0


def _grid_shape(level: int) -> tuple[int, int]:
    # twice as many longitude bins keeps tiles square in angle
    return 2 ** level, 2 ** (level + 1)


def _edges(lo: float, hi: float, count: int) -> np.ndarray:
    # k / count is exact for power-of-two counts, so edges are reproducible
    # from indices alone at every level
    k = np.arange(count + 1, dtype=float)
    return lo + (k / count) * (hi - lo)


def _interval(lo: float, hi: float, count: int, k: int) -> tuple[float, float]:
    w = hi - lo
    return lo + (k / count) * w, lo + ((k + 1) / count) * w


def tile_from_indices(level: int, i: int, j: int,
                      lat_range: tuple[float, float] = FULL_LAT_RANGE,
                      lon_range: tuple[float, float] = FULL_LON_RANGE,
                      height_range: tuple[float, float] = (0.0, 0.0)) -> GeoTile:
    """Tile with canonical bounds derived from its grid indices."""
    n_lat, n_lon = _grid_shape(level)
    if not (0 <= i < n_lat and 0 <= j < n_lon):
        raise ValueError(f"indices ({i}, {j}) out of range for level {level}")
    return GeoTile(level, i, j,
                   _interval(lat_range[0], lat_range[1], n_lat, i),
                   _interval(lon_range[0], lon_range[1], n_lon, j),
                   height_range)


def root_tiles(cfg: TerrainConfig) -> list[GeoTile]:
    """The full start-level grid; height intervals default to the configured
    altitude range until a pyramid refines them."""
    n_lat, n_lon = _grid_shape(cfg.start_level)
    return [tile_from_indices(cfg.start_level, i, j, cfg.lat_range,
                              cfg.lon_range, cfg.altitude_range)
            for i in range(n_lat) for j in range(n_lon)]


class MinMaxPyramid:
    """Per-level, per-tile terrain height intervals.

    Levels 0..max_level are stored as (h_min, h_max) array pairs of the
    level's grid shape.  Finest-level intervals come from the heightfield
    samples inside each tile's closed rectangle; coarser intervals are the
    hull of the four children.  Tiles with no samples get [0, 0].
    """

    def __init__(self, levels, empty_tiles: int,
                 lat_range: tuple[float, float], lon_range: tuple[float, float]):
        self.levels = levels
        self.empty_tiles = empty_tiles
        self.lat_range = lat_range
        self.lon_range = lon_range
        self.max_level = len(levels) - 1

    def interval(self, level: int, i: int, j: int) -> tuple[float, float]:
        hmin, hmax = self.levels[level]
        return float(hmin[i, j]), float(hmax[i, j])


def _bin_indices(values: np.ndarray, edges: np.ndarray):
    """Tile index per value plus a mask of values exactly on an interior
    edge (which belong to the lower neighbor too); out-of-range values get
    index -1."""
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.clip(idx, 0, len(edges) - 2)
    in_range = (values >= edges[0]) & (values <= edges[-1])
    idx = np.where(in_range, idx, -1)
    on_lower_edge = in_range & (idx > 0) & (values == edges[idx.clip(0)])
    return idx, on_lower_edge


def build_minmax_pyramid(hf: HeightField, cfg: TerrainConfig) -> MinMaxPyramid:
    n_lat, n_lon = _grid_shape(cfg.max_level)
    lat_edges = _edges(cfg.lat_range[0], cfg.lat_range[1], n_lat)
    lon_edges = _edges(cfg.lon_range[0], cfg.lon_range[1], n_lon)

    lats = hf.sample_lats()
    lons = hf.sample_lons()
    li, li_dup = _bin_indices(lats, lat_edges)
    lj, lj_dup = _bin_indices(lons, lon_edges)

    rows_i, cols_j = np.meshgrid(np.arange(hf.rows), np.arange(hf.cols), indexing="ij")
    rows_i = rows_i.ravel()
    cols_j = cols_j.ravel()
    heights = hf.samples.ravel()

    tile_i = li[rows_i]
    tile_j = lj[cols_j]
    keep = (tile_i >= 0) & (tile_j >= 0)

    # closed-rectangle membership: duplicate samples sitting exactly on an
    # interior edge into the adjacent tile(s)
    ii = [tile_i[keep]]
    jj = [tile_j[keep]]
    hh = [heights[keep]]
    dup_i = li_dup[rows_i] & keep
    dup_j = lj_dup[cols_j] & keep
    if dup_i.any():
        ii.append(tile_i[dup_i] - 1); jj.append(tile_j[dup_i]); hh.append(heights[dup_i])
    if dup_j.any():
        ii.append(tile_i[dup_j]); jj.append(tile_j[dup_j] - 1); hh.append(heights[dup_j])
    both = dup_i & dup_j
    if both.any():
        ii.append(tile_i[both] - 1); jj.append(tile_j[both] - 1); hh.append(heights[both])
    all_i = np.concatenate(ii)
    all_j = np.concatenate(jj)
    all_h = np.concatenate(hh)

    hmin = np.full((n_lat, n_lon), np.inf)
    hmax = np.full((n_lat, n_lon), -np.inf)
    np.minimum.at(hmin, (all_i, all_j), all_h)
    np.maximum.at(hmax, (all_i, all_j), all_h)

    empty = ~np.isfinite(hmin)
    empty_tiles = int(empty.sum())
    hmin[empty] = 0.0
    hmax[empty] = 0.0

    levels = [(hmin, hmax)]
    for level in range(cfg.max_level - 1, -1, -1):
        nl, nn = _grid_shape(level)
        child_min, child_max = levels[0]
        levels.insert(0, (
            child_min.reshape(nl, 2, nn, 2).min(axis=(1, 3)),
            child_max.reshape(nl, 2, nn, 2).max(axis=(1, 3)),
        ))
    return MinMaxPyramid(levels, empty_tiles, cfg.lat_range, cfg.lon_range)


def subdivide(tile: GeoTile, pyramid: MinMaxPyramid) -> list[GeoTile]:
    """Split a tile into its four children, heights from the pyramid."""
    if tile.level >= pyramid.max_level:
        raise ValueError(f"tile {tile.tile_id} is already at max level "
                         f"{pyramid.max_level}")
    lat_lo, lat_hi = tile.lat_range
    lon_lo, lon_hi = tile.lon_range
    lat_mid = 0.5 * (lat_lo + lat_hi)
    lon_mid = 0.5 * (lon_lo + lon_hi)
    level = tile.level + 1
    children = []
    for a, (clo, chi) in enumerate(((lat_lo, lat_mid), (lat_mid, lat_hi))):
        for b, (dlo, dhi) in enumerate(((lon_lo, lon_mid), (lon_mid, lon_hi))):
            i, j = 2 * tile.i + a, 2 * tile.j + b
            children.append(GeoTile(level, i, j, (clo, chi), (dlo, dhi),
                                    pyramid.interval(level, i, j)))
    return children


def tile_bin(tile: GeoTile, params: GeodeticParams) -> tuple[np.ndarray, Box3]:
    """Parameter bin of a tile: center point and centered offset box.

    The radial axis spans radius + [h_min, h_max]; a flat tile yields a
    zero-width radial axis.
    """
    h_lo, h_hi = tile.height_range
    lat_lo, lat_hi = tile.lat_range
    lon_lo, lon_hi = tile.lon_range
    center = np.array([params.radius_m + 0.5 * (h_lo + h_hi),
                       0.5 * (lat_lo + lat_hi),
                       0.5 * (lon_lo + lon_hi)])
    half = np.array([0.5 * (h_hi - h_lo),
                     0.5 * (lat_hi - lat_lo),
                     0.5 * (lon_hi - lon_lo)])
    return center, Box3(-half, half)


def synth_heightfield(kind: SynthKind | str, rows: int = 257, cols: int = 513,
                      lat_range: tuple[float, float] = FULL_LAT_RANGE,
                      lon_range: tuple[float, float] = FULL_LON_RANGE,
                      value: float = 0.0,
                      peak_height: float = 8848.0,
                      peak_lat: float = 0.0, peak_lon: float = 0.0,
                      amplitude: float = 2000.0,
                      frequency: float = 8.0) -> HeightField:
    """Deterministic procedural heightfields for desk-scale experiments.

    FLAT: constant ``value``.  SINGLE_PEAK: zeros except ``peak_height`` at
    the node nearest (peak_lat, peak_lon).  SINUSOIDAL:
    ``amplitude * (1 + sin(f * lat) * cos(f * lon)) / 2``.
    """
    kind = SynthKind(kind)
    if rows < 2 or cols < 2:
        raise ValueError("need at least a 2x2 grid")
    hf = HeightField(np.zeros((rows, cols)), lat_range, lon_range)
    lats = hf.sample_lats()
    lons = hf.sample_lons()
    if kind is SynthKind.FLAT:
        grid = np.full((rows, cols), float(value))
    elif kind is SynthKind.SINGLE_PEAK:
        grid = np.zeros((rows, cols))
        r = int(np.argmin(np.abs(lats - peak_lat)))
        c = int(np.argmin(np.abs(lons - peak_lon)))
        grid[r, c] = float(peak_height)
    else:
        if not 0.0 <= amplitude <= 9000.0:
            raise ValueError(f"amplitude must be in [0, 9000], got {amplitude}")
        lat_g, lon_g = np.meshgrid(lats, lons, indexing="ij")
        grid = amplitude * (1.0 + np.sin(frequency * lat_g) * np.cos(frequency * lon_g)) / 2.0
    grid = np.clip(grid, HEIGHT_CLAMP[0], HEIGHT_CLAMP[1])
    return HeightField(grid, lat_range, lon_range)


def _parse_header_text(text: str, source: str) -> dict:
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                continue
            key, val = parts
        values[key.strip().lower()] = val.strip()
    required = ("nrows", "ncols", "ulxmap", "ulymap", "xdim", "ydim")
    parsed = {}
    for key in required:
        if key not in values:
            raise IngestError(f"{source}: missing header field '{key}'")
        try:
            parsed[key] = float(values[key])
        except ValueError:
            raise IngestError(f"{source}: unparseable header field '{key}' = "
                              f"{values[key]!r}") from None
    parsed["nrows"] = int(parsed["nrows"])
    parsed["ncols"] = int(parsed["ncols"])
    if parsed["nrows"] < 1 or parsed["ncols"] < 1:
        raise IngestError(f"{source}: header field 'nrows'/'ncols' must be positive")
    parsed["nodata"] = float(values.get("nodata", -9999.0))
    return parsed


def _georef_from_header(hdr: dict) -> tuple[tuple[float, float], tuple[float, float]]:
    # ulymap/ulxmap locate the first (north-west) sample; spacing in degrees
    lat_hi = math.radians(hdr["ulymap"])
    lat_lo = math.radians(hdr["ulymap"] - (hdr["nrows"] - 1) * hdr["ydim"])
    lon_lo = math.radians(hdr["ulxmap"])
    lon_hi = math.radians(hdr["ulxmap"] + (hdr["ncols"] - 1) * hdr["xdim"])
    return (lat_lo, lat_hi), (lon_lo, lon_hi)


def _ingest(raw: np.ndarray, hdr: dict) -> HeightField:
    grid = raw.astype(float).reshape(hdr["nrows"], hdr["ncols"])
    grid[grid == hdr["nodata"]] = 0.0
    grid = np.clip(grid, HEIGHT_CLAMP[0], HEIGHT_CLAMP[1])
    lat_range, lon_range = _georef_from_header(hdr)
    return HeightField(grid, lat_range, lon_range, nodata=hdr["nodata"])


def _load_raw_dem(path: Path) -> HeightField:
    header_path = None
    for candidate in (path.with_suffix(".hdr"), path.with_suffix(".HDR")):
        if candidate.exists():
            header_path = candidate
            break
    if header_path is None:
        raise IngestError(f"{path}: no sidecar header ({path.with_suffix('.hdr')})")
    hdr = _parse_header_text(header_path.read_text(), str(header_path))
    payload = path.read_bytes()
    expected = hdr["nrows"] * hdr["ncols"] * 2
    if len(payload) != expected:
        raise IngestError(
            f"{path}: payload is {len(payload)} bytes but header field "
            f"'nrows' x 'ncols' implies {expected}")
    raw = np.frombuffer(payload, dtype=">i2")
    return _ingest(raw, hdr)


def _load_portable(path: Path, blob: bytes) -> HeightField:
    off = len(PORTABLE_MAGIC)
    if len(blob) < off + 4:
        raise IngestError(f"{path}: truncated header length")
    (hdr_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    if len(blob) < off + hdr_len:
        raise IngestError(f"{path}: truncated header ({hdr_len} bytes declared)")
    hdr = _parse_header_text(blob[off:off + hdr_len].decode("utf-8"), str(path))
    off += hdr_len
    expected = hdr["nrows"] * hdr["ncols"] * 8
    if len(blob) - off != expected:
        raise IngestError(
            f"{path}: payload is {len(blob) - off} bytes but header field "
            f"'nrows' x 'ncols' implies {expected}")
    raw = np.frombuffer(blob, dtype="<f8", count=hdr["nrows"] * hdr["ncols"],
                        offset=off)
    return _ingest(raw, hdr)


def load_heightfield(path) -> HeightField:
    """Read a heightfield: either the portable container (8-byte magic,
    length-prefixed text header, little-endian float64 samples) or a raw
    big-endian int16 grid with a text sidecar header.  Nodata samples map to
    sea level and heights are clamped to [-500, 9000]."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:len(PORTABLE_MAGIC)] == PORTABLE_MAGIC:
        return _load_portable(path, blob)
    return _load_raw_dem(path)


def write_heightfield(hf: HeightField, path) -> None:
    """Write the portable container format."""
    path = Path(path)
    lat_lo, lat_hi = hf.lat_range
    lon_lo, lon_hi = hf.lon_range
    ydim = math.degrees((lat_hi - lat_lo) / (hf.rows - 1)) if hf.rows > 1 else 0.0
    xdim = math.degrees((lon_hi - lon_lo) / (hf.cols - 1)) if hf.cols > 1 else 0.0
    header = (f"nrows={hf.rows}\nncols={hf.cols}\n"
              f"ulxmap={math.degrees(lon_lo)!r}\nulymap={math.degrees(lat_hi)!r}\n"
              f"xdim={xdim!r}\nydim={ydim!r}\nnodata={hf.nodata!r}\n").encode()
    with open(path, "wb") as fh:
        fh.write(PORTABLE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(hf.samples, dtype="<f8").tobytes())


def _tile_with_pyramid_heights(tile: GeoTile, pyramid: MinMaxPyramid) -> GeoTile:
    h = pyramid.interval(tile.level, tile.i, tile.j)
    if h == tile.height_range:
        return tile
    return GeoTile(tile.level, tile.i, tile.j, tile.lat_range, tile.lon_range, h)


def classify_tile(tile: GeoTile, frustum: Frustum, params: GeodeticParams,
                  method: Method, cull: CullConfig) -> Classification:
    """Classify one tile with the chosen method."""
    if method is Method.ANALYTIC_BIN:
        h_lo, h_hi = tile.height_range
        lat_lo, lat_hi = tile.lat_range
        lon_lo, lon_hi = tile.lon_range
        f = cull.inflation
        hw0 = f * 0.5 * (h_hi - h_lo)
        hw1 = f * 0.5 * (lat_hi - lat_lo)
        hw2 = f * 0.5 * (lon_hi - lon_lo)
        value, jac, h_x, h_y, h_z = _sphere_jet_rows(
            params.radius_m + 0.5 * (h_lo + h_hi),
            0.5 * (lat_lo + lat_hi), 0.5 * (lon_lo + lon_hi))
        return _classify_bin_scalars(value, jac, h_x, h_y, h_z,
                                     -hw0, -hw1, -hw2, hw0, hw1, hw2,
                                     frustum, cull.extrema_mode)
    center, offsets = tile_bin(tile, params)
    box = world_aabb_of_bin(lambda pts: sphere_point(params, pts), center, offsets)
    return classify_aabb8(box, frustum)


def traverse(frustum: Frustum, cfg: TerrainConfig, pyramid: MinMaxPyramid,
             params: GeodeticParams, method: Method,
             sink=None) -> tuple[list[GeoTile], TraversalStats]:
    """Recursive visibility traversal from the start-level grid.

    OUTSIDE tiles are pruned; INSIDE tiles are emitted without visiting
    their subtree; straddling tiles recurse until max_level, where they are
    emitted as visible leaves.  ``sink(tile, classification)``, when given,
    observes every classified tile.
    """
    if pyramid.max_level < cfg.max_level:
        raise ValueError("pyramid is shallower than cfg.max_level")
    t0 = time.perf_counter_ns()
    stats = TraversalStats()
    visible: list[GeoTile] = []

    stack = deque(_tile_with_pyramid_heights(t, pyramid)
                  for t in reversed(root_tiles(cfg)))
    while stack:
        tile = stack.pop()
        cls = classify_tile(tile, frustum, params, method, cfg.cull)
        stats.visited += 1
        stats.max_depth_reached = max(stats.max_depth_reached, tile.level)
        if sink is not None:
            sink(tile, cls)
        if cls is Classification.OUTSIDE:
            stats.outside += 1
        elif cls is Classification.INSIDE:
            stats.inside += 1
            stats.leaves_rendered += 1
            visible.append(tile)
        else:
            stats.intersect += 1
            if tile.level < cfg.max_level:
                for child in reversed(subdivide(tile, pyramid)):
                    stack.append(child)
            else:
                stats.leaves_rendered += 1
                visible.append(tile)
    stats.elapsed_ns = time.perf_counter_ns() - t0
    return visible, stats
