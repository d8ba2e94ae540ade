"""Scenario files: JSON descriptions of a benchmark run.

A scenario bundles the terrain configuration, a heightfield source (file
path or synthetic spec), the geodetic parameters, an ordered camera list
(one pose per frame, either explicit poses or compact orbit generator
specs that are expanded at parse time), the methods to run, and the oracle
settings.  Validation errors carry the JSON path of the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import DEFAULT_ORACLE_LATTICE
from .cull import CullConfig, ExtremaMode
from .frustum import CameraPose
from .mapping import EARTH_RADIUS_M, GeodeticParams
from .terrain import (
    FULL_LAT_RANGE,
    FULL_LON_RANGE,
    HeightField,
    Method,
    TerrainConfig,
    load_heightfield,
    synth_heightfield,
)

__all__ = [
    "Scenario",
    "ScenarioError",
    "METHOD_NAMES",
    "parse_scenario",
    "load_scenario",
    "orbit_cameras",
    "resolve_method",
]

# CLI-facing method names and their (traversal method, extrema mode) meaning.
METHOD_NAMES = {
    "ANALYTIC_BIN_NINE_POINT": (Method.ANALYTIC_BIN, ExtremaMode.NINE_POINT),
    "ANALYTIC_BIN_EXACT": (Method.ANALYTIC_BIN, ExtremaMode.EXACT),
    "AABB8": (Method.AABB8, None),
}


class ScenarioError(ValueError):
    """Invalid scenario; the message names the JSON path at fault."""


def resolve_method(name: str):
    if name not in METHOD_NAMES:
        raise ScenarioError(
            f"methods: unknown method {name!r}; expected one of {sorted(METHOD_NAMES)}")
    return METHOD_NAMES[name]


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    geodetic: GeodeticParams
    terrain: TerrainConfig
    heightfield_spec: dict
    cameras: tuple[CameraPose, ...]
    methods: tuple[str, ...]
    oracle_enabled: bool
    oracle_lattice: tuple[int, int, int]

    def build_heightfield(self, base_dir=None) -> HeightField:
        spec = self.heightfield_spec
        if "path" in spec:
            path = spec["path"]
            if base_dir is not None:
                from pathlib import Path
                path = Path(base_dir) / path
            return load_heightfield(path)
        return synth_heightfield(**spec)


def orbit_cameras(frames: int, altitude_m: float, radius_m: float = EARTH_RADIUS_M,
                  plane: str = "equatorial", fov_y: float = 1.0,
                  aspect: float = 1.2, near_m: float | None = None,
                  far_m: float | None = None, phase: float = 0.0) -> list[CameraPose]:
    """Nadir-looking cameras evenly spaced along a circular orbit.

    The orbit lies in the equatorial (x-z) or polar (y-z) plane; the up
    hint is the orbit plane normal, so poses vary smoothly along the ring.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if plane not in ("equatorial", "polar"):
        raise ValueError(f"plane must be 'equatorial' or 'polar', got {plane!r}")
    orbit_r = radius_m + altitude_m
    near = near_m if near_m is not None else max(1.0, altitude_m / 100.0)
    far = far_m if far_m is not None else 3.0 * altitude_m
    poses = []
    for k in range(frames):
        ang = phase + 2.0 * math.pi * k / frames
        if plane == "equatorial":
            eye = np.array([orbit_r * math.sin(ang), 0.0, orbit_r * math.cos(ang)])
            up_hint = np.array([0.0, 1.0, 0.0])
        else:
            eye = np.array([0.0, orbit_r * math.sin(ang), orbit_r * math.cos(ang)])
            up_hint = np.array([1.0, 0.0, 0.0])
        look = -eye / np.linalg.norm(eye)
        poses.append(CameraPose(eye, look, up_hint, fov_y, aspect, near, far))
    return poses


def _expect(obj, key, path, default=None, required=False):
    if key not in obj:
        if required:
            raise ScenarioError(f"{path}: missing required field '{key}'")
        return default
    return obj[key]


def _as_number(value, path):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_pair(value, path):
    if (not isinstance(value, (list, tuple)) or len(value) != 2):
        raise ScenarioError(f"{path}: expected [lo, hi]")
    return (_as_number(value[0], path + "[0]"), _as_number(value[1], path + "[1]"))


def _as_vec(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioError(f"{path}: expected [x, y, z]")
    return [_as_number(v, f"{path}[{k}]") for k, v in enumerate(value)]


def _parse_pose(obj, path) -> CameraPose:
    try:
        return CameraPose(
            eye=_as_vec(_expect(obj, "eye", path, required=True), f"{path}.eye"),
            look_dir=_as_vec(_expect(obj, "look_dir", path, required=True), f"{path}.look_dir"),
            up_hint=_as_vec(_expect(obj, "up_hint", path, default=[0, 1, 0]), f"{path}.up_hint"),
            fov_y=_as_number(_expect(obj, "fov_y", path, required=True), f"{path}.fov_y"),
            aspect=_as_number(_expect(obj, "aspect", path, default=1.0), f"{path}.aspect"),
            near=_as_number(_expect(obj, "near", path, required=True), f"{path}.near"),
            far=_as_number(_expect(obj, "far", path, required=True), f"{path}.far"),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _parse_orbit(obj, path, radius_m) -> list[CameraPose]:
    known = {"frames", "altitude_m", "plane", "fov_y", "aspect", "near_m",
             "far_m", "phase"}
    for key in obj:
        if key not in known:
            raise ScenarioError(f"{path}.{key}: unknown orbit field")
    try:
        return orbit_cameras(
            frames=int(_as_number(_expect(obj, "frames", path, required=True), f"{path}.frames")),
            altitude_m=_as_number(_expect(obj, "altitude_m", path, required=True), f"{path}.altitude_m"),
            radius_m=radius_m,
            plane=_expect(obj, "plane", path, default="equatorial"),
            fov_y=_as_number(_expect(obj, "fov_y", path, default=1.0), f"{path}.fov_y"),
            aspect=_as_number(_expect(obj, "aspect", path, default=1.2), f"{path}.aspect"),
            near_m=obj.get("near_m"),
            far_m=obj.get("far_m"),
            phase=_as_number(_expect(obj, "phase", path, default=0.0), f"{path}.phase"),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _parse_heightfield(obj, path) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    if "path" in obj:
        return {"path": obj["path"]}
    kind = _expect(obj, "kind", path, required=True)
    if kind not in ("FLAT", "SINGLE_PEAK", "SINUSOIDAL"):
        raise ScenarioError(f"{path}.kind: unknown synthetic kind {kind!r}")
    spec = {"kind": kind}
    numeric = ("rows", "cols", "value", "peak_height", "peak_lat", "peak_lon",
               "amplitude", "frequency")
    for key in obj:
        if key == "kind":
            continue
        if key not in numeric:
            raise ScenarioError(f"{path}.{key}: unknown heightfield field")
        val = _as_number(obj[key], f"{path}.{key}")
        spec[key] = int(val) if key in ("rows", "cols") else val
    return spec


def parse_scenario(text: str) -> Scenario:
    """Parse scenario JSON, applying documented defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"$: malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("$: top level must be an object")

    name = _expect(doc, "name", "$", required=True)
    seed = int(_as_number(_expect(doc, "seed", "$", default=0), "$.seed"))

    geo_obj = _expect(doc, "geodetic", "$", default={})
    radius = _as_number(_expect(geo_obj, "radius_m", "$.geodetic",
                                default=EARTH_RADIUS_M), "$.geodetic.radius_m")
    try:
        geodetic = GeodeticParams(radius)
    except ValueError as exc:
        raise ScenarioError(f"$.geodetic: {exc}") from None

    terr = _expect(doc, "terrain", "$", default={})
    start_level = int(_as_number(_expect(terr, "start_level", "$.terrain", default=4),
                                 "$.terrain.start_level"))
    max_level = int(_as_number(_expect(terr, "max_level", "$.terrain", default=start_level),
                               "$.terrain.max_level"))
    inflation = _as_number(_expect(terr, "inflation", "$.terrain", default=1.1),
                           "$.terrain.inflation")
    lat_range = _as_pair(_expect(terr, "lat_range", "$.terrain", default=list(FULL_LAT_RANGE)),
                         "$.terrain.lat_range")
    lon_range = _as_pair(_expect(terr, "lon_range", "$.terrain", default=list(FULL_LON_RANGE)),
                         "$.terrain.lon_range")
    altitude_range = _as_pair(_expect(terr, "altitude_range", "$.terrain",
                                      default=[0.0, 9000.0]), "$.terrain.altitude_range")
    try:
        terrain = TerrainConfig(start_level, max_level, lat_range, lon_range,
                                altitude_range, CullConfig(inflation=inflation))
    except ValueError as exc:
        raise ScenarioError(f"$.terrain: {exc}") from None

    hf_spec = _parse_heightfield(
        _expect(terr, "heightfield", "$.terrain", default={"kind": "FLAT"}),
        "$.terrain.heightfield")

    cam_list = _expect(doc, "cameras", "$", required=True)
    if not isinstance(cam_list, list) or not cam_list:
        raise ScenarioError("$.cameras: expected a non-empty list")
    cameras: list[CameraPose] = []
    for k, obj in enumerate(cam_list):
        path = f"$.cameras[{k}]"
        if not isinstance(obj, dict):
            raise ScenarioError(f"{path}: expected an object")
        if "orbit" in obj:
            cameras.extend(_parse_orbit(obj["orbit"], path + ".orbit", radius))
        else:
            cameras.append(_parse_pose(obj, path))

    methods = _expect(doc, "methods", "$", required=True)
    if not isinstance(methods, list) or not methods:
        raise ScenarioError("$.methods: expected a non-empty list")
    for k, m in enumerate(methods):
        if m not in METHOD_NAMES:
            raise ScenarioError(f"$.methods[{k}]: unknown method {m!r}; "
                                f"expected one of {sorted(METHOD_NAMES)}")

    oracle = _expect(doc, "oracle", "$", default={})
    oracle_enabled = bool(_expect(oracle, "enabled", "$.oracle", default=False))
    lattice_raw = _expect(oracle, "lattice", "$.oracle", default=list(DEFAULT_ORACLE_LATTICE))
    if not isinstance(lattice_raw, list) or len(lattice_raw) != 3:
        raise ScenarioError("$.oracle.lattice: expected [n_lat, n_lon, n_height]")
    lattice = tuple(int(_as_number(v, f"$.oracle.lattice[{k}]"))
                    for k, v in enumerate(lattice_raw))

    return Scenario(name=name, seed=seed, geodetic=geodetic, terrain=terrain,
                    heightfield_spec=hf_spec, cameras=tuple(cameras),
                    methods=tuple(methods), oracle_enabled=oracle_enabled,
                    oracle_lattice=lattice)


def load_scenario(path) -> Scenario:
    from pathlib import Path
    return parse_scenario(Path(path).read_text())
