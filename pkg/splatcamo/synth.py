# -*- coding: utf-8 -*-
"""
Procedural scenes with a re-texturable target box, and the camera layouts used
for training captures and held-out test views.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .scene import AABB, CameraPose, Intrinsics, SplatCloud
from .sh_color import SHOrder, rgb_to_dc
from .textures import get_texture

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
SPLAT_SIGMA = 0.6
THICKNESS = 0.1
GROUND_OPACITY = 0.95
TARGET_OPACITY = 0.95


class Face(str, Enum):
    top = "top"
    bottom = "bottom"
    front = "front"
    back = "back"
    left = "left"
    right = "right"


# face -> (normal axis, normal sign, u axis, u sign, v axis); v runs top -> bottom on
# side faces and -z -> +z on the top face
_FACE_FRAMES = {
    Face.top: (1, 1.0, 0, 1.0, 2),
    Face.front: (2, 1.0, 0, 1.0, 1),
    Face.back: (2, -1.0, 0, -1.0, 1),
    Face.left: (0, -1.0, 2, 1.0, 1),
    Face.right: (0, 1.0, 2, -1.0, 1),
}

SURFACE_FACES = tuple(_FACE_FRAMES)


class BoxSpec(BaseModel):
    center: list[float] = Field(..., min_length=3, max_length=3)
    size: list[float] = Field(..., min_length=3, max_length=3, description="edge lengths along x, y, z")
    density: float = Field(40.0, gt=0, description="splats per unit area")

    @model_validator(mode='after')
    def _positive_size(self):
        if any(not s > 0 for s in self.size):
            raise ValueError("box size must be positive on every axis, got {}".format(self.size))
        return self

    @property
    def aabb(self):
        return AABB.from_center_size(self.center, self.size)


class TargetSpec(BoxSpec):
    label: str = Field("car", min_length=1, description="detector class of the target")
    faces: dict[Face, str] = Field(
        default_factory=lambda: {f: "car-blue" for f in SURFACE_FACES},
        description="benign texture per face")


class ExtraBox(BoxSpec):
    texture: str = Field(..., min_length=1)


class SceneSpec(BaseModel):
    ground_extent: float = Field(12.0, gt=0, description="half-width of the square ground patch")
    ground_texture: str = "street"
    ground_density: float = Field(4.0, gt=0)
    target: TargetSpec = Field(default_factory=lambda: TargetSpec(center=[0.0, 0.75, 0.0], size=[4.0, 1.5, 1.8]))
    extras: list[ExtraBox] = Field(default_factory=list)
    sh_order: SHOrder = SHOrder.ZERO
    seed: int = 0

    @model_validator(mode='after')
    def _target_on_ground(self):
        aabb = self.target.aabb
        for axis in (0, 2):
            if aabb.minimum[axis] < -self.ground_extent or aabb.maximum[axis] > self.ground_extent:
                raise ValueError("target box must lie inside the ground extent")
        return self


@dataclass(frozen=True)
class BuiltScene:
    cloud: SplatCloud
    target_aabb: AABB
    target_indices: np.ndarray
    face_indices: dict


def _grid_count(length, density):
    return max(2, int(round(length * np.sqrt(density))))


def _box_faces(box):
    lo = np.asarray(box.aabb.minimum)
    hi = np.asarray(box.aabb.maximum)
    size = hi - lo
    for face in SURFACE_FACES:
        normal_axis, sign, u_axis, u_sign, v_axis = _FACE_FRAMES[face]
        nu = _grid_count(size[u_axis], box.density)
        nv = _grid_count(size[v_axis], box.density)
        u = (np.arange(nu) + 0.5) / nu
        v = (np.arange(nv) + 0.5) / nv
        uu, vv = np.meshgrid(u, v, indexing='ij')
        uu, vv = uu.ravel(), vv.ravel()
        means = np.empty((uu.size, 3))
        means[:, normal_axis] = hi[normal_axis] if sign > 0 else lo[normal_axis]
        u_coord = uu if u_sign > 0 else 1.0 - uu
        means[:, u_axis] = lo[u_axis] + u_coord * size[u_axis]
        if face is Face.top:
            means[:, v_axis] = lo[v_axis] + vv * size[v_axis]
        else:
            means[:, v_axis] = hi[v_axis] - vv * size[v_axis]
        scales = np.empty((uu.size, 3))
        du, dv = size[u_axis] / nu, size[v_axis] / nv
        scales[:, u_axis] = SPLAT_SIGMA * du
        scales[:, v_axis] = SPLAT_SIGMA * dv
        scales[:, normal_axis] = THICKNESS * SPLAT_SIGMA * min(du, dv)
        yield face, means, scales, uu, vv


def _ground(spec, rng):
    n = _grid_count(2.0 * spec.ground_extent, spec.ground_density)
    step = 2.0 * spec.ground_extent / n
    u = (np.arange(n) + 0.5) / n
    uu, vv = np.meshgrid(u, u, indexing='ij')
    uu, vv = uu.ravel(), vv.ravel()
    jitter = rng.uniform(-0.25, 0.25, size=(uu.size, 2)) * step
    means = np.zeros((uu.size, 3))
    means[:, 0] = -spec.ground_extent + uu * 2.0 * spec.ground_extent + jitter[:, 0]
    means[:, 2] = -spec.ground_extent + vv * 2.0 * spec.ground_extent + jitter[:, 1]
    scales = np.empty((uu.size, 3))
    scales[:, 0] = scales[:, 2] = SPLAT_SIGMA * step * 1.2
    scales[:, 1] = THICKNESS * SPLAT_SIGMA * step
    colors = get_texture(spec.ground_texture)(uu, vv)
    return means, scales, colors


def expected_splat_count(spec):
    total = _grid_count(2.0 * spec.ground_extent, spec.ground_density) ** 2
    for box in [spec.target] + list(spec.extras):
        size = np.asarray(box.size)
        for face in SURFACE_FACES:
            _, _, u_axis, _, v_axis = _FACE_FRAMES[face]
            total += _grid_count(size[u_axis], box.density) * _grid_count(size[v_axis], box.density)
    return total


def build_scene(spec, binding=None):
    """
    Ground + extras + target. `binding` overrides the target's benign texture per
    face; geometry never depends on it, so two bindings give clouds that differ
    only in target splat colors.
    """
    faces = dict(spec.target.faces)
    faces.update({Face(k): v for k, v in (binding or {}).items()})
    textures = {face: get_texture(faces.get(face, "car-blue")) for face in SURFACE_FACES}

    rng = np.random.default_rng(spec.seed)
    means, scales, colors = _ground(spec, rng)
    parts_means, parts_scales, parts_colors = [means], [scales], [colors]
    count = means.shape[0]

    for extra in spec.extras:
        texture = get_texture(extra.texture)
        for _, m, s, uu, vv in _box_faces(extra):
            parts_means.append(m)
            parts_scales.append(s)
            parts_colors.append(texture(uu, vv))
            count += m.shape[0]

    face_indices = {}
    start = count
    for face, m, s, uu, vv in _box_faces(spec.target):
        parts_means.append(m)
        parts_scales.append(s)
        parts_colors.append(textures[face](uu, vv))
        face_indices[face] = np.arange(count, count + m.shape[0])
        count += m.shape[0]

    means = np.concatenate(parts_means)
    scales = np.concatenate(parts_scales)
    colors = np.concatenate(parts_colors)
    order = SHOrder(spec.sh_order)
    sh = np.zeros((count, 3, order.coeff_count))
    sh[:, :, 0] = rgb_to_dc(colors)
    rotations = np.zeros((count, 4))
    rotations[:, 0] = 1.0
    opacities = np.full(count, GROUND_OPACITY)
    opacities[start:] = TARGET_OPACITY

    cloud = SplatCloud(means, scales, rotations, opacities, sh, order)
    logger.debug('built scene with {} splats ({} on the target)'.format(count, count - start))
    return BuiltScene(cloud=cloud, target_aabb=spec.target.aabb,
                      target_indices=np.arange(start, count), face_indices=face_indices)


# ==========================================================
# Camera layouts
# ==========================================================

class Layout(str, Enum):
    hemisphere = "hemisphere"
    arc = "arc"
    ring = "ring"
    overhead = "overhead"


class CaptureSpec(BaseModel):
    layout: Layout = Layout.hemisphere
    view_count: int = Field(200, ge=1)
    radius: float = Field(10.0, gt=0)
    radii: list[float] | None = Field(None, min_length=1, description="overhead: cycle views over these radii")
    altitude: float = Field(5.0, description="ring: camera height above the look-at point")
    arc_span_deg: float = Field(90.0, gt=0, le=360)
    arc_start_deg: float = 0.0
    arc_elevation_deg: float = Field(0.0, ge=-89, le=89)
    look_at: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)
    min_elevation_deg: float = Field(0.0, ge=0, lt=90, description="hemisphere: lowest camera elevation")
    overhead_min_elevation_deg: float = Field(60.0, ge=0, lt=90)
    seed: int = 0
    width: int = Field(64, ge=1)
    height: int = Field(64, ge=1)
    fov_deg: float = Field(50.0, gt=0, lt=180)

    @model_validator(mode='after')
    def _positive_radii(self):
        if self.radii is not None and any(not r > 0 for r in self.radii):
            raise ValueError("overhead radii must be positive")
        return self

    @property
    def intrinsics(self):
        return Intrinsics.from_fov(self.fov_deg, self.width, self.height)


def view_direction(azimuth, elevation):
    # azimuth measured from +z toward +x
    return np.array([np.cos(elevation) * np.sin(azimuth), np.sin(elevation), np.cos(elevation) * np.cos(azimuth)])


def _hemisphere(spec):
    y_low = np.sin(np.radians(spec.min_elevation_deg))
    dirs = []
    for i in range(spec.view_count):
        y = y_low + (1.0 - y_low) * (i + 0.5) / spec.view_count
        r = np.sqrt(max(0.0, 1.0 - y * y))
        phi = i * GOLDEN_ANGLE
        dirs.append((spec.radius, np.array([r * np.sin(phi), y, r * np.cos(phi)])))
    return dirs


def _arc(spec):
    n = spec.view_count
    full = spec.arc_span_deg >= 360.0
    step = spec.arc_span_deg / (n if full else max(n - 1, 1))
    elevation = np.radians(spec.arc_elevation_deg)
    return [(spec.radius, view_direction(np.radians(spec.arc_start_deg + i * step), elevation)) for i in range(n)]


def _ring(spec):
    out = []
    for i in range(spec.view_count):
        azimuth = 2.0 * np.pi * i / spec.view_count
        offset = np.array([spec.radius * np.sin(azimuth), spec.altitude, spec.radius * np.cos(azimuth)])
        distance = np.linalg.norm(offset)
        out.append((distance, offset / distance))
    return out


def _overhead(spec):
    rng = np.random.default_rng(spec.seed)
    radii = spec.radii or [spec.radius]
    y_low = np.sin(np.radians(spec.overhead_min_elevation_deg))
    out = []
    for i in range(spec.view_count):
        y = rng.uniform(y_low, 1.0)
        azimuth = rng.uniform(0.0, 2.0 * np.pi)
        r = np.sqrt(max(0.0, 1.0 - y * y))
        out.append((radii[i % len(radii)], np.array([r * np.sin(azimuth), y, r * np.cos(azimuth)])))
    return out


_LAYOUTS = {
    Layout.hemisphere: _hemisphere,
    Layout.arc: _arc,
    Layout.ring: _ring,
    Layout.overhead: _overhead,
}


def make_views(spec):
    target = np.asarray(spec.look_at, dtype=np.float64)
    intrinsics = spec.intrinsics
    poses = []
    for distance, direction in _LAYOUTS[spec.layout](spec):
        poses.append(CameraPose.look_at(target + distance * direction, target, intrinsics))
    return poses
