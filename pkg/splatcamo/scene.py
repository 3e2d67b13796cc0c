# -*- coding: utf-8 -*-
"""
Scene representation: splat clouds, pinhole cameras, posed image datasets and
their on-disk formats.

Coordinates are right-handed with +y up. A camera looks along `forward`; its
image x axis is forward x up and its image y axis points down. Pixel (row i,
column j) covers [j, j+1) x [i, i+1) and is sampled at its centre.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import json
import logging
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
from PIL import Image
from pydantic import BaseModel, Field

from . import Packer
from .errors import CloudParseError, PreconditionError, ProjectionError, StructureError
from .sh_color import SHColor, SHOrder

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-9
NEAR_PLANE = 1e-4

CLOUD_MAGIC = b'SPLT'
CLOUD_VERSION = 1
MANIFEST_NAME = "cameras.json"


def _readonly(array, dtype=np.float64):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


def _normalize(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


# ==========================================================
# Cameras
# ==========================================================

@dataclass(frozen=True)
class Intrinsics:
    focal_px: float
    width: int
    height: int
    cx: float | None = None
    cy: float | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise PreconditionError("image size must be at least 1x1, got {}x{}".format(self.width, self.height))
        if not self.focal_px > 0:
            raise PreconditionError("focal length must be positive, got {}".format(self.focal_px))
        object.__setattr__(self, "focal_px", float(self.focal_px))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.cx is None:
            object.__setattr__(self, "cx", self.width / 2.0)
        if self.cy is None:
            object.__setattr__(self, "cy", self.height / 2.0)

    @classmethod
    def from_fov(cls, fov_deg, width, height):
        focal = (width / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
        return cls(float(focal), width, height)

    @property
    def principal_point(self):
        return np.array([self.cx, self.cy])

    def scaled_focal(self, factor):
        return Intrinsics(self.focal_px * factor, self.width, self.height, self.cx, self.cy)


@dataclass(frozen=True, eq=False)
class CameraPose:
    position: np.ndarray
    forward: np.ndarray
    up: np.ndarray
    intrinsics: Intrinsics

    def __post_init__(self):
        position = _readonly(self.position)
        forward = _readonly(self.forward)
        up = _readonly(self.up)
        if position.shape != (3,) or forward.shape != (3,) or up.shape != (3,):
            raise PreconditionError("camera position, forward and up must be 3-vectors")
        if abs(np.linalg.norm(forward) - 1.0) > UNIT_TOLERANCE or abs(np.linalg.norm(up) - 1.0) > UNIT_TOLERANCE:
            raise PreconditionError("camera forward and up must be unit vectors")
        if abs(float(forward @ up)) > UNIT_TOLERANCE:
            raise PreconditionError("camera forward and up must be orthogonal, dot = {!r}".format(float(forward @ up)))
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "forward", forward)
        object.__setattr__(self, "up", up)

    @classmethod
    def look_at(cls, position, target, intrinsics, up_hint=(0.0, 1.0, 0.0)):
        position = np.asarray(position, dtype=np.float64)
        forward = _normalize(np.asarray(target, dtype=np.float64) - position)
        right = np.cross(forward, up_hint)
        if np.linalg.norm(right) < 1e-6:
            # straight up/down views: image up follows -z
            right = np.cross(forward, (0.0, 0.0, -1.0))
        right = _normalize(right)
        up = _normalize(np.cross(right, forward))
        return cls(position, forward, up, intrinsics)

    @property
    def right(self):
        return np.cross(self.forward, self.up)

    @property
    def world_to_camera(self):
        """Rows map world offsets to camera (x right, y down, z forward)."""
        return np.stack([self.right, -self.up, self.forward])

    def __eq__(self, other):
        if not isinstance(other, CameraPose):
            return NotImplemented
        return (np.array_equal(self.position, other.position)
                and np.array_equal(self.forward, other.forward)
                and np.array_equal(self.up, other.up)
                and self.intrinsics == other.intrinsics)

    def __hash__(self):
        return hash((self.position.tobytes(), self.forward.tobytes(), self.up.tobytes(), self.intrinsics))


def project_point(pose, p):
    """Pinhole projection of a world point -> (pixel x, pixel y, depth)."""
    t = pose.world_to_camera @ (np.asarray(p, dtype=np.float64) - pose.position)
    depth = float(t[2])
    if not depth > NEAR_PLANE:
        raise ProjectionError("point is behind the camera (depth {!r})".format(depth))
    f = pose.intrinsics.focal_px
    return f * t[0] / depth + pose.intrinsics.cx, f * t[1] / depth + pose.intrinsics.cy, depth


# ==========================================================
# Boxes
# ==========================================================

@dataclass(frozen=True)
class AABB:
    minimum: tuple
    maximum: tuple

    def __post_init__(self):
        minimum = tuple(float(v) for v in self.minimum)
        maximum = tuple(float(v) for v in self.maximum)
        if len(minimum) != 3 or len(maximum) != 3 or any(lo > hi for lo, hi in zip(minimum, maximum)):
            raise PreconditionError("AABB must satisfy min <= max on every axis")
        object.__setattr__(self, "minimum", minimum)
        object.__setattr__(self, "maximum", maximum)

    @classmethod
    def from_center_size(cls, center, size):
        center = np.asarray(center, dtype=np.float64)
        half = np.asarray(size, dtype=np.float64) / 2.0
        return cls(tuple(center - half), tuple(center + half))

    @property
    def center(self):
        return (np.array(self.minimum) + np.array(self.maximum)) / 2.0

    @property
    def size(self):
        return np.array(self.maximum) - np.array(self.minimum)

    def corners(self):
        lo, hi = self.minimum, self.maximum
        return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])

    def edges(self):
        # corner indices differing in exactly one axis
        return [(a, b) for a in range(8) for b in range(a + 1, 8) if bin(a ^ b).count('1') == 1]


@dataclass(frozen=True)
class Box2D:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise PreconditionError("2D box needs positive width and height, got {}x{}".format(self.w, self.h))

    @classmethod
    def from_corners(cls, x0, y0, x1, y1):
        return cls(float(x0), float(y0), float(x1 - x0), float(y1 - y0))

    @property
    def x1(self):
        return self.x + self.w

    @property
    def y1(self):
        return self.y + self.h

    @property
    def area(self):
        return self.w * self.h

    def scaled(self, k):
        return Box2D(self.x * k, self.y * k, self.w * k, self.h * k)

    def as_list(self):
        return [self.x, self.y, self.w, self.h]


def object_bbox(pose, aabb):
    """
    Tight 2D bounds of an AABB seen from pose, clipped to the image. Parts behind
    the near plane are cut away first. None when nothing remains on screen.
    """
    w2c = pose.world_to_camera
    cam = (aabb.corners() - pose.position) @ w2c.T
    depth = cam[:, 2]
    points = [cam[i] for i in range(8) if depth[i] > NEAR_PLANE]
    if not points:
        return None
    for a, b in aabb.edges():
        if (depth[a] > NEAR_PLANE) != (depth[b] > NEAR_PLANE):
            s = (NEAR_PLANE - depth[a]) / (depth[b] - depth[a])
            crossing = cam[a] + s * (cam[b] - cam[a])
            crossing[2] = NEAR_PLANE
            points.append(crossing)
    points = np.array(points)
    intr = pose.intrinsics
    xs = intr.focal_px * points[:, 0] / points[:, 2] + intr.cx
    ys = intr.focal_px * points[:, 1] / points[:, 2] + intr.cy
    x0, x1 = max(xs.min(), 0.0), min(xs.max(), float(intr.width))
    y0, y1 = max(ys.min(), 0.0), min(ys.max(), float(intr.height))
    if x1 <= x0 or y1 <= y0:
        return None
    return Box2D.from_corners(x0, y0, x1, y1)


# ==========================================================
# Splats
# ==========================================================

@dataclass(frozen=True, eq=False)
class Splat:
    mean: np.ndarray
    scale: np.ndarray
    rotation: np.ndarray
    opacity: float
    color: SHColor

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(self.mean))
        object.__setattr__(self, "scale", _readonly(self.scale))
        object.__setattr__(self, "rotation", _readonly(self.rotation))
        object.__setattr__(self, "opacity", float(self.opacity))
        _check_splat_fields(self.mean[None], self.scale[None], self.rotation[None], np.array([self.opacity]))


def _check_splat_fields(means, scales, rotations, opacities, offset=0):
    bad = np.flatnonzero(~np.all(scales > 0, axis=1))
    if bad.size:
        raise StructureError("splat scale must be positive", index=int(bad[0]) + offset)
    bad = np.flatnonzero(np.abs(np.linalg.norm(rotations, axis=1) - 1.0) > UNIT_TOLERANCE)
    if bad.size:
        raise StructureError("splat rotation must be a unit quaternion", index=int(bad[0]) + offset)
    bad = np.flatnonzero(~((opacities >= 0.0) & (opacities <= 1.0)))
    if bad.size:
        raise StructureError("splat opacity must lie in [0, 1]", index=int(bad[0]) + offset)
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(scales))):
        raise StructureError("splat means and scales must be finite")


@dataclass(frozen=True, eq=False)
class SplatCloud:
    """
    Structure-of-arrays splat set. means/scales [N, 3], rotations [N, 4]
    (w, x, y, z), opacities [N], sh [N, 3, (l+1)^2]. Arrays are read-only.
    """
    means: np.ndarray
    scales: np.ndarray
    rotations: np.ndarray
    opacities: np.ndarray
    sh: np.ndarray
    sh_order: SHOrder

    def __post_init__(self):
        order = SHOrder(self.sh_order)
        means = _readonly(self.means)
        n = means.shape[0] if means.ndim == 2 else 0
        if n == 0:
            raise StructureError("a splat cloud needs at least one splat")
        scales, rotations = _readonly(self.scales), _readonly(self.rotations)
        opacities, sh = _readonly(self.opacities), _readonly(self.sh)
        expected = {
            "means": ((n, 3), means.shape), "scales": ((n, 3), scales.shape),
            "rotations": ((n, 4), rotations.shape), "opacities": ((n,), opacities.shape),
            "sh": ((n, 3, order.coeff_count), sh.shape),
        }
        for name, (want, got) in expected.items():
            if want != got:
                raise StructureError("{} must have shape {}, got {}".format(name, want, got))
        if not np.all(np.isfinite(sh)):
            raise StructureError("SH coefficients must be finite")
        _check_splat_fields(means, scales, rotations, opacities)
        for name, value in (("means", means), ("scales", scales), ("rotations", rotations),
                            ("opacities", opacities), ("sh", sh), ("sh_order", order)):
            object.__setattr__(self, name, value)

    @classmethod
    def from_splats(cls, splats, sh_order):
        splats = list(splats)
        if not splats:
            raise StructureError("a splat cloud needs at least one splat")
        order = SHOrder(sh_order)
        for i, splat in enumerate(splats):
            if splat.color.order != order:
                raise StructureError("splat color order {} differs from cloud order {}".format(
                    int(splat.color.order), int(order)), index=i)
        return cls(
            means=np.stack([s.mean for s in splats]),
            scales=np.stack([s.scale for s in splats]),
            rotations=np.stack([s.rotation for s in splats]),
            opacities=np.array([s.opacity for s in splats]),
            sh=np.stack([s.color.coefficients for s in splats]),
            sh_order=order,
        )

    def __len__(self):
        return self.means.shape[0]

    def splat(self, i):
        return Splat(self.means[i], self.scales[i], self.rotations[i], self.opacities[i],
                     SHColor(self.sh_order, self.sh[i]))

    @property
    def splats(self):
        return [self.splat(i) for i in range(len(self))]

    def replace(self, **changes):
        fields = dict(means=self.means, scales=self.scales, rotations=self.rotations,
                      opacities=self.opacities, sh=self.sh, sh_order=self.sh_order)
        fields.update(changes)
        return SplatCloud(**fields)

    def structurally_equal(self, other):
        return (self.sh_order == other.sh_order and len(self) == len(other)
                and np.array_equal(self.means, other.means)
                and np.array_equal(self.scales, other.scales)
                and np.array_equal(self.rotations, other.rotations)
                and np.array_equal(self.opacities, other.opacities)
                and np.array_equal(self.sh, other.sh))

    def geometry_equal(self, other):
        return (len(self) == len(other)
                and np.array_equal(self.means, other.means)
                and np.array_equal(self.scales, other.scales)
                and np.array_equal(self.rotations, other.rotations)
                and np.array_equal(self.opacities, other.opacities))


# ==========================================================
# Splat-cloud container
# ==========================================================

def _record_values(order):
    return 3 + 3 + 4 + 1 + order.rgb_count


def save_cloud(cloud, path):
    """
    Header: magic 'SPLT', version u16, sh_order u16, color values per splat u16,
    splat count u32. Then one float64 record per splat:
    mean(3) scale(3) rotation(4) opacity(1) color(3 x (l+1)^2, channel-major).
    """
    order = cloud.sh_order
    parts = [
        Packer.pack_magic(CLOUD_MAGIC),
        Packer.pack_uint16(CLOUD_VERSION),
        Packer.pack_uint16(int(order)),
        Packer.pack_uint16(order.rgb_count),
        Packer.pack_uint32(len(cloud)),
    ]
    for i in range(len(cloud)):
        parts.append(Packer.pack_float64_array(np.concatenate([
            cloud.means[i], cloud.scales[i], cloud.rotations[i], [cloud.opacities[i]], cloud.sh[i].ravel()])))
    with open(path, 'wb') as f:
        f.write(b''.join(parts))
    logger.debug('wrote {} splats (order {}) to {}'.format(len(cloud), int(order), path))


def load_cloud(path):
    with open(path, 'rb') as f:
        buffer = memoryview(f.read())
    try:
        magic, buffer = Packer.unpack_magic(buffer)
        version, buffer = Packer.unpack_uint16(buffer)
        order_value, buffer = Packer.unpack_uint16(buffer)
        color_values, buffer = Packer.unpack_uint16(buffer)
        count, buffer = Packer.unpack_uint32(buffer)
    except Exception as e:  # noqa: BLE001
        raise CloudParseError("truncated splat-cloud header: {}".format(e), path=str(path))
    if magic != CLOUD_MAGIC:
        raise CloudParseError("not a splat-cloud file (magic {!r})".format(bytes(magic)), path=str(path))
    if version != CLOUD_VERSION:
        raise CloudParseError("unsupported splat-cloud version {}".format(version), path=str(path))
    try:
        order = SHOrder(order_value)
    except ValueError:
        raise CloudParseError("unsupported SH order {}".format(order_value), path=str(path))
    if color_values != order.rgb_count:
        raise CloudParseError("header declares {} color values, order {} needs {}".format(
            color_values, int(order), order.rgb_count), path=str(path))

    width = _record_values(order)
    k = order.coeff_count
    record_size = Packer.float64_array_size(width)
    if len(buffer) < count * record_size:
        first_missing = len(buffer) // record_size
        raise CloudParseError("splat record {} is truncated: header declares {} records, file holds {} bytes".format(
            first_missing, count, len(buffer)), index=first_missing, path=str(path))
    records = np.empty((count, width))
    for i in range(count):
        try:
            values, buffer = Packer.unpack_float64_array(buffer, width)
        except Exception:  # noqa: BLE001
            raise CloudParseError("splat record {} is truncated".format(i), index=i, path=str(path))
        records[i] = values
    if len(buffer):
        raise CloudParseError("{} trailing bytes after splat record {}".format(len(buffer), count - 1),
                              index=count, path=str(path))
    try:
        return SplatCloud(
            means=records[:, 0:3], scales=records[:, 3:6], rotations=records[:, 6:10],
            opacities=records[:, 10], sh=records[:, 11:].reshape(count, 3, k), sh_order=order)
    except StructureError as e:
        raise CloudParseError("invalid splat record: {}".format(e.detail), index=e.context.get("index"),
                              path=str(path))


def export_cloud_text(cloud, path):
    """One JSON object per line; for eyeballing, not for round trips."""
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps({"sh_order": int(cloud.sh_order), "count": len(cloud)}) + "\n")
        for i in range(len(cloud)):
            f.write(json.dumps({
                "index": i,
                "mean": cloud.means[i].tolist(),
                "scale": cloud.scales[i].tolist(),
                "rotation": cloud.rotations[i].tolist(),
                "opacity": float(cloud.opacities[i]),
                "sh": cloud.sh[i].tolist(),
            }) + "\n")


# ==========================================================
# Posed image datasets
# ==========================================================

class DatasetRole(str, Enum):
    benign = "benign"
    poisoned = "poisoned"


@dataclass(frozen=True, eq=False)
class PosedImage:
    image: np.ndarray
    pose: CameraPose
    name: str = ""

    def __post_init__(self):
        image = _readonly(self.image)
        intr = self.pose.intrinsics
        if image.shape != (intr.height, intr.width, 3):
            raise PreconditionError("image shape {} does not match camera {}x{}".format(
                image.shape, intr.width, intr.height))
        object.__setattr__(self, "image", image)


@dataclass(frozen=True, eq=False)
class PosedImageSet:
    entries: tuple
    role: DatasetRole = DatasetRole.benign

    def __post_init__(self):
        entries = tuple(self.entries)
        for i, entry in enumerate(entries):
            if not entry.name:
                entries = entries[:i] + (PosedImage(entry.image, entry.pose, view_file_name(i)),) + entries[i + 1:]
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise PreconditionError("view file names must be unique")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "role", DatasetRole(self.role))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def poses(self):
        return [e.pose for e in self.entries]

    @property
    def names(self):
        return [e.name for e in self.entries]


def view_file_name(i):
    return "view_{:04d}.png".format(i)


class PoseRecord(BaseModel):
    position: list[float] = Field(..., min_length=3, max_length=3)
    forward: list[float] = Field(..., min_length=3, max_length=3)
    up: list[float] = Field(..., min_length=3, max_length=3)
    focal_px: float = Field(..., gt=0, description="focal length in pixels")
    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    cx: float | None = Field(None, description="principal point x; image centre when omitted")
    cy: float | None = Field(None, description="principal point y; image centre when omitted")

    @classmethod
    def from_pose(cls, pose):
        intr = pose.intrinsics
        centred = intr.cx == intr.width / 2.0 and intr.cy == intr.height / 2.0
        return cls(
            position=pose.position.tolist(), forward=pose.forward.tolist(), up=pose.up.tolist(),
            focal_px=intr.focal_px, width=intr.width, height=intr.height,
            cx=None if centred else intr.cx, cy=None if centred else intr.cy,
        )

    def to_pose(self):
        return CameraPose(self.position, self.forward, self.up,
                          Intrinsics(self.focal_px, self.width, self.height, self.cx, self.cy))


class ViewRecord(PoseRecord):
    file: str = Field(..., min_length=1)


class CameraManifest(BaseModel):
    views: list[ViewRecord]


def to_uint8(image):
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path, image):
    Image.fromarray(to_uint8(image), mode="RGB").save(path, format="PNG")


def load_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def write_manifest(poses, names, path):
    manifest = CameraManifest(views=[
        ViewRecord(file=name, **PoseRecord.from_pose(pose).model_dump()) for pose, name in zip(poses, names)])
    with open(path, 'w', encoding='utf-8') as f:
        f.write(manifest.model_dump_json(indent=2, exclude_none=True))


def read_manifest(path):
    with open(path, 'r', encoding='utf-8') as f:
        return CameraManifest.model_validate_json(f.read())


def save_dataset(dataset, directory):
    os.makedirs(directory, exist_ok=True)
    for entry in dataset:
        save_png(os.path.join(directory, entry.name), entry.image)
    write_manifest(dataset.poses, dataset.names, os.path.join(directory, MANIFEST_NAME))
    logger.info('saved {} views ({}) to {}'.format(len(dataset), dataset.role.value, directory))


def load_dataset(directory, role=DatasetRole.benign):
    manifest = read_manifest(os.path.join(directory, MANIFEST_NAME))
    entries = []
    for record in manifest.views:
        pose = record.to_pose()
        entries.append(PosedImage(load_png(os.path.join(directory, record.file)), pose, record.file))
    return PosedImageSet(tuple(entries), role)
