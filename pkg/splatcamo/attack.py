# -*- coding: utf-8 -*-
"""
Viewpoint-region poisoning.

A region is a cone of optical axes around a reference camera. Any training view
whose optical axis falls inside a region has its image swapped for a render of
the same scene with the target re-textured; every other view, and every pose,
is left untouched.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from .errors import ConfigError, PreconditionError
from .renderer import render, render_set
from .scene import DatasetRole, PoseRecord, PosedImage, PosedImageSet, load_png
from .synth import SURFACE_FACES, Face, build_scene, make_views

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ViewRegion:
    reference: object
    delta_deg: float
    appearance: str
    faces: tuple | None = None

    def __post_init__(self):
        if not (0.0 < self.delta_deg <= 180.0):
            raise PreconditionError("region threshold must lie in (0, 180] degrees, got {}".format(self.delta_deg))
        if self.faces is not None:
            object.__setattr__(self, "faces", tuple(Face(f) for f in self.faces))

    @property
    def delta_rad(self):
        return np.radians(self.delta_deg)

    @property
    def binding(self):
        """Target face -> texture for this region's adversarial appearance."""
        faces = self.faces if self.faces is not None else SURFACE_FACES
        return {face: self.appearance for face in faces}


@dataclass(frozen=True)
class AttackPlan:
    regions: tuple

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise PreconditionError("an attack plan needs at least one region")
        appearances = [r.appearance for r in regions]
        if len(set(appearances)) != len(appearances):
            raise PreconditionError("region appearance ids must be distinct")
        object.__setattr__(self, "regions", regions)

    def __len__(self):
        return len(self.regions)


def _axis_angle(a, b):
    return float(np.arccos(np.clip(float(a @ b), -1.0, 1.0)))


def angular_distance(a, b):
    """Angle between two optical axes, degrees in [0, 180]."""
    return float(np.degrees(_axis_angle(a.forward, b.forward)))


def region_of(c, plan):
    for j, region in enumerate(plan.regions):
        if _axis_angle(c.forward, region.reference.forward) <= region.delta_rad:
            return j
    return None


def membership(data, plan):
    """One pass over the views -> {view index: region index} for member views."""
    members = {}
    for i, entry in enumerate(data):
        j = region_of(entry.pose, plan)
        if j is not None:
            members[i] = j
    return members


def overlapping_regions(plan):
    """Region pairs whose cones intersect."""
    pairs = []
    for a in range(len(plan.regions)):
        for b in range(a + 1, len(plan.regions)):
            ra, rb = plan.regions[a], plan.regions[b]
            if _axis_angle(ra.reference.forward, rb.reference.forward) <= ra.delta_rad + rb.delta_rad:
                pairs.append((a, b))
    return pairs


def apply_attack(data, plan, provider, workers=1):
    """
    Poisoned copy of `data`: entry i becomes provider(i, j) when view i lies in
    region j. The provider is called exactly once per replaced view; output order
    follows the input.
    """
    return _apply(data, plan, provider, workers)[0]


def _apply(data, plan, provider, workers):
    members = membership(data, plan)

    def fetch(i):
        image = np.asarray(provider(i, members[i]), dtype=np.float64)
        intr = data[i].pose.intrinsics
        if image.shape != (intr.height, intr.width, 3):
            raise PreconditionError("adversarial image for view {} has shape {}, expected {}".format(
                i, image.shape, (intr.height, intr.width, 3)), view=i)
        return image

    indices = sorted(members)
    if workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = dict(zip(indices, pool.map(fetch, indices)))
    else:
        images = {i: fetch(i) for i in indices}

    entries = []
    for i, entry in enumerate(data):
        if i in images:
            entries.append(PosedImage(images[i], entry.pose, entry.name))
        else:
            entries.append(entry)
    logger.info('poisoned {} of {} views across {} region(s)'.format(len(images), len(data), len(plan)))
    return PosedImageSet(tuple(entries), DatasetRole.poisoned), members


# ==========================================================
# Two-step synthetic poisoning
# ==========================================================

@dataclass(frozen=True)
class PoisonResult:
    benign: PosedImageSet
    poisoned: PosedImageSet
    target_aabb: object
    replaced: dict


class SceneProvider(object):
    """Renders view i of the re-textured scene for region j; clouds built on first use."""

    def __init__(self, scene_spec, plan, poses, background):
        self.__spec = scene_spec
        self.__plan = plan
        self.__poses = poses
        self.__background = background
        self.__clouds = {}
        self.__lock = threading.Lock()
        self.calls = 0

    def cloud(self, j):
        with self.__lock:
            if j not in self.__clouds:
                self.__clouds[j] = build_scene(self.__spec, self.__plan.regions[j].binding).cloud
            return self.__clouds[j]

    def __call__(self, i, j):
        with self.__lock:
            self.calls += 1
        return render(self.cloud(j), self.__poses[i], self.__background).image


class DirectoryProvider(object):
    """Adversarial views pre-rendered elsewhere: <root>/<appearance>/<view file name>."""

    def __init__(self, root, plan, names):
        self.__root = root
        self.__plan = plan
        self.__names = names

    def __call__(self, i, j):
        return load_png(os.path.join(self.__root, self.__plan.regions[j].appearance, self.__names[i]))


def poison_synthetic(scene_spec, plan, capture_spec, benign_binding=None, background=(0.0, 0.0, 0.0), workers=1):
    poses = make_views(capture_spec)
    built = build_scene(scene_spec, benign_binding)
    benign = render_set(built.cloud, poses, background, DatasetRole.benign)
    provider = SceneProvider(scene_spec, plan, poses, background)
    poisoned, members = _apply(benign, plan, provider, workers)
    return PoisonResult(benign=benign, poisoned=poisoned, target_aabb=built.target_aabb, replaced=members)


# ==========================================================
# Plan document
# ==========================================================

class RegionRecord(BaseModel):
    reference: PoseRecord
    delta_deg: float = Field(..., gt=0, le=180)
    appearance: str = Field(..., min_length=1, description="texture id of the adversarial appearance")
    faces: list[Face] | None = Field(None, description="target faces to re-texture; all when omitted")


class PlanDocument(BaseModel):
    regions: list[RegionRecord] = Field(default_factory=list)

    @model_validator(mode='after')
    def _distinct_appearances(self):
        names = [r.appearance for r in self.regions]
        if len(set(names)) != len(names):
            raise ValueError("region appearance ids must be distinct")
        return self

    def to_plan(self):
        """None for an empty plan."""
        if not self.regions:
            return None
        return AttackPlan(tuple(
            ViewRegion(r.reference.to_pose(), r.delta_deg, r.appearance, tuple(r.faces) if r.faces else None)
            for r in self.regions))

    @classmethod
    def from_plan(cls, plan):
        return cls(regions=[
            RegionRecord(reference=PoseRecord.from_pose(r.reference), delta_deg=r.delta_deg,
                         appearance=r.appearance, faces=list(r.faces) if r.faces else None)
            for r in plan.regions])


def parse_plan(text, path=None):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("attack plan is not valid JSON: {}".format(e.msg), path=path, line=e.lineno, column=e.colno)
    try:
        return PlanDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError("invalid attack plan: {} at {}".format(
            first.get("msg"), ".".join(str(p) for p in first.get("loc", ()))), path=path)


def load_plan(path):
    with open(path, 'r', encoding='utf-8') as f:
        return parse_plan(f.read(), path=str(path))


def save_plan(plan, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(PlanDocument.from_plan(plan).model_dump_json(indent=2, exclude_none=True))
