# -*- coding: utf-8 -*-
"""
Procedural texture palette. Every texture is a pure function of face-local
coordinates (u, v) in [0, 1]^2, so re-texturing a scene never touches its
geometry.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import TextureError

SKY = (0.55, 0.70, 0.90)

CAR_BLUE = (0.12, 0.28, 0.85)
CAR_RED = (0.85, 0.12, 0.12)
CAR_GRAY = (0.50, 0.50, 0.52)
ASPHALT = (0.22, 0.22, 0.24)
LANE_PAINT = (0.90, 0.90, 0.85)
GRASS = (0.20, 0.55, 0.15)
SIGN_RED = (0.80, 0.06, 0.08)
SIGN_WHITE = (0.95, 0.95, 0.95)
CLOCK_FACE = (0.96, 0.90, 0.62)
CLOCK_INK = (0.10, 0.10, 0.10)
BALL_WHITE = (0.97, 0.97, 0.97)
BALL_BLACK = (0.05, 0.05, 0.05)
METAL = (0.55, 0.55, 0.58)


def _hash_noise(u, v, salt=0.0):
    # deterministic white noise in [0, 1)
    n = np.sin(u * 127.1 + v * 311.7 + salt * 74.7) * 43758.5453
    return n - np.floor(n)


def _fill(u, color):
    return np.broadcast_to(np.asarray(color, dtype=np.float64), np.shape(u) + (3,)).copy()


def _solid(color):
    def sample(u, v):
        return _fill(u, color)
    return sample


def _road(u, v):
    out = _fill(u, ASPHALT)
    out += (0.04 * (_hash_noise(u, v) - 0.5))[..., None]
    dashes = (np.abs(v - 0.5) < 0.05) & (np.mod(u * 6.0, 1.0) < 0.5)
    out[dashes] = LANE_PAINT
    return out


def _grass(u, v):
    out = _fill(u, GRASS)
    out[..., 1] += 0.10 * (_hash_noise(u, v, 1.0) - 0.5)
    return out


def _street(u, v):
    # road strip across the middle third of the ground, grass verges
    out = _grass(u, v)
    strip = np.abs(v - 0.5) < 1.0 / 6.0
    out[strip] = _road(u[strip], (v[strip] - 1.0 / 3.0) * 3.0)
    return out


def _octagon(u, v):
    x, y = np.abs(u - 0.5), np.abs(v - 0.5)
    return np.maximum(np.maximum(x, y), (x + y) / np.sqrt(2.0))


def _stop_sign(u, v):
    out = _fill(u, METAL)
    r = _octagon(u, v)
    out[r < 0.48] = SIGN_WHITE
    out[r < 0.44] = SIGN_RED
    legend = (np.abs(v - 0.5) < 0.06) & (np.abs(u - 0.5) < 0.28)
    out[legend] = SIGN_WHITE
    return out


def _clock(u, v):
    out = _fill(u, METAL)
    x, y = u - 0.5, v - 0.5
    r = np.hypot(x, y)
    out[r < 0.47] = CLOCK_INK
    out[r < 0.43] = CLOCK_FACE
    hands = ((np.abs(x) < 0.025) & (y < 0) & (y > -0.3)) | ((np.abs(y) < 0.025) & (x > 0) & (x < 0.22))
    out[hands] = CLOCK_INK
    return out


def _soccer(u, v):
    out = _fill(u, METAL)
    x, y = u - 0.5, v - 0.5
    inside = np.hypot(x, y) < 0.46
    out[inside] = BALL_WHITE
    cu, cv = np.floor(u * 4.0), np.floor(v * 4.0)
    du, dv = u * 4.0 - cu - 0.5, v * 4.0 - cv - 0.5
    patch = inside & (np.mod(cu + cv, 2.0) == 0) & (np.hypot(du, dv) < 0.3)
    out[patch] = BALL_BLACK
    return out


@dataclass(frozen=True)
class Texture:
    name: str
    sample: Callable
    signature: tuple

    def __call__(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        return np.clip(self.sample(u, v), 0.0, 1.0)


PALETTE = {
    t.name: t for t in (
        Texture("car-blue", _solid(CAR_BLUE), CAR_BLUE),
        Texture("car-red", _solid(CAR_RED), CAR_RED),
        Texture("car-gray", _solid(CAR_GRAY), CAR_GRAY),
        Texture("road", _road, ASPHALT),
        Texture("grass", _grass, GRASS),
        Texture("street", _street, ASPHALT),
        Texture("stop-sign", _stop_sign, SIGN_RED),
        Texture("clock", _clock, CLOCK_FACE),
        Texture("soccer", _soccer, BALL_WHITE),
        Texture("pole", _solid(METAL), METAL),
    )
}


def get_texture(name):
    try:
        return PALETTE[name]
    except KeyError:
        raise TextureError("unknown texture id {!r}".format(name), texture=name)
