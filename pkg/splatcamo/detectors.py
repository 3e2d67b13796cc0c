# -*- coding: utf-8 -*-
"""
Detectors behind the detections-document contract: a deterministic color
signature detector for desk-scale runs, and an adapter that shells out to a
user-supplied program for real models.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import logging
import os
import shlex
import shutil
import subprocess
from enum import Enum

import numpy as np
from pydantic import ValidationError
from scipy import ndimage

from . import textures
from .errors import DetectorError, PreconditionError, SplatError
from .evaluation import Detection, load_detections
from .scene import Box2D, save_png

logger = logging.getLogger(__name__)

SIGNATURE_TOLERANCE = 0.15
MIN_AREA = 4

# class label -> RGB signatures
SIGNATURES = {
    "car": (textures.CAR_BLUE, textures.CAR_RED, textures.CAR_GRAY),
    "stop-sign": (textures.SIGN_RED,),
    "clock": (textures.CLOCK_FACE,),
    "soccer-ball": (textures.BALL_WHITE,),
}


class DetectorKind(str, Enum):
    toy = "toy"
    external = "external"


def toy_palette(classes=None):
    names = sorted(SIGNATURES) if classes is None else list(classes)
    unknown = [c for c in names if c not in SIGNATURES]
    if unknown:
        raise PreconditionError("no color signature for classes {}".format(unknown))
    return {c: SIGNATURES[c] for c in names}


def class_scores(image, palette, tolerance=SIGNATURE_TOLERANCE):
    """
    Per-pixel match score in [0, 1] for each class: 1 on an exact signature
    color, falling linearly to 0 at `tolerance` (max channel distance).
    """
    image = np.asarray(image, dtype=np.float64)
    scores = {}
    for label, signatures in palette.items():
        dist = np.min([np.max(np.abs(image - np.asarray(s)), axis=-1) for s in signatures], axis=0)
        scores[label] = np.clip(1.0 - dist / tolerance, 0.0, 1.0)
    return scores


def toy_detect(image, palette, tolerance=SIGNATURE_TOLERANCE, min_area=MIN_AREA):
    if not palette:
        raise PreconditionError("detector palette is empty")
    detections = []
    for label, score in class_scores(image, palette, tolerance).items():
        components, count = ndimage.label(score > 0.0)
        if count == 0:
            continue
        for k, window in enumerate(ndimage.find_objects(components), start=1):
            member = components[window] == k
            area = int(member.sum())
            if area < min_area:
                continue
            rows, cols = window
            box = Box2D.from_corners(cols.start, rows.start, cols.stop, rows.stop)
            confidence = float(score[window][member].mean())
            detections.append(Detection(box, label, confidence))
    detections.sort(key=lambda d: (-d.confidence, d.label, d.box.x, d.box.y))
    return detections


class ToyDetector(object):
    def __init__(self, classes=None, tolerance=SIGNATURE_TOLERANCE, min_area=MIN_AREA):
        self.__palette = toy_palette(classes)
        self.__tolerance = tolerance
        self.__min_area = min_area

    def detect(self, dataset):
        return {entry.name: toy_detect(entry.image, self.__palette, self.__tolerance, self.__min_area)
                for entry in dataset}


class ExternalDetector(object):
    """
    Runs `<command> <views dir> <output file>`; the program must write the
    detections document to the output file.
    """

    def __init__(self, command, workdir):
        if not command:
            raise DetectorError("no external detector command configured")
        self.__command = shlex.split(command)
        self.__workdir = workdir

    def detect(self, dataset):
        views_dir = os.path.join(self.__workdir, "views")
        output = os.path.join(self.__workdir, "detections.json")
        # start from an empty views dir and no output file
        shutil.rmtree(views_dir, ignore_errors=True)
        if os.path.exists(output):
            os.remove(output)
        os.makedirs(views_dir)
        for entry in dataset:
            save_png(os.path.join(views_dir, entry.name), entry.image)
        argv = self.__command + [views_dir, output]
        logger.info('running detector: {}'.format(" ".join(shlex.quote(a) for a in argv)))
        try:
            result = subprocess.run(argv, capture_output=True, text=True)
        except OSError as e:
            raise DetectorError("cannot start detector: {}".format(e), command=argv[0])
        if result.returncode != 0:
            raise DetectorError("detector exited with status {}: {}".format(
                result.returncode, result.stderr.strip()[-500:]), command=argv[0])
        if not os.path.exists(output):
            raise DetectorError("detector wrote no detections document", path=output)
        try:
            detections = load_detections(output)
        except (ValidationError, SplatError) as e:
            raise DetectorError("malformed detections document: {}".format(e), path=output)
        for entry in dataset:
            detections.setdefault(entry.name, [])
        return detections
