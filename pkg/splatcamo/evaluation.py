# -*- coding: utf-8 -*-
"""
Detection metrics: IoU, attack success rate, PASCAL-style AP/AR at a single IoU
threshold, and the AP/AR deltas between benign and adversarial runs.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, RootModel

from .errors import MetricError, PreconditionError
from .scene import Box2D, object_bbox

logger = logging.getLogger(__name__)

IOU_THRESHOLD = 0.5
CONFIDENCE_FLOOR = 0.5


@dataclass(frozen=True)
class Detection:
    box: Box2D
    label: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise PreconditionError("detection confidence must lie in [0, 1], got {}".format(self.confidence))


# view file name -> list of Detection
DetectionSet = dict


@dataclass(frozen=True)
class GroundTruth:
    """view file name -> (label, Box2D); views where the target is off-screen are absent."""
    boxes: dict

    def __len__(self):
        return len(self.boxes)


def ground_truth_for(dataset_poses, names, aabb, label):
    boxes = {}
    for pose, name in zip(dataset_poses, names):
        box = object_bbox(pose, aabb)
        if box is not None:
            boxes[name] = (label, box)
    return GroundTruth(boxes)


def iou(a, b):
    iw = min(a.x1, b.x1) - max(a.x, b.x)
    ih = min(a.y1, b.y1) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return float(inter / (a.area + b.area - inter))


def _hits(detections, label, box, floor):
    return any(d.label == label and d.confidence >= floor and iou(d.box, box) >= IOU_THRESHOLD
               for d in detections)


@dataclass(frozen=True)
class AsrResult:
    successes: int
    total: int
    asr: float

    @property
    def asr_text(self):
        return "{:.2f}".format(self.asr)


def asr_from_counts(successes, total):
    if total == 0:
        raise MetricError("attack success rate is undefined: no benign detections of the target")
    return AsrResult(successes, total, 100.0 * successes / total)


def compute_asr(benign, adversarial, gt, target_class, confidence_floor=CONFIDENCE_FLOOR):
    """
    total: views whose benign detections hit the target; successes: those of
    them where the adversarial detections do not.
    """
    successes = total = 0
    for name in sorted(gt.boxes):
        label, box = gt.boxes[name]
        if label != target_class:
            continue
        if not _hits(benign.get(name, []), target_class, box, confidence_floor):
            continue
        total += 1
        if not _hits(adversarial.get(name, []), target_class, box, confidence_floor):
            successes += 1
    return asr_from_counts(successes, total)


def voc_ap(rec, prec):
    """All-points interpolated area under the precision/recall curve."""
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    # precision envelope
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = np.maximum(mpre[i - 1], mpre[i])
    i = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


def compute_ap_ar(dets, gt, target_class, iou_threshold=IOU_THRESHOLD):
    class_gt = {name: box for name, (label, box) in gt.boxes.items() if label == target_class}
    npos = len(class_gt)
    if npos == 0:
        raise MetricError("no ground truth for class {!r}".format(target_class))

    candidates = []
    for name in sorted(dets):
        for d in dets[name]:
            if d.label == target_class:
                candidates.append((name, d))
    if not candidates:
        return 0.0, 0.0
    confidence = np.array([d.confidence for _, d in candidates])
    order = np.argsort(-confidence, kind='stable')

    matched = set()
    tp = np.zeros(len(candidates))
    fp = np.zeros(len(candidates))
    for k, idx in enumerate(order):
        name, d = candidates[idx]
        box = class_gt.get(name)
        if box is not None and name not in matched and iou(d.box, box) >= iou_threshold:
            tp[k] = 1.0
            matched.add(name)
        else:
            fp[k] = 1.0

    fp = np.cumsum(fp)
    tp = np.cumsum(tp)
    rec = tp / float(npos)
    prec = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
    return voc_ap(rec, prec), float(rec[-1])


def delta_ap(benign, adversarial):
    """(adversarial - benign) for (AP, AR), rounded to 3 decimals."""
    return round(adversarial[0] - benign[0], 3), round(adversarial[1] - benign[1], 3)


# ==========================================================
# Documents
# ==========================================================

class DetectionRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    bbox: list[float] = Field(..., min_length=4, max_length=4, description="x, y, w, h in pixels")
    label: str = Field(..., alias="class")
    confidence: float = Field(..., ge=0, le=1)

    def to_detection(self):
        return Detection(Box2D(*self.bbox), self.label, self.confidence)

    @classmethod
    def from_detection(cls, d):
        return cls(bbox=d.box.as_list(), label=d.label, confidence=d.confidence)


class DetectionsDocument(RootModel[dict[str, list[DetectionRecord]]]):

    def to_detection_set(self):
        return {name: [r.to_detection() for r in records] for name, records in self.root.items()}

    @classmethod
    def from_detection_set(cls, dets):
        return cls({name: [DetectionRecord.from_detection(d) for d in dets[name]] for name in sorted(dets)})


def save_detections(dets, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(DetectionsDocument.from_detection_set(dets).model_dump_json(indent=2, by_alias=True))


def load_detections(path):
    with open(path, 'r', encoding='utf-8') as f:
        return DetectionsDocument.model_validate_json(f.read()).to_detection_set()


class ReportRow(BaseModel):
    scenario: str
    detector: str
    target_class: str
    confidence_floor: float
    successes: int | None = None
    total: int | None = None
    asr: str | None = Field(None, description="percentage, two decimals")
    ap_benign: float | None = None
    ar_benign: float | None = None
    ap_adversarial: float | None = None
    ar_adversarial: float | None = None
    delta_ap: float | None = None
    delta_ar: float | None = None
    extra: dict = Field(default_factory=dict)


class Report(BaseModel):
    rows: list[ReportRow] = Field(default_factory=list)
    summary: dict = Field(default_factory=dict)


def report_row(scenario, detector, target_class, benign, adversarial, gt,
               confidence_floor=CONFIDENCE_FLOOR, **extra):
    """One scenario row; ASR fields stay empty when no benign view hits the target."""
    ap_b = compute_ap_ar(benign, gt, target_class)
    ap_a = compute_ap_ar(adversarial, gt, target_class)
    d_ap, d_ar = delta_ap(ap_b, ap_a)
    row = ReportRow(scenario=scenario, detector=detector, target_class=target_class,
                    confidence_floor=confidence_floor,
                    ap_benign=round(ap_b[0], 3), ar_benign=round(ap_b[1], 3),
                    ap_adversarial=round(ap_a[0], 3), ar_adversarial=round(ap_a[1], 3),
                    delta_ap=d_ap, delta_ar=d_ar, extra=extra)
    try:
        asr = compute_asr(benign, adversarial, gt, target_class, confidence_floor)
    except MetricError as e:
        logger.warning('{}: {}'.format(scenario, e.detail))
        return row
    return row.model_copy(update={"successes": asr.successes, "total": asr.total, "asr": asr.asr_text})
