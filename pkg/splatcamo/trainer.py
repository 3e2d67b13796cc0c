# -*- coding: utf-8 -*-
"""
Fit a SplatCloud to a posed image set by Adam on SH coefficients and opacities
(optionally means and scales). Splat count never changes.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from .errors import PreconditionError, TrainingError
from .losses import photometric_loss, ssim
from .renderer import project_splats, rasterize, render, render_backward
from .scene import SplatCloud
from .sh_color import SHOrder, rgb_to_dc

logger = logging.getLogger(__name__)

OPACITY_EPS = 1e-6


class TrainableFlags(BaseModel):
    sh: bool = True
    opacity: bool = True
    means: bool = False
    scales: bool = False


class TrainConfig(BaseModel):
    iterations: int = Field(1000, ge=1)
    lr_sh: float = Field(2.5e-3, gt=0)
    lr_opacity: float = Field(5e-2, gt=0)
    lr_means: float = Field(1e-3, gt=0)
    lr_scales: float = Field(5e-3, gt=0, description="learning rate on log-scales")
    lambda_dssim: float = Field(0.2, ge=0, le=1)
    batch_size: int = Field(1, ge=1, description="views per step")
    seed: int = 0
    trainable: TrainableFlags = Field(default_factory=TrainableFlags)
    checkpoint_every: int = Field(100, ge=1)
    background: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], min_length=3, max_length=3)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)

    @model_validator(mode='after')
    def _something_trainable(self):
        flags = self.trainable
        if not (flags.sh or flags.opacity or flags.means or flags.scales):
            raise ValueError("at least one parameter group must be trainable")
        return self


class Adam(object):
    def __init__(self, shape, lr, beta1, beta2, eps):
        self.__m = np.zeros(shape)
        self.__v = np.zeros(shape)
        self.__t = 0
        self.__lr = lr
        self.__beta1 = beta1
        self.__beta2 = beta2
        self.__eps = eps

    def step(self, param, grad):
        self.__t += 1
        self.__m = self.__beta1 * self.__m + (1.0 - self.__beta1) * grad
        self.__v = self.__beta2 * self.__v + (1.0 - self.__beta2) * grad * grad
        m_hat = self.__m / (1.0 - self.__beta1 ** self.__t)
        v_hat = self.__v / (1.0 - self.__beta2 ** self.__t)
        return param - self.__lr * m_hat / (np.sqrt(v_hat) + self.__eps)


@dataclass(frozen=True)
class Checkpoint:
    iteration: int
    loss: float
    ssim: float
    seconds: float


@dataclass
class TrainReport:
    checkpoints: list = field(default_factory=list)
    seconds: float = 0.0
    cloud: SplatCloud | None = None
    view_ssim: list = field(default_factory=list)

    def to_document(self):
        return TrainReportDocument(
            iterations=[c.iteration for c in self.checkpoints],
            losses=[c.loss for c in self.checkpoints],
            ssims=[c.ssim for c in self.checkpoints],
            checkpoint_seconds=[c.seconds for c in self.checkpoints],
            seconds=self.seconds,
            view_ssim=list(self.view_ssim),
        )


class TrainReportDocument(BaseModel):
    iterations: list[int]
    losses: list[float]
    ssims: list[float]
    checkpoint_seconds: list[float]
    seconds: float = Field(..., ge=0, description="training wall-clock seconds")
    view_ssim: list[float] = Field(default_factory=list, description="final SSIM per training view")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _logit(p):
    p = np.clip(p, OPACITY_EPS, 1.0 - OPACITY_EPS)
    return np.log(p / (1.0 - p))


def _clip_mask(raw):
    return (raw >= 0.0) & (raw <= 1.0)


def mean_ssim(cloud, data, background):
    return [ssim(render(cloud, entry.pose, background).image, entry.image) for entry in data]


def train(initial, data, cfg, on_checkpoint=None, progress=False):
    """
    Returns (cloud, TrainReport). Report seconds count training steps only;
    checkpoint evaluation renders are excluded.
    """
    if len(data) == 0:
        raise PreconditionError("training data is empty")
    flags = cfg.trainable
    background = np.asarray(cfg.background, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)

    sh = np.array(initial.sh)
    logits = _logit(initial.opacities)
    means = np.array(initial.means)
    log_scales = np.log(initial.scales)
    opt = {
        "sh": Adam(sh.shape, cfg.lr_sh, cfg.beta1, cfg.beta2, cfg.eps),
        "opacity": Adam(logits.shape, cfg.lr_opacity, cfg.beta1, cfg.beta2, cfg.eps),
        "means": Adam(means.shape, cfg.lr_means, cfg.beta1, cfg.beta2, cfg.eps),
        "scales": Adam(log_scales.shape, cfg.lr_scales, cfg.beta1, cfg.beta2, cfg.eps),
    }

    initial_logits = logits.copy()
    initial_log_scales = log_scales.copy()

    # untouched parameters map back to their exact initial values
    def current_opacities():
        return np.where(logits != initial_logits, _sigmoid(logits), initial.opacities)

    def current_scales():
        return np.where(log_scales != initial_log_scales, np.exp(log_scales), initial.scales)

    def current():
        changes = {}
        if flags.sh:
            changes["sh"] = sh
        if flags.opacity:
            changes["opacities"] = current_opacities()
        if flags.means:
            changes["means"] = means
        if flags.scales:
            changes["scales"] = current_scales()
        return initial.replace(**changes) if changes else initial

    report = TrainReport()
    order = np.array([], dtype=np.int64)
    cursor = 0
    elapsed = 0.0
    window_loss = []

    for iteration in tqdm(range(1, cfg.iterations + 1), desc="train", disable=not progress):
        started = time.perf_counter()
        opacities = current_opacities() if flags.opacity else initial.opacities
        scales = current_scales() if flags.scales else initial.scales
        cur_means = means if flags.means else initial.means
        cur_sh = sh if flags.sh else initial.sh

        g_sh = np.zeros_like(sh)
        g_op = np.zeros_like(logits)
        g_means = np.zeros_like(means)
        g_scales = np.zeros_like(log_scales)
        batch_loss = 0.0
        for _ in range(cfg.batch_size):
            if cursor >= order.size:
                order = rng.permutation(len(data))
                cursor = 0
            view = int(order[cursor])
            cursor += 1
            entry = data[view]

            projection = project_splats(cur_means, scales, initial.rotations, opacities,
                                        cur_sh, initial.sh_order, entry.pose)
            raster = rasterize(projection, entry.pose, background)
            image = np.clip(raster.image, 0.0, 1.0)
            loss, grad, _ = photometric_loss(image, entry.image, cfg.lambda_dssim)
            if not np.isfinite(loss):
                raise TrainingError("non-finite loss", iteration=iteration, view=view)
            grad = grad * _clip_mask(raster.image) / cfg.batch_size
            grads = render_backward(projection, raster, entry.pose, cur_sh, background, grad)
            g_sh += grads.sh
            squash = _sigmoid(logits)
            g_op += grads.opacities * squash * (1.0 - squash)
            g_means += grads.means
            g_scales += grads.scales * scales
            batch_loss += loss / cfg.batch_size

        if flags.sh:
            sh = opt["sh"].step(sh, g_sh)
        if flags.opacity:
            logits = opt["opacity"].step(logits, g_op)
        if flags.means:
            means = opt["means"].step(means, g_means)
        if flags.scales:
            log_scales = opt["scales"].step(log_scales, g_scales)
        elapsed += time.perf_counter() - started

        window_loss.append(batch_loss)
        if iteration % cfg.checkpoint_every == 0 or iteration == cfg.iterations:
            cloud = current()
            score = float(np.mean(mean_ssim(cloud, data, background)))
            checkpoint = Checkpoint(iteration, float(np.mean(window_loss)), score, elapsed)
            report.checkpoints.append(checkpoint)
            window_loss = []
            logger.info('iteration {}: loss {:.5f}, mean ssim {:.4f}'.format(
                iteration, checkpoint.loss, checkpoint.ssim))
            if on_checkpoint is not None:
                on_checkpoint(checkpoint, cloud)

    cloud = current()
    report.seconds = elapsed
    report.cloud = cloud
    report.view_ssim = mean_ssim(cloud, data, background)
    return cloud, report


def time_to_ssim(report, threshold):
    if not report.checkpoints:
        raise PreconditionError("report has no checkpoints")
    for checkpoint in report.checkpoints:
        if checkpoint.ssim >= threshold:
            return checkpoint.seconds
    return None


# ==========================================================
# Initialisation
# ==========================================================

def initialize_cloud(reference, seed=0, color_noise=0.3, sh_order=None):
    """
    Reference geometry with perturbed DC colors and zeroed higher SH bands.
    `sh_order` lets ablations train a different order on the same geometry.
    """
    order = SHOrder(reference.sh_order if sh_order is None else sh_order)
    rng = np.random.default_rng(seed)
    sh = np.zeros((len(reference), 3, order.coeff_count))
    sh[:, :, 0] = reference.sh[:, :, 0] + rng.normal(0.0, color_noise, size=(len(reference), 3))
    return SplatCloud(reference.means, reference.scales, reference.rotations, reference.opacities,
                      sh, order)


def scatter_cloud(minimum, maximum, count, scale, sh_order=SHOrder.ZERO, opacity=0.5, seed=0):
    """Uniform scatter of isotropic gray splats inside a box."""
    if count < 1:
        raise PreconditionError("scatter needs at least one splat")
    order = SHOrder(sh_order)
    rng = np.random.default_rng(seed)
    lo = np.asarray(minimum, dtype=np.float64)
    hi = np.asarray(maximum, dtype=np.float64)
    means = lo + rng.random((count, 3)) * (hi - lo)
    rotations = np.zeros((count, 4))
    rotations[:, 0] = 1.0
    sh = np.zeros((count, 3, order.coeff_count))
    sh[:, :, 0] = rgb_to_dc([0.5, 0.5, 0.5])
    return SplatCloud(means, np.full((count, 3), float(scale)), rotations, np.full(count, float(opacity)),
                      sh, order)
