# -*- coding: utf-8 -*-
"""
Forward splatting renderer with per-splat SH color, plus the analytic backward
pass the trainer uses.

Each splat's color is evaluated along camera -> splat mean. The 3D covariance
is pushed through the local affine approximation of the pinhole projection,
dilated by 0.3 px^2 and truncated at a 3-sigma square. Splats are composited
nearest first (ties by index).
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .errors import SplatError
from .raster import composite_backward, composite_forward
from .scene import NEAR_PLANE, DatasetRole, PosedImage, PosedImageSet
from .sh_color import DC_OFFSET, eval_basis_batch, eval_basis_jacobian

logger = logging.getLogger(__name__)

COV2D_DILATION = 0.3
SUPPORT_SIGMAS = 3.0


@dataclass(frozen=True)
class RenderedView:
    image: np.ndarray
    pose: object
    alpha: np.ndarray


@dataclass(frozen=True)
class Projection:
    """Per-splat screen-space quantities for one view, plus what backward needs."""
    order: np.ndarray
    visible: np.ndarray
    mean2d: np.ndarray
    conic: np.ndarray
    colors: np.ndarray
    color_mask: np.ndarray
    opacities: np.ndarray
    bbox: np.ndarray
    cam: np.ndarray
    jac: np.ndarray
    proj: np.ndarray
    cov3d: np.ndarray
    rot: np.ndarray
    scale_mat: np.ndarray
    basis: np.ndarray
    dirs: np.ndarray
    dist: np.ndarray


@dataclass(frozen=True)
class Raster:
    image: np.ndarray
    trans: np.ndarray
    last: np.ndarray


@dataclass(frozen=True)
class SplatGradients:
    sh: np.ndarray
    opacities: np.ndarray
    means: np.ndarray
    scales: np.ndarray


def quaternion_to_matrix(q):
    """Rotation matrices [N, 3, 3] from unit quaternions [N, 4] (w, x, y, z)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    r = np.empty((q.shape[0], 3, 3))
    r[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    r[:, 0, 1] = 2.0 * (x * y - w * z)
    r[:, 0, 2] = 2.0 * (x * z + w * y)
    r[:, 1, 0] = 2.0 * (x * y + w * z)
    r[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    r[:, 1, 2] = 2.0 * (y * z - w * x)
    r[:, 2, 0] = 2.0 * (x * z - w * y)
    r[:, 2, 1] = 2.0 * (y * z + w * x)
    r[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return r


def project_splats(means, scales, rotations, opacities, sh, sh_order, pose):
    intr = pose.intrinsics
    w2c = pose.world_to_camera
    f = intr.focal_px

    offset = means - pose.position
    cam = offset @ w2c.T
    in_front = cam[:, 2] > NEAR_PLANE
    z = np.where(in_front, cam[:, 2], 1.0)

    mean2d = np.empty((means.shape[0], 2))
    mean2d[:, 0] = f * cam[:, 0] / z + intr.cx
    mean2d[:, 1] = f * cam[:, 1] / z + intr.cy

    jac = np.zeros((means.shape[0], 2, 3))
    jac[:, 0, 0] = f / z
    jac[:, 0, 2] = -f * cam[:, 0] / (z * z)
    jac[:, 1, 1] = f / z
    jac[:, 1, 2] = -f * cam[:, 1] / (z * z)
    proj = jac @ w2c

    rot = quaternion_to_matrix(rotations)
    scale_mat = rot * scales[:, None, :]
    cov3d = scale_mat @ scale_mat.transpose(0, 2, 1)
    cov2d = proj @ cov3d @ proj.transpose(0, 2, 1)
    a = cov2d[:, 0, 0] + COV2D_DILATION
    b = cov2d[:, 0, 1]
    c = cov2d[:, 1, 1] + COV2D_DILATION
    det = a * c - b * b
    positive = det > 0
    det = np.where(positive, det, 1.0)
    conic = np.stack([c / det, -b / det, a / det], axis=1)

    mid = 0.5 * (a + c)
    lam = mid + np.sqrt(np.maximum(0.1, mid * mid - det))
    radius = np.ceil(SUPPORT_SIGMAS * np.sqrt(lam))
    bbox = np.empty((means.shape[0], 4), dtype=np.int64)
    with np.errstate(invalid='ignore'):
        bbox[:, 0] = np.clip(np.floor(mean2d[:, 0] - radius), 0, intr.width)
        bbox[:, 1] = np.clip(np.floor(mean2d[:, 1] - radius), 0, intr.height)
        bbox[:, 2] = np.clip(np.ceil(mean2d[:, 0] + radius), 0, intr.width)
        bbox[:, 3] = np.clip(np.ceil(mean2d[:, 1] + radius), 0, intr.height)
    visible = in_front & positive & (bbox[:, 2] > bbox[:, 0]) & (bbox[:, 3] > bbox[:, 1])

    dist = np.linalg.norm(offset, axis=1)
    dirs = offset / np.where(dist > 0, dist, 1.0)[:, None]
    basis = eval_basis_batch(dirs, sh_order)
    raw = np.einsum('nck,nk->nc', sh, basis) + DC_OFFSET
    colors = np.maximum(raw, 0.0)

    candidates = np.flatnonzero(visible)
    order = candidates[np.argsort(cam[candidates, 2], kind='stable')]

    return Projection(
        order=np.ascontiguousarray(order, dtype=np.int64), visible=visible,
        mean2d=np.ascontiguousarray(mean2d), conic=np.ascontiguousarray(conic),
        colors=np.ascontiguousarray(colors), color_mask=raw > 0.0,
        opacities=np.ascontiguousarray(opacities, dtype=np.float64),
        bbox=bbox, cam=cam, jac=jac, proj=proj, cov3d=cov3d, rot=rot, scale_mat=scale_mat,
        basis=basis, dirs=dirs, dist=dist,
    )


def rasterize(projection, pose, background):
    intr = pose.intrinsics
    image, trans, last = composite_forward(
        projection.order, projection.mean2d, projection.conic, projection.colors,
        projection.opacities, projection.bbox, intr.height, intr.width,
        np.asarray(background, dtype=np.float64))
    return Raster(image=image, trans=trans, last=last)


def render(cloud, pose, background=(0.0, 0.0, 0.0)):
    projection = project_splats(cloud.means, cloud.scales, cloud.rotations, cloud.opacities,
                                cloud.sh, cloud.sh_order, pose)
    raster = rasterize(projection, pose, background)
    return RenderedView(image=np.clip(raster.image, 0.0, 1.0), pose=pose, alpha=1.0 - raster.trans)


def render_set(cloud, poses, background=(0.0, 0.0, 0.0), role=DatasetRole.benign, names=None, progress=False):
    entries = []
    for i, pose in enumerate(tqdm(poses, desc="render", disable=not progress)):
        try:
            view = render(cloud, pose, background)
        except SplatError as e:
            context = dict(e.context)
            context["view"] = i
            raise type(e)("view {}: {}".format(i, e.detail), **context)
        except Exception as e:  # noqa: BLE001
            raise SplatError("view {}: render failed: {}".format(i, e), view=i)
        entries.append(PosedImage(view.image, pose, names[i] if names else ""))
    logger.debug('rendered {} views of {} splats'.format(len(entries), len(cloud)))
    return PosedImageSet(tuple(entries), role)


def render_backward(projection, raster, pose, sh, background, grad_image):
    """
    Chain dL/dimage back to SH coefficients, opacities, means and scales
    (natural parameters, no reparameterisation).
    """
    gc, go, gm2, gconic = composite_backward(
        projection.order, projection.mean2d, projection.conic, projection.colors,
        projection.opacities, projection.bbox, np.asarray(background, dtype=np.float64),
        raster.last, np.ascontiguousarray(grad_image, dtype=np.float64))

    keep = projection.visible
    gc = np.where(keep[:, None], gc, 0.0)
    gm2 = np.where(keep[:, None], gm2, 0.0)
    gconic = np.where(keep[:, None], gconic, 0.0)
    go = np.where(keep, go, 0.0)

    # SH evaluation
    graw = gc * projection.color_mask
    g_sh = graw[:, :, None] * projection.basis[:, None, :]
    basis_jac = eval_basis_jacobian(projection.dirs, _order_of(sh))
    g_dir = np.einsum('nc,nck,nkd->nd', graw, sh, basis_jac)
    radial = np.sum(g_dir * projection.dirs, axis=1)
    dist = np.where(projection.dist > 0, projection.dist, 1.0)
    g_means = (g_dir - projection.dirs * radial[:, None]) / dist[:, None]

    # conic -> 2D covariance
    conic_mat = np.empty((gconic.shape[0], 2, 2))
    conic_mat[:, 0, 0] = projection.conic[:, 0]
    conic_mat[:, 0, 1] = conic_mat[:, 1, 0] = projection.conic[:, 1]
    conic_mat[:, 1, 1] = projection.conic[:, 2]
    g_conic_mat = np.empty_like(conic_mat)
    g_conic_mat[:, 0, 0] = gconic[:, 0]
    g_conic_mat[:, 0, 1] = g_conic_mat[:, 1, 0] = 0.5 * gconic[:, 1]
    g_conic_mat[:, 1, 1] = gconic[:, 2]
    g_cov2d = -conic_mat @ g_conic_mat @ conic_mat

    # 2D covariance -> 3D covariance and projection Jacobian
    proj = projection.proj
    g_cov3d = proj.transpose(0, 2, 1) @ g_cov2d @ proj
    g_proj = 2.0 * g_cov2d @ proj @ projection.cov3d
    g_jac = g_proj @ pose.world_to_camera.T

    f = pose.intrinsics.focal_px
    cam = projection.cam
    z = np.where(keep, cam[:, 2], 1.0)
    x, y = cam[:, 0], cam[:, 1]
    z2, z3 = z * z, z * z * z
    g_cam = np.empty_like(cam)
    g_cam[:, 0] = -f / z2 * g_jac[:, 0, 2] + f / z * gm2[:, 0]
    g_cam[:, 1] = -f / z2 * g_jac[:, 1, 2] + f / z * gm2[:, 1]
    g_cam[:, 2] = (-f / z2 * (g_jac[:, 0, 0] + g_jac[:, 1, 1])
                   + 2.0 * f * x / z3 * g_jac[:, 0, 2] + 2.0 * f * y / z3 * g_jac[:, 1, 2]
                   - f * x / z2 * gm2[:, 0] - f * y / z2 * gm2[:, 1])
    g_means = g_means + np.where(keep[:, None], g_cam @ pose.world_to_camera, 0.0)

    # 3D covariance -> scales
    g_scale_mat = 2.0 * g_cov3d @ projection.scale_mat
    g_scales = np.where(keep[:, None], np.einsum('nji,nji->ni', projection.rot, g_scale_mat), 0.0)

    return SplatGradients(sh=g_sh, opacities=go, means=g_means, scales=g_scales)


def _order_of(sh):
    return int(round(np.sqrt(sh.shape[2]))) - 1
