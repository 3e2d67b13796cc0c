# -*- coding: utf-8 -*-
"""
Photometric losses on [0, 1] RGB rasters: single-scale SSIM with an 11-tap
Gaussian window (sigma 1.5, zero padding), L1, and their mix, each with an
analytic image gradient.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import numpy as np
from scipy.ndimage import correlate1d

from .errors import PreconditionError

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def gaussian_window(size=WINDOW_SIZE, sigma=WINDOW_SIGMA):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


_WINDOW = gaussian_window()


def _filter(image):
    # symmetric kernel + zero padding: the filter is its own adjoint
    out = correlate1d(image, _WINDOW, axis=0, mode='constant', cval=0.0)
    return correlate1d(out, _WINDOW, axis=1, mode='constant', cval=0.0)


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise PreconditionError("image shapes differ: {} vs {}".format(a.shape, b.shape))
    if a.ndim != 3 or a.shape[2] != 3:
        raise PreconditionError("expected H x W x 3 rasters, got {}".format(a.shape))
    return a, b


def _ssim_terms(x, y):
    mu_x, mu_y = _filter(x), _filter(y)
    s_xx = _filter(x * x) - mu_x * mu_x
    s_yy = _filter(y * y) - mu_y * mu_y
    s_xy = _filter(x * y) - mu_x * mu_y
    a1 = 2.0 * mu_x * mu_y + SSIM_C1
    a2 = 2.0 * s_xy + SSIM_C2
    b1 = mu_x * mu_x + mu_y * mu_y + SSIM_C1
    b2 = s_xx + s_yy + SSIM_C2
    return mu_x, mu_y, a1, a2, b1, b2


def ssim(a, b):
    """Mean SSIM over pixels and channels."""
    a, b = _check_pair(a, b)
    _, _, a1, a2, b1, b2 = _ssim_terms(a, b)
    return float(np.mean((a1 * a2) / (b1 * b2)))


def ssim_with_grad(x, y):
    """
    SSIM(x, y) and dSSIM/dx. Written so the gradient is exactly zero when
    x == y bitwise.
    """
    x, y = _check_pair(x, y)
    mu_x, mu_y, a1, a2, b1, b2 = _ssim_terms(x, y)
    value = float(np.mean((a1 * a2) / (b1 * b2)))

    scale = 1.0 / x.size
    r1 = a1 / b1
    r2 = a2 / b2
    d_mu = scale * 2.0 / (b1 * b2) * (a2 * (mu_y - mu_x * r1) - a1 * (mu_y - mu_x * r2))
    # 2x*F(dS/dE[xx]) + y*F(dS/dE[xy]) regrouped around (y - x)
    d_xx_xy = scale * 2.0 * r1 * (1.0 - r2) / b2
    d_xy = scale * 2.0 * a1 / (b1 * b2)
    grad = _filter(d_mu) + x * _filter(d_xx_xy) + (y - x) * _filter(d_xy)
    return value, grad


def l1_with_grad(x, y):
    x, y = _check_pair(x, y)
    diff = x - y
    return float(np.mean(np.abs(diff))), np.sign(diff) / x.size


def photometric_loss(render, target, lambda_dssim):
    """(1 - lambda) * L1 + lambda * (1 - SSIM), with its gradient w.r.t. render."""
    l1, g_l1 = l1_with_grad(render, target)
    value, g_ssim = ssim_with_grad(render, target)
    loss = (1.0 - lambda_dssim) * l1 + lambda_dssim * (1.0 - value)
    grad = (1.0 - lambda_dssim) * g_l1 - lambda_dssim * g_ssim
    return loss, grad, value
