# -*- coding: utf-8 -*-
"""
Front-to-back alpha compositing kernels.

Splats arrive already projected: 2D mean, conic (inverse 2D covariance as
a, b, c with power = -0.5*(a dx^2 + c dy^2) - b dx dy), RGB, opacity and an
integer pixel bbox [x0, y0, x1, y1). `order` lists visible splats nearest
first. The forward kernel runs rows in parallel; every row is independent so
results do not depend on the thread count. The backward kernel is serial.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import numpy as np
from numba import njit, prange

ALPHA_MIN = 1.0 / 255.0
TRANSMITTANCE_MIN = 1e-4


@njit(parallel=True, cache=True)
def composite_forward(order, mean2d, conic, color, opacity, bbox, height, width, background):
    image = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    last = np.full((height, width), -1, dtype=np.int64)

    for row in prange(height):
        py = row + 0.5
        for rank in range(order.shape[0]):
            s = order[rank]
            if row < bbox[s, 1] or row >= bbox[s, 3]:
                continue
            for col in range(bbox[s, 0], bbox[s, 2]):
                t = trans[row, col]
                if t < TRANSMITTANCE_MIN:
                    continue
                dx = col + 0.5 - mean2d[s, 0]
                dy = py - mean2d[s, 1]
                power = -0.5 * (conic[s, 0] * dx * dx + conic[s, 2] * dy * dy) - conic[s, 1] * dx * dy
                if power > 0.0:
                    continue
                alpha = opacity[s] * np.exp(power)
                if alpha < ALPHA_MIN:
                    continue
                weight = alpha * t
                for ch in range(3):
                    image[row, col, ch] += color[s, ch] * weight
                trans[row, col] = t * (1.0 - alpha)
                last[row, col] = rank
        for col in range(width):
            for ch in range(3):
                image[row, col, ch] += trans[row, col] * background[ch]

    return image, trans, last


@njit(cache=True)
def composite_backward(order, mean2d, conic, color, opacity, bbox, background, last, grad_image):
    """
    Gradients of a scalar loss w.r.t. each splat's RGB, opacity, 2D mean and
    conic, given dL/dimage of the composited (unclamped) image.

    Each pixel's contributors are replayed front to back to recover the
    transmittance in front of every splat, then walked back to front carrying
    the colour seen behind it. No step divides by 1 - alpha, so fully opaque
    splats are handled.
    """
    n = color.shape[0]
    height, width = last.shape
    grad_color = np.zeros((n, 3))
    grad_opacity = np.zeros(n)
    grad_mean2d = np.zeros((n, 2))
    grad_conic = np.zeros((n, 3))
    behind = np.zeros(3)

    m = order.shape[0]
    hit = np.empty(m, dtype=np.int64)
    hit_alpha = np.empty(m)
    hit_gauss = np.empty(m)
    hit_trans = np.empty(m)
    hit_dx = np.empty(m)
    hit_dy = np.empty(m)

    for row in range(height):
        py = row + 0.5
        for col in range(width):
            if last[row, col] < 0:
                continue
            count = 0
            t = 1.0
            for rank in range(last[row, col] + 1):
                s = order[rank]
                if row < bbox[s, 1] or row >= bbox[s, 3] or col < bbox[s, 0] or col >= bbox[s, 2]:
                    continue
                if t < TRANSMITTANCE_MIN:
                    break
                dx = col + 0.5 - mean2d[s, 0]
                dy = py - mean2d[s, 1]
                power = -0.5 * (conic[s, 0] * dx * dx + conic[s, 2] * dy * dy) - conic[s, 1] * dx * dy
                if power > 0.0:
                    continue
                gauss = np.exp(power)
                alpha = opacity[s] * gauss
                if alpha < ALPHA_MIN:
                    continue
                hit[count] = s
                hit_alpha[count] = alpha
                hit_gauss[count] = gauss
                hit_trans[count] = t
                hit_dx[count] = dx
                hit_dy[count] = dy
                count += 1
                t = t * (1.0 - alpha)

            g0 = grad_image[row, col, 0]
            g1 = grad_image[row, col, 1]
            g2 = grad_image[row, col, 2]
            # colour seen behind the current splat, per unit of its own transmittance
            for ch in range(3):
                behind[ch] = background[ch]
            for k in range(count - 1, -1, -1):
                s = hit[k]
                alpha = hit_alpha[k]
                t = hit_trans[k]
                weight = alpha * t
                grad_color[s, 0] += weight * g0
                grad_color[s, 1] += weight * g1
                grad_color[s, 2] += weight * g2
                grad_alpha = t * (g0 * (color[s, 0] - behind[0])
                                  + g1 * (color[s, 1] - behind[1])
                                  + g2 * (color[s, 2] - behind[2]))
                for ch in range(3):
                    behind[ch] = color[s, ch] * alpha + (1.0 - alpha) * behind[ch]

                dx = hit_dx[k]
                dy = hit_dy[k]
                grad_opacity[s] += grad_alpha * hit_gauss[k]
                grad_power = grad_alpha * alpha
                grad_conic[s, 0] += -0.5 * dx * dx * grad_power
                grad_conic[s, 1] += -dx * dy * grad_power
                grad_conic[s, 2] += -0.5 * dy * dy * grad_power
                # d = pixel - mean, so d(power)/d(mean) = conic @ d
                grad_mean2d[s, 0] += (conic[s, 0] * dx + conic[s, 1] * dy) * grad_power
                grad_mean2d[s, 1] += (conic[s, 1] * dx + conic[s, 2] * dy) * grad_power

    return grad_color, grad_opacity, grad_mean2d, grad_conic
