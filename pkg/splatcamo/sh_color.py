# -*- coding: utf-8 -*-
"""
Real spherical-harmonic basis (graphics normalisation, components in ascending
(l, m) order) and the per-splat view-dependent color built on it.
"""

__copyright__ = "Copyright (c) 2026 splat-camo contributors"

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import scipy.linalg

from .errors import FitError, PreconditionError, StructureError

C0 = 0.282094791774
C1 = 0.488602511903
C2 = (
    1.09254843059,
    -1.09254843059,
    0.315391565253,
    -1.09254843059,
    0.546274215296,
)

DC_OFFSET = 0.5
UNIT_TOLERANCE = 1e-9
RANK_TOLERANCE = 1e-10


class SHOrder(IntEnum):
    ZERO = 0
    ONE = 1
    TWO = 2

    @property
    def coeff_count(self):
        return (int(self) + 1) ** 2

    @property
    def rgb_count(self):
        return 3 * self.coeff_count


def coeff_count(order):
    return SHOrder(order).coeff_count


@dataclass(frozen=True)
class SHColor:
    order: SHOrder
    coefficients: np.ndarray

    def __post_init__(self):
        order = SHOrder(self.order)
        coefficients = np.array(self.coefficients, dtype=np.float64)
        if coefficients.shape != (3, order.coeff_count):
            raise StructureError(
                "SH coefficients must have shape (3, {}), got {}".format(order.coeff_count, coefficients.shape))
        if not np.all(np.isfinite(coefficients)):
            raise StructureError("SH coefficients must be finite")
        coefficients.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def constant(cls, rgb, order=SHOrder.ZERO):
        order = SHOrder(order)
        coefficients = np.zeros((3, order.coeff_count))
        coefficients[:, 0] = rgb_to_dc(rgb)
        return cls(order, coefficients)

    def __eq__(self, other):
        if not isinstance(other, SHColor):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.coefficients, other.coefficients)

    def __hash__(self):
        return hash((int(self.order), self.coefficients.tobytes()))


def rgb_to_dc(rgb):
    return (np.asarray(rgb, dtype=np.float64) - DC_OFFSET) / C0


def dc_to_rgb(dc):
    return np.asarray(dc, dtype=np.float64) * C0 + DC_OFFSET


def _check_unit(d):
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (3,):
        raise PreconditionError("view direction must be a 3-vector, got shape {}".format(d.shape))
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise PreconditionError("view direction must be unit-norm, |d| = {!r}".format(norm))
    return d


def eval_basis_batch(dirs, order):
    """
    Basis values for unit directions dirs[..., 3] -> [..., (l+1)^2].
    No norm check; callers pass normalised directions.
    """
    order = SHOrder(order)
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    out = np.empty(dirs.shape[:-1] + (order.coeff_count,))
    out[..., 0] = C0
    if order >= SHOrder.ONE:
        out[..., 1] = -C1 * y
        out[..., 2] = C1 * z
        out[..., 3] = -C1 * x
    if order >= SHOrder.TWO:
        xx, yy, zz = x * x, y * y, z * z
        out[..., 4] = C2[0] * x * y
        out[..., 5] = C2[1] * y * z
        out[..., 6] = C2[2] * (2.0 * zz - xx - yy)
        out[..., 7] = C2[3] * x * z
        out[..., 8] = C2[4] * (xx - yy)
    return out


def eval_basis_jacobian(dirs, order):
    """Derivative of every basis function w.r.t. the direction: [..., (l+1)^2, 3]."""
    order = SHOrder(order)
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    out = np.zeros(dirs.shape[:-1] + (order.coeff_count, 3))
    if order >= SHOrder.ONE:
        out[..., 1, 1] = -C1
        out[..., 2, 2] = C1
        out[..., 3, 0] = -C1
    if order >= SHOrder.TWO:
        out[..., 4, 0] = C2[0] * y
        out[..., 4, 1] = C2[0] * x
        out[..., 5, 1] = C2[1] * z
        out[..., 5, 2] = C2[1] * y
        out[..., 6, 0] = -2.0 * C2[2] * x
        out[..., 6, 1] = -2.0 * C2[2] * y
        out[..., 6, 2] = 4.0 * C2[2] * z
        out[..., 7, 0] = C2[3] * z
        out[..., 7, 2] = C2[3] * x
        out[..., 8, 0] = 2.0 * C2[4] * x
        out[..., 8, 1] = -2.0 * C2[4] * y
    return out


def eval_basis(d, order):
    d = _check_unit(d)
    return eval_basis_batch(d, order)


def eval_color(c, d):
    """RGB of an SH color seen along unit direction d; clamped below at 0 only."""
    d = _check_unit(d)
    basis = eval_basis_batch(d, c.order)
    if basis.shape[-1] != c.coefficients.shape[1]:
        raise StructureError("basis has {} components but coefficients have {}".format(
            basis.shape[-1], c.coefficients.shape[1]))
    return np.maximum(c.coefficients @ basis + DC_OFFSET, 0.0)


@dataclass(frozen=True)
class SHFit:
    color: SHColor
    residual: float
    rank: int


def fit_sh(samples, order):
    """
    Least-squares SH color through (direction, rgb) samples.

    Solved as a column-pivoted QR of the basis matrix (equivalent to the normal
    equations, better conditioned). The residual is the squared error of the
    linear model summed over samples and channels.
    """
    order = SHOrder(order)
    count = order.coeff_count
    samples = list(samples)
    if not samples:
        raise FitError("no samples to fit", rank=0, required=count)

    dirs = np.stack([_check_unit(d) for d, _ in samples])
    targets = np.stack([np.asarray(rgb, dtype=np.float64) for _, rgb in samples])
    if targets.shape[1] != 3:
        raise StructureError("targets must be RGB triples")

    basis = eval_basis_batch(dirs, order)
    q, r, perm = scipy.linalg.qr(basis, mode='economic', pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_TOLERANCE * diag[0])) if diag.size else 0
    if rank < count:
        raise FitError(
            "sample directions span rank {} but order {} needs rank {}".format(rank, int(order), count),
            rank=rank, required=count)

    rhs = targets - DC_OFFSET
    solution = scipy.linalg.solve_triangular(r[:count, :count], q[:, :count].T @ rhs)
    coefficients = np.empty((count, 3))
    coefficients[perm] = solution
    residual = float(np.sum((basis @ coefficients - rhs) ** 2))
    return SHFit(color=SHColor(order, coefficients.T), residual=residual, rank=rank)
