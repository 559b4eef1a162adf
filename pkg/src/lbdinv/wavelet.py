"""Orthonormal 2-D Haar transform on square power-of-two fields.

Coefficient layout is the usual dyadic pyramid: after a full-depth
decomposition of a ``side x side`` field, entry ``[0, 0]`` holds the
coarsest approximation and each level ``j`` stores its horizontal,
vertical and diagonal detail bands in the quadrants of the
``2^j x 2^j`` top-left block. Every filter tap is ``1/sqrt(2)`` so the
transform is an isometry.

All functions accept leading batch dimensions.
"""
import numpy as np

from .exceptions import ParameterError, ShapeError

__all__ = ["analyze", "synthesize", "hard_threshold", "n_levels"]

_R2 = np.sqrt(0.5)


def n_levels(side: int) -> int:
    if side < 2 or side & (side - 1):
        raise ShapeError(f"side must be a power of two >= 2, got {side}")
    return side.bit_length() - 1


def _square(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise ShapeError(f"expected square trailing dims, got {x.shape}")
    n_levels(x.shape[-1])
    return x


def analyze(field) -> np.ndarray:
    out = _square(field).copy()
    s = out.shape[-1]
    while s > 1:
        h = s // 2
        blk = out[..., :s, :s]
        even, odd = blk[..., :, 0::2], blk[..., :, 1::2]
        blk = np.concatenate(((even + odd) * _R2, (even - odd) * _R2), axis=-1)
        even, odd = blk[..., 0::2, :], blk[..., 1::2, :]
        out[..., :s, :s] = np.concatenate(((even + odd) * _R2, (even - odd) * _R2), axis=-2)
        s = h
    return out


def synthesize(coeffs) -> np.ndarray:
    out = _square(coeffs).copy()
    side = out.shape[-1]
    s = 2
    while s <= side:
        h = s // 2
        blk = out[..., :s, :s]
        a, d = blk[..., :h, :], blk[..., h:, :]
        rows = np.empty_like(blk)
        rows[..., 0::2, :] = (a + d) * _R2
        rows[..., 1::2, :] = (a - d) * _R2
        a, d = rows[..., :, :h], rows[..., :, h:]
        cols = np.empty_like(blk)
        cols[..., :, 0::2] = (a + d) * _R2
        cols[..., :, 1::2] = (a - d) * _R2
        out[..., :s, :s] = cols
        s *= 2
    return out


def hard_threshold(coeffs, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries of each trailing field.

    A 1-D or 2-D input is treated as a single vector; higher-rank input
    is a batch of 2-D fields. Ties go to the lower flat index.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim <= 2:
        flat = c.reshape(1, -1)
    else:
        flat = c.reshape(-1, c.shape[-2] * c.shape[-1])
    n = flat.shape[-1]
    if not 0 <= k <= n:
        raise ParameterError(f"k must lie in [0, {n}], got {k}")
    if k == n:
        return c.copy()
    # stable sort on -|c| keeps the lowest index first among equal magnitudes
    order = np.argsort(-np.abs(flat), axis=-1, kind="stable")
    keep = np.zeros(flat.shape, dtype=bool)
    np.put_along_axis(keep, order[:, :k], True, axis=-1)
    return np.where(keep, flat, 0.0).reshape(c.shape)
