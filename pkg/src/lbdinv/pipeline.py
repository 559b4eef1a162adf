"""Whole-image description and reconstruction.

Patches are taken on a regular grid or around FAST keypoints, described,
inverted independently and averaged back where they overlap. Pixels that
no patch covers stay black.

Per-patch solves are grouped into fixed-size chunks. The chunking does
not depend on the worker count and the final accumulation runs in patch
order, so the output is bit-identical for any number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .descfile import DescriptorSet
from .exceptions import ParameterError, ShapeError
from .sensing import Descriptor, Pattern, describe
from .solver_biht import BihtConfig, solve_biht
from .solver_pd import PdConfig, solve_pd
from .validation import check_patches, check_pattern

__all__ = [
    "GridMode", "KeypointMode", "extract_grid", "detect_fast", "keypoint_patches", "assemble",
    "describe_image", "invert_descriptors", "reconstruct_image", "psnr", "edge_correlation",
    "resolve_workers", "coverage", "DescriptorExtractor", "CHUNK",
]

CHUNK = 32

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dy, dx)
CIRCLE = (
    (-3, 0), (-3, 1), (-2, 2), (-1, 3), (0, 3), (1, 3), (2, 2), (3, 1),
    (3, 0), (3, -1), (2, -2), (1, -3), (0, -3), (-1, -3), (-2, -2), (-3, -1),
)


@dataclass(frozen=True)
class GridMode:
    offset: int = 32


@dataclass(frozen=True)
class KeypointMode:
    threshold: float = 0.08
    arc: int = 9


def _check_image(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale image, got shape {img.shape}")
    return img


def extract_grid(image, patch_side: int, offset: int):
    """Row-major list of ``((row, col), patch)`` with top-left corners on the grid."""
    img = _check_image(image)
    h, w = img.shape
    if not 1 <= offset <= patch_side <= min(h, w):
        raise ParameterError("need 1 <= offset <= patch_side <= min(width, height)")
    return [
        ((r, c), img[r:r + patch_side, c:c + patch_side])
        for r in range(0, h - patch_side + 1, offset)
        for c in range(0, w - patch_side + 1, offset)
    ]


def _segment_masks(img, threshold):
    h, w = img.shape
    core = img[3:h - 3, 3:w - 3]
    ring = np.stack([img[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx] for dy, dx in CIRCLE])
    diff = ring - core
    return diff, diff > threshold, diff < -threshold


def _has_arc(mask, arc):
    wrapped = np.concatenate([mask, mask[:arc - 1]], axis=0)
    found = np.zeros(mask.shape[1:], dtype=bool)
    for start in range(16):
        found |= np.all(wrapped[start:start + arc], axis=0)
    return found


def detect_fast(image, threshold: float = 0.08, arc: int = 9, border: int = 0,
                nonmax: bool = True):
    """FAST segment-test corners as a row-major list of ``(x, y)``.

    A pixel is a corner when at least ``arc`` contiguous pixels of the
    16-pixel circle are all brighter than centre + ``threshold`` or all
    darker than centre - ``threshold``. The score is the larger of the
    summed excess over the bright and the dark circle pixels. Non-maximum
    suppression keeps a corner that beats the earlier (raster order)
    neighbours strictly and the later ones or equal. Keypoints closer than
    ``border`` pixels to the image edge are dropped.
    """
    img = _check_image(image)
    if not 0.0 < threshold < 1.0:
        raise ParameterError("threshold must lie in (0, 1)")
    if not 1 <= arc <= 16:
        raise ParameterError("arc must lie in [1, 16]")
    h, w = img.shape
    if h < 7 or w < 7:
        return []
    diff, bright, dark = _segment_masks(img, threshold)
    corner = _has_arc(bright, arc) | _has_arc(dark, arc)
    excess = np.abs(diff) - threshold
    score = np.maximum(np.where(bright, excess, 0).sum(0), np.where(dark, excess, 0).sum(0))
    full = np.zeros((h, w))
    full[3:h - 3, 3:w - 3] = np.where(corner, score, 0.0)
    is_corner = np.zeros((h, w), dtype=bool)
    is_corner[3:h - 3, 3:w - 3] = corner

    if nonmax:
        keep = is_corner.copy()
        padded = np.pad(full, 1, constant_values=-1.0)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                nb = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
                earlier = dy < 0 or (dy == 0 and dx < 0)
                keep &= full > nb if earlier else full >= nb
        is_corner = keep

    ys, xs = np.nonzero(is_corner)
    ok = (xs >= border) & (xs <= w - border) & (ys >= border) & (ys <= h - border)
    return [(int(x), int(y)) for x, y in zip(xs[ok], ys[ok])]


def _corner_for_center(x, y, side, width, height):
    r = min(max(y - side // 2, 0), height - side)
    c = min(max(x - side // 2, 0), width - side)
    return r, c


def keypoint_patches(image, keypoints, patch_side: int):
    """Patches centred on the keypoints, shifted inside the image if needed."""
    img = _check_image(image)
    h, w = img.shape
    if patch_side > min(h, w):
        raise ParameterError("patch_side exceeds the image")
    out = []
    for x, y in keypoints:
        r, c = _corner_for_center(int(x), int(y), patch_side, w, h)
        out.append(((r, c), img[r:r + patch_side, c:c + patch_side]))
    return out


def assemble(reconstructions, width: int, height: int) -> np.ndarray:
    """Average overlapping patches onto a ``height x width`` canvas.

    Accumulation follows list order; uncovered pixels are 0.
    """
    total = np.zeros((height, width))
    count = np.zeros((height, width), dtype=np.int64)
    for (r, c), patch in reconstructions:
        patch = np.asarray(patch, dtype=np.float64)
        ph, pw = patch.shape
        if r < 0 or c < 0 or r + ph > height or c + pw > width:
            raise ParameterError(f"patch at {(r, c)} does not fit the {width}x{height} canvas")
        total[r:r + ph, c:c + pw] += patch
        count[r:r + ph, c:c + pw] += 1
    out = np.zeros_like(total)
    np.divide(total, count, out=out, where=count > 0)
    return np.clip(out, 0.0, 1.0)


def describe_image(image, pattern: Pattern, mode=GridMode(), binary: bool = True) -> DescriptorSet:
    """Describe every grid patch or keypoint patch of an image."""
    img = _check_image(image)
    h, w = img.shape
    side = pattern.patch_side
    if isinstance(mode, GridMode):
        patches = extract_grid(img, side, mode.offset)
    elif isinstance(mode, KeypointMode):
        kps = detect_fast(img, mode.threshold, mode.arc, border=side // 2)
        patches = keypoint_patches(img, kps, side)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    centers = np.array([(c + side // 2, r + side // 2) for (r, c), _ in patches],
                       dtype=np.int64).reshape(-1, 2)
    if patches:
        stack = np.stack([p for _, p in patches])
        desc = describe(pattern, stack, binary)
    else:
        desc = Descriptor(np.zeros((0, pattern.m), dtype=np.int8 if binary else np.float64),
                          pattern.pattern_id, binary)
    return DescriptorSet(w, h, side, centers, desc)


class DescriptorExtractor(TransformerMixin, BaseEstimator):
    """Transformer from patches ``(n, side, side)`` to descriptors ``(n, M)``.

    Parameters
    ----------
    pattern : Pattern
    binary : bool
        Emit signs in {-1, +1} (int8) instead of real measurements.
    """

    def __init__(self, pattern=None, binary=True):
        self.pattern = pattern
        self.binary = binary

    def fit(self, X=None, y=None):
        self.pattern_id_ = check_pattern(self.pattern).pattern_id
        return self

    def transform(self, X):
        check_is_fitted(self, "pattern_id_")
        X = check_patches(X, self.pattern.patch_side)
        return describe(self.pattern, X, self.binary).payload


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit value, else ``LBD_THREADS`` (0 = one per CPU)."""
    if workers is None:
        workers = int(os.environ.get("LBD_THREADS", "0") or 0)
    if workers < 0:
        raise ParameterError("worker count must be >= 0")
    return workers or (os.cpu_count() or 1)


def invert_descriptors(dset: DescriptorSet, pattern: Pattern, solver: str = "biht", config=None,
                       workers: int | None = None, force_real: bool = False):
    """Reconstruct an image from stored descriptors.

    Returns ``(image, stats)``; ``stats`` holds the patch count and, for
    BIHT, the per-patch final consistency ratios.
    """
    desc = dset.descriptor
    desc.check_pattern(pattern)
    if dset.patch_side != pattern.patch_side:
        raise ShapeError("descriptor set and pattern disagree on patch side")
    payload = np.atleast_2d(desc.payload)
    if solver == "biht":
        desc.require(binary=True)
        cfg = (config or BihtConfig()).resolve(pattern)

        def solve(chunk):
            res = solve_biht(chunk, pattern, cfg)
            return res.patch, res.consistency
    elif solver == "pd":
        if not force_real:
            desc.require(binary=False)
        cfg = (config or PdConfig()).resolve(pattern)

        def solve(chunk):
            return solve_pd(chunk, pattern, cfg), None
    else:
        raise ParameterError(f"unknown solver {solver!r}")

    chunks = [payload[i:i + CHUNK] for i in range(0, len(payload), CHUNK)]
    n_workers = min(resolve_workers(workers), max(len(chunks), 1))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(solve, chunks))
    else:
        results = [solve(ch) for ch in chunks]

    side = pattern.patch_side
    patches = [p for res, _ in results for p in res]
    corners = [_corner_for_center(int(x), int(y), side, dset.width, dset.height)
               for x, y in np.asarray(dset.centers).reshape(-1, 2)]
    image = assemble(list(zip(corners, patches)), dset.width, dset.height)
    stats = {"patches": len(patches)}
    if solver == "biht":
        stats["consistency"] = (np.concatenate([c for _, c in results]) if results
                                else np.zeros(0))
    return image, stats


def reconstruct_image(image, pattern: Pattern, solver: str = "biht", config=None,
                      mode=GridMode(), workers: int | None = None):
    """Describe an image with ``pattern`` and invert it again.

    Binary descriptors are used with BIHT and real ones with the
    primal-dual solver.
    """
    dset = describe_image(image, pattern, mode, binary=(solver == "biht"))
    return invert_descriptors(dset, pattern, solver, config, workers)


def coverage(dset: DescriptorSet) -> np.ndarray:
    """Boolean map of pixels covered by at least one patch."""
    mask = np.zeros((dset.height, dset.width), dtype=bool)
    side = dset.patch_side
    for x, y in np.asarray(dset.centers).reshape(-1, 2):
        r, c = _corner_for_center(int(x), int(y), side, dset.width, dset.height)
        mask[r:r + side, c:c + side] = True
    return mask


def psnr(a, b, mask=None) -> float:
    """PSNR in dB for unit peak over ``mask`` (all pixels if None); inf if equal."""
    a, b = _check_image(a), _check_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if mask is None:
        mask = np.ones(a.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ParameterError("empty mask")
    mse = float(np.mean((a[mask] - b[mask]) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


def edge_correlation(a, b, mask=None) -> float:
    """Pearson correlation between the absolute Laplacians of two images.

    Returns NaN when either map is constant over the mask.
    """
    a, b = _check_image(a), _check_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    la = np.abs(ndimage.laplace(a, mode="nearest"))
    lb = np.abs(ndimage.laplace(b, mode="nearest"))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        la, lb = la[mask], lb[mask]
    la, lb = la.ravel() - la.mean(), lb.ravel() - lb.mean()
    denom = np.sqrt((la * la).sum() * (lb * lb).sum())
    if denom == 0.0:
        return float("nan")
    return float((la * lb).sum() / denom)
