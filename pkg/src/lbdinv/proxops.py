"""Closed-form proximal maps and projections for the reconstruction solvers."""
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, ShapeError

__all__ = [
    "ValidityDomain", "prox_f1_star", "prox_f2_star", "project_box",
    "project_mean", "project_validity", "prox_g",
]


@dataclass(frozen=True)
class ValidityDomain:
    """Pixel box ``[0, h_pix]`` intersected with the ``mean == target_mean`` plane."""

    h_pix: float = 1.0
    target_mean: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.target_mean < self.h_pix:
            raise ParameterError("need 0 < target_mean < h_pix")


DEFAULT_DOMAIN = ValidityDomain()


def prox_f1_star(r, sigma: float, lam: float, pbar):
    """Prox of the conjugate of ``lam * ||. - pbar||_1`` with step ``sigma``.

    Pointwise ``sign(t) * min(lam, |t|)`` with ``t = r - sigma * pbar``,
    i.e. ``t`` clipped to ``[-lam, lam]``.
    """
    if sigma <= 0 or lam <= 0:
        raise ParameterError("sigma and lambda must be positive")
    r = np.asarray(r, dtype=np.float64)
    pbar = np.asarray(pbar, dtype=np.float64)
    if r.shape[-1:] != pbar.shape[-1:]:
        raise ShapeError(f"length mismatch {r.shape} vs {pbar.shape}")
    return np.clip(r - sigma * pbar, -lam, lam)


def prox_f2_star(s):
    """Projection onto the unit l-infinity ball (prox of the conjugate l1 norm)."""
    return np.clip(np.asarray(s, dtype=np.float64), -1.0, 1.0)


def project_box(x, h_pix: float = 1.0):
    if h_pix <= 0:
        raise ParameterError("h_pix must be positive")
    return np.clip(np.asarray(x, dtype=np.float64), 0.0, h_pix)


def project_mean(x, target_mean: float = 0.5):
    """Orthogonal projection onto ``{y : mean(y) = target_mean}``.

    Fields with leading batch dims are projected per trailing 2-D field.
    """
    x = np.asarray(x, dtype=np.float64)
    axes = tuple(range(-min(x.ndim, 2), 0)) if x.ndim else None
    return x + (target_mean - x.mean(axis=axes, keepdims=True))


def project_validity(x, domain: ValidityDomain = DEFAULT_DOMAIN):
    """Approximate projection onto the validity domain: mean shift, then clip.

    The result always lies in the box; its mean can drift from the target
    once clipping is active.
    """
    return project_box(project_mean(x, domain.target_mean), domain.h_pix)


def prox_g(y, z, domain: ValidityDomain = DEFAULT_DOMAIN):
    """Prox of the validity indicator plus the ``y == z`` constraint.

    Both outputs are the projected midpoint; the same array is returned twice.
    """
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if y.shape != z.shape:
        raise ShapeError(f"shape mismatch {y.shape} vs {z.shape}")
    w = project_validity(0.5 * (y + z), domain)
    return w, w
