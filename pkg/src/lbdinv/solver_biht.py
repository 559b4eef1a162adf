"""Binary iterative hard thresholding for 1-bit descriptors.

Each iteration takes a sign-consistency subgradient step, keeps the
``k`` largest Haar coefficients and projects back onto the validity
domain. The step is ``1/M`` so that the back-projected binary error
stays on the scale of the patch itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import wavelet
from .exceptions import ParameterError
from .proxops import DEFAULT_DOMAIN, ValidityDomain, project_validity
from .sensing import Descriptor, Pattern, adjoint, binarize, forward
from .validation import check_descriptors, check_pattern

__all__ = [
    "BihtConfig", "BihtResult", "data_fidelity", "subgradient_step", "solve_biht",
    "reconstruct_binary", "BihtReconstructor", "default_k",
]


def default_k(n: int, k_frac: float = 0.4) -> int:
    return max(1, min(n, int(round(k_frac * n))))


@dataclass(frozen=True)
class BihtConfig:
    k: int | None = None
    iterations: int = 200

    def resolve(self, pattern: Pattern) -> "BihtConfig":
        k = default_k(pattern.n) if self.k is None else int(self.k)
        if not 1 <= k <= pattern.n:
            raise ParameterError(f"k must lie in [1, {pattern.n}], got {k}")
        if self.iterations < 0:
            raise ParameterError("iterations must be >= 0")
        return BihtConfig(k, self.iterations)

    @staticmethod
    def tau(pattern: Pattern) -> float:
        return 1.0 / pattern.m


@dataclass
class BihtResult:
    patch: np.ndarray
    consistency: np.ndarray | float
    trace: list = field(default_factory=list)


def _signs(payload) -> np.ndarray:
    return np.asarray(payload, dtype=np.float64)


def data_fidelity(x, payload, pattern: Pattern):
    """Number of measurements whose sign disagrees with the descriptor."""
    pbar = _signs(payload)
    bx = binarize(forward(pattern, x))
    return np.sum(np.minimum(pbar * bx, 0.0), axis=-1) * -1.0


def subgradient_step(x, payload, pattern: Pattern, tau: float) -> np.ndarray:
    """``x + tau/2 * L^T (pbar - B(L x))``."""
    if tau <= 0:
        raise ParameterError("tau must be positive")
    pbar = _signs(payload)
    err = pbar - binarize(forward(pattern, x))
    return np.asarray(x, dtype=np.float64) + 0.5 * tau * adjoint(pattern, err)


def solve_biht(payload, pattern: Pattern, config: BihtConfig,
               domain: ValidityDomain = DEFAULT_DOMAIN, trace: bool = False,
               callback=None) -> BihtResult:
    """Run BIHT on sign payloads of shape ``(..., M)``.

    ``config`` must already be resolved. With ``trace`` the result carries
    the number of inconsistent signs after every iteration.
    ``callback(i, x, b)`` sees the projected iterate and the thresholded
    wavelet coefficients it came from.
    """
    pbar = _signs(payload)
    side = pattern.patch_side
    tau = BihtConfig.tau(pattern)
    x = np.zeros(pbar.shape[:-1] + (side, side))
    history = []
    for i in range(config.iterations):
        a = subgradient_step(x, pbar, pattern, tau)
        b = wavelet.hard_threshold(wavelet.analyze(a), config.k)
        x = project_validity(wavelet.synthesize(b), domain)
        if trace:
            history.append(data_fidelity(x, pbar, pattern))
        if callback is not None:
            callback(i, x, b)
    consistency = 1.0 - data_fidelity(x, pbar, pattern) / pattern.m
    return BihtResult(x, consistency, history)


def reconstruct_binary(descriptor: Descriptor, pattern: Pattern, config: BihtConfig | None = None,
                       domain: ValidityDomain = DEFAULT_DOMAIN, trace: bool = False) -> BihtResult:
    descriptor.check_pattern(pattern)
    descriptor.require(binary=True)
    cfg = (config or BihtConfig()).resolve(pattern)
    return solve_biht(descriptor.payload, pattern, cfg, domain, trace)


class BihtReconstructor(TransformerMixin, BaseEstimator):
    """Transformer from sign descriptors ``(n, M)`` to patches ``(n, side, side)``.

    Parameters
    ----------
    pattern : Pattern
    k_frac : float
        Fraction of wavelet coefficients kept by hard thresholding.
    n_iter : int

    Attributes
    ----------
    k_ : int
    consistency_ : ndarray of shape (n,)
        Fraction of reproduced descriptor bits for the last ``transform``.
    """

    def __init__(self, pattern=None, k_frac=0.4, n_iter=200):
        self.pattern = pattern
        self.k_frac = k_frac
        self.n_iter = n_iter

    def fit(self, X=None, y=None):
        pattern = check_pattern(self.pattern)
        if not 0.0 < self.k_frac <= 1.0:
            raise ParameterError("k_frac must lie in (0, 1]")
        self.config_ = BihtConfig(default_k(pattern.n, self.k_frac), self.n_iter).resolve(pattern)
        self.k_ = self.config_.k
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        D = check_descriptors(X, self.pattern.m, binary=True)
        res = solve_biht(D, self.pattern, self.config_)
        self.consistency_ = res.consistency
        return res.patch
