"""Primal-dual solver for real-valued descriptors.

Minimizes ``lam * ||L x - d||_1 + ||W x||_1`` over the validity domain
with the Chambolle-Pock iteration on the product space ``(y, z)``
under the coupling ``y == z``. Because the prox of that coupling returns
the same field for both blocks at every step, a single primal field is
stored; the split only shows up as the two halved back-projections in
the primal update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import wavelet
from .exceptions import ParameterError
from .proxops import DEFAULT_DOMAIN, ValidityDomain, prox_f1_star, prox_f2_star, prox_g
from .sensing import Descriptor, Pattern, adjoint, forward, operator_norm
from .validation import check_descriptors, check_pattern

__all__ = ["PdConfig", "objective_real", "solve_pd", "reconstruct_real", "PrimalDualReconstructor"]


@dataclass(frozen=True)
class PdConfig:
    lam: float = 0.1
    iterations: int = 1000
    theta: float = 1.0
    sigma: float | None = None
    tau: float | None = None
    gamma: float | None = None
    power_iterations: int = 100

    def resolve(self, pattern: Pattern) -> "PdConfig":
        """Fill in the norm bound and step sizes, then validate."""
        cfg = self
        if cfg.gamma is None:
            est = operator_norm(pattern, cfg.power_iterations)
            cfg = replace(cfg, gamma=math.sqrt(est * est + 1.0))
        if cfg.sigma is None:
            cfg = replace(cfg, sigma=1.0 / cfg.gamma)
        if cfg.tau is None:
            cfg = replace(cfg, tau=1.0 / cfg.gamma)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.lam <= 0:
            raise ParameterError("lambda must be positive")
        if self.iterations < 0:
            raise ParameterError("iterations must be >= 0")
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError("theta must lie in [0, 1]")
        if self.gamma is not None and self.sigma is not None and self.tau is not None:
            if self.sigma <= 0 or self.tau <= 0:
                raise ParameterError("step sizes must be positive")
            if self.gamma ** 2 * self.sigma * self.tau > 1.0 + 1e-12:
                raise ParameterError("step sizes violate gamma^2 * sigma * tau <= 1")


def objective_real(x, payload, pattern: Pattern, lam: float):
    """``lam * ||L x - d||_1 + ||W x||_1`` (the indicator term is left out)."""
    x = np.asarray(x, dtype=np.float64).reshape(np.shape(payload)[:-1] + (pattern.patch_side,) * 2)
    data = np.abs(forward(pattern, x) - payload).sum(axis=-1)
    reg = np.abs(wavelet.analyze(x)).sum(axis=(-2, -1))
    return lam * data + reg


def solve_pd(payload, pattern: Pattern, config: PdConfig, domain: ValidityDomain = DEFAULT_DOMAIN,
             callback=None) -> np.ndarray:
    """Run the iteration on raw measurements of shape ``(..., M)``.

    ``config`` must already be resolved. ``callback(i, x, r, s)`` is
    invoked after every iteration when given.
    """
    pbar = np.asarray(payload, dtype=np.float64)
    side = pattern.patch_side
    lead = pbar.shape[:-1]
    sigma, tau, theta, lam = config.sigma, config.tau, config.theta, config.lam

    x = np.zeros(lead + (side, side))
    x_bar = x.copy()
    r = np.zeros(lead + (pattern.m,))
    s = np.zeros(lead + (side, side))
    for i in range(config.iterations):
        r = prox_f1_star(r + sigma * forward(pattern, x_bar), sigma, lam, pbar)
        s = prox_f2_star(s + sigma * wavelet.analyze(x_bar))
        step = x - 0.5 * tau * adjoint(pattern, r) - 0.5 * tau * wavelet.synthesize(s)
        x_new, _ = prox_g(step, step, domain)
        x_bar = x_new + theta * (x_new - x)
        x = x_new
        if callback is not None:
            callback(i, x, r, s)
    return x


def reconstruct_real(descriptor: Descriptor, pattern: Pattern, config: PdConfig | None = None,
                     force: bool = False, domain: ValidityDomain = DEFAULT_DOMAIN,
                     callback=None) -> np.ndarray:
    """Reconstruct patch(es) from a real-valued descriptor.

    Binary descriptors are rejected unless ``force`` is set, in which case
    the signs are used as real measurements. This tends to be unstable and
    can collapse to the flat patch.
    """
    descriptor.check_pattern(pattern)
    if not force:
        descriptor.require(binary=False)
    cfg = (config or PdConfig()).resolve(pattern)
    return solve_pd(descriptor.payload, pattern, cfg, domain, callback)


class PrimalDualReconstructor(TransformerMixin, BaseEstimator):
    """Transformer from real descriptors ``(n, M)`` to patches ``(n, side, side)``.

    Parameters
    ----------
    pattern : Pattern
        Pattern that produced the descriptors.
    lam : float
        Weight of the l1 data term.
    n_iter : int
        Number of primal-dual iterations.
    theta : float
        Extrapolation parameter in [0, 1].
    gamma : float or None
        Bound on the stacked operator norm; estimated in ``fit`` when None.
    force_real : bool
        Accept sign payloads and treat them as real measurements.
    """

    def __init__(self, pattern=None, lam=0.1, n_iter=1000, theta=1.0, gamma=None, force_real=False):
        self.pattern = pattern
        self.lam = lam
        self.n_iter = n_iter
        self.theta = theta
        self.gamma = gamma
        self.force_real = force_real

    def fit(self, X=None, y=None):
        pattern = check_pattern(self.pattern)
        self.config_ = PdConfig(lam=self.lam, iterations=self.n_iter, theta=self.theta,
                                gamma=self.gamma).resolve(pattern)
        self.gamma_ = self.config_.gamma
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        D = check_descriptors(X, self.pattern.m, binary=None if self.force_real else False)
        return solve_pd(D, self.pattern, self.config_)
