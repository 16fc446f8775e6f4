"""Local models at the current iterate.

Evaluates the second-order Taylor expansion T(s), the cubic regularized
model m(s) = T(s) + (sigma/3)||s||^3, its gradient and smallest curvature,
and the quadratic regularized model T(s) + (lambda_hat/2)||s||^2 used by the
regularized Newton corrector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .second_order import min_eig


@dataclass(frozen=True)
class ModelContext:
    """Frozen oracle data (f, g, H, sigma) at one iterate.

    H is symmetrized on construction so downstream factorizations never see
    oracle round-off asymmetry. Immutable; all model operations are pure.
    """

    f0: float
    g: np.ndarray
    H: object = field(repr=False)
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        g = np.asarray(self.g, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient has non-finite entries")
        object.__setattr__(self, "g", g)
        H = self.H
        if sp.issparse(H):
            H = 0.5 * (H + H.T)
        else:
            H = np.asarray(H, dtype=float)
            H = 0.5 * (H + H.T)
        object.__setattr__(self, "H", H)
        if H.shape != (g.size, g.size):
            raise ValueError("H and g dimensions disagree")

    @property
    def n(self) -> int:
        return self.g.size

    def hess_product(self, s: np.ndarray) -> np.ndarray:
        out = self.H @ s
        return np.asarray(out).ravel()


def _check_dim(ctx: ModelContext, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (ctx.n,):
        raise ValueError(f"step has dimension {s.shape}, expected ({ctx.n},)")
    return s


def evaluate_model(ctx: ModelContext, s, Hs=None) -> tuple[float, float]:
    """Return (T(s), m(s)) with m(s) = T(s) + (sigma/3)||s||^3.

    Pass a precomputed Hs to reuse the Hessian product within one check.
    """
    s = _check_dim(ctx, s)
    if Hs is None:
        Hs = ctx.hess_product(s)
    taylor = ctx.f0 + float(s @ ctx.g) + 0.5 * float(s @ Hs)
    cubic = taylor + (ctx.sigma / 3.0) * float(np.linalg.norm(s)) ** 3
    return taylor, cubic


def model_gradient(ctx: ModelContext, s, Hs=None) -> np.ndarray:
    """Gradient of the cubic model: g + H s + sigma ||s|| s."""
    s = _check_dim(ctx, s)
    if Hs is None:
        Hs = ctx.hess_product(s)
    return ctx.g + Hs + ctx.sigma * float(np.linalg.norm(s)) * s


def model_curvature_min(ctx: ModelContext, s) -> float:
    """Smallest eigenvalue of the cubic-model Hessian at s.

    The Hessian is H + sigma ||s|| I + (sigma/||s||) s s^T for s != 0 and
    reduces to H at s = 0 (the continuous limit; the curvature test is only
    ever applied at nonzero trial steps).
    """
    s = _check_dim(ctx, s)
    snorm = float(np.linalg.norm(s))
    H = ctx.H.toarray() if sp.issparse(ctx.H) else ctx.H
    if snorm == 0.0:
        lam, _ = min_eig(H)
        return lam
    M = H + ctx.sigma * snorm * np.eye(ctx.n) + (ctx.sigma / snorm) * np.outer(s, s)
    lam, _ = min_eig(M)
    return lam


def quad_reg_value(ctx: ModelContext, s, lambda_hat: float, Hs=None) -> float:
    """Quadratic regularized model T(s) + (lambda_hat/2)||s||^2."""
    if lambda_hat < 0.0:
        raise ValueError("lambda_hat must be nonnegative")
    s = _check_dim(ctx, s)
    taylor, _ = evaluate_model(ctx, s, Hs=Hs)
    return taylor + 0.5 * lambda_hat * float(s @ s)
