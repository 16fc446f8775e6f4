"""Second-order optimality support.

Holds the smallest-eigenvalue routine used for the curvature tests and the
hard case, the spectral interval estimate, the extended configuration with
the curvature constant theta2 and the Hessian tolerance eps_H, and the
solver variant that certifies an approximate second-order point by gating
the regularized Newton step on strict positive definiteness and by testing
the curvature of the regularized model at every accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import SolverConfig
from .errors import EigenSolveError

DENSE_EIG_CUTOFF = 2000


@dataclass
class SecondOrderConfig(SolverConfig):
    theta2: float = 0.1
    eps_H: float = 1.0e-4

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.theta2 <= 0.0:
            raise ValueError("theta2 must be positive")
        if not (0.0 < self.eps_H < 1.0):
            raise ValueError("eps_H must lie in (0, 1)")


def gershgorin_interval(H) -> tuple[float, float]:
    """Gershgorin disc bounds (lower, upper) on the spectrum of symmetric H."""
    if sp.issparse(H):
        d = H.diagonal()
        radii = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(d)
    else:
        A = np.asarray(H, dtype=float)
        d = np.diag(A)
        radii = np.abs(A).sum(axis=1) - np.abs(d)
    return float(np.min(d - radii)), float(np.max(d + radii))


def min_eig(H, want_vector: bool = False, maxiter: int = 10000):
    """Smallest eigenvalue of symmetric H, optionally with a unit eigenvector.

    Dense symmetric eigendecomposition up to DENSE_EIG_CUTOFF; above that a
    shift-and-invert Lanczos iteration anchored below the Gershgorin bound.
    Raises EigenSolveError if the iterative path does not converge.
    """
    n = H.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        A = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
        A = 0.5 * (A + A.T)
        if want_vector:
            w, v = sla.eigh(A)
            return float(w[0]), v[:, 0].copy()
        return float(sla.eigvalsh(A)[0]), None

    lo, hi = gershgorin_interval(H)
    anchor = lo - 1.0e-3 * max(1.0, abs(lo), abs(hi))
    try:
        vals, vecs = spla.eigsh(H, k=1, sigma=anchor, which="LM", maxiter=maxiter)
    except Exception as exc:  # ArpackNoConvergence, factorization trouble
        raise EigenSolveError(f"smallest-eigenvalue iteration failed: {exc}") from exc
    v = vecs[:, 0]
    return float(vals[0]), v / np.linalg.norm(v)


def far2so_solve(problem, cfg: SecondOrderConfig):
    """Frozen-subspace run targeting a second-order point.

    Terminates only when both the gradient tolerance and
    lambda_min(H) >= -eps_H hold; every accepted step additionally passes the
    model-curvature test with constant theta2, and the regularized Newton
    corrector is accepted only when the shifted Hessian is strictly positive
    definite (verified from the factorization inertia).
    """
    if not isinstance(cfg, SecondOrderConfig):
        raise TypeError("far2so_solve requires a SecondOrderConfig")
    # Imported here: driver depends on this module's eigenvalue routine.
    from .driver import _minimize

    return _minimize(problem, cfg, solver_label="FAR2-SO", frozen=True,
                     second_order=True)
