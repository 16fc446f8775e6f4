"""Solver parameter sets.

The defaults follow the standard tuning for adaptive second-order
regularization: acceptance thresholds (eta1, eta2) = (0.1, 0.8), scaling
factors (gamma1, gamma2) = (0.1, 2), stationarity constant theta1 = 0.1,
regularization floor 1e-8, step-ratio bounds (1e-20, 1e20) and a maximum
subspace dimension of 50.
"""

from __future__ import annotations

from dataclasses import dataclass

POLYNOMIAL = "polynomial"
RATIONAL = "rational"


@dataclass
class SolverConfig:
    eta1: float = 0.1
    eta2: float = 0.8
    gamma1: float = 0.1
    gamma2: float = 2.0
    theta1: float = 0.1
    sigma0: float = 1.0
    sigma_min: float = 1.0e-8
    c_low: float = 1.0e-20
    c_up: float = 1.0e20
    j_max: int = 50
    eps_rel: float = 1.0e-6
    max_iters: int = 5000
    time_limit: float = 7200.0
    space_kind: str = POLYNOMIAL

    def __post_init__(self) -> None:
        if not (0.0 < self.eta1 <= self.eta2 < 1.0):
            raise ValueError("require 0 < eta1 <= eta2 < 1")
        if not (0.0 < self.gamma1 < 1.0 < self.gamma2):
            raise ValueError("require 0 < gamma1 < 1 < gamma2")
        if self.theta1 <= 0.0:
            raise ValueError("theta1 must be positive")
        if not (0.0 < self.sigma_min <= self.sigma0):
            raise ValueError("require 0 < sigma_min <= sigma0")
        if not (0.0 < self.c_low < self.c_up):
            raise ValueError("require 0 < c_low < c_up")
        if self.j_max < 1:
            raise ValueError("j_max must be at least 1")
        if self.eps_rel <= 0.0:
            raise ValueError("eps_rel must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.time_limit <= 0.0:
            raise ValueError("time_limit must be positive")
        if self.space_kind not in (POLYNOMIAL, RATIONAL):
            raise ValueError(f"unknown space_kind {self.space_kind!r}")
