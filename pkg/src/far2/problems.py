"""Objective oracles.

A registry of classic unconstrained test problems coded from their standard
algebraic definitions (CUTEst-style names and starting points), logistic and
sigmoid classification losses, synthetic data generation, LIBSVM-format
ingestion, and a finite-difference derivative checker.

Hessians are assembled densely up to SPARSE_CUTOFF variables; beyond that
the structurally sparse problems return scipy.sparse matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import LibsvmParseError

SPARSE_CUTOFF = 2000


class ObjectiveProblem:
    """Smooth objective oracle with per-order evaluation counters.

    eval(x, order) returns (f, g, H) with g/H set for order >= 1 / order 2;
    n_f, n_g, n_H count the calls of each order.
    """

    def __init__(self, name, n, x0, raw_eval):
        self.name = name
        self.n = int(n)
        self.x0 = np.asarray(x0, dtype=float)
        self._raw = raw_eval
        self.n_f = 0
        self.n_g = 0
        self.n_H = 0

    def eval(self, x, order: int = 2):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n},)")
        if order == 0:
            self.n_f += 1
        elif order == 1:
            self.n_g += 1
        elif order == 2:
            self.n_H += 1
        else:
            raise ValueError("order must be 0, 1 or 2")
        return self._raw(x, order)

    def __repr__(self):
        return f"ObjectiveProblem({self.name!r}, n={self.n})"


def _tridiag(main, lower, n):
    if n > SPARSE_CUTOFF:
        return sp.diags([lower, main, lower], [-1, 0, 1], format="csr")
    H = np.diag(main)
    H += np.diag(lower, -1) + np.diag(lower, 1)
    return H


# --- registry problems ----------------------------------------------------

def _rosenbr(n):
    """Chained Rosenbrock; start alternates (-1.2, 1). n = 2 is the classic."""
    def ev(x, order):
        d = x[1:] - x[:-1] ** 2
        e = 1.0 - x[:-1]
        f = 100.0 * float(d @ d) + float(e @ e)
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[:-1] = -400.0 * x[:-1] * d - 2.0 * e
        g[1:] += 200.0 * d
        if order == 1:
            return f, g, None
        main = np.zeros(n)
        main[:-1] += 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
        main[1:] += 200.0
        lower = -400.0 * x[:-1]
        return f, g, _tridiag(main, lower, n)
    x0 = np.where(np.arange(n) % 2 == 0, -1.2, 1.0)
    return x0, ev


def _quad(n):
    """Convex quadratic f = 0.5 * sum(i * x_i^2); start at ones."""
    diag = np.arange(1.0, n + 1.0)
    def ev(x, order):
        f = 0.5 * float(diag @ (x * x))
        if order == 0:
            return f, None, None
        g = diag * x
        if order == 1:
            return f, g, None
        H = sp.diags(diag, format="csr") if n > SPARSE_CUTOFF else np.diag(diag)
        return f, g, H
    return np.ones(n), ev


def _arwhead(n):
    """Arrowhead function sum((x_i^2 + x_n^2)^2 - 4 x_i + 3); start at ones."""
    def ev(x, order):
        xn = x[-1]
        t = x[:-1] ** 2 + xn ** 2
        f = float((t ** 2).sum() - 4.0 * x[:-1].sum() + 3.0 * (n - 1))
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[:-1] = 4.0 * x[:-1] * t - 4.0
        g[-1] = float(4.0 * xn * t.sum())
        if order == 1:
            return f, g, None
        H = np.zeros((n, n))
        idx = np.arange(n - 1)
        H[idx, idx] = 4.0 * t + 8.0 * x[:-1] ** 2
        H[idx, -1] = H[-1, idx] = 8.0 * x[:-1] * xn
        H[-1, -1] = float((4.0 * t + 8.0 * xn ** 2).sum())
        return f, g, H
    return np.ones(n), ev


def _bdarwhd(n):
    """Block-diagonal arrowhead: blocks of 4 with the 4th variable as hub."""
    def ev(x, order):
        y = x.reshape(-1, 4)
        hub = y[:, 3:4]
        t = y[:, :3] ** 2 + hub ** 2
        f = float((t ** 2).sum() - 4.0 * y[:, :3].sum() + 3.0 * 3 * (n // 4))
        if order == 0:
            return f, None, None
        G = np.zeros_like(y)
        G[:, :3] = 4.0 * y[:, :3] * t - 4.0
        G[:, 3] = (4.0 * hub * t).sum(axis=1)
        g = G.ravel()
        if order == 1:
            return f, g, None
        H = np.zeros((n, n))
        for b in range(n // 4):
            o = 4 * b
            tb = t[b]
            for j in range(3):
                H[o + j, o + j] = 4.0 * tb[j] + 8.0 * y[b, j] ** 2
                H[o + j, o + 3] = H[o + 3, o + j] = 8.0 * y[b, j] * y[b, 3]
            H[o + 3, o + 3] = float((4.0 * tb + 8.0 * y[b, 3] ** 2).sum())
        return f, g, H
    return np.ones(n), ev


def _dqrtic(n):
    """Separable quartic sum((x_i - i)^4); start at 2."""
    i = np.arange(1.0, n + 1.0)
    def ev(x, order):
        r = x - i
        f = float((r ** 4).sum())
        if order == 0:
            return f, None, None
        g = 4.0 * r ** 3
        if order == 1:
            return f, g, None
        d = 12.0 * r ** 2
        H = sp.diags(d, format="csr") if n > SPARSE_CUTOFF else np.diag(d)
        return f, g, H
    return 2.0 * np.ones(n), ev


def _tridia(n):
    """Convex quadratic (x_1-1)^2 + sum_i i*(2 x_i - x_{i-1})^2; start at ones."""
    w = np.arange(2.0, n + 1.0)
    def ev(x, order):
        r = 2.0 * x[1:] - x[:-1]
        f = float((x[0] - 1.0) ** 2 + (w * r * r).sum())
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[0] = 2.0 * (x[0] - 1.0)
        g[1:] += 4.0 * w * r
        g[:-1] += -2.0 * w * r
        if order == 1:
            return f, g, None
        main = np.zeros(n)
        main[0] = 2.0
        main[1:] += 8.0 * w
        main[:-1] += 2.0 * w
        lower = -4.0 * w
        return f, g, _tridiag(main, lower, n)
    return np.ones(n), ev


def _engval1(n):
    """sum((x_i^2 + x_{i+1}^2)^2 - 4 x_i + 3); start at 2."""
    def ev(x, order):
        t = x[:-1] ** 2 + x[1:] ** 2
        f = float((t ** 2).sum() - 4.0 * x[:-1].sum() + 3.0 * (n - 1))
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[:-1] += 4.0 * x[:-1] * t - 4.0
        g[1:] += 4.0 * x[1:] * t
        if order == 1:
            return f, g, None
        main = np.zeros(n)
        main[:-1] += 4.0 * t + 8.0 * x[:-1] ** 2
        main[1:] += 4.0 * t + 8.0 * x[1:] ** 2
        lower = 8.0 * x[:-1] * x[1:]
        return f, g, _tridiag(main, lower, n)
    return 2.0 * np.ones(n), ev


def _nondia(n):
    """Shanno's nondiagonal Rosenbrock variant; start at -ones."""
    def ev(x, order):
        r = x[0] - x[1:] ** 2
        f = float((x[0] - 1.0) ** 2 + 100.0 * (r * r).sum())
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[0] = 2.0 * (x[0] - 1.0) + 200.0 * r.sum()
        g[1:] = -400.0 * x[1:] * r
        if order == 1:
            return f, g, None
        H = np.zeros((n, n))
        H[0, 0] = 2.0 + 200.0 * (n - 1)
        H[0, 1:] = H[1:, 0] = -400.0 * x[1:]
        idx = np.arange(1, n)
        H[idx, idx] = -400.0 * r + 800.0 * x[1:] ** 2
        return f, g, H
    return -np.ones(n), ev


def _woods(n):
    """Extended Woods function on blocks of 4; start tiles (-3, -1, -3, -1)."""
    def ev(x, order):
        y = x.reshape(-1, 4)
        x1, x2, x3, x4 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
        a = x2 - x1 ** 2
        b = x4 - x3 ** 2
        c = x2 + x4 - 2.0
        d = x2 - x4
        f = float((100.0 * a * a + (1.0 - x1) ** 2 + 90.0 * b * b
                   + (1.0 - x3) ** 2 + 10.0 * c * c + 0.1 * d * d).sum())
        if order == 0:
            return f, None, None
        G = np.empty_like(y)
        G[:, 0] = -400.0 * x1 * a - 2.0 * (1.0 - x1)
        G[:, 1] = 200.0 * a + 20.0 * c + 0.2 * d
        G[:, 2] = -360.0 * x3 * b - 2.0 * (1.0 - x3)
        G[:, 3] = 180.0 * b + 20.0 * c - 0.2 * d
        g = G.ravel()
        if order == 1:
            return f, g, None
        H = np.zeros((n, n))
        for k in range(n // 4):
            o = 4 * k
            H[o, o] = 1200.0 * x1[k] ** 2 - 400.0 * x2[k] + 2.0
            H[o, o + 1] = H[o + 1, o] = -400.0 * x1[k]
            H[o + 1, o + 1] = 220.2
            H[o + 1, o + 3] = H[o + 3, o + 1] = 19.8
            H[o + 2, o + 2] = 1080.0 * x3[k] ** 2 - 360.0 * x4[k] + 2.0
            H[o + 2, o + 3] = H[o + 3, o + 2] = -360.0 * x3[k]
            H[o + 3, o + 3] = 200.2
        return f, g, H
    return np.tile([-3.0, -1.0, -3.0, -1.0], n // 4), ev


def _powellsg(n):
    """Extended Powell singular function; start tiles (3, -1, 0, 1)."""
    def ev(x, order):
        y = x.reshape(-1, 4)
        x1, x2, x3, x4 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
        a = x1 + 10.0 * x2
        b = x3 - x4
        c = x2 - 2.0 * x3
        d = x1 - x4
        f = float((a * a + 5.0 * b * b + c ** 4 + 10.0 * d ** 4).sum())
        if order == 0:
            return f, None, None
        G = np.empty_like(y)
        G[:, 0] = 2.0 * a + 40.0 * d ** 3
        G[:, 1] = 20.0 * a + 4.0 * c ** 3
        G[:, 2] = 10.0 * b - 8.0 * c ** 3
        G[:, 3] = -10.0 * b - 40.0 * d ** 3
        g = G.ravel()
        if order == 1:
            return f, g, None
        H = np.zeros((n, n))
        for k in range(n // 4):
            o = 4 * k
            dd = 120.0 * d[k] ** 2
            cc = 12.0 * c[k] ** 2
            H[o, o] = 2.0 + dd
            H[o, o + 1] = H[o + 1, o] = 20.0
            H[o, o + 3] = H[o + 3, o] = -dd
            H[o + 1, o + 1] = 200.0 + cc
            H[o + 1, o + 2] = H[o + 2, o + 1] = -2.0 * cc
            H[o + 2, o + 2] = 10.0 + 4.0 * cc
            H[o + 2, o + 3] = H[o + 3, o + 2] = -10.0
            H[o + 3, o + 3] = 10.0 + dd
        return f, g, H
    return np.tile([3.0, -1.0, 0.0, 1.0], n // 4), ev


def _edensch(n):
    """16 + sum((x_i-2)^4 + (x_i x_{i+1} - 2 x_{i+1})^2 + (x_{i+1}+1)^2); start 0."""
    def ev(x, order):
        a = x[:-1] - 2.0
        t = x[1:] * a
        u = x[1:] + 1.0
        f = 16.0 + float((a ** 4).sum() + (t * t).sum() + (u * u).sum())
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[:-1] += 4.0 * a ** 3 + 2.0 * t * x[1:]
        g[1:] += 2.0 * t * a + 2.0 * u
        if order == 1:
            return f, g, None
        main = np.zeros(n)
        main[:-1] += 12.0 * a ** 2 + 2.0 * x[1:] ** 2
        main[1:] += 2.0 * a ** 2 + 2.0
        lower = 4.0 * a * x[1:]
        return f, g, _tridiag(main, lower, n)
    return np.zeros(n), ev


def _cube(n):
    """(x_1-1)^2 + sum 100 (x_i - x_{i-1}^3)^2; start alternates (-1.2, 1)."""
    def ev(x, order):
        r = x[1:] - x[:-1] ** 3
        f = float((x[0] - 1.0) ** 2 + 100.0 * (r * r).sum())
        if order == 0:
            return f, None, None
        g = np.zeros_like(x)
        g[0] = 2.0 * (x[0] - 1.0)
        g[1:] += 200.0 * r
        g[:-1] += -600.0 * x[:-1] ** 2 * r
        if order == 1:
            return f, g, None
        main = np.zeros(n)
        main[0] = 2.0
        main[1:] += 200.0
        main[:-1] += -1200.0 * x[:-1] * r + 1800.0 * x[:-1] ** 4
        lower = -600.0 * x[:-1] ** 2
        return f, g, _tridiag(main, lower, n)
    x0 = np.where(np.arange(n) % 2 == 0, -1.2, 1.0)
    return x0, ev


def _eg2(n):
    """sum_{i<n} sin(x_1 + x_i^2 - 1) + 0.5 sin(x_n^2); start at zeros."""
    def ev(x, order):
        u = x[0] + x[: n - 1] ** 2 - 1.0
        xn = x[-1]
        f = float(np.sin(u).sum() + 0.5 * np.sin(xn * xn))
        if order == 0:
            return f, None, None
        cu = np.cos(u)
        g = np.zeros_like(x)
        g[0] += cu.sum()
        g[: n - 1] += 2.0 * x[: n - 1] * cu
        g[-1] += xn * np.cos(xn * xn)
        if order == 1:
            return f, g, None
        su = np.sin(u)
        H = np.zeros((n, n))
        # each term: -sin(u_j) v_j v_j^T + 2 cos(u_j) e_j e_j^T,
        # with v_j = e_0 + 2 x_j e_j (both hit x_0 when j = 0)
        v0 = 1.0 + 2.0 * x[0]
        H[0, 0] += -su[0] * v0 * v0 + 2.0 * cu[0]
        if n > 2:
            xs = x[1: n - 1]
            sj = su[1:]
            cj = cu[1:]
            H[0, 0] += -sj.sum()
            H[0, 1: n - 1] += -2.0 * xs * sj
            H[1: n - 1, 0] += -2.0 * xs * sj
            idx = np.arange(1, n - 1)
            H[idx, idx] += -4.0 * xs ** 2 * sj + 2.0 * cj
        H[-1, -1] += np.cos(xn * xn) - 2.0 * xn * xn * np.sin(xn * xn)
        return f, g, H
    return np.zeros(n), ev


def _hilbert(n):
    """Quadratic 0.5 x^T A x on the Hilbert matrix; start at -3."""
    i = np.arange(1, n + 1)
    A = 1.0 / (i[:, None] + i[None, :] - 1.0)
    def ev(x, order):
        Ax = A @ x
        f = 0.5 * float(x @ Ax)
        if order == 0:
            return f, None, None
        if order == 1:
            return f, Ax, None
        return f, Ax, A.copy()
    return -3.0 * np.ones(n), ev


def _indef(n):
    """100 sum sin(x_i/100) + 0.5 sum_{1<i<n} cos(2 x_i - x_1 - x_n).

    Indefinite-Hessian test problem; start x_i = i/(n+1).
    """
    def ev(x, order):
        u = 2.0 * x[1:-1] - x[0] - x[-1]
        f = float(100.0 * np.sin(0.01 * x).sum() + 0.5 * np.cos(u).sum())
        if order == 0:
            return f, None, None
        g = np.cos(0.01 * x).copy()
        su = np.sin(u)
        g[1:-1] += -su
        g[0] += 0.5 * su.sum()
        g[-1] += 0.5 * su.sum()
        if order == 1:
            return f, g, None
        cu = np.cos(u)
        H = np.zeros((n, n))
        d = -0.01 * np.sin(0.01 * x)
        H[np.arange(n), np.arange(n)] = d
        # -0.5 cos(u_i) w w^T with w = 2 e_i - e_0 - e_{n-1}
        idx = np.arange(1, n - 1)
        H[idx, idx] += -2.0 * cu
        H[0, 0] += -0.5 * cu.sum()
        H[-1, -1] += -0.5 * cu.sum()
        H[0, -1] += -0.5 * cu.sum()
        H[-1, 0] += -0.5 * cu.sum()
        H[idx, 0] += cu
        H[0, idx] += cu
        H[idx, -1] += cu
        H[-1, idx] += cu
        return f, g, H
    x0 = np.arange(1, n + 1) / (n + 1.0)
    return x0, ev


@dataclass(frozen=True)
class _RegistryEntry:
    builder: object
    min_n: int = 2
    multiple_of: int = 1
    note: str = ""


REGISTRY = {
    "ROSENBR": _RegistryEntry(_rosenbr, 2, 1, "chained Rosenbrock"),
    "QUAD": _RegistryEntry(_quad, 1, 1, "convex diagonal quadratic"),
    "ARWHEAD": _RegistryEntry(_arwhead, 2, 1, "arrowhead"),
    "BDARWHD": _RegistryEntry(_bdarwhd, 4, 4, "block-diagonal arrowhead"),
    "DQRTIC": _RegistryEntry(_dqrtic, 1, 1, "diagonal quartic"),
    "TRIDIA": _RegistryEntry(_tridia, 2, 1, "tridiagonal quadratic"),
    "ENGVAL1": _RegistryEntry(_engval1, 2, 1, "Engvall function"),
    "NONDIA": _RegistryEntry(_nondia, 2, 1, "nondiagonal Rosenbrock variant"),
    "WOODS": _RegistryEntry(_woods, 4, 4, "extended Woods"),
    "POWELLSG": _RegistryEntry(_powellsg, 4, 4, "extended Powell singular"),
    "EDENSCH": _RegistryEntry(_edensch, 2, 1, "Eden-Schittkowski chain"),
    "CUBE": _RegistryEntry(_cube, 2, 1, "chained cube"),
    "EG2": _RegistryEntry(_eg2, 3, 1, "trigonometric chain"),
    "HILBERT": _RegistryEntry(_hilbert, 2, 1, "Hilbert quadratic"),
    "INDEF": _RegistryEntry(_indef, 3, 1, "indefinite trigonometric"),
}


def registry_names() -> list[str]:
    return sorted(REGISTRY)


def get_problem(name: str, n: int) -> ObjectiveProblem:
    """Instantiate a registry problem at dimension n."""
    key = name.upper()
    if key not in REGISTRY:
        raise KeyError(f"unknown problem {name!r}; see registry_names()")
    entry = REGISTRY[key]
    n = int(n)
    if n < entry.min_n or n % entry.multiple_of != 0:
        raise ValueError(
            f"{key} needs n >= {entry.min_n}"
            + (f" and n % {entry.multiple_of} == 0" if entry.multiple_of > 1 else ""))
    x0, ev = entry.builder(n)
    return ObjectiveProblem(key, n, x0, ev)


# --- classification objectives --------------------------------------------

@dataclass
class ClassificationData:
    """Feature matrix, labels and sample count for a binary task."""

    A: np.ndarray
    b: np.ndarray
    N: int = 0

    def __post_init__(self):
        # sparse feature matrices are accepted and densified; the losses
        # build dense Hessians anyway at the scales this library targets
        if sp.issparse(self.A):
            self.A = self.A.toarray()
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise ValueError("A must be N x n with one label per row")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("non-finite feature entries")
        self.N = self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def remap_labels(data: ClassificationData, convention: str) -> ClassificationData:
    """Return a copy with labels in {-1,+1} ('pm1') or {0,1} ('01')."""
    b = data.b
    if convention == "pm1":
        nb = np.where(b > 0.0, 1.0, -1.0)
    elif convention == "01":
        nb = np.where(b > 0.0, 1.0, 0.0)
    else:
        raise ValueError("convention must be 'pm1' or '01'")
    return ClassificationData(A=data.A.copy(), b=nb)


def logistic_objective(data: ClassificationData) -> ObjectiveProblem:
    """Regularized logistic loss (1/N) sum log(1+exp(-b a^T x)) + ||x||^2/(2N).

    Labels must be in {-1,+1}; strictly convex (the regularizer keeps the
    Hessian at or above I/N). Start at the origin.
    """
    if not set(np.unique(data.b)) <= {-1.0, 1.0}:
        raise ValueError("logistic labels must lie in {-1, +1}")
    A, b, N = data.A, data.b, data.N
    n = data.n

    def ev(x, order):
        t = b * (A @ x)
        f = float(np.logaddexp(0.0, -t).mean() + 0.5 * float(x @ x) / N)
        if order == 0:
            return f, None, None
        sig = expit(t)
        g = A.T @ ((sig - 1.0) * b) / N + x / N
        if order == 1:
            return f, g, None
        w = sig * (1.0 - sig)
        H = (A.T * w) @ A / N + np.eye(n) / N
        return f, g, H

    return ObjectiveProblem(f"logistic[N={N}]", n, np.zeros(n), ev)


def sigmoid_objective(data: ClassificationData) -> ObjectiveProblem:
    """Sigmoid least-squares loss (1/N) sum (b - 1/(1+exp(-a^T x)))^2.

    Labels must be in {0,1}; nonconvex. Start at the origin.
    """
    if not set(np.unique(data.b)) <= {0.0, 1.0}:
        raise ValueError("sigmoid labels must lie in {0, 1}")
    A, b, N = data.A, data.b, data.N
    n = data.n

    def ev(x, order):
        p = expit(A @ x)
        r = b - p
        f = float(r @ r) / N
        if order == 0:
            return f, None, None
        q = p * (1.0 - p)
        g = A.T @ (-2.0 * r * q) / N
        if order == 1:
            return f, g, None
        w = 2.0 * (q * q - r * q * (1.0 - 2.0 * p))
        H = (A.T * w) @ A / N
        return f, g, H

    return ObjectiveProblem(f"sigmoid[N={N}]", n, np.zeros(n), ev)


def synth_classification(N: int, n: int, seed: int) -> ClassificationData:
    """Standard-normal features with a planted separator and 10% label noise.

    Deterministic for a fixed seed; labels in {-1,+1}.
    """
    if N < 1 or n < 1:
        raise ValueError("N and n must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, n))
    w = rng.standard_normal(n)
    b = np.where(A @ w >= 0.0, 1.0, -1.0)
    flip = rng.random(N) < 0.1
    b[flip] = -b[flip]
    return ClassificationData(A=A, b=b)


# --- LIBSVM format ----------------------------------------------------------

def load_libsvm(path, n_features: int | None = None,
                labels: str | None = None) -> ClassificationData:
    """Read sparse 'label idx:val ...' lines with 1-based indices.

    Feature dimension defaults to the largest index seen. `labels` may remap
    to 'pm1' or '01'.
    """
    rows = []
    targets = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                targets.append(float(parts[0]))
            except ValueError as exc:
                raise LibsvmParseError(f"line {lineno}: bad label {parts[0]!r}") from exc
            entries = []
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":")
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError as exc:
                    raise LibsvmParseError(f"line {lineno}: bad entry {tok!r}") from exc
                if idx < 1:
                    raise LibsvmParseError(f"line {lineno}: index {idx} not 1-based")
                entries.append((idx, val))
                max_idx = max(max_idx, idx)
            rows.append(entries)
    if not rows:
        raise LibsvmParseError(f"{path}: no data lines")
    n = n_features if n_features is not None else max_idx
    A = np.zeros((len(rows), n))
    for r, entries in enumerate(rows):
        for idx, val in entries:
            if idx <= n:
                A[r, idx - 1] = val
    data = ClassificationData(A=A, b=np.asarray(targets))
    if labels is not None:
        data = remap_labels(data, labels)
    return data


def save_libsvm(data: ClassificationData, path) -> None:
    """Write in sparse LIBSVM format (zeros omitted, 1-based indices)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, lab in zip(data.A, data.b):
            toks = [f"{lab:g}"]
            toks += [f"{j + 1}:{v:.17g}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(toks) + "\n")


# --- derivative checking ----------------------------------------------------

def fd_gradient(problem: ObjectiveProblem, x: np.ndarray) -> np.ndarray:
    """Central finite-difference gradient with h = eps^{1/3} (1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    h = np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.abs(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        fp = problem.eval(x + e, 0)[0]
        fm = problem.eval(x - e, 0)[0]
        g[i] = (fp - fm) / (2.0 * h[i])
    return g


def fd_hessian(problem: ObjectiveProblem, x: np.ndarray) -> np.ndarray:
    """Central finite differences of the analytic gradient."""
    x = np.asarray(x, dtype=float)
    h = np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + np.abs(x))
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        gp = problem.eval(x + e, 1)[1]
        gm = problem.eval(x - e, 1)[1]
        cols.append((gp - gm) / (2.0 * h[i]))
    H = np.column_stack(cols)
    return 0.5 * (H + H.T)


def check_derivatives(problem: ObjectiveProblem, n_points: int = 5,
                      seed: int = 0, spread: float = 0.5) -> tuple[float, float]:
    """Worst relative gradient / Hessian errors at x0 and random perturbations.

    Gradient error is ||g - g_fd|| / (1 + ||g||); Hessian error is the
    max-entry deviation relative to 1 + max|H|.
    """
    rng = np.random.default_rng(seed)
    points = [problem.x0.copy()]
    points += [problem.x0 + spread * rng.standard_normal(problem.n)
               for _ in range(n_points)]
    worst_g = worst_h = 0.0
    for x in points:
        _, g, H = problem.eval(x, 2)
        if sp.issparse(H):
            H = H.toarray()
        gfd = fd_gradient(problem, x)
        worst_g = max(worst_g, float(np.linalg.norm(g - gfd))
                      / (1.0 + float(np.linalg.norm(g))))
        hfd = fd_hessian(problem, x)
        worst_h = max(worst_h, float(np.max(np.abs(H - hfd)))
                      / (1.0 + float(np.max(np.abs(H)))))
    return worst_g, worst_h
