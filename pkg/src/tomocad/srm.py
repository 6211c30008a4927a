"""Numeric oracle for the square-root measurement success probability.

The attack analysis relies on a closed form for discriminating n symmetric
pure states with a common pairwise overlap.  This module rebuilds the same
quantity from first principles, via the Gram matrix and its positive
semidefinite square root, so the closed form can be cross-checked on a grid.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass

import numpy as np

from .analysis import srm_success_closed
from .channel import ChannelParams

__all__ = [
    "GramMatrix",
    "SrmCheck",
    "gram_matrix",
    "matrix_sqrt_psd",
    "srm_success_probability",
    "verify_srm",
]

# most negative eigenvalue tolerated before a matrix is rejected as indefinite
PSD_TOL = 1e-10
# symmetry and unit-diagonal slack on supplied Gram matrices
GRAM_TOL = 1e-12


@dataclass(frozen=True)
class GramMatrix:
    """Gram matrix of n symmetric states with one common pairwise overlap."""

    n: int
    overlap: float
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != self.n:
            raise ValueError(f"entries must be an {self.n} x {self.n} matrix, got shape {m.shape}")
        if np.abs(m - m.T).max() > GRAM_TOL:
            raise ValueError("Gram matrix must be symmetric")
        if np.abs(np.diag(m) - 1.0).max() > GRAM_TOL:
            raise ValueError("Gram matrix must have unit diagonal")
        object.__setattr__(self, "entries", m)


def gram_matrix(n: int, overlap: float) -> GramMatrix:
    """Gram matrix with unit diagonal and a constant off-diagonal overlap.

    Its spectrum is ``1 + (n-1)*overlap`` once and ``1 - overlap`` with
    multiplicity n - 1, so it is positive semidefinite for overlap in [0, 1].
    """
    n = operator.index(n)
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    m = np.full((n, n), float(overlap))
    np.fill_diagonal(m, 1.0)
    return GramMatrix(n, float(overlap), m)


def matrix_sqrt_psd(gram: GramMatrix) -> np.ndarray:
    """Symmetric square root of a positive semidefinite Gram matrix.

    Eigenvalues in [-PSD_TOL, 0) are treated as roundoff and clamped to 0;
    anything more negative raises.  Eigenvalues at the eigensolver's own
    roundoff level are also snapped to 0: they are genuine zeros of a
    rank-deficient matrix, and letting sqrt amplify them would pollute the
    root at the sqrt(eps) scale.
    """
    w, v = np.linalg.eigh(gram.entries)
    if w.min() < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite: eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    floor = w.max() * len(w) * 4.0 * np.finfo(float).eps
    w[w < floor] = 0.0
    return (v * np.sqrt(w)) @ v.T


def srm_success_probability(n: int, overlap: float) -> float:
    """Discrimination success probability rebuilt from the Gram matrix.

    For n equiprobable pure states the square-root measurement succeeds with
    probability ``(1/n) * sum_i sqrt(G)_{ii}^2``.  Agrees with the closed
    form ``srm_success_closed`` to within 1e-10 over the full overlap range.
    """
    root = matrix_sqrt_psd(gram_matrix(n, overlap))
    d = np.diag(root)
    return float(np.sum(d * d) / n)


@dataclass(frozen=True)
class SrmCheck:
    """One closed-form-versus-oracle comparison."""

    n: int
    L: int
    overlap: float
    closed_form: float
    oracle: float
    abs_diff: float
    passed: bool


def verify_srm(params: ChannelParams, L: int, tol: float = 1e-10) -> SrmCheck:
    """Cross-check the attacker's guessing probability at block length L.

    The closed form evaluated at overlap ``lam ** L`` must agree with the
    Gram-matrix oracle to within ``tol``.
    """
    L = operator.index(L)
    if L < 1:
        raise ValueError(f"block length must be at least 1, got {L}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    g = params.lam**L
    closed = srm_success_closed(params.n, g)
    oracle = srm_success_probability(params.n, g)
    diff = abs(closed - oracle)
    return SrmCheck(params.n, L, g, closed, oracle, diff, diff <= tol)
