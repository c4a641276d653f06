"""Sparse matrix/vector kernels shared by the solvers.

Matrices are CSR (`scipy.sparse.csr_array`), vectors are 1-d float arrays.
Everything here is a pure function: no argument is mutated.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import cg as _scipy_cg

DEFAULT_SPECTRAL_TOL = 1e-9
DEFAULT_CG_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """An iterative solve stopped before reaching its tolerance.

    Attributes:
        residual_norm: Euclidean norm of the final residual.
    """

    def __init__(self, message: str, residual_norm: float):
        super().__init__(message)
        self.residual_norm = residual_norm


def as_csr(matrix) -> sp.csr_array:
    """Coerce to canonical CSR: sorted indices, duplicates summed, no stored zeros."""
    m = sp.csr_array(matrix)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def matvec(m: sp.csr_array, v: np.ndarray) -> np.ndarray:
    """Return ``m @ v``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != m.shape[1]:
        raise ValueError(
            f"matvec: vector of length {v.shape} does not match matrix with {m.shape[1]} columns"
        )
    return m @ v


def matvec_transpose(m: sp.csr_array, v: np.ndarray) -> np.ndarray:
    """Return ``m.T @ v`` without materializing the transpose."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != m.shape[0]:
        raise ValueError(
            f"matvec_transpose: vector of length {v.shape} does not match matrix with {m.shape[0]} rows"
        )
    return m.T @ v


def spectral_norm_sq(
    m: sp.csr_array,
    tol: float = DEFAULT_SPECTRAL_TOL,
    max_iters: int = 10_000,
) -> float:
    """Estimate ``||M^T M||_2`` (the squared largest singular value of M).

    Power iteration on ``M^T M`` starting from the normalized all-ones vector,
    stopped when the Rayleigh quotient's relative change drops below ``tol``.
    The estimate approaches the true value from below.  If the all-ones vector
    happens to lie in the null space of M (e.g. a pure difference matrix), the
    iteration restarts from a fixed-seed random vector so the result stays
    deterministic.
    """
    if tol <= 0:
        raise ValueError("spectral_norm_sq: tol must be positive")
    if m.nnz == 0:
        return 0.0
    d = m.shape[1]
    v = np.ones(d) / np.sqrt(d)
    estimate = 0.0
    for _ in range(max_iters):
        w = m.T @ (m @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v is in the null space; restart deterministically off it.
            v = np.random.default_rng(0).standard_normal(d)
            v /= np.linalg.norm(v)
            estimate = 0.0
            continue
        new_estimate = float(v @ w)  # Rayleigh quotient, ||v|| == 1
        v = w / norm_w
        if abs(new_estimate - estimate) <= tol * abs(new_estimate):
            return new_estimate
        estimate = new_estimate
    return estimate


def solve_spd(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = DEFAULT_CG_TOL,
    max_iters: int | None = None,
) -> np.ndarray:
    """Solve ``M z = b`` for symmetric positive definite M given as an operator.

    Conjugate gradients; M is touched only through ``apply``.  Returns z with
    ``||M z - b|| <= tol * max(1, ||b||)``, verified by direct substitution.

    Raises:
        ConvergenceError: if the bound is not met within ``max_iters``
            iterations; carries the final residual norm.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    op = LinearOperator((n, n), matvec=apply, dtype=float)
    # Inner target slightly below tol: scipy tracks the recursive residual,
    # which can drift a little from the true one checked below.
    z, _ = _scipy_cg(op, b, rtol=0.5 * tol, atol=0.5 * tol, maxiter=max_iters)
    residual_norm = float(np.linalg.norm(apply(z) - b))
    if residual_norm > tol * max(1.0, float(np.linalg.norm(b))):
        raise ConvergenceError(
            f"solve_spd: conjugate gradients stopped with residual {residual_norm:.3e} "
            f"above tolerance {tol:.3e}",
            residual_norm,
        )
    return z
