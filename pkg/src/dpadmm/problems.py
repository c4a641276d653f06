"""Graph-guided fused lasso problem layer.

The model is logistic empirical risk with an L1 penalty routed through an
equality constraint:

    min_x  (1/n) sum_i log(1 + exp(-m_i <l_i, x>))  +  lam * ||y||_1
    s.t.   A x - y = 0,     A = [W; I]

W couples feature pairs (one row per graph edge), the identity block carries
plain sparsity.  The paper source for W (sparse inverse covariance selection)
publishes neither penalty nor graphs, so this package builds W by thresholding
the empirical feature correlation matrix instead -- same structural role,
deterministic, but not the original graphs.  Results on real datasets are
therefore comparable in shape, not bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .datasets import Dataset
from .linalg import as_csr, spectral_norm_sq


@dataclass
class ConstraintSystem:
    """The (A, B, c) of the equality constraint ``A x + B y = c``.

    Only ``B = -I`` (with square B, so d2 = d3) is supported by the solvers;
    it is what makes the y-update a closed-form soft-threshold.
    """

    a: sp.csr_array
    c: np.ndarray
    b_is_neg_identity: bool = True
    spectral_sq: float = field(default=0.0)  # cached ||A^T A||_2

    def residual(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``A x + B y - c`` specialized to B = -I."""
        if not self.b_is_neg_identity:
            raise NotImplementedError("only B = -I constraint systems are supported")
        return self.a @ x - y - self.c


@dataclass
class ErmProblem:
    """Dataset + constraints + regularization weight + per-sample gradient bound."""

    data: Dataset
    constraints: ConstraintSystem
    lam: float
    clip: float = 1.0

    def __post_init__(self):
        if self.constraints.a.shape[1] != self.data.n_features:
            raise ValueError(
                f"constraint matrix has {self.constraints.a.shape[1]} columns, "
                f"dataset has {self.data.n_features} features"
            )
        if self.lam < 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if not self.clip > 0:
            raise ValueError(f"clip must be positive, got {self.clip}")


def logistic_loss(x: np.ndarray, data: Dataset) -> float:
    """Average logistic loss ``(1/n) sum_i log(1 + exp(-m_i <l_i, x>))``.

    Uses ``log(1+e^z) = max(z, 0) + log1p(e^{-|z|})`` so large margins never
    overflow.
    """
    z = -data.labels * (data.features @ x)
    return float(np.mean(np.logaddexp(0.0, z)))


def logistic_grad_clipped(x: np.ndarray, data: Dataset, clip: float = np.inf) -> np.ndarray:
    """Averaged logistic gradient with per-sample L2 clipping.

    Each per-sample gradient ``-m_i * sigmoid(-m_i <l_i, x>) * l_i`` whose norm
    exceeds ``clip`` is rescaled onto the radius-``clip`` ball *before*
    averaging; that per-sample bound is what fixes the query sensitivity at
    ``clip / n``.  ``clip = inf`` gives the exact averaged gradient.
    """
    if not clip > 0:
        raise ValueError(f"clip must be positive, got {clip}")
    labels = data.labels.astype(float)
    z = -labels * (data.features @ x)
    s = expit(z)  # sigmoid(-m_i <l_i, x>), in (0, 1)
    per_sample_norm = s * data.row_norms()
    scale = np.ones_like(s)
    if np.isfinite(clip):
        over = per_sample_norm > clip
        scale[over] = clip / per_sample_norm[over]
    coeff = -labels * s * scale
    return (data.features.T @ coeff) / data.n_samples


def smoothness_constant(data: Dataset) -> float:
    """Lipschitz constant of the averaged logistic gradient: ``max_i ||l_i||^2 / 4``."""
    if data.n_samples == 0:
        raise ValueError("smoothness_constant: empty dataset")
    return float(np.max(data.row_norms()) ** 2) / 4.0


def soft_threshold(z: np.ndarray, kappa: float) -> np.ndarray:
    """Elementwise ``sign(z) * max(|z| - kappa, 0)``, the prox of ``kappa * |.|``."""
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - kappa, 0.0)


def build_graph_w(data: Dataset, threshold: float) -> sp.csr_array:
    """Pairwise feature-coupling rows from correlation thresholding.

    For each feature pair (j, k), j < k, with ``|corr(j, k)| >= threshold``,
    emit a row with +1 at j and ``-sign(corr)`` at k: positively correlated
    features are fused toward equality, negatively correlated ones toward
    opposition.  Rows are ordered lexicographically by (j, k).  Zero-variance
    features join no edges.  May return a 0-row matrix.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    features = data.features
    n, d = features.shape
    gram = (features.T @ features).toarray() / n
    means = np.asarray(features.mean(axis=0)).ravel()
    cov = gram - np.outer(means, means)
    var = np.clip(np.diag(cov).copy(), 0.0, None)
    # Guard against constant features whose variance only cancels approximately.
    alive = var > 1e-12 * np.maximum(np.diag(gram), 1.0)
    std = np.sqrt(np.where(alive, var, 1.0))
    corr = cov / np.outer(std, std)

    j_idx, k_idx = np.triu_indices(d, k=1)
    keep = (np.abs(corr[j_idx, k_idx]) >= threshold) & alive[j_idx] & alive[k_idx]
    j_edges, k_edges = j_idx[keep], k_idx[keep]
    n_edges = j_edges.size
    rows = np.repeat(np.arange(n_edges), 2)
    cols = np.empty(2 * n_edges, dtype=np.int64)
    vals = np.empty(2 * n_edges)
    cols[0::2] = j_edges
    cols[1::2] = k_edges
    vals[0::2] = 1.0
    vals[1::2] = -np.sign(corr[j_edges, k_edges])
    return as_csr(sp.coo_array((vals, (rows, cols)), shape=(n_edges, d)))


def build_fused_lasso_constraints(w: sp.csr_array) -> ConstraintSystem:
    """Stack ``A = [W; I]`` over the ``d1 x d1`` identity, with B = -I and c = 0."""
    d1 = w.shape[1]
    a = as_csr(sp.vstack([sp.csr_array(w), sp.eye_array(d1, format="csr")], format="csr"))
    return ConstraintSystem(
        a=a,
        c=np.zeros(a.shape[0]),
        b_is_neg_identity=True,
        spectral_sq=spectral_norm_sq(a),
    )


def objective(x: np.ndarray, y: np.ndarray, problem: ErmProblem) -> float:
    """``logistic_loss(x) + lam * ||y||_1``."""
    return logistic_loss(x, problem.data) + problem.lam * float(np.sum(np.abs(y)))


def l1_subgradient(y: np.ndarray, lam: float) -> np.ndarray:
    """Canonical subgradient of ``lam * ||.||_1``: ``lam * sign(y)``, 0 on zeros."""
    return lam * np.sign(y)


def r_criterion(
    x_tilde: np.ndarray,
    y_tilde: np.ndarray,
    x_star: np.ndarray,
    y_star: np.ndarray,
    problem: ErmProblem,
) -> float:
    """Two-term Bregman-type optimality gap at (x_tilde, y_tilde).

    ``f(xt) - f(x*) - <grad f(x*), xt - x*> + g(yt) - g(y*) - <g'(y*), yt - y*>``
    with f the exact (unclipped) logistic risk and g the L1 term.  Non-negative
    for any valid subgradient choice by convexity; exactly zero at the base
    point.  (x*, y*) should come from a high-accuracy non-private solve.
    """
    if x_tilde.shape != x_star.shape or y_tilde.shape != y_star.shape:
        raise ValueError(
            f"r_criterion: shape mismatch {x_tilde.shape}/{x_star.shape}, "
            f"{y_tilde.shape}/{y_star.shape}"
        )
    grad_star = logistic_grad_clipped(x_star, problem.data, clip=np.inf)
    f_gap = (
        logistic_loss(x_tilde, problem.data)
        - logistic_loss(x_star, problem.data)
        - float(grad_star @ (x_tilde - x_star))
    )
    sub_star = l1_subgradient(y_star, problem.lam)
    g_gap = (
        problem.lam * float(np.sum(np.abs(y_tilde)))
        - problem.lam * float(np.sum(np.abs(y_star)))
        - float(sub_star @ (y_tilde - y_star))
    )
    return f_gap + g_gap
