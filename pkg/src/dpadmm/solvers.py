"""ADMM, accelerated ADMM, and their gradient-perturbed private variants.

All four solvers share one loop over

    y_t = soft_threshold(A x_ref + u_ref, lam / rho)
    x_t = x_ref - (eta / gamma) * [grad(x_ref) + P_t + rho A^T (A x_ref - y_t + u_ref)]
    u_t = u_ref + A x_t - y_t

where the x-step is the closed form of the linearized proximal subproblem with
metric ``G = gamma I - eta rho A^T A`` (gamma >= eta rho ||A^T A||_2 + 1 keeps
G >= I).  The reference pair (x_ref, u_ref) is the plain iterate for the
unaccelerated solvers and the momentum point for the accelerated ones:

    theta_{t+1} = (1 + sqrt(1 + 4 theta_t^2)) / 2,  theta_1 = 1
    x_hat_t = x_t + ((theta_t - 1) / theta_{t+1}) (x_t - x_{t-1})   (same for u)

The private variants add one fresh draw ``P_t ~ N(0, sigma^2 I)`` to the
gradient each iteration; with sigma = 0 they reproduce the non-private
iterates exactly.  The dual starts at ``u_0 = -(1/rho) (A^T)^+ grad f(x_0)``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .accounting import NoiseSpec, sample_noise
from .datasets import Dataset
from .linalg import solve_spd
from .problems import (
    ConstraintSystem,
    ErmProblem,
    logistic_grad_clipped,
    objective,
    r_criterion,
    smoothness_constant,
    soft_threshold,
)


class DivergenceError(RuntimeError):
    """A solver iterate became non-finite; the message names iteration and quantity."""


@dataclass
class SolverConfig:
    """Hyperparameters shared by the four solvers.

    gamma = None selects the theory-safe automatic value
    ``eta * rho * ||A^T A||_2 + 1``; an explicit gamma below that bound is
    allowed (it reproduces published experiments that fix gamma = 1) but draws
    a warning, as does a step size above 1 / L_f.
    """

    eta: float
    rho: float
    iterations: int
    gamma: float | None = None
    seed: int = 0
    noise: NoiseSpec | None = None
    accelerate: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be non-negative, got {self.iterations}")


@dataclass
class SolverState:
    """Iterates of one solve: primal x/y, dual u, momentum points, theta."""

    x: np.ndarray
    x_prev: np.ndarray
    y: np.ndarray
    u: np.ndarray
    u_prev: np.ndarray
    x_hat: np.ndarray
    u_hat: np.ndarray
    theta: float = 1.0
    iter: int = 0


@dataclass
class TraceRecord:
    """One evaluation point: true (noiseless) objective, ||Ax - y||, wall clock.

    r_value is the optimality gap of the *running averages* against a supplied
    reference optimum, when one was given.
    """

    iter: int
    objective: float
    constraint_violation: float
    elapsed_seconds: float
    r_value: float | None = None


@dataclass
class SolveResult:
    x: np.ndarray
    y: np.ndarray
    x_avg: np.ndarray
    y_avg: np.ndarray
    trace: list[TraceRecord] = field(default_factory=list)


def resolve_gamma(config: SolverConfig, constraints: ConstraintSystem) -> float:
    """The proximal-metric scale actually used: auto bound or explicit override."""
    bound = config.eta * config.rho * constraints.spectral_sq + 1.0
    if config.gamma is None:
        return bound
    if config.gamma < bound:
        warnings.warn(
            f"gamma = {config.gamma} is below eta*rho*||A^T A||_2 + 1 = {bound:.6g}; "
            "the proximal metric is no longer >= I",
            stacklevel=2,
        )
    return config.gamma


def init_dual(problem: ErmProblem, rho: float, x0: np.ndarray) -> np.ndarray:
    """Dual start ``u_0 = -(1/rho) (A^T)^+ grad f(x_0)``.

    For a tall A (full column rank, the fused-lasso case) this is
    ``-(1/rho) A z`` with ``(A^T A) z = grad f(x_0)``, which satisfies
    ``rho A^T u_0 = -grad f(x_0)`` exactly.  For a wide A (full row rank) it is
    ``-(1/rho) z`` with ``(A A^T) z = A grad f(x_0)``.
    """
    a = problem.constraints.a
    grad = logistic_grad_clipped(x0, problem.data, clip=np.inf)
    rows, cols = a.shape
    if rows >= cols:
        z = solve_spd(lambda v: a.T @ (a @ v), grad)
        return -(a @ z) / rho
    z = solve_spd(lambda v: a @ (a.T @ v), a @ grad)
    return -z / rho


def y_update(x_ref: np.ndarray, u_ref: np.ndarray, problem: ErmProblem, rho: float) -> np.ndarray:
    """Exact y-minimizer for B = -I: ``soft_threshold(A x_ref - c + u_ref, lam/rho)``."""
    cs = problem.constraints
    if not cs.b_is_neg_identity:
        raise NotImplementedError("y_update requires B = -I")
    return soft_threshold(cs.a @ x_ref - cs.c + u_ref, problem.lam / rho)


def x_update(
    state: SolverState,
    y_new: np.ndarray,
    grad: np.ndarray,
    noise: np.ndarray | None,
    config: SolverConfig,
    constraints: ConstraintSystem,
) -> np.ndarray:
    """Closed-form linearized proximal step from the reference point.

    ``x_ref - (eta/gamma) [grad + noise + rho A^T (A x_ref - y_new - c + u_ref)]``,
    with (x_ref, u_ref) = (state.x_hat, state.u_hat).  The bracket is formed
    once; there is no inner re-linearization.
    """
    gamma = resolve_gamma(config, constraints)
    direction = grad + config.rho * (
        constraints.a.T @ (constraints.residual(state.x_hat, y_new) + state.u_hat)
    )
    if noise is not None:
        direction = direction + noise
    return state.x_hat - (config.eta / gamma) * direction


def u_update(
    u_ref: np.ndarray, x_new: np.ndarray, y_new: np.ndarray, constraints: ConstraintSystem
) -> np.ndarray:
    """Dual ascent ``u_ref + A x_new - y_new - c``."""
    return u_ref + constraints.residual(x_new, y_new)


def theta_next(theta: float) -> float:
    """Momentum weight recurrence ``(1 + sqrt(1 + 4 theta^2)) / 2``; grows by ~1/2."""
    if theta < 1.0:
        raise ValueError(f"theta must be >= 1, got {theta}")
    return (1.0 + np.sqrt(1.0 + 4.0 * theta * theta)) / 2.0


def momentum_point(
    curr: np.ndarray, prev: np.ndarray, theta: float, theta_after: float
) -> np.ndarray:
    """Overrelaxed point ``curr + ((theta - 1) / theta_after) * (curr - prev)``."""
    if not theta_after > theta or theta < 1.0:
        raise ValueError(f"need theta_after > theta >= 1, got {theta_after}, {theta}")
    return curr + ((theta - 1.0) / theta_after) * (curr - prev)


def initial_state(problem: ErmProblem, rho: float, x0: np.ndarray) -> SolverState:
    d3 = problem.constraints.a.shape[0]
    u0 = init_dual(problem, rho, x0)
    return SolverState(
        x=x0.copy(),
        x_prev=x0.copy(),
        y=np.zeros(d3),
        u=u0,
        u_prev=u0.copy(),
        x_hat=x0.copy(),
        u_hat=u0.copy(),
    )


def _check_finite(name: str, value: np.ndarray, iteration: int) -> None:
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f"non-finite {name} at iteration {iteration}")


def solve(
    problem: ErmProblem,
    config: SolverConfig,
    eval_period: int = 1,
    x0: np.ndarray | None = None,
    reference: tuple[np.ndarray, np.ndarray] | None = None,
) -> SolveResult:
    """Run exactly ``config.iterations`` ADMM iterations.

    One loop serves all four variants: with ``config.accelerate`` the reference
    iterates are the momentum points, otherwise x_hat == x and u_hat == u.
    Fresh noise is drawn once per iteration (after the y-step, before the
    x-step) when ``config.noise`` is set.  Running averages over *all*
    iterations are returned for utility evaluation.  A trace record is emitted
    every ``eval_period`` iterations and at the final one; ``reference``
    supplies the (x*, y*) against which the averages' optimality gap is traced.
    """
    if eval_period < 1:
        raise ValueError(f"eval_period must be >= 1, got {eval_period}")
    data, constraints = problem.data, problem.constraints
    d1 = constraints.a.shape[1]

    lf = smoothness_constant(data)
    if config.eta > 1.0 / lf:
        warnings.warn(
            f"eta = {config.eta} exceeds 1/L_f = {1.0 / lf:.6g}; convergence is "
            "outside the supported step-size regime",
            stacklevel=2,
        )
    resolve_gamma(config, constraints)  # surface the gamma warning once up front

    x0 = np.zeros(d1) if x0 is None else np.asarray(x0, dtype=float).copy()
    state = initial_state(problem, config.rho, x0)
    rng = np.random.default_rng(config.seed)
    x_sum = np.zeros_like(state.x)
    y_sum = np.zeros_like(state.y)
    trace: list[TraceRecord] = []
    started = time.perf_counter()

    for t in range(1, config.iterations + 1):
        y_new = y_update(state.x_hat, state.u_hat, problem, config.rho)
        grad = logistic_grad_clipped(state.x_hat, data, problem.clip)
        noise = sample_noise(config.noise, rng) if config.noise is not None else None
        x_new = x_update(state, y_new, grad, noise, config, constraints)
        u_new = u_update(state.u_hat, x_new, y_new, constraints)

        if config.accelerate:
            theta_after = theta_next(state.theta)
            x_hat = momentum_point(x_new, state.x, state.theta, theta_after)
            u_hat = momentum_point(u_new, state.u, state.theta, theta_after)
            state.theta = theta_after
        else:
            x_hat, u_hat = x_new, u_new

        _check_finite("x", x_new, t)
        _check_finite("y", y_new, t)
        _check_finite("u", u_new, t)

        state.x_prev, state.u_prev = state.x, state.u
        state.x, state.y, state.u = x_new, y_new, u_new
        state.x_hat, state.u_hat = x_hat, u_hat
        state.iter = t
        x_sum += x_new
        y_sum += y_new

        if t % eval_period == 0 or t == config.iterations:
            r_value = None
            if reference is not None:
                r_value = r_criterion(x_sum / t, y_sum / t, reference[0], reference[1], problem)
            trace.append(
                TraceRecord(
                    iter=t,
                    objective=objective(x_new, y_new, problem),
                    constraint_violation=float(
                        np.linalg.norm(constraints.residual(x_new, y_new))
                    ),
                    elapsed_seconds=time.perf_counter() - started,
                    r_value=r_value,
                )
            )

    if config.iterations > 0:
        x_avg, y_avg = x_sum / config.iterations, y_sum / config.iterations
    else:
        x_avg, y_avg = state.x.copy(), state.y.copy()
    return SolveResult(x=state.x, y=state.y, x_avg=x_avg, y_avg=y_avg, trace=trace)


def accuracy(x: np.ndarray, test: Dataset) -> float:
    """Fraction of test samples with ``sign(<l_i, x>) == m_i``; sign(0) counts as +1."""
    if test.n_samples == 0:
        raise ValueError("accuracy: empty test set")
    margins = test.features @ x
    predicted = np.where(margins >= 0.0, 1, -1)
    return float(np.mean(predicted == test.labels))
