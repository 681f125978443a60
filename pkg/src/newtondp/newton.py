"""Semismooth Newton-type iteration for the Bellman residual.

Every solver here produces iterates of the form

    theta_{k+1} = theta_k - B_k^{-1} r(theta_k),    r(theta) = theta - T theta,

and stops once ``||r(theta_k)||_inf <= tol``. The choice of ``B_k`` decides
the method:

* ``Identity()``: value iteration, ``theta_{k+1} = T theta_k``.
* ``ScaledIdentity(alpha)``: alpha-value iteration,
  ``theta_{k+1} = ((alpha - 1)/alpha) theta_k + (1/alpha) T theta_k``.
* ``GeneralizedJacobian()``: exact semismooth Newton with
  ``B_k = I - gamma P^pi`` for the greedy ``pi``; same iterates as policy
  iteration.

:func:`value_iteration`, :func:`alpha_value_iteration` and
:func:`policy_iteration` implement the classical algorithms directly, so they
can be checked against :func:`newton_type_solve`.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from newtondp.bellman import (
    _t_alpha_combine,
    apply_bellman,
    bellman_and_greedy,
    b_differential_element,
    greedy_policy,
    jacobian_of_policy,
)
from newtondp.mdp import Mdp, check_policy, induced_dynamics

VI_MAX_ITERS = 100_000
PI_MAX_ITERS = 10_000
DIVERGENCE_BOUND = 1e12


class SolverError(RuntimeError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix is exactly singular: zero pivot at index {pivot}")


def linear_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU factorisation with partial pivoting."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A)
    zero = np.flatnonzero(np.diag(lu) == 0.0)
    if zero.size:
        raise SingularMatrixError(int(zero[0]))
    return scipy.linalg.lu_solve((lu, piv), b)


# -- B_k strategies ----------------------------------------------------------


class BStrategy:
    """Rule producing ``B_k`` and the update ``theta - B_k^{-1} r(theta)``."""

    name = "generic"

    def matrix(self, mdp: Mdp, theta) -> np.ndarray:
        raise NotImplementedError

    def step(self, mdp: Mdp, theta: np.ndarray, t_theta: np.ndarray, pi: np.ndarray) -> np.ndarray:
        """Next iterate given ``theta``, ``T theta`` and the greedy policy at ``theta``."""
        B = self.matrix(mdp, theta)
        return theta - linear_solve(B, theta - t_theta)

    def kappa(self, mdp: Mdp, theta) -> float:
        """``||B^{-1}(B - J)||_inf`` with ``J`` the greedy B-differential element at ``theta``."""
        J, _ = b_differential_element(mdp, theta)
        B = self.matrix(mdp, theta)
        return float(np.abs(linear_solve(B, B - J)).sum(axis=1).max())


@dataclass(frozen=True)
class Identity(BStrategy):
    name = "identity"

    def matrix(self, mdp, theta):
        return np.eye(mdp.n)

    def step(self, mdp, theta, t_theta, pi):
        return t_theta


@dataclass(frozen=True)
class ScaledIdentity(BStrategy):
    alpha: float
    name = "scaled-identity"

    def __post_init__(self):
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")

    def matrix(self, mdp, theta):
        return self.alpha * np.eye(mdp.n)

    def step(self, mdp, theta, t_theta, pi):
        return _t_alpha_combine(float(self.alpha), theta, t_theta)


@dataclass(frozen=True)
class GeneralizedJacobian(BStrategy):
    name = "generalized-jacobian"

    def matrix(self, mdp, theta):
        J, _ = b_differential_element(mdp, theta)
        return J

    def step(self, mdp, theta, t_theta, pi):
        # I - gamma P^pi is refactorised every iteration; pi changes between steps.
        return theta - linear_solve(jacobian_of_policy(mdp, pi), theta - t_theta)


# -- configuration and results -----------------------------------------------


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iters: int | None = None
    record_trace: bool = False
    reference_solution: np.ndarray | None = None
    relative_tol: bool = False
    record_kappa: bool = False
    divergence_bound: float = DIVERGENCE_BOUND

    def __post_init__(self):
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def threshold(self, theta: np.ndarray) -> float:
        if self.relative_tol:
            return self.tol * (1.0 + float(np.max(np.abs(theta))))
        return self.tol


@dataclass
class IterationRecord:
    k: int
    theta: np.ndarray
    residual_inf: float
    policy: np.ndarray | None = None
    error_inf: float | None = None
    kappa: float | None = None
    wall_time: float = 0.0


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_inf for r in self.records])

    @property
    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.error_inf is None else r.error_inf for r in self.records])


@dataclass
class SolveResult:
    theta: np.ndarray
    policy: np.ndarray
    iterations: int
    converged: bool
    status: str
    residual_inf: float
    wall_time: float
    trace: IterationTrace | None = None


class _Recorder:
    def __init__(self, mdp: Mdp, config: SolverConfig, kappa_fn=None):
        self.mdp = mdp
        self.config = config
        self.kappa_fn = kappa_fn
        self.trace = IterationTrace() if config.record_trace else None
        self.start = time.perf_counter()
        ref = config.reference_solution
        self.ref = None if ref is None else np.asarray(ref, dtype=float)

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def add(self, k, theta, res, pi=None):
        if self.trace is None:
            return
        if pi is None:
            pi, _ = greedy_policy(self.mdp, theta)
        err = None if self.ref is None else float(np.max(np.abs(theta - self.ref)))
        kap = None
        if self.config.record_kappa and self.kappa_fn is not None:
            kap = self.kappa_fn(theta)
        self.trace.records.append(
            IterationRecord(k, theta.copy(), res, pi.copy(), err, kap, self.elapsed())
        )

    def result(self, theta, pi, k, status, res) -> SolveResult:
        return SolveResult(theta, pi, k, status == "converged", status, res, self.elapsed(), self.trace)


def _initial(mdp: Mdp, theta0) -> np.ndarray:
    if theta0 is None:
        return np.zeros(mdp.n)
    theta = np.array(theta0, dtype=float)
    if theta.shape != (mdp.n,):
        raise ValueError(f"theta0 must have shape ({mdp.n},)")
    return theta


def _diverged(theta: np.ndarray, bound: float) -> bool:
    return not np.all(np.isfinite(theta)) or float(np.max(np.abs(theta))) > bound


# -- solvers -----------------------------------------------------------------


def newton_type_solve(mdp: Mdp, strategy: BStrategy, theta0=None, config: SolverConfig | None = None) -> SolveResult:
    """Run the Newton-type iteration with the given ``B_k`` strategy.

    Never raises on non-convergence: the result's ``status`` is one of
    ``"converged"``, ``"max_iters"`` or ``"diverged"`` (iterate norm above
    ``config.divergence_bound``). A breakdown of the linear solve raises
    :class:`SolverError` naming the iteration.
    """
    config = config or SolverConfig()
    default_max = PI_MAX_ITERS if isinstance(strategy, GeneralizedJacobian) else VI_MAX_ITERS
    max_iters = config.max_iters or default_max
    rec = _Recorder(mdp, config, lambda th: strategy.kappa(mdp, th))
    theta = _initial(mdp, theta0)
    k = 0
    while True:
        t_theta, pi = bellman_and_greedy(mdp, theta)
        res = float(np.max(np.abs(theta - t_theta)))
        rec.add(k, theta, res, pi)
        if res <= config.threshold(theta):
            status = "converged"
            break
        if _diverged(theta, config.divergence_bound):
            status = "diverged"
            break
        if k >= max_iters:
            status = "max_iters"
            break
        try:
            theta = strategy.step(mdp, theta, t_theta, pi)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"linear solve failed at iteration {k}: {exc}") from exc
        k += 1
    return rec.result(theta, pi, k, status, res)


def policy_evaluation(mdp: Mdp, pi) -> np.ndarray:
    """Cost ``V^pi`` of a policy, solving ``(I - gamma P^pi) V = g^pi`` directly."""
    p_pi, g_pi = induced_dynamics(mdp, pi)
    return linear_solve(np.eye(mdp.n) - mdp.gamma * p_pi, g_pi)


def policy_iteration(mdp: Mdp, pi0=None, config: SolverConfig | None = None) -> SolveResult:
    """Exact policy iteration.

    Alternates evaluation and greedy improvement; stops when the evaluated
    cost has Bellman residual at most ``tol``. Trace entry ``k`` holds the
    ``k``-th evaluated cost ``V^{pi_k}``, and ``iterations`` counts
    evaluations. ``pi0`` defaults to the greedy policy of the zero vector.
    """
    config = config or SolverConfig()
    max_iters = config.max_iters or PI_MAX_ITERS
    rec = _Recorder(mdp, config, lambda th: 0.0)
    if pi0 is None:
        pi0, _ = greedy_policy(mdp, np.zeros(mdp.n))
    pi = check_policy(mdp, pi0)
    k = 0
    while True:
        try:
            theta = policy_evaluation(mdp, pi)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"policy evaluation failed at iteration {k}: {exc}") from exc
        k += 1
        t_theta, pi = bellman_and_greedy(mdp, theta)
        res = float(np.max(np.abs(theta - t_theta)))
        rec.add(k - 1, theta, res, pi)
        if res <= config.threshold(theta):
            status = "converged"
            break
        if k >= max_iters:
            status = "max_iters"
            break
    return rec.result(theta, pi, k, status, res)


def _iterate_map(mdp, update, theta0, config, kappa_fn) -> SolveResult:
    config = config or SolverConfig()
    max_iters = config.max_iters or VI_MAX_ITERS
    rec = _Recorder(mdp, config, kappa_fn)
    theta = _initial(mdp, theta0)
    k = 0
    while True:
        t_theta = apply_bellman(mdp, theta)
        res = float(np.max(np.abs(theta - t_theta)))
        rec.add(k, theta, res)
        if res <= config.threshold(theta):
            status = "converged"
            break
        if _diverged(theta, config.divergence_bound):
            status = "diverged"
            break
        if k >= max_iters:
            status = "max_iters"
            break
        theta = update(theta, t_theta)
        k += 1
    pi, _ = greedy_policy(mdp, theta)
    return rec.result(theta, pi, k, status, res)


def value_iteration(mdp: Mdp, theta0=None, config: SolverConfig | None = None) -> SolveResult:
    """Repeated application of the Bellman operator, ``theta_{k+1} = T theta_k``."""
    return _iterate_map(mdp, lambda th, t_th: t_th, theta0, config, lambda th: Identity().kappa(mdp, th))


def alpha_value_iteration(
    mdp: Mdp,
    alpha: float,
    theta0=None,
    config: SolverConfig | None = None,
    force: bool = False,
) -> SolveResult:
    """alpha-VI: ``theta_{k+1} = T_alpha theta_k``.

    ``alpha`` must exceed ``(1 + gamma) / 2``, where ``T_alpha`` is a
    contraction in the sup-norm, unless ``force`` is set. Forced runs below
    the threshold may diverge; they then stop with status ``"diverged"``.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    threshold = (1.0 + mdp.gamma) / 2.0
    if not force and alpha <= threshold:
        raise ValueError(
            f"alpha={alpha} <= (1+gamma)/2 = {threshold:g}: global convergence not guaranteed "
            "(pass force=True to run anyway)"
        )
    alpha = float(alpha)
    strategy = ScaledIdentity(alpha)
    return _iterate_map(
        mdp,
        lambda th, t_th: _t_alpha_combine(alpha, th, t_th),
        theta0,
        config,
        lambda th: strategy.kappa(mdp, th),
    )


__all__ = [
    "BStrategy",
    "GeneralizedJacobian",
    "Identity",
    "IterationRecord",
    "IterationTrace",
    "ScaledIdentity",
    "SingularMatrixError",
    "SolveResult",
    "SolverConfig",
    "SolverError",
    "alpha_value_iteration",
    "linear_solve",
    "newton_type_solve",
    "policy_evaluation",
    "policy_iteration",
    "value_iteration",
]
