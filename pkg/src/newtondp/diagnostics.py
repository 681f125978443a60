"""Ground-truth oracles and convergence-rate measurements."""

from __future__ import annotations

import numpy as np

from newtondp.bellman import residual
from newtondp.mdp import POLICY_CAP, Mdp, enumerate_policies
from newtondp.newton import BStrategy, IterationTrace, policy_evaluation

SATURATION_FACTOR = 1e2


class InsufficientDataError(ValueError):
    pass


def brute_force_optimal(mdp: Mdp, cap: int = POLICY_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Optimal cost and an optimal policy by evaluating every policy.

    Returns the component-wise minimum of ``V^pi`` over all policies and the
    policy whose cost is closest to it in the sup-norm (one attaining the
    minimum in every state always exists).
    """
    best = None
    costs = []
    policies = []
    for pi in enumerate_policies(mdp, cap=cap):
        v = policy_evaluation(mdp, pi)
        costs.append(v)
        policies.append(pi)
        best = v.copy() if best is None else np.minimum(best, v)
    gaps = [float(np.max(v - best)) for v in costs]
    return best, policies[int(np.argmin(gaps))]


def contraction_ratios(trace: IterationTrace, reference) -> np.ndarray:
    """``||theta_{k+1} - V*|| / ||theta_k - V*||`` for consecutive iterates.

    Entries whose denominator is at or below ``100 * eps * (1 + ||V*||)``
    are saturated (the error is at float resolution) and set to NaN.
    """
    if len(trace) < 2:
        raise InsufficientDataError("need at least two iterates")
    reference = np.asarray(reference, dtype=float)
    err = np.max(np.abs(trace.thetas - reference), axis=1)
    floor = SATURATION_FACTOR * np.finfo(float).eps * (1.0 + np.max(np.abs(reference)))
    den = err[:-1]
    out = np.full(den.shape, np.nan)
    ok = den > floor
    out[ok] = err[1:][ok] / den[ok]
    return out


def kappa_sequence(mdp: Mdp, trace: IterationTrace, strategy: BStrategy) -> np.ndarray:
    """``kappa_k = ||B_k^{-1}(B_k - J_k)||_inf`` at every recorded iterate."""
    return np.array([strategy.kappa(mdp, rec.theta) for rec in trace])


def asymptotic_rate_prediction(gamma: float, alpha: float) -> float:
    """Predicted asymptotic contraction rate of alpha-VI for ``alpha`` in ``(1/(1+gamma), 1)``.

    ``1 - (1 - gamma)/alpha`` when ``alpha >= 1 - gamma/2``, otherwise
    ``1/alpha - 1``. Assumes the optimal policy's transition matrix has
    real positive eigenvalues.
    """
    lo = 1.0 / (1.0 + gamma)
    if not lo < alpha < 1.0:
        raise ValueError(f"alpha must lie in ({lo:.6g}, 1), got {alpha}")
    if alpha >= 1.0 - gamma / 2.0:
        return 1.0 - (1.0 - gamma) / alpha
    return 1.0 / alpha - 1.0


def spectral_radius_estimate(A, iterations: int = 1000, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral radius of ``A``.

    Returns the geometric mean of the per-step growth ``||A x|| / ||x||``
    over the second half of the iterations, which also behaves sensibly when
    the dominant eigenvalues form a complex pair. This is an estimate only;
    defective or badly separated spectra converge slowly.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if iterations < 1:
        raise ValueError("iterations must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.random(A.shape[0]) + 0.5
    x /= np.linalg.norm(x)
    logs = []
    for _ in range(iterations):
        y = A @ x
        g = np.linalg.norm(y)
        if g == 0.0:
            return 0.0
        logs.append(np.log(g))
        x = y / g
    tail = logs[len(logs) // 2:]
    return float(np.exp(np.mean(tail)))


def empirical_rate(trace: IterationTrace, reference, tail_fraction: float = 0.5) -> float:
    """Geometric mean of the last ``tail_fraction`` of the usable contraction ratios."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    ratios = contraction_ratios(trace, reference)
    usable = ratios[np.isfinite(ratios)]
    if usable.size < 3:
        raise InsufficientDataError(f"only {usable.size} non-saturated ratios, need 3")
    tail = usable[-max(3, int(np.ceil(tail_fraction * usable.size))):]
    if np.any(tail == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(tail))))


def global_rate_bound(gamma: float, alpha: float) -> float:
    """Sup-norm Lipschitz constant ``|alpha-1|/alpha + gamma/alpha`` of ``T_alpha`` (alpha > 0)."""
    return abs(alpha - 1.0) / alpha + gamma / alpha


def residual_inf(mdp: Mdp, theta) -> float:
    return float(np.max(np.abs(residual(mdp, theta))))
