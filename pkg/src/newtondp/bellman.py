"""Bellman operators, greedy policies and the Bellman residual.

The residual ``r(theta) = theta - T theta`` is piecewise affine with one
affine piece ``theta - T^pi theta`` per policy. At any ``theta`` the
Jacobian of the piece selected by a greedy policy, ``I - gamma P^pi``, is an
element of the B-differential of ``r`` and is always nonsingular.
"""

from __future__ import annotations

import numpy as np

from newtondp.mdp import Mdp, check_policy, induced_dynamics

#: Relative tolerance for declaring two Q-values tied.
TIE_RTOL = 1e-9


def _check_theta(mdp: Mdp, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mdp.n,):
        raise ValueError(f"cost vector must have shape ({mdp.n},), got {theta.shape}")
    return theta


def q_values(mdp: Mdp, theta) -> np.ndarray:
    """``Q[s, a] = g(s, a) + gamma * p(s, a, .) @ theta``; ``inf`` where ``a`` is not admissible."""
    theta = _check_theta(mdp, theta)
    q = mdp.cost + mdp.gamma * (mdp.P @ theta).reshape(mdp.n, mdp.m)
    q[~mdp.allowed] = np.inf
    return q


def _greedy_from_q(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    qmin = q.min(axis=1)
    tol = TIE_RTOL * np.maximum(1.0, np.abs(qmin))
    near = q - qmin[:, None] <= tol[:, None]
    # argmax on a boolean array returns the first True, i.e. the lowest index
    pi = near.argmax(axis=1).astype(np.intp)
    ties = near.sum(axis=1) >= 2
    return pi, ties


def apply_bellman(mdp: Mdp, theta) -> np.ndarray:
    return q_values(mdp, theta).min(axis=1)


def apply_policy_bellman(mdp: Mdp, pi, theta) -> np.ndarray:
    """``T^pi theta = g^pi + gamma P^pi theta``."""
    theta = _check_theta(mdp, theta)
    pi = check_policy(mdp, pi)
    states = np.arange(mdp.n)
    # same sparse rows and summation order as q_values, so T^pi theta == T theta bitwise for greedy pi
    return mdp.cost[states, pi] + mdp.gamma * (mdp.P[states * mdp.m + pi] @ theta)


def greedy_policy(mdp: Mdp, theta) -> tuple[np.ndarray, np.ndarray]:
    """Greedy policy for ``theta`` and a per-state flag marking ties.

    Two actions tie when their Q-values differ by at most
    ``1e-9 * max(1, |Q_min|)``; the lowest tied action index is chosen.
    """
    return _greedy_from_q(q_values(mdp, theta))


def bellman_and_greedy(mdp: Mdp, theta) -> tuple[np.ndarray, np.ndarray]:
    """``T theta`` and the canonical greedy policy from one Q evaluation."""
    q = q_values(mdp, theta)
    pi, _ = _greedy_from_q(q)
    return q.min(axis=1), pi


def residual(mdp: Mdp, theta) -> np.ndarray:
    theta = _check_theta(mdp, theta)
    return theta - apply_bellman(mdp, theta)


def jacobian_of_policy(mdp: Mdp, pi) -> np.ndarray:
    """``I - gamma P^pi``, the Jacobian of the residual piece selected by ``pi``."""
    p_pi, _ = induced_dynamics(mdp, pi)
    return np.eye(mdp.n) - mdp.gamma * p_pi


def b_differential_element(mdp: Mdp, theta) -> tuple[np.ndarray, np.ndarray]:
    """An element ``I - gamma P^pi`` of the B-differential of the residual at ``theta``.

    ``pi`` is the canonical (lowest-index) greedy policy. No attempt is made
    to exclude greedy policies whose piece is active only on a set with
    empty interior; the returned matrix is nonsingular either way.
    """
    pi, _ = greedy_policy(mdp, theta)
    return jacobian_of_policy(mdp, pi), pi


def _t_alpha_combine(alpha: float, theta: np.ndarray, t_theta: np.ndarray) -> np.ndarray:
    return ((alpha - 1.0) / alpha) * theta + (1.0 / alpha) * t_theta


def apply_t_alpha(mdp: Mdp, alpha: float, theta) -> np.ndarray:
    """``T_alpha theta = ((alpha - 1) / alpha) theta + (1 / alpha) T theta``.

    Any nonzero ``alpha`` is accepted, including values for which
    ``T_alpha`` is not a contraction.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    theta = _check_theta(mdp, theta)
    return _t_alpha_combine(float(alpha), theta, apply_bellman(mdp, theta))


__all__ = [
    "TIE_RTOL",
    "apply_bellman",
    "apply_policy_bellman",
    "apply_t_alpha",
    "b_differential_element",
    "bellman_and_greedy",
    "greedy_policy",
    "jacobian_of_policy",
    "q_values",
    "residual",
]
