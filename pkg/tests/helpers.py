import numpy as np

from newtondp import Mdp, random_mdp

M1_GAMMA = 0.5


def make_m1(g=(1.0, 2.0), gamma=M1_GAMMA, p00=1.0):
    """One state, two actions, both self-loops."""
    return Mdp.from_dense(np.array([[[p00], [1.0]]]), np.array([list(g)]), gamma)


def tiny_params(i):
    """Parameters of the i-th seeded tiny instance used across the suite."""
    n = (2, 3, 4)[i % 3]
    m = (2, 3)[(i // 3) % 2]
    gamma = (0.4, 0.9)[(i // 6) % 2]
    return n, m, gamma, i


def tiny_instance(i):
    return random_mdp(*tiny_params(i))


def kink_mdp():
    """Two states; state 1 absorbing at zero cost. Along theta_0 (theta_1 = 0)
    action 0 gives 1 + 0.5*theta_0 and action 1 gives 0.25*theta_0, crossing at -4."""
    p = np.zeros((2, 2, 2))
    p[0, 0] = [1.0, 0.0]
    p[0, 1] = [0.5, 0.5]
    p[1, 0] = [0.0, 1.0]
    cost = np.array([[1.0, 0.0], [0.0, 0.0]])
    allowed = np.array([[True, True], [True, False]])
    return Mdp.from_dense(p, cost, 0.5, allowed)
