# %% [markdown]
# # The scalar Bellman operator and its fixed point
#
# With one state the Bellman operator is a concave, piecewise-affine map of a
# single number. Plotting it against the diagonal shows the optimal cost as
# the crossing point. This script prints the samples instead of plotting.

# %%
import numpy as np

from newtondp import Mdp, SolverConfig, apply_bellman, policy_iteration, value_iteration
from newtondp.experiments import bellman_graph

# one state, two actions, both self-loops: T(theta) = min(1 + 0.5 theta, 2 + 0.5 theta)
mdp = Mdp.from_dense(np.ones((1, 2, 1)), [[1.0, 2.0]], gamma=0.5)
columns, rows = bellman_graph(mdp, np.linspace(0, 4, 5), alphas=[0.8])
print(",".join(columns))
for r in rows:
    print(",".join(str(r[c]) for c in columns))

# %% [markdown]
# Value iteration walks along the graph towards the diagonal; policy
# iteration jumps straight to the root of the active affine piece.

# %%
vi = value_iteration(mdp, [0.0], SolverConfig(record_trace=True))
print("VI iterates:", vi.trace.thetas[:6, 0])
pi = policy_iteration(mdp, [1])
print("PI:", pi.theta, "after", pi.iterations, "evaluations")

# %% [markdown]
# A kink appears once two actions win on different parts of the axis. With a
# single state every transition is a self-loop, so all pieces share the slope
# gamma and never cross. Two states give crossing lines: slice along state 0
# while state 1 (absorbing, zero cost) stays at its optimal value 0.

# %%
p = np.zeros((2, 2, 2))
p[0, 0] = [1.0, 0.0]
p[0, 1] = [0.5, 0.5]
p[1, 0] = [0.0, 1.0]
kink = Mdp.from_dense(p, [[1.0, 0.0], [0.0, 0.0]], 0.5, allowed=[[True, True], [True, False]])
xs = np.linspace(-8, 0, 9)
ys = [apply_bellman(kink, [x, 0.0])[0] for x in xs]
for x, y in zip(xs, ys):
    print(f"theta_0={x:5.1f}  T(theta)_0={y:6.3f}")
# slope 0.5 left of -4 (action 0), slope 0.25 right of it (action 1)
