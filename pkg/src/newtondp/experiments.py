"""Multi-run experiments: alpha sweeps, method benchmarks and scalar operator graphs.

Each function returns plain row dictionaries in a deterministic order; the
CLI turns them into CSV.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from newtondp.bellman import apply_bellman, apply_t_alpha
from newtondp.diagnostics import InsufficientDataError, empirical_rate
from newtondp.mdp import Mdp, load_mdp, random_mdp
from newtondp.newton import (
    SolveResult,
    SolverConfig,
    alpha_value_iteration,
    policy_iteration,
    value_iteration,
)

REFERENCE_TOL = 1e-12
SWEEP_MAX_ITERS = 5000

SWEEP_COLUMNS = ["alpha", "converged", "iterations", "empirical_rate"]
BENCHMARK_COLUMNS = ["method", "alpha", "k", "residual_inf", "error_inf", "wall_time_us", "status"]
TRACE_COLUMNS = ["k", "residual_inf", "error_inf", "kappa_k", "wall_time_us"]


def reference_solution(mdp: Mdp) -> np.ndarray:
    """High-accuracy optimal cost from policy iteration at ``tol=1e-12``."""
    return policy_iteration(mdp, config=SolverConfig(tol=REFERENCE_TOL)).theta


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _rate(result: SolveResult, reference) -> float | None:
    try:
        return empirical_rate(result.trace, reference)
    except InsufficientDataError:
        return None


def sweep_alphas(alpha_min: float, alpha_max: float, steps: int) -> list[float]:
    if steps < 1:
        raise ValueError("steps must be positive")
    grid = np.round(np.linspace(alpha_min, alpha_max, steps), 12)
    if np.any(grid == 0):
        raise ValueError("alpha range must exclude 0")
    return [float(a) for a in grid]


def alpha_sweep(
    mdp: Mdp,
    alphas,
    tol: float = 1e-10,
    max_iters: int = SWEEP_MAX_ITERS,
    reference=None,
    jobs: int = 1,
) -> list[dict]:
    """Forced alpha-VI run per alpha, preceded by a policy-iteration baseline row.

    The baseline row has ``alpha=None``. ``empirical_rate`` is ``None`` when
    fewer than three usable contraction ratios exist.
    """
    if reference is None:
        reference = reference_solution(mdp)

    def one(alpha):
        cfg = SolverConfig(tol=tol, max_iters=max_iters, record_trace=True)
        if alpha is None:
            res = policy_iteration(mdp, config=cfg)
        else:
            res = alpha_value_iteration(mdp, alpha, config=cfg, force=True)
        return {
            "alpha": alpha,
            "converged": res.converged,
            "iterations": res.iterations,
            "empirical_rate": _rate(res, reference),
        }

    return _map(one, [None, *alphas], jobs)


@dataclass
class BenchmarkSpec:
    """Instance parameters and the list of runs for :func:`run_benchmark`.

    JSON layout::

        {"instance": {"n": 500, "m": 10, "gamma": 0.4, "seed": 42},
         "tol": 1e-10, "max_iters": 10000,
         "runs": [{"method": "pi"}, {"method": "vi"},
                  {"method": "alpha-vi", "alpha": 0.8}]}

    ``instance`` may instead be ``{"path": "file.mdp"}``, resolved relative
    to the spec file. A run may set ``"force": true`` to allow alpha below
    the global-convergence threshold.
    """

    runs: list[dict]
    instance: dict
    tol: float = 1e-10
    max_iters: int | None = None
    base_dir: str = "."

    @classmethod
    def from_json(cls, text: str, base_dir: str = ".") -> "BenchmarkSpec":
        doc = json.loads(text)
        for key in ("instance", "runs"):
            if key not in doc:
                raise ValueError(f"benchmark spec is missing {key!r}")
        for i, run in enumerate(doc["runs"]):
            if run.get("method") not in ("pi", "vi", "alpha-vi"):
                raise ValueError(f"runs[{i}]: unknown method {run.get('method')!r}")
            if run["method"] == "alpha-vi" and "alpha" not in run:
                raise ValueError(f"runs[{i}]: alpha-vi needs an alpha")
        return cls(
            runs=doc["runs"],
            instance=doc["instance"],
            tol=float(doc.get("tol", 1e-10)),
            max_iters=doc.get("max_iters"),
            base_dir=base_dir,
        )

    def build_mdp(self) -> Mdp:
        inst = self.instance
        if "path" in inst:
            with open(os.path.join(self.base_dir, inst["path"]), encoding="utf-8") as fh:
                return load_mdp(fh.read())
        return random_mdp(int(inst["n"]), int(inst["m"]), float(inst["gamma"]), int(inst["seed"]))


def run_benchmark(spec: BenchmarkSpec, mdp: Mdp | None = None, jobs: int = 1) -> list[dict]:
    """Long-format error-versus-iteration rows for every run in ``spec``.

    Errors are measured against :func:`reference_solution`. A run that
    raises produces a single row with ``status="error: ..."``.
    """
    mdp = mdp if mdp is not None else spec.build_mdp()
    reference = reference_solution(mdp)

    def one(run):
        method, alpha = run["method"], run.get("alpha")
        cfg = SolverConfig(
            tol=spec.tol, max_iters=spec.max_iters, record_trace=True, reference_solution=reference
        )
        try:
            if method == "pi":
                res = policy_iteration(mdp, config=cfg)
            elif method == "vi":
                res = value_iteration(mdp, config=cfg)
            else:
                res = alpha_value_iteration(mdp, float(alpha), config=cfg, force=bool(run.get("force", False)))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            return [dict(method=method, alpha=alpha, k=None, residual_inf=None, error_inf=None,
                         wall_time_us=None, status=f"error: {exc}")]
        return [
            dict(method=method, alpha=alpha, k=rec.k, residual_inf=rec.residual_inf, error_inf=rec.error_inf,
                 wall_time_us=rec.wall_time * 1e6, status=res.status)
            for rec in res.trace
        ]

    rows = []
    for chunk in _map(one, spec.runs, jobs):
        rows.extend(chunk)
    return rows


def bellman_graph(mdp: Mdp, thetas, alphas=(), state: int | None = None) -> tuple[list[str], list[dict]]:
    """Samples of ``T theta`` (and ``T_alpha theta``) along one coordinate.

    For ``n == 1`` this is the scalar map itself. For ``n > 1`` pass
    ``state``: the other coordinates are held at the optimal cost and the
    ``state`` component of the operator is sampled. The last row, with
    ``kind="fixed_point"``, is the optimal cost from policy iteration.
    """
    if mdp.n > 1 and state is None:
        raise ValueError(f"graph needs a scalar MDP (n=1), got n={mdp.n}; pick a state to slice along")
    s = 0 if state is None else state
    if not 0 <= s < mdp.n:
        raise ValueError(f"state {s} out of range")
    v_star = reference_solution(mdp)
    columns = ["kind", "theta", "T_theta"] + [f"T_alpha_{a:g}" for a in alphas]

    def row(kind, x):
        th = v_star.copy()
        th[s] = x
        out = {"kind": kind, "theta": float(x), "T_theta": float(apply_bellman(mdp, th)[s])}
        for a in alphas:
            out[f"T_alpha_{a:g}"] = float(apply_t_alpha(mdp, a, th)[s])
        return out

    rows = [row("sample", x) for x in thetas]
    rows.append(row("fixed_point", v_star[s]))
    return columns, rows
