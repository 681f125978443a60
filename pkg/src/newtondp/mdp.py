"""Finite discounted MDPs: data model, validation, generation and file I/O.

States are ``0..n-1`` and action labels ``0..m-1``. Transition
probabilities are stored row-compressed in a CSR matrix with one row per
``(s, a)`` pair (row index ``s * m + a``), stage costs in an ``(n, m)``
array and the admissible actions in an ``(n, m)`` boolean mask.

Policies are integer arrays of length ``n``; cost vectors are float arrays
of length ``n``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp

#: Per-row tolerance on ``sum_s' p(s, a, s') == 1``.
STOCHASTIC_TOL = 1e-12

#: Default cap on the number of policies ``enumerate_policies`` will yield.
POLICY_CAP = 10**6


class InvalidPolicyError(ValueError):
    """A policy selects a non-admissible action or has the wrong shape."""


class MdpFormatError(ValueError):
    """An MDP document could not be parsed."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class MdpValidationError(ValueError):
    """A parsed MDP violates the model invariants."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True, eq=False)
class Mdp:
    """An infinite-horizon discounted-cost MDP.

    Instances are not validated on construction so that :func:`validate`
    can report problems; use :func:`load_mdp` or :func:`random_mdp` to get
    instances that are guaranteed valid.
    """

    n: int
    m: int
    gamma: float
    P: sp.csr_array
    cost: np.ndarray
    allowed: np.ndarray

    def __post_init__(self):
        P = sp.csr_array(self.P, dtype=float, copy=True)
        if P.shape != (self.n * self.m, self.n):
            raise ValueError(f"P must have shape {(self.n * self.m, self.n)}, got {P.shape}")
        P.sort_indices()
        cost = np.array(self.cost, dtype=float)
        allowed = np.array(self.allowed, dtype=bool)
        if cost.shape != (self.n, self.m) or allowed.shape != (self.n, self.m):
            raise ValueError("cost and allowed must have shape (n, m)")
        cost[~allowed] = 0.0
        for arr in (P.data, P.indices, P.indptr, cost, allowed):
            arr.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "allowed", allowed)
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_dense(cls, transition, cost, gamma, allowed=None) -> "Mdp":
        """Build from a dense ``(n, m, n)`` array indexed ``[s, a, s']``."""
        transition = np.asarray(transition, dtype=float)
        n, m, n2 = transition.shape
        if n != n2:
            raise ValueError("transition must have shape (n, m, n)")
        if allowed is None:
            allowed = np.ones((n, m), dtype=bool)
        allowed = np.asarray(allowed, dtype=bool)
        rows = np.where(allowed[:, :, None], transition, 0.0).reshape(n * m, n)
        return cls(n=n, m=m, gamma=gamma, P=sp.csr_array(rows), cost=cost, allowed=allowed)

    def transition(self, s: int, a: int, sp_: int) -> float:
        return float(self.P[s * self.m + a, sp_])

    def row(self, s: int, a: int) -> np.ndarray:
        """Dense transition row ``p(s, a, .)``."""
        i = s * self.m + a
        out = np.zeros(self.n)
        lo, hi = self.P.indptr[i], self.P.indptr[i + 1]
        out[self.P.indices[lo:hi]] = self.P.data[lo:hi]
        return out

    def dense(self) -> np.ndarray:
        """Dense ``(n, m, n)`` copy of the transition table."""
        return self.P.toarray().reshape(self.n, self.m, self.n)

    def actions(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.allowed[s])

    @property
    def num_policies(self) -> int:
        return math.prod(int(k) for k in self.allowed.sum(axis=1))

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and self.gamma == other.gamma
            and np.array_equal(self.allowed, other.allowed)
            and np.array_equal(self.cost, other.cost)
            and (self.P != other.P).nnz == 0
        )

    __hash__ = None


class InducedDynamics(NamedTuple):
    p_pi: np.ndarray
    g_pi: np.ndarray


def validate(mdp: Mdp) -> list[str]:
    """Return a description of every violated model invariant."""
    out = []
    if not (0.0 < mdp.gamma < 1.0):
        out.append(f"gamma not in (0,1): {mdp.gamma!r}")
    for s in np.flatnonzero(~mdp.allowed.any(axis=1)):
        out.append(f"state {s} has no admissible action")
    P = mdp.P
    row_sums = np.asarray(P.sum(axis=1)).ravel()
    row_min = np.full(P.shape[0], np.inf)
    row_max = np.full(P.shape[0], -np.inf)
    has_nan = np.zeros(P.shape[0], dtype=bool)
    nnz_rows = np.repeat(np.arange(P.shape[0]), np.diff(P.indptr))
    np.minimum.at(row_min, nnz_rows, P.data)
    np.maximum.at(row_max, nnz_rows, P.data)
    np.logical_or.at(has_nan, nnz_rows, ~np.isfinite(P.data))
    for s, a in zip(*np.nonzero(mdp.allowed)):
        i = s * mdp.m + a
        if has_nan[i]:
            out.append(f"row ({s},{a}) has a non-finite probability")
            continue
        if row_min[i] < 0.0 or row_max[i] > 1.0:
            out.append(f"row ({s},{a}) has a probability outside [0,1]")
        if abs(row_sums[i] - 1.0) > STOCHASTIC_TOL:
            out.append(f"row ({s},{a}) sums to {row_sums[i]:.17g}")
        if not np.isfinite(mdp.cost[s, a]):
            out.append(f"cost ({s},{a}) is not finite: {mdp.cost[s, a]!r}")
    return out


def check_policy(mdp: Mdp, pi) -> np.ndarray:
    """Return ``pi`` as an index array, raising if it is not admissible."""
    pi = np.asarray(pi)
    if pi.shape != (mdp.n,) or not np.issubdtype(pi.dtype, np.integer):
        raise InvalidPolicyError(f"policy must be an integer vector of length {mdp.n}")
    if np.any(pi < 0) or np.any(pi >= mdp.m):
        raise InvalidPolicyError("policy selects an action outside 0..m-1")
    bad = np.flatnonzero(~mdp.allowed[np.arange(mdp.n), pi])
    if bad.size:
        s = int(bad[0])
        raise InvalidPolicyError(f"action {int(pi[s])} is not admissible in state {s}")
    return pi.astype(np.intp, copy=False)


def induced_dynamics(mdp: Mdp, pi) -> InducedDynamics:
    """Transition matrix ``P^pi`` and cost vector ``g^pi`` of a policy."""
    pi = check_policy(mdp, pi)
    states = np.arange(mdp.n)
    p_pi = mdp.P[states * mdp.m + pi].toarray()
    return InducedDynamics(p_pi, mdp.cost[states, pi].copy())


def random_mdp(n: int, m: int, gamma: float, seed: int) -> Mdp:
    """Random dense MDP with uniform transition rows and uniform costs.

    Every action is admissible in every state. Draws come from NumPy's
    PCG64 bit generator seeded with ``seed``: first the ``(n, m, n)``
    transition table in C order (each ``(s, a)`` row normalised by its
    sum), then the ``(n, m)`` cost table, all uniform on ``[0, 1)``.
    """
    if n < 1 or m < 1:
        raise ValueError(f"n and m must be positive, got n={n}, m={m}")
    rng = np.random.Generator(np.random.PCG64(seed))
    p = rng.random((n, m, n))
    p /= p.sum(axis=2, keepdims=True)
    g = rng.random((n, m))
    return Mdp.from_dense(p, g, gamma)


def enumerate_policies(mdp: Mdp, cap: int = POLICY_CAP) -> Iterator[np.ndarray]:
    """Yield every deterministic policy once, in lexicographic order."""
    if mdp.num_policies > cap:
        raise ValueError(f"{mdp.num_policies} policies exceed the cap of {cap}")
    choices = [mdp.actions(s).tolist() for s in range(mdp.n)]
    for combo in itertools.product(*choices):
        yield np.array(combo, dtype=np.intp)


# -- file format -------------------------------------------------------------


def save_mdp(mdp: Mdp) -> str:
    """Serialise to the JSON document format described in the README.

    Rows with fewer than half their entries nonzero are written sparse
    (``rows``); the rest dense (``probs``).
    """
    transitions = []
    costs = []
    for s, a in zip(*np.nonzero(mdp.allowed)):
        s, a = int(s), int(a)
        costs.append({"s": s, "a": a, "value": float(mdp.cost[s, a])})
        i = s * mdp.m + a
        lo, hi = mdp.P.indptr[i], mdp.P.indptr[i + 1]
        idx, val = mdp.P.indices[lo:hi], mdp.P.data[lo:hi]
        if 2 * (hi - lo) < mdp.n:
            rows = [{"sp": int(j), "p": float(p)} for j, p in zip(idx, val)]
            transitions.append({"s": s, "a": a, "rows": rows})
        else:
            transitions.append({"s": s, "a": a, "probs": mdp.row(s, a).tolist()})
    doc = {"n": mdp.n, "m": mdp.m, "gamma": mdp.gamma}
    if not mdp.allowed.all():
        doc["allowed"] = [mdp.actions(s).tolist() for s in range(mdp.n)]
    doc["costs"] = costs
    doc["transitions"] = transitions
    return json.dumps(doc, separators=(",", ":"))


def _field(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise MdpFormatError("missing required field", f"{where}{key}")
    val = obj[key]
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise MdpFormatError(f"expected {kind.__name__}, got {type(val).__name__}", f"{where}{key}")
    return float(val) if kind is float else val


def _index(obj, key, bound, where):
    i = _field(obj, key, int, where)
    if not 0 <= i < bound:
        raise MdpFormatError(f"index {i} out of range 0..{bound - 1}", f"{where}{key}")
    return i


def _renormalize(P: sp.csr_array) -> None:
    # Fix rows whose sum is off by more than rounding but within tolerance;
    # rows already stochastic to rounding are left bit-for-bit untouched.
    sums = np.asarray(P.sum(axis=1)).ravel()
    counts = np.diff(P.indptr)
    err = np.abs(sums - 1.0)
    fix = (counts > 0) & (err > 4 * np.finfo(float).eps * np.maximum(counts, 1)) & (err <= STOCHASTIC_TOL)
    for i in np.flatnonzero(fix):
        P.data[P.indptr[i]:P.indptr[i + 1]] /= sums[i]


def load_mdp(document: str) -> Mdp:
    """Parse and validate an MDP document produced by :func:`save_mdp`."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MdpFormatError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    n = _field(doc, "n", int, "")
    m = _field(doc, "m", int, "")
    gamma = _field(doc, "gamma", float, "")
    if n < 1 or m < 1:
        raise MdpFormatError("n and m must be positive", "n" if n < 1 else "m")

    allowed = np.ones((n, m), dtype=bool)
    if "allowed" in doc:
        lists = _field(doc, "allowed", list, "")
        if len(lists) != n:
            raise MdpFormatError(f"expected {n} entries, got {len(lists)}", "allowed")
        allowed[:] = False
        for s, acts in enumerate(lists):
            if not isinstance(acts, list):
                raise MdpFormatError("expected a list of action indices", f"allowed[{s}]")
            for a in acts:
                if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < m:
                    raise MdpFormatError(f"invalid action index {a!r}", f"allowed[{s}]")
                allowed[s, a] = True

    cost = np.zeros((n, m))
    seen_cost = np.zeros((n, m), dtype=bool)
    for i, entry in enumerate(_field(doc, "costs", list, "")):
        where = f"costs[{i}]."
        s, a = _index(entry, "s", n, where), _index(entry, "a", m, where)
        if not allowed[s, a]:
            raise MdpFormatError(f"cost ({s},{a}) given for a non-admissible action", f"{where}a")
        cost[s, a] = _field(entry, "value", float, where)
        seen_cost[s, a] = True

    rows, cols, vals = [], [], []
    seen_row = np.zeros((n, m), dtype=bool)
    for i, entry in enumerate(_field(doc, "transitions", list, "")):
        where = f"transitions[{i}]."
        s, a = _index(entry, "s", n, where), _index(entry, "a", m, where)
        if seen_row[s, a]:
            raise MdpFormatError(f"duplicate row ({s},{a})", f"{where}s")
        if not allowed[s, a]:
            raise MdpFormatError(f"row ({s},{a}) given for a non-admissible action", f"{where}a")
        seen_row[s, a] = True
        r = s * m + a
        if "probs" in entry:
            probs = _field(entry, "probs", list, where)
            if len(probs) != n or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs):
                raise MdpFormatError(f"expected {n} numbers", f"{where}probs")
            for j, p in enumerate(probs):
                if p != 0:
                    rows.append(r)
                    cols.append(j)
                    vals.append(float(p))
        else:
            for k, cell in enumerate(_field(entry, "rows", list, where)):
                cw = f"{where}rows[{k}]."
                rows.append(r)
                cols.append(_index(cell, "sp", n, cw))
                vals.append(_field(cell, "p", float, cw))

    missing = [f"({s},{a})" for s, a in zip(*np.nonzero(allowed & ~seen_row))]
    if missing:
        raise MdpFormatError(f"no transition row for admissible pairs {', '.join(missing[:5])}", "transitions")
    missing = [f"({s},{a})" for s, a in zip(*np.nonzero(allowed & ~seen_cost))]
    if missing:
        raise MdpFormatError(f"no cost for admissible pairs {', '.join(missing[:5])}", "costs")

    P = sp.csr_array((vals, (rows, cols)), shape=(n * m, n))
    P.sum_duplicates()
    _renormalize(P)
    mdp = Mdp(n=n, m=m, gamma=gamma, P=P, cost=cost, allowed=allowed)
    violations = validate(mdp)
    if violations:
        raise MdpValidationError(violations)
    return mdp
