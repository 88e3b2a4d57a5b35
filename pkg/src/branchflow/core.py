"""Shared domain types for branched flow networks.

Geometry, discrete transport instances, transport plans, rooted flow
trees with per-edge sectional areas, and the sub-additive cost
functional that makes trunk edges cheaper than parallel ones.

All types are immutable value data after construction; the operations
here are pure functions and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

KIND_SOURCE = "source"
KIND_TARGET = "target"
KIND_BRANCH = "branch"
KINDS = (KIND_SOURCE, KIND_TARGET, KIND_BRANCH)

MASS_TOL = 1e-9           # closure tolerance for probability masses
CONSERVATION_RTOL = 1e-9  # relative residual tolerated at internal nodes


class BranchFlowError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(BranchFlowError):
    """An argument violates a documented precondition."""


class StructuralError(BranchFlowError):
    """A flow network is structurally invalid."""


class ConvergenceError(BranchFlowError):
    """An iterative solver could not reach a usable state."""


class InputError(BranchFlowError):
    """An input file is missing, unreadable, or malformed."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_point(coords: Iterable[float]) -> np.ndarray:
    """Return ``coords`` as a read-only float vector of dimension 2 or 3."""
    p = np.array(coords, dtype=float)
    if p.ndim != 1 or p.shape[0] not in (2, 3):
        raise ParameterError(f"a point needs 2 or 3 coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ParameterError("point coordinates must be finite")
    return _freeze(p)


def _as_point_array(arr, name: str) -> np.ndarray:
    a = np.atleast_2d(np.array(arr, dtype=float))
    if a.ndim != 2 or a.shape[1] not in (2, 3):
        raise ParameterError(f"{name} must be an (n, 2) or (n, 3) array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite coordinates")
    return _freeze(a)


def _as_mass_vector(arr, name: str) -> np.ndarray:
    v = np.array(arr, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite entries")
    return _freeze(v)


@dataclass(frozen=True)
class TransportInstance:
    """Discrete transport instance: weighted source and target points.

    ``p`` and ``q`` are strictly positive masses over sources and targets,
    each summing to one.  A source and a target at identical coordinates
    would create a degenerate zero-cost edge and is rejected.
    """

    sources: np.ndarray
    targets: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sources", _as_point_array(self.sources, "sources"))
        object.__setattr__(self, "targets", _as_point_array(self.targets, "targets"))
        object.__setattr__(self, "p", _as_mass_vector(self.p, "p"))
        object.__setattr__(self, "q", _as_mass_vector(self.q, "q"))
        if self.sources.shape[1] != self.targets.shape[1]:
            raise ParameterError("sources and targets must share one dimension")
        if self.p.shape[0] != self.sources.shape[0]:
            raise ParameterError("p must have one mass per source")
        if self.q.shape[0] != self.targets.shape[0]:
            raise ParameterError("q must have one mass per target")
        if np.any(self.p <= 0) or np.any(self.q <= 0):
            raise ParameterError("all masses must be strictly positive")
        if abs(self.p.sum() - 1.0) > MASS_TOL or abs(self.q.sum() - 1.0) > MASS_TOL:
            raise ParameterError("p and q must each sum to one")
        clash = (self.sources[:, None, :] == self.targets[None, :, :]).all(axis=2)
        if clash.any():
            i, j = np.argwhere(clash)[0]
            raise ParameterError(
                f"source {i} and target {j} share identical coordinates"
            )

    @property
    def n_sources(self) -> int:
        return self.sources.shape[0]

    @property
    def n_targets(self) -> int:
        return self.targets.shape[0]

    @property
    def dim(self) -> int:
        return self.sources.shape[1]


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative coupling matrix with prescribed row and column masses."""

    gamma: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2:
            raise ParameterError("gamma must be a matrix")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ParameterError("gamma entries must be finite and nonnegative")
        object.__setattr__(self, "gamma", _freeze(g))
        object.__setattr__(self, "row_marginal", _as_mass_vector(self.row_marginal, "row_marginal"))
        object.__setattr__(self, "col_marginal", _as_mass_vector(self.col_marginal, "col_marginal"))
        if self.gamma.shape != (self.row_marginal.shape[0], self.col_marginal.shape[0]):
            raise ParameterError("gamma shape must match the marginal lengths")

    def marginal_error(self) -> tuple[float, float]:
        """L1 distances of the plan's row/column sums from the marginals."""
        row = float(np.abs(self.gamma.sum(axis=1) - self.row_marginal).sum())
        col = float(np.abs(self.gamma.sum(axis=0) - self.col_marginal).sum())
        return row, col


@dataclass(frozen=True)
class FlowTree:
    """Rooted flow network: one source, target leaves, free branch nodes.

    ``parent[n]`` is the node feeding ``n`` (-1 for the source) and
    ``area[n]`` is the sectional area on the edge into ``n``.  The source
    row stores its total outflow, so every internal node obeys the same
    conservation rule: its area equals the sum of its children's areas.
    """

    coords: np.ndarray
    kind: np.ndarray
    parent: np.ndarray
    area: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_point_array(self.coords, "coords"))
        kind = np.array(self.kind, dtype="U6")
        parent = np.array(self.parent, dtype=np.int64)
        area = np.array(self.area, dtype=float)
        n = self.coords.shape[0]
        if kind.shape != (n,) or parent.shape != (n,) or area.shape != (n,):
            raise ParameterError("kind, parent and area must have one entry per node")
        object.__setattr__(self, "kind", _freeze(kind))
        object.__setattr__(self, "parent", _freeze(parent))
        object.__setattr__(self, "area", _freeze(area))

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def children(self) -> list[list[int]]:
        """Child lists per node, in node-id order.

        Parents outside the node range contribute no link; validate_tree
        reports them as orphans.
        """
        count = self.n_nodes
        out: list[list[int]] = [[] for _ in range(count)]
        for n, par in enumerate(self.parent):
            if 0 <= par < count:
                out[int(par)].append(n)
        return out

    def edge_lengths(self) -> np.ndarray:
        """Euclidean length of the edge into each node (0 for the source)."""
        lengths = np.zeros(self.n_nodes)
        child = np.flatnonzero(self.parent >= 0)
        seg = self.coords[child] - self.coords[self.parent[child]]
        lengths[child] = np.linalg.norm(seg, axis=1)
        return lengths


@dataclass(frozen=True)
class BotParams:
    """Parameters of a branched-network build.

    ``alpha`` is the sub-additivity exponent in [0, 1]; ``formula`` picks
    the closed-form branch-point rule ("interp" or "power");
    ``shift_norm``/``shift_delta`` control the optional frozen random
    displacement used to separate paired networks; ``seed`` drives every
    random draw.
    """

    alpha: float = 0.5
    formula: str = "interp"
    shift_norm: float = 0.0
    shift_delta: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.formula not in ("interp", "power"):
            raise ParameterError(f"formula must be 'interp' or 'power', got {self.formula!r}")
        if self.shift_norm < 0:
            raise ParameterError("shift_norm must be nonnegative")
        if self.shift_norm > 0 and self.shift_delta <= 0:
            raise ParameterError("shift_delta must be positive when shift_norm > 0")


@dataclass(frozen=True)
class Violation:
    """One violated structural constraint, with the nodes involved."""

    kind: str
    nodes: tuple[int, ...]
    residual: float | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(v.message for v in self.violations)


def validate_tree(tree: FlowTree, demands: Mapping[int, float] | None = None) -> ValidationReport:
    """Check a flow tree against the node balance rules.

    Verifies single-source rootedness, acyclicity, leaf-only targets,
    positive areas, and conservation (area into each internal node equals
    the sum of its children's areas, relative tolerance 1e-9).  When
    ``demands`` maps target ids to their assigned areas, those are checked
    too.  Diagnostics are returned, never raised.
    """
    v: list[Violation] = []
    n = tree.n_nodes

    for i, k in enumerate(tree.kind):
        if k not in KINDS:
            v.append(Violation("bad-kind", (i,), None, f"node {i} has unknown kind {k!r}"))

    src = np.flatnonzero(tree.kind == KIND_SOURCE)
    if src.size != 1:
        v.append(Violation("source-count", tuple(int(s) for s in src), None,
                           f"expected exactly one source node, found {src.size}"))
    for s in src:
        if tree.parent[s] != -1:
            v.append(Violation("source-parent", (int(s),), None,
                               f"source node {s} must not have a parent"))

    for i in range(n):
        par = int(tree.parent[i])
        if tree.kind[i] == KIND_SOURCE:
            continue
        if par < 0 or par >= n:
            v.append(Violation("orphan", (i,), None, f"node {i} has no valid parent"))
        elif par == i:
            v.append(Violation("cycle", (i,), None, f"node {i} is its own parent"))

    # Walk parent chains; any chain that revisits an in-progress node is a cycle.
    color = np.zeros(n, dtype=np.int8)  # 0 new, 1 on current chain, 2 settled
    for start in range(n):
        if color[start]:
            continue
        chain = []
        node = start
        while True:
            if node < 0 or node >= n:
                break  # dangling parent, already reported as orphan
            if color[node] == 2:
                break
            if color[node] == 1:
                cyc = chain[chain.index(node):]
                v.append(Violation("cycle", tuple(cyc), None,
                                   f"nodes {cyc} form a cycle"))
                break
            color[node] = 1
            chain.append(node)
            if tree.parent[node] == -1:
                break
            node = int(tree.parent[node])
        for m in chain:
            color[m] = 2

    nonsource = tree.kind != KIND_SOURCE
    bad_area = np.flatnonzero(nonsource & ~(tree.area > 0))
    for i in bad_area:
        v.append(Violation("nonpositive-area", (int(i),), float(tree.area[i]),
                           f"node {i} carries nonpositive area {tree.area[i]}"))

    kids = tree.children()
    for i in range(n):
        k = tree.kind[i]
        if k == KIND_TARGET and kids[i]:
            v.append(Violation("target-not-leaf", (i, *kids[i]), None,
                               f"target node {i} has children {kids[i]}"))
        elif k in (KIND_SOURCE, KIND_BRANCH):
            outflow = float(tree.area[kids[i]].sum()) if kids[i] else 0.0
            residual = float(tree.area[i] - outflow)
            tol = CONSERVATION_RTOL * max(1.0, abs(float(tree.area[i])))
            if abs(residual) > tol:
                v.append(Violation("conservation", (i,), residual,
                                   f"node {i} carries {tree.area[i]} but sends {outflow} "
                                   f"(residual {residual:.3g})"))

    if demands is not None:
        for node, demand in demands.items():
            if node < 0 or node >= n or tree.kind[node] != KIND_TARGET:
                v.append(Violation("demand-mismatch", (int(node),), None,
                                   f"demand given for non-target node {node}"))
            elif abs(tree.area[node] - demand) > CONSERVATION_RTOL * max(1.0, abs(demand)):
                v.append(Violation("demand-mismatch", (int(node),),
                                   float(tree.area[node] - demand),
                                   f"target {node} carries {tree.area[node]} "
                                   f"but was assigned {demand}"))

    return ValidationReport(tuple(v))


def bot_cost(tree: FlowTree, alpha: float) -> float:
    """Total transport cost of a flow tree: sum of area**alpha * length.

    At ``alpha = 1`` this is the plain mass-times-distance objective; at
    ``alpha = 0`` it degenerates to total edge length.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    report = validate_tree(tree)
    if not report.ok:
        raise StructuralError(f"invalid tree: {report.summary()}")
    child = np.flatnonzero(tree.parent >= 0)
    seg = tree.coords[child] - tree.coords[tree.parent[child]]
    lengths = np.linalg.norm(seg, axis=1)
    return float(np.sum(tree.area[child] ** alpha * lengths))


def subadditivity_gain(m1: float, m2: float, alpha: float) -> float:
    """Saving from merging two flows: m1**a + m2**a - (m1 + m2)**a.

    Strictly positive for alpha in [0, 1); exactly zero at alpha = 1.
    """
    if m1 <= 0 or m2 <= 0:
        raise ParameterError("masses must be strictly positive")
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return m1 ** alpha + m2 ** alpha - (m1 + m2) ** alpha
