"""Weighted graphs, Laplacians and algebraic connectivity.

The Fiedler value is available two ways: from the Jacobi eigensolver
(:func:`algebraic_connectivity`) and from projected gradient descent on the
Rayleigh quotient restricted to the complement of the all-ones vector
(:func:`fiedler_via_optimization`). The second exists as a cross-check.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from qnetconn.errors import NumericalError, ValidationError
from qnetconn.qmath import hermitian_eigen

ZERO_EIGEN_TOL = 1e-9


@dataclass(frozen=True)
class WeightedTopology:
    """Undirected graph on positive integer node ids.

    ``edges`` holds ``(i, j, weight)`` with ``i < j``; a weight of ``None``
    means "not computed yet". ``overrides`` maps a node id to per-node
    physics fields (e.g. ``{"mu": 4.0}``).
    """

    nodes: tuple
    edges: tuple = ()
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.nodes)
        if any(n < 1 for n in nodes):
            raise ValidationError("node ids must be positive integers")
        if len(set(nodes)) != len(nodes):
            raise ValidationError("duplicate node ids")
        known = set(nodes)
        seen = set()
        edges = []
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            w = e[2] if len(e) > 2 else None
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            if i > j:
                i, j = j, i
            if i not in known or j not in known:
                raise ValidationError(f"edge ({i}, {j}) references an unknown node")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            if w is not None:
                w = float(w)
                if not (w >= 0 and math.isfinite(w)):
                    raise ValidationError(f"edge ({i}, {j}) has invalid weight {w}")
            seen.add((i, j))
            edges.append((i, j, w))
        for n in self.overrides:
            if n not in known:
                raise ValidationError(f"override for unknown node {n}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "overrides", {int(k): dict(v) for k, v in self.overrides.items()})

    @property
    def n(self):
        return len(self.nodes)

    def degree(self, node):
        return sum(1 for i, j, _ in self.edges if node in (i, j))

    def with_weights(self, weights):
        """Copy with weights taken from a ``{(i, j): w}`` mapping or a constant."""
        if isinstance(weights, (int, float)):
            return WeightedTopology(self.nodes, [(i, j, weights) for i, j, _ in self.edges], self.overrides)
        return WeightedTopology(self.nodes, [(i, j, weights[(i, j)]) for i, j, _ in self.edges], self.overrides)

    def with_override(self, nodes, **values):
        over = {k: dict(v) for k, v in self.overrides.items()}
        for n in nodes:
            if n not in self.nodes:
                raise ValidationError(f"node {n} is not in the topology")
            over.setdefault(n, {}).update(values)
        return WeightedTopology(self.nodes, self.edges, over)

    def relabel(self, mapping):
        return WeightedTopology(
            [mapping[n] for n in self.nodes],
            [(mapping[i], mapping[j], w) for i, j, w in self.edges],
            {mapping[k]: v for k, v in self.overrides.items()},
        )


def build_grid(rows, cols):
    """Grid with nodes numbered row-major from 1 and nearest-neighbour edges."""
    if rows < 1 or cols < 1:
        raise ValidationError(f"grid needs rows, cols >= 1, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            node = r * cols + c + 1
            if c + 1 < cols:
                edges.append((node, node + 1, None))
            if r + 1 < rows:
                edges.append((node, node + cols, None))
    return WeightedTopology(range(1, rows * cols + 1), edges)


@dataclass(frozen=True, eq=False)
class LaplacianView:
    matrix: np.ndarray
    order: tuple


def laplacian(g):
    """L = D - A with A[i][j] the edge weight."""
    index = {n: k for k, n in enumerate(g.nodes)}
    m = np.zeros((g.n, g.n))
    for i, j, w in g.edges:
        if w is None:
            raise ValidationError(f"edge ({i}, {j}) has no weight")
        a, b = index[i], index[j]
        m[a, b] -= w
        m[b, a] -= w
        m[a, a] += w
        m[b, b] += w
    return LaplacianView(m, g.nodes)


def laplacian_spectrum(g):
    return hermitian_eigen(laplacian(g).matrix)


def algebraic_connectivity(g):
    """Return ``(lambda2, fiedler_vector)``.

    The vector is unit-norm, orthogonal to the all-ones vector and signed so
    its first non-negligible entry is positive.
    """
    if g.n < 2:
        raise ValidationError("algebraic connectivity needs at least 2 nodes")
    w, v = laplacian_spectrum(g)
    y = v[:, 1].copy()
    y -= y.mean()
    y /= np.linalg.norm(y)
    nz = np.flatnonzero(np.abs(y) > 1e-12)
    if nz.size and y[nz[0]] < 0:
        y = -y
    return max(float(w[1]), 0.0), y


def fiedler_via_optimization(g, tol=1e-10, max_iter=500_000, seed=12345):
    """Minimise y'Ly over unit y orthogonal to 1 by projected gradient descent.

    Stops when the eigen-residual ``||Ly - (y'Ly) y||`` drops below ``tol``.
    """
    if g.n < 2:
        raise ValidationError("algebraic connectivity needs at least 2 nodes")
    lap = laplacian(g).matrix
    # Gershgorin bound on the largest eigenvalue keeps the step stable
    step = 1.0 / max(2.0 * float(np.max(np.diag(lap))), 1e-300)
    y = np.random.default_rng(seed).standard_normal(g.n)
    y -= y.mean()
    y /= np.linalg.norm(y)
    value = float(y @ lap @ y)
    for _ in range(max_iter):
        ly = lap @ y
        value = float(y @ ly)
        if np.linalg.norm(ly - value * y) <= tol:
            return max(value, 0.0)
        y = y - step * ly
        y -= y.mean()
        y /= np.linalg.norm(y)
    raise NumericalError("projected gradient did not converge", best=max(value, 0.0))


def component_count(g):
    """Connected components, ignoring edges whose weight is exactly zero."""
    parent = {n: n for n in g.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, w in g.edges:
        if w == 0:
            continue
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    return len({find(n) for n in g.nodes})


def zero_eigen_multiplicity(g, threshold=ZERO_EIGEN_TOL):
    w, _ = laplacian_spectrum(g)
    return int(np.count_nonzero(w < threshold))
