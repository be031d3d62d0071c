"""Finite combinatorial trees and their kernel embeddings.

Vertices are 0..n-1, every edge has length 1, and the path metric is
integer valued.  Each edge also carries a midpoint at distance 1/2 from
both endpoints; embedding the midpoints alongside the vertices produces
point configurations whose pairwise separations certify that the image
of a tree under a lambda**d kernel embedding is not coarsely dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .kernel import Embedding, KernelSpec, gram_from_kernel, minkowski_embed
from .minkowski import GeometryError


@dataclass(frozen=True)
class Tree:
    """Connected acyclic graph on vertices 0..n_vertices-1 with unit edges.

    Parameters
    ----------
    n_vertices : int
        Number of vertices; must be at least 1.
    edges : tuple of (int, int)
        Undirected edges; exactly ``n_vertices - 1`` of them, forming a
        connected graph.  Validated on construction.
    labels : tuple of str, optional
        Original vertex names when the tree was read from a file.

    Raises
    ------
    GeometryError
        If the edge set has the wrong cardinality, references a vertex
        out of range, contains a loop or duplicate, or is disconnected.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.n_vertices
        if n < 1:
            raise GeometryError("tree needs at least one vertex")
        if len(self.edges) != n - 1:
            raise GeometryError(
                f"tree on {n} vertices needs {n - 1} edges, got {len(self.edges)}"
            )
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GeometryError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise GeometryError(f"loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GeometryError(f"duplicate edge {key}")
            seen.add(key)
        if self.labels is not None and len(self.labels) != n:
            raise GeometryError("labels must cover every vertex")
        # n-1 distinct edges + connected  =>  acyclic.
        if len(self._component_of_zero()) != n:
            raise GeometryError("edge set is not connected")

    def _component_of_zero(self) -> set[int]:
        adj = self.adjacency()
        seen = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return seen

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def distance_matrix(self) -> np.ndarray:
        """All-pairs path distances (BFS from every vertex; unit edges)."""
        n = self.n_vertices
        adj = self.adjacency()
        d = np.full((n, n), -1.0)
        for s in range(n):
            d[s, s] = 0.0
            frontier = [s]
            while frontier:
                nxt = []
                for u in frontier:
                    for w in adj[u]:
                        if d[s, w] < 0:
                            d[s, w] = d[s, u] + 1.0
                            nxt.append(w)
                frontier = nxt
        return d

    def configuration_distances(self, include_midpoints: bool = False):
        """Distance matrix of vertices, optionally followed by edge midpoints.

        Midpoints sit at distance 1/2 from both endpoints of their edge,
        so distances involving them are half-integers: a midpoint is at
        ``0.5 + min(d(u, x), d(v, x))`` from a vertex ``x`` and at
        ``1 + min over facing endpoints`` from another midpoint.

        Returns
        -------
        dists : ndarray
            Square distance matrix.
        kinds : list of str
            Row labels, ``"v<i>"`` for vertices then ``"m<u>-<v>"`` for
            midpoints in edge order.
        """
        dv = self.distance_matrix()
        kinds = [f"v{i}" for i in range(self.n_vertices)]
        if not include_midpoints:
            return dv, kinds
        m = len(self.edges)
        n = self.n_vertices
        full = np.zeros((n + m, n + m))
        full[:n, :n] = dv
        ends = np.array(self.edges)  # (m, 2)
        mid_to_v = 0.5 + np.minimum(dv[ends[:, 0]], dv[ends[:, 1]])  # (m, n)
        full[n:, :n] = mid_to_v
        full[:n, n:] = mid_to_v.T
        mid_mid = 1.0 + np.minimum(
            mid_to_v[:, ends[:, 0]], mid_to_v[:, ends[:, 1]]
        ) - 0.5
        np.fill_diagonal(mid_mid, 0.0)
        full[n:, n:] = mid_mid
        kinds += [f"m{u}-{v}" for u, v in self.edges]
        return full, kinds


def build_tree(kind: str, *params: int) -> Tree:
    """Construct a named tree family member.

    Parameters
    ----------
    kind : str
        One of ``"path"``, ``"star"``, ``"regular"``, ``"random"``.
    *params : int
        ``path(n)``: n vertices in a line.  ``star(m)``: center plus m
        leaves.  ``regular(v, depth)``: ball of the given depth in the
        v-regular tree (every interior vertex has v neighbors).
        ``random(n, seed)``: uniform attachment tree on n vertices.
    """
    if kind == "path":
        (n,) = params
        if n < 1:
            raise GeometryError("path needs at least one vertex")
        return Tree(n, tuple((i, i + 1) for i in range(n - 1)))
    if kind == "star":
        (m,) = params
        if m < 1:
            raise GeometryError("star needs at least one leaf")
        return Tree(m + 1, tuple((0, i) for i in range(1, m + 1)))
    if kind == "regular":
        valence, depth = params
        if valence < 2 or depth < 0:
            raise GeometryError("regular tree needs valence >= 2, depth >= 0")
        edges = []
        frontier = [0]
        count = 1
        for level in range(depth):
            nxt = []
            fanout = valence if level == 0 else valence - 1
            for u in frontier:
                for _ in range(fanout):
                    edges.append((u, count))
                    nxt.append(count)
                    count += 1
            frontier = nxt
        return Tree(count, tuple(edges))
    if kind == "random":
        n, seed = params
        if n < 1:
            raise GeometryError("random tree needs at least one vertex")
        rng = np.random.default_rng(seed)
        edges = tuple((int(rng.integers(0, i)), i) for i in range(1, n))
        return Tree(n, edges)
    raise GeometryError(f"unknown tree kind {kind!r}")


def tree_from_file(path: str) -> Tree:
    """Read an edge list, one ``u v`` pair per line.

    Vertex names may be arbitrary tokens; they are numbered in order of
    first appearance and kept as ``labels``.  Blank lines and lines
    starting with ``#`` are skipped.
    """
    index: dict[str, int] = {}
    edges = []
    try:
        fh = open(path)
    except OSError as exc:
        raise GeometryError(f"cannot read tree file {path}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GeometryError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            pair = []
            for token in parts:
                if token not in index:
                    index[token] = len(index)
                pair.append(index[token])
            edges.append((pair[0], pair[1]))
    labels = tuple(sorted(index, key=index.get))
    return Tree(len(index), tuple(edges), labels=labels)


def tree_from_spec(spec: str) -> Tree:
    """Parse ``kind:p1,p2`` (e.g. ``path:6``, ``regular:3,2``) or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind == "file":
        if not arg:
            raise GeometryError("file spec needs a path, e.g. file:edges.txt")
        return tree_from_file(arg)
    try:
        params = tuple(int(x) for x in arg.split(",") if x)
    except ValueError:
        raise GeometryError(f"tree parameters must be integers, got {arg!r}") from None
    return build_tree(kind, *params)


def tree_embed(
    tree: Tree,
    lam: float,
    include_midpoints: bool = False,
    max_dim: int | None = None,
    tol: Tolerances = DEFAULT,
) -> Embedding:
    """Embed a tree in the hyperboloid with pairwise cosh-distance lambda**d.

    Rows of the result follow the vertex order, then edge midpoints when
    requested.  The image is a (K, C) quasi-isometric copy of the tree
    with K = max(ln lambda, 1/ln lambda) and C = ln 2 / ln lambda, but it
    is never cobounded: midpoints of distinct edges stay
    arccosh(lambda) apart while crowding into a bounded ball.

    Parameters
    ----------
    tree : Tree
        Input tree.
    lam : float
        Kernel base, must exceed 1; embedded distance of a pair at tree
        distance d is arccosh(lambda**d).
    include_midpoints : bool, optional
        Also embed one point per edge at half-integer distances.
    max_dim : int, optional
        Truncate the ambient dimension (drops smallest spectral mass).
    tol : Tolerances, optional
        Numerical gates for the spectral factorization.

    Returns
    -------
    Embedding
        Points realizing the kernel Gram matrix; ``diagnostics`` records
        ``n_vertices`` and ``n_midpoints``.
    """
    dists, kinds = tree.configuration_distances(include_midpoints)
    gram = gram_from_kernel(dists, KernelSpec("tree_lambda", lam))
    emb = minkowski_embed(gram, max_dim=max_dim, tol=tol)
    emb.diagnostics["n_vertices"] = tree.n_vertices
    emb.diagnostics["n_midpoints"] = len(kinds) - tree.n_vertices
    return emb


def midpoint_separation(tree: Tree, lam: float, tol: Tolerances = DEFAULT) -> float:
    """Smallest embedded distance between midpoints of distinct edges.

    For a star this equals arccosh(lambda) whatever the leaf count: the
    midpoints accumulate in a bounded ball without getting closer, which
    is the obstruction to the embedding being a quasi-surjection.
    """
    if len(tree.edges) < 2:
        raise GeometryError("midpoint separation needs at least two edges")
    emb = tree_embed(tree, lam, include_midpoints=True, tol=tol)
    n = tree.n_vertices
    cosh = emb.pairwise_cosh()[n:, n:]
    off = cosh[~np.eye(cosh.shape[0], dtype=bool)]
    return float(np.arccosh(max(1.0, off.min())))


def midpoints_within(
    tree: Tree, lam: float, radius: float, center: int = 0, tol: Tolerances = DEFAULT
) -> int:
    """Count edge midpoints embedded within ``radius`` of a vertex's image.

    Grows linearly with the leaf count of a star at any radius above
    arccosh(sqrt(lambda)), exhibiting arbitrarily many arccosh(lambda)-
    separated points in one bounded ball.
    """
    emb = tree_embed(tree, lam, include_midpoints=True, tol=tol)
    n = tree.n_vertices
    cosh_to_center = emb.pairwise_cosh()[center, n:]
    return int((np.arccosh(np.maximum(cosh_to_center, 1.0)) <= radius).sum())
