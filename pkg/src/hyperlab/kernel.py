"""Minkowski embeddings of finite metric data from hyperbolic-type kernels.

A kernel ``kappa`` of hyperbolic type turns a distance matrix into the Gram
matrix ``G_ij = -kappa(d_ij)`` whose eigendecomposition has exactly one
negative direction; placing that direction on the time axis realizes the
configuration on the hyperboloid with ``-B(v_i, v_j) = kappa(d_ij)``.

Two kernels are provided: ``lambda**d`` (exact on trees) and ``cosh(d)**t``
(surface orbits).  On top of the raw embedding sit the group-equivariant
pieces: fitting an isometry to a distance-preserving relabeling of the
points, and rescaling a Fuchsian representation through the cosh^t kernel
of its orbit, which multiplies every translation length by t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .groups import GroupError, RepresentationTable, Word, cayley_ball
from .isometry import Isometry, fit_isometry
from .minkowski import GeometryError, HPoint, bilinear_form, minkowski_metric


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameter: ``tree_lambda`` (lambda > 1) applies
    lambda**d; ``cosh_power`` (0 < t <= 1) applies cosh(d)**t."""

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind == "tree_lambda":
            if not self.parameter > 1.0:
                raise GeometryError("tree kernel needs lambda > 1")
        elif self.kind == "cosh_power":
            if not 0.0 < self.parameter <= 1.0:
                raise GeometryError("cosh kernel needs t in (0, 1]")
        else:
            raise GeometryError(f"unknown kernel kind {self.kind!r}")

    def kappa(self, d):
        d = np.asarray(d, dtype=float)
        if self.kind == "tree_lambda":
            return self.parameter ** d
        return np.cosh(d) ** self.parameter

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameter": self.parameter}


@dataclass
class GramMatrix:
    """Kernel Gram matrix ``entries = -kappa(dists)`` with diagonal -1."""

    entries: np.ndarray
    source_dists: np.ndarray
    kernel: KernelSpec


def _check_metric(d: np.ndarray, tol: float = 1e-12) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise GeometryError("distance matrix must be square")
    if np.abs(np.diagonal(d)).max(initial=0.0) > tol:
        raise GeometryError("distance matrix has nonzero diagonal")
    if np.abs(d - d.T).max() > tol:
        raise GeometryError("distance matrix is not symmetric")
    if d.min() < -tol:
        raise GeometryError("negative distances")
    scale = max(1.0, float(d.max(initial=0.0)))
    for i in range(d.shape[0]):
        slack = d - (d[i][:, None] + d[i][None, :])
        if slack.max() > tol * scale:
            raise GeometryError("triangle inequality violated")


def gram_from_kernel(
    dists, kernel: KernelSpec, metric_tol: float = 1e-12
) -> GramMatrix:
    """Entrywise ``-kappa`` of a metric, with the diagonal pinned to -1.

    ``metric_tol`` bounds the accepted metric-axiom slack; the strict
    default suits combinatorial inputs, while metrics recomputed from
    floating-point coordinates need the caller to pass their noise floor.
    """
    d = np.array(dists, dtype=float)
    _check_metric(d, tol=metric_tol)
    g = -kernel.kappa(d)
    np.fill_diagonal(g, -1.0)
    return GramMatrix(entries=g, source_dists=d, kernel=kernel)


@dataclass
class Embedding:
    """Points on the hyperboloid realizing a kernel Gram matrix.

    ``points`` has one row per configuration point, time coordinate first.
    ``dropped_spectrum`` lists eigenvalues treated as zero or truncated
    away; when it is empty the reconstruction ``-B(v_i,v_j) = -G_ij`` is
    exact to ``tol.embed`` (scaled by the Gram's magnitude).
    """

    points: np.ndarray
    neg_eigenvalue: float
    dropped_spectrum: list[float]
    kernel: KernelSpec | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def hpoint(self, i: int, tol: Tolerances = DEFAULT) -> HPoint:
        return HPoint(self.points[i], tol=tol)

    def pairwise_cosh(self) -> np.ndarray:
        j = minkowski_metric(self.ambient_dim)
        return -(self.points @ j @ self.points.T)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict() if self.kernel else None,
            "dim": self.ambient_dim,
            "points": self.points.tolist(),
            "neg_eigenvalue": self.neg_eigenvalue,
            "dropped_spectrum": list(self.dropped_spectrum),
            "diagnostics": self.diagnostics,
        }


def minkowski_embed(
    gram: GramMatrix, max_dim: int | None = None, tol: Tolerances = DEFAULT
) -> Embedding:
    """Spectral realization of a kernel Gram matrix on the hyperboloid.

    Requires exactly one eigenvalue below ``-tau`` with
    ``tau = tol.sig_rel * max|eigenvalue|``; zero or several negative
    directions mean the kernel is not of hyperbolic type on this
    configuration and raise rather than being repaired.  ``max_dim`` caps
    the number of spatial coordinates (largest eigenvalues first); all
    discarded eigenvalues are reported in ``dropped_spectrum``.
    """
    g = gram.entries
    w, v = np.linalg.eigh(g)
    scale = float(np.abs(w).max())
    tau = tol.sig_rel * scale
    neg = np.where(w < -tau)[0]
    if len(neg) != 1:
        raise GeometryError(
            "kernel not of hyperbolic type at this configuration: "
            f"{len(neg)} negative eigenvalues beyond {tau:.2e}"
        )
    pos = np.where(w > tau)[0]
    zeros = [float(x) for x in w if -tau <= x <= tau]

    time_vec = v[:, neg[0]]
    if time_vec[0] < 0:
        time_vec = -time_vec
    if time_vec.min() <= 0:
        raise GeometryError("embedded points do not lie on a single sheet")
    time_col = np.sqrt(-w[neg[0]]) * time_vec

    order = pos[np.argsort(w[pos])[::-1]]
    kept = order if max_dim is None else order[: max(0, int(max_dim))]
    truncated = [float(w[i]) for i in order[len(kept):]]
    cols = [time_col]
    for i in kept:
        col = np.sqrt(w[i]) * v[:, i]
        nz = np.nonzero(np.abs(col) > 1e-12 * np.abs(col).max(initial=1.0))[0]
        if len(nz) and col[nz[0]] < 0:
            col = -col
        cols.append(col)
    points = np.column_stack(cols)

    dropped = zeros + truncated
    jmat = minkowski_metric(points.shape[1])
    recon = float(np.abs(-(points @ jmat @ points.T) - (-g)).max())
    allowed = tol.embed * max(1.0, scale) + sum(abs(x) for x in dropped)
    if recon > allowed:
        raise GeometryError(f"embedding reconstruction residual {recon:.2e}")
    q = np.einsum("ij,jk,ik->i", points, jmat, points)
    hyp_res = float(np.abs(q + 1.0).max())
    return Embedding(
        points=points,
        neg_eigenvalue=float(w[neg[0]]),
        dropped_spectrum=dropped,
        kernel=gram.kernel,
        diagnostics={
            "reconstruction_residual": recon,
            "gram_scale": scale,
            "hyperboloid_residual": hyp_res,
        },
    )


def equivariant_operator(
    emb: Embedding, perm: dict[int, int], tol: Tolerances = DEFAULT
) -> tuple[Isometry, float]:
    """Isometry sending point i to point perm[i], by congruence fitting.

    The partial map must preserve the source distances (checked through
    the B-Gram inside the fit, no tighter than the embedding's own
    reconstruction defect).  Returns the fitted isometry and its maximum
    displacement residual over the matched points.
    """
    if not perm:
        raise GeometryError("empty point correspondence")
    idx = sorted(perm)
    sources = [emb.points[i] for i in idx]
    targets = [emb.points[perm[i]] for i in idx]
    floor = max(
        emb.diagnostics.get("reconstruction_residual", 0.0),
        emb.diagnostics.get("hyperboloid_residual", 0.0),
    )
    eff = tol if 4.0 * floor <= tol.fit else tol.with_overrides(fit=4.0 * floor)
    return fit_isometry(sources, targets, tol=eff)


# ---------------------------------------------------------------------------
# closed-form rescaled length curve


def _log_cosh(x: float) -> float:
    if x > 20.0:
        return x - math.log(2.0) + math.log1p(math.exp(-2.0 * x))
    return math.log(math.cosh(x))


def _arccosh_of_exp(u: float) -> float:
    """arccosh(e^u) for u >= 0, stable for large u."""
    if u < 20.0:
        return math.acosh(math.exp(u))
    return u + math.log1p(math.sqrt(-math.expm1(-2.0 * u)))


def scaled_length_curve(length: float, t: float, n_max: int) -> list[float]:
    """Per-step displacement of the kernel image of an n-step translation.

    Term n is (1/n) * arccosh(cosh(n*length)**t), evaluated in log scale to
    survive large arguments; the sequence decreases monotonically to
    t*length.
    """
    if length <= 0:
        raise GeometryError("length must be positive")
    if not 0.0 < t <= 1.0:
        raise GeometryError("t must lie in (0, 1]")
    out = []
    for n in range(1, n_max + 1):
        u = t * _log_cosh(n * length)
        out.append(_arccosh_of_exp(u) / n)
    return out


def boundary_kernel_sample(
    g: Isometry, o: HPoint, t: float, angles, tol: Tolerances = DEFAULT
) -> list[float]:
    """Boundary function of the rescaled orbit map on the plane's circle.

    At the light-cone representative b(theta) = (1, cos theta, sin theta)
    the value is (B(o,b)/B(g o, b))**(t+1); it depends on g only through
    the image point g(o).
    """
    if o.coords.shape[0] != 3 or g.matrix.shape[0] != 3:
        raise GeometryError("boundary samples are defined for the hyperbolic plane")
    space = None
    go = g.apply(o)
    out = []
    for theta in angles:
        b = np.array([1.0, math.cos(theta), math.sin(theta)])
        num = bilinear_form(o.coords, b)
        den = bilinear_form(go.coords, b)
        out.append(float((num / den) ** (t + 1.0)))
    return out


# ---------------------------------------------------------------------------
# rescaling a Fuchsian representation through the cosh^t kernel


def _orbit_points(table: RepresentationTable, words: list[Word]) -> np.ndarray:
    base = np.zeros(table.dim_total)
    base[0] = 1.0
    return np.array([table.evaluate(w).matrix @ base for w in words])


class _PointIndex:
    """Orbit-point registry with exact nearest-match deduplication.

    Orbit points of a discrete cocompact group are far apart, while cached
    evaluations of one group element differ only by rounding noise, so a
    fixed max-norm threshold separates the two cases cleanly.
    """

    def __init__(self, threshold: float):
        self.threshold = threshold
        self.points: list[np.ndarray] = []
        self._stack: np.ndarray | None = None

    def _rebuild(self):
        self._stack = np.array(self.points)

    def match_or_add(self, p: np.ndarray) -> tuple[int, bool]:
        if self.points:
            if self._stack is None or len(self._stack) != len(self.points):
                self._rebuild()
            gaps = np.abs(self._stack - p).max(axis=1)
            i = int(np.argmin(gaps))
            if gaps[i] <= self.threshold:
                return i, False
        self.points.append(np.array(p, dtype=float))
        self._stack = None
        return len(self.points) - 1, True


def fit_scaled_generators(
    base: RepresentationTable,
    t: float,
    ball_radius: int,
    sample_per_length: int = 60,
    seed: int = 0,
    max_dim: int | None = None,
    displacement_cap: float = 8.5,
    tol: Tolerances = DEFAULT,
) -> RepresentationTable:
    """Rescale a Fuchsian representation by t through the cosh^t kernel.

    Embeds a seeded sample of the radius-``ball_radius`` orbit of the base
    point (exhaustive through radius 2, ``sample_per_length`` words per
    longer length) under the kernel cosh(d)**t of the plane distances, then
    fits, for each generator, the isometry carrying each embedded orbit
    point to the embedded image of its left-translate.  Every translation
    length of the result approximates t times the base length.

    Orbit points farther than ``displacement_cap`` from the base point are
    discarded before embedding: pairwise Minkowski products of two points
    at radii r1, r2 cancel to roughly exp(r1 + r2) * 1e-16 in float64, so
    the cap keeps every Gram entry accurate to ~1e-5 regardless of how
    deep the word sample reaches.

    Each fitted operator is exact only on the span of its fit points; a
    finite window of an infinite-dimensional action leaves every operator
    undetermined on the residual directions, so word products (the relator
    included) are not meaningful as whole-matrix identities.  The table is
    therefore built without a relator gate, and diagnostics carry the
    whole-matrix relator residual, the relator displacement measured on the
    embedded sample, per-generator fit residuals, and the dropped spectrum.
    Translation lengths, the quantities this construction targets, are
    carried by the determined span and recover t times the base lengths.
    """
    if not 0.0 < t <= 1.0:
        raise GeometryError("t must lie in (0, 1]")
    if ball_radius < 3:
        raise GroupError("ball radius below 3 cannot pin down the generators")
    pres = base.presentation
    exhaustive = cayley_ball(pres, min(2, ball_radius))
    sampled = []
    if ball_radius > 2:
        rng_words = cayley_ball(
            pres, ball_radius, policy=("sampled", sample_per_length, seed)
        )
        sampled = [w for w in rng_words if len(w) > 2]
    base_words = exhaustive + sampled

    cosh_cap = math.cosh(displacement_cap)
    registry = _PointIndex(threshold=1e-6)
    base_ids = []
    for p in _orbit_points(base, base_words):
        if p[0] > cosh_cap:
            continue
        i, _ = registry.match_or_add(p)
        base_ids.append(i)
    n_base = len(registry.points)

    gen_maps: list[dict[int, int]] = []
    for gi in range(len(pres.generators)):
        gmat = base.generator_image(gi + 1).matrix
        mapping = {}
        for i in range(n_base):
            j, _ = registry.match_or_add(gmat @ registry.points[i])
            mapping[i] = j
        gen_maps.append(mapping)

    pts = np.array(registry.points)
    jmat = minkowski_metric(base.dim_total)
    cosh_d = np.clip(-(pts @ jmat @ pts.T), 1.0, None)
    dists = np.arccosh(cosh_d)
    np.fill_diagonal(dists, 0.0)

    kernel = KernelSpec("cosh_power", t)
    gram = gram_from_kernel(dists, kernel, metric_tol=1e-5)
    emb = minkowski_embed(gram, max_dim=max_dim, tol=tol)

    images = {}
    fit_residuals = {}
    # the registry matches points to 1e-6 in coordinates, so congruence
    # between a point set and its translate holds no tighter than that
    fit_tol = tol.with_overrides(fit=max(tol.fit, 1e-5))
    for name, mapping in zip(pres.generators, gen_maps):
        iso, res = equivariant_operator(emb, mapping, tol=fit_tol)
        images[name] = iso
        fit_residuals[name] = res

    table = RepresentationTable(
        pres,
        images,
        provenance=f"scaled(t={t})",
        relator_tol=float("inf"),
        tol=tol,
    )

    relator_mat = table.evaluate(pres.relators[0]).matrix
    dim = relator_mat.shape[0]
    jd = minkowski_metric(dim)
    sample = emb.points[:n_base]
    moved = (relator_mat @ sample.T).T
    gap = -np.einsum("ij,jk,ik->i", moved, jd, sample)
    orbit_disp = float(np.arccosh(np.maximum(gap, 1.0)).max())

    table.diagnostics.update(
        {
            "fit_residuals": fit_residuals,
            "relator_residual": table.relator_residual,
            "relator_orbit_displacement": orbit_disp,
            "orbit_points": emb.n_points,
            "displacement_cap": displacement_cap,
            "ambient_dim": emb.ambient_dim,
            "dropped_spectrum": emb.dropped_spectrum,
            "embedding_diagnostics": emb.diagnostics,
        }
    )
    return table
