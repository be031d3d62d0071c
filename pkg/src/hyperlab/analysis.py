"""Verification harness: QI fitting, discreteness counts, stability probes.

The quasi-isometry fit is an exact min-max: the smallest K (then C)
making (1/K) n - C <= d <= K n + C hold for every sampled pair of word
norm n and orbit displacement d.  Discreteness is witnessed by counting
orbit points inside a fixed ball while growing the word radius until
the count stabilizes.  Stability probes re-fit the constants after
composing every generator with small elliptic isometries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .groups import GroupError, RepresentationTable
from .isometry import elliptic_perturbation
from .minkowski import GeometryError, HPoint, base_point, distance, minkowski_metric

AMBIENT_DELTA = math.acosh(math.sqrt(2.0))
MAX_BALL_RADIUS = 12


@dataclass(frozen=True)
class QIEstimate:
    """Fitted quasi-isometry constants for a sampled orbit map.

    Every sampled pair (n, d) satisfies (1/K) n - C <= d <= K n + C
    within 1e-9; ``max_violation`` records the worst slack actually
    measured and ``delta_used`` the hyperbolicity constant of the
    ambient space (arccosh(sqrt 2) for the hyperboloid).
    """

    K: float
    C: float
    n_constraints: int
    max_violation: float
    delta_used: float = AMBIENT_DELTA

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "C": self.C,
            "n_constraints": self.n_constraints,
            "max_violation": self.max_violation,
            "delta_used": self.delta_used,
        }


def qi_fit(pairs, c_cap: float = 0.0) -> QIEstimate:
    """Minimal (K, C) with (1/K) n - C <= d <= K n + C for all pairs.

    Bisection on K: for fixed K the best additive constant is
    C(K) = max of the two one-sided residuals, which is non-increasing
    in K, so the smallest K with C(K) <= c_cap is found to 1e-9 and the
    returned C is exactly that residual maximum (clamped at 0).

    Parameters
    ----------
    pairs : iterable of (int, float)
        Word norms (positive) with their orbit displacements.
    c_cap : float, optional
        Largest admissible C; 0 demands a purely multiplicative fit.

    Returns
    -------
    QIEstimate
        ``n_constraints`` counts both one-sided constraints per pair.
    """
    data = [(float(n), float(d)) for n, d in pairs]
    if len(data) < 2:
        raise GeometryError("qi_fit needs at least two pairs")
    if any(n <= 0 for n, _ in data):
        raise GeometryError("word lengths must be positive")
    if c_cap < 0:
        raise GeometryError("c_cap must be nonnegative")
    ns = np.array([n for n, _ in data])
    ds = np.array([d for _, d in data])

    def residual(k: float) -> float:
        upper = float((ds - k * ns).max())  # need C >= d - K n
        lower = float((ns / k - ds).max())  # need C >= n / K - d
        return max(upper, lower)

    lo, hi = 1.0, 1.0
    while residual(hi) > c_cap:
        hi *= 2.0
        if hi > 1e9:
            raise GeometryError("qi_fit cannot satisfy the cap: degenerate pairs")
    if residual(lo) <= c_cap:
        hi = lo
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if residual(mid) <= c_cap:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10:
            break
    k = hi
    c = max(0.0, residual(k))
    violation = float(
        max((ds - (k * ns + c)).max(), ((ns / k - c) - ds).max())
    )
    return QIEstimate(K=k, C=c, n_constraints=2 * len(data), max_violation=violation)


class _OrbitRegistry:
    """Dedup registry for orbit points, bucketed by log of the top entry.

    Distinct orbit points of a discrete torsion-free cocompact group sit
    at least a systole apart, which in hyperboloid coordinates is an
    entrywise-relative gap of order one; re-evaluations of the same
    element differ by float noise only.  A relative max-norm threshold
    of 1e-6 therefore separates the two cases at any orbit radius.
    """

    BUCKET = 1e-5
    REL_TOL = 1e-6

    def __init__(self):
        self.points: list[np.ndarray] = []
        self._buckets: dict[int, list[int]] = {}

    def __len__(self) -> int:
        return len(self.points)

    def _key(self, p: np.ndarray) -> int:
        return int(math.floor(math.log(p[0]) / self.BUCKET))

    def match_or_add(self, p: np.ndarray) -> tuple[int, bool]:
        key = self._key(p)
        scale = max(1.0, float(p[0]))
        for k in (key - 1, key, key + 1):
            for idx in self._buckets.get(k, ()):
                if np.abs(self.points[idx] - p).max() <= self.REL_TOL * scale:
                    return idx, False
        self.points.append(np.array(p, dtype=float))
        idx = len(self.points) - 1
        self._buckets.setdefault(key, []).append(idx)
        return idx, True


def _letter_matrices(table: RepresentationTable) -> list[np.ndarray]:
    rank = len(table.presentation.generators)
    mats = []
    for k in range(1, rank + 1):
        mats.append(table.generator_image(k).matrix)
        mats.append(table.generator_image(-k).matrix)
    return mats


def _orbit_bfs(
    table: RepresentationTable,
    x0: HPoint,
    ball_radius: int,
    keep_bound=None,
):
    """Breadth-first orbit enumeration with optional expansion pruning.

    Yields (word_norm, cosh_displacement) per distinct group element.
    ``keep_bound(level)`` gives the largest cosh-displacement worth
    expanding at that level; deeper descendants of anything beyond it
    provably cannot matter to the caller.
    """
    if ball_radius < 0:
        raise GroupError("ball radius must be nonnegative")
    if ball_radius > MAX_BALL_RADIUS:
        raise GroupError(
            f"ball radius {ball_radius} exceeds the enumeration guard "
            f"({MAX_BALL_RADIUS})"
        )
    mats = _letter_matrices(table)
    jx0 = minkowski_metric(table.dim_total) @ x0.coords
    registry = _OrbitRegistry()
    registry.match_or_add(x0.coords)
    yield 0, 1.0
    frontier = [x0.coords]
    for level in range(1, ball_radius + 1):
        if not frontier:
            return
        stacked = np.array(frontier)
        batches = [(m @ stacked.T).T for m in mats]
        next_frontier = []
        bound = None if keep_bound is None else keep_bound(level)
        for batch in batches:
            for p in batch:
                _, fresh = registry.match_or_add(p)
                if not fresh:
                    continue
                cosh_d = float(-(p @ jx0))
                yield level, max(1.0, cosh_d)
                if level < ball_radius and (bound is None or cosh_d <= bound):
                    next_frontier.append(p)
        frontier = next_frontier


def orbit_length_pairs(
    table: RepresentationTable, ball_radius: int, x0: HPoint | None = None
) -> list[tuple[int, float]]:
    """(word norm, displacement) for every nontrivial element in the ball.

    Word norms are graph distances in the group (shortest product over
    all spellings), obtained by breadth-first enumeration with orbit
    deduplication; the identity is omitted because QI fitting requires
    positive lengths.
    """
    if x0 is None:
        x0 = base_point(table.dim_total - 1)
    pairs = []
    for norm, cosh_d in _orbit_bfs(table, x0, ball_radius):
        if norm > 0:
            pairs.append((norm, float(np.arccosh(cosh_d))))
    return pairs


def discreteness_count(
    table: RepresentationTable,
    x0: HPoint | None = None,
    R: float = 2.0,
    ball_radius: int = 8,
) -> int:
    """#{group elements w in the word ball : d(x0, w x0) <= R}.

    A ball-restricted stand-in for the full-group count (which cannot be
    enumerated): once ``ball_radius`` grows past the word length that
    the fitted QI constants allow inside B(x0, R), the count stabilizes,
    and that stabilization is the discreteness witness.  Expansion is
    pruned soundly: prepending one letter changes the displacement by at
    most the largest generator displacement, so points too far out to
    return within R in the remaining letters are dropped.
    """
    if R < 0:
        raise GeometryError("R must be nonnegative")
    if x0 is None:
        x0 = base_point(table.dim_total - 1)
    jx0 = minkowski_metric(table.dim_total) @ x0.coords
    step = 1.0
    for m in _letter_matrices(table):
        step = max(step, float(np.arccosh(max(1.0, -(m @ x0.coords) @ jx0))))

    def keep_bound(level: int) -> float:
        return math.cosh(R + step * (ball_radius - level))

    cosh_r = math.cosh(R) * (1.0 + 1e-12)
    count = 0
    for _, cosh_d in _orbit_bfs(table, x0, ball_radius, keep_bound=keep_bound):
        if cosh_d <= cosh_r:
            count += 1
    return count


def gromov_product(p: HPoint, q: HPoint, r: HPoint) -> float:
    """(p . q)_r = (d(p,r) + d(q,r) - d(p,q)) / 2, always nonnegative.

    Measures how long geodesics from r toward p and toward q travel
    together; it vanishes when r lies on the geodesic through p and q.
    """
    return 0.5 * (distance(p, r) + distance(q, r) - distance(p, q))


@dataclass
class StabilityRow:
    """One perturbation trial: magnitude, seed index, fit, residual."""

    magnitude: float
    trial: int
    K: float
    C: float
    relator_residual: float

    def to_dict(self) -> dict:
        return {
            "magnitude": self.magnitude,
            "trial": self.trial,
            "K": self.K,
            "C": self.C,
            "relator_residual": self.relator_residual,
        }


@dataclass
class StabilityReport:
    """Baseline QI fit plus the per-trial fits under perturbation."""

    baseline: QIEstimate
    ball_radius: int
    c_cap: float
    rows: list[StabilityRow] = field(default_factory=list)

    def spread(self, magnitude: float) -> tuple[float, float]:
        """Largest relative deviation of (K, C) from baseline at a magnitude."""
        dk = dc = 0.0
        for row in self.rows:
            if row.magnitude == magnitude:
                dk = max(dk, abs(row.K - self.baseline.K) / self.baseline.K)
                dc = max(dc, abs(row.C - self.baseline.C) / max(1e-12, self.baseline.C))
        return dk, dc

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.to_dict(),
            "ball_radius": self.ball_radius,
            "c_cap": self.c_cap,
            "rows": [r.to_dict() for r in self.rows],
        }


def perturbed_table(
    table: RepresentationTable,
    magnitude: float,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT,
) -> RepresentationTable:
    """Compose every generator image with a small elliptic isometry.

    The perturbation stays inside O+(N,1) by construction, so this
    probes openness of the representation's properties rather than
    projection error.  The relator residual is re-measured and stored,
    not gated (perturbation breaks the relator by design).
    """
    from .isometry import Isometry

    n_spatial = table.dim_total - 1
    images = {}
    for name in table.presentation.generators:
        pert = elliptic_perturbation(rng, n_spatial, magnitude)
        images[name] = Isometry(pert.matrix @ table.images[name].matrix, tol=tol)
    return RepresentationTable(
        table.presentation,
        images,
        provenance=f"perturbed({table.provenance}, {magnitude:g})",
        relator_tol=float("inf"),
        tol=tol,
    )


def stability_probe(
    table: RepresentationTable,
    magnitudes,
    trials: int = 20,
    seed: int = 0,
    ball_radius: int = 4,
    c_cap: float = 1.0,
    tol: Tolerances = DEFAULT,
) -> StabilityReport:
    """Re-fit QI constants after seeded elliptic perturbations.

    For each magnitude and trial index, every generator is composed with
    an independent elliptic perturbation of that magnitude (RNG stream
    keyed by (seed, magnitude index, trial index), so runs are
    deterministic and trials independent), then (K, C) is re-fitted on
    the fixed word ball.

    Magnitude 0 reproduces the baseline fit exactly.
    """
    baseline = qi_fit(orbit_length_pairs(table, ball_radius), c_cap=c_cap)
    report = StabilityReport(baseline=baseline, ball_radius=ball_radius, c_cap=c_cap)
    for mi, eps in enumerate(magnitudes):
        for trial in range(trials):
            rng = np.random.default_rng([seed, mi, trial])
            pert = perturbed_table(table, float(eps), rng, tol=tol)
            est = qi_fit(orbit_length_pairs(pert, ball_radius), c_cap=c_cap)
            report.rows.append(
                StabilityRow(
                    magnitude=float(eps),
                    trial=trial,
                    K=est.K,
                    C=est.C,
                    relator_residual=pert.relator_residual,
                )
            )
    return report
