"""Isometries of the hyperboloid model: validation, classification, axes, fits.

An isometry is a matrix M with M^T J M = J that preserves the upper sheet
((M e0)_0 > 0).  Loxodromic elements have a simple real eigenvalue
lambda > 1 whose log is the translation length; the extreme eigenpairs are
extracted by power iteration on M and on M^{-1} = J M^T J (no general
nonsymmetric eigensolver is used anywhere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .config import DEFAULT, Tolerances
from .minkowski import (
    GeometryError,
    HPoint,
    bilinear_form,
    lift,
    minkowski_metric,
    quadratic_form,
)

LOXODROMIC = "loxodromic"
ELLIPTIC = "elliptic"
PARABOLIC = "parabolic"


class Isometry:
    """Validated element of O+(N, 1) with cached classification data."""

    __slots__ = ("matrix", "residual", "_klass", "_length")

    def __init__(self, matrix: np.ndarray, tol: Tolerances = DEFAULT, check: bool = True):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GeometryError("isometry matrix must be square")
        j = minkowski_metric(m.shape[0])
        res = float(np.abs(m.T @ j @ m - j).max())
        if check and res > tol.iso:
            raise GeometryError(f"form residual {res!r} exceeds {tol.iso!r}")
        if m[0, 0] <= 0.0:
            raise GeometryError("does not preserve the upper sheet")
        self.matrix = m
        self.residual = res
        self._klass = None
        self._length = None

    @property
    def spatial_dim(self) -> int:
        return self.matrix.shape[0] - 1

    def inverse(self) -> "Isometry":
        j = minkowski_metric(self.matrix.shape[0])
        inv = Isometry(j @ self.matrix.T @ j, check=False)
        inv.residual = self.residual
        return inv

    def apply(self, p: HPoint) -> HPoint:
        return HPoint(self.matrix @ p.coords)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix, check=False)

    def to_dict(self, tol: Tolerances = DEFAULT) -> dict:
        return {
            "signature": {"N": self.spatial_dim, "tol": tol.iso},
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, tol: Tolerances = DEFAULT) -> "Isometry":
        n = int(data["signature"]["N"])
        m = np.array(data["matrix"], dtype=float)
        if m.shape != (n + 1, n + 1):
            raise GeometryError("matrix shape disagrees with signature header")
        return cls(m, tol=tol)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Isometry(N={self.spatial_dim}, residual={self.residual:.2e})"


def check_isometry(matrix: np.ndarray, tol: Tolerances = DEFAULT) -> Isometry:
    """Validate M^T J M = J (max-norm <= tol.iso) and sheet preservation."""
    return Isometry(matrix, tol=tol, check=True)


def j_orthonormalize(matrix: np.ndarray) -> np.ndarray:
    """Re-orthonormalize columns against J (column 0 timelike).

    Used to curb drift in long products; modified Gram-Schmidt with one
    re-orthogonalization sweep.
    """
    m = np.array(matrix, dtype=float)
    n1 = m.shape[0]
    cols = []
    signs = []
    for k in range(n1):
        v = m[:, k].copy()
        for _ in range(2):
            for u, s in zip(cols, signs):
                v -= (bilinear_form(v, u) / s) * u
        q = quadratic_form(v)
        if k == 0:
            if q >= 0:
                raise GeometryError("column 0 is not timelike")
            v /= np.sqrt(-q)
            signs.append(-1.0)
        else:
            if q <= 0:
                raise GeometryError("spatial column is not spacelike")
            v /= np.sqrt(q)
            signs.append(1.0)
        cols.append(v)
    return np.stack(cols, axis=1)


def compose_many(
    matrices, renorm_every: int = DEFAULT.renorm_every
) -> np.ndarray:
    """Left-to-right product with periodic re-J-orthonormalization."""
    acc = None
    count = 0
    for m in matrices:
        acc = np.array(m, dtype=float) if acc is None else acc @ m
        count += 1
        if renorm_every and count % renorm_every == 0:
            acc = j_orthonormalize(acc)
    if acc is None:
        raise GeometryError("empty product")
    return acc


# ---------------------------------------------------------------------------
# extreme eigenpairs


def _power_iteration(m: np.ndarray, maxit: int = 8000, rtol: float = 1e-14):
    """Dominant eigenpair by plain power iteration.

    Returns (lam, v, residual); convergence is judged by the relative
    residual ||Mv - lam v|| / ||M||.
    """
    n = m.shape[0]
    scale = max(np.abs(m).max(), 1.0)
    v = np.ones(n)
    v[0] += 0.5
    if n > 2:
        v[1] += 0.25  # break accidental symmetry deterministically
    v /= np.linalg.norm(v)
    lam = 1.0
    res = np.inf
    for _ in range(maxit):
        w = m @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        lam = float(v @ (m @ v))
        res = float(np.linalg.norm(m @ v - lam * v))
        if res <= rtol * scale:
            break
    return lam, v, res


def _refine_eigenpair(m: np.ndarray, lam: float, v: np.ndarray, steps: int = 4):
    """Shifted inverse iteration polish for slowly separated eigenvalues."""
    n = m.shape[0]
    eye = np.eye(n)
    for _ in range(steps):
        shift = lam * (1.0 + 1e-8) + 1e-13
        try:
            w = np.linalg.solve(m - shift * eye, v)
        except np.linalg.LinAlgError:
            break
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
        lam = float(v @ (m @ v))
    res = float(np.linalg.norm(m @ v - lam * v))
    return lam, v, res


def dominant_eigenpair(m: np.ndarray, rtol: float = 1e-12):
    """Best available dominant eigenpair (lam, v, relative residual)."""
    scale = max(np.abs(m).max(), 1.0)
    lam, v, res = _power_iteration(m, rtol=rtol)
    if res > rtol * scale and lam > 1.0:
        lam2, v2, res2 = _refine_eigenpair(m, lam, v)
        if res2 < res:
            lam, v, res = lam2, v2, res2
    return lam, v, res / scale


# ---------------------------------------------------------------------------
# classification


def _timelike_fixed_candidates(m: np.ndarray) -> list[np.ndarray]:
    """Timelike candidates from the numerical nullspace of (M - I)."""
    n1 = m.shape[0]
    u, s, vt = np.linalg.svd(m - np.eye(n1))
    cutoff = max(s[0], 1.0) * 1e-8
    null = vt[s <= cutoff]
    out = []
    if null.size:
        # search the null span for a timelike direction via the induced form
        basis = null.T  # columns
        j = minkowski_metric(n1)
        gram = basis.T @ j @ basis
        w, vecs = np.linalg.eigh(gram)
        for idx in np.argsort(w):
            if w[idx] < 0:
                cand = basis @ vecs[:, idx]
                if quadratic_form(cand) < 0:
                    cand = cand if cand[0] > 0 else -cand
                    out.append(cand / np.sqrt(-quadratic_form(cand)))
    return out


def _displacement(m: np.ndarray, spatial: np.ndarray) -> float:
    x = lift(spatial)
    return float(np.arccosh(max(-bilinear_form(x, m @ x), 1.0)))


def _min_displacement(m: np.ndarray, tol: Tolerances) -> float:
    """Minimize d(x, Mx) over a coarse grid plus local refinement."""
    n = m.shape[0] - 1
    candidates = [np.zeros(n)]
    for cand in _timelike_fixed_candidates(m):
        candidates.append(cand[1:])  # already sheet-normalized, lift() restores it
    for r in (0.5, 1.0, 2.0, 4.0):
        for i in range(min(n, 6)):
            for sgn in (1.0, -1.0):
                u = np.zeros(n)
                u[i] = sgn * r
                candidates.append(u)
    best = min(candidates, key=lambda u: _displacement(m, u))
    val = _displacement(m, best)
    if val > tol.classify:
        opt = scipy.optimize.minimize(
            lambda u: _displacement(m, u),
            best,
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-12, "fatol": 1e-14},
        )
        val = min(val, float(opt.fun))
    return val


def classify(iso: Isometry, tol: Tolerances = DEFAULT) -> str:
    """Classify as loxodromic, elliptic, or parabolic.

    Loxodromic iff the spectral radius exceeds 1 + tol.classify; among the
    rest, elliptic iff the displacement infimum over the model (coarse grid
    plus local refinement, seeded with fixed-vector candidates) is attained
    below tol.classify.  Threshold cases collapse deliberately.
    """
    if iso._klass is not None:
        return iso._klass
    m = iso.matrix
    lam, _, res = dominant_eigenpair(m)
    if res <= 1e-9 and lam > 1.0 + tol.classify:
        iso._klass = LOXODROMIC
        iso._length = float(np.log(lam))
    else:
        disp = _min_displacement(m, tol)
        iso._klass = ELLIPTIC if disp <= tol.classify else PARABOLIC
        iso._length = 0.0
    return iso._klass


def translation_length(iso: Isometry, tol: Tolerances = DEFAULT) -> float:
    """ln(spectral radius) for loxodromic elements, else 0."""
    classify(iso, tol=tol)
    return iso._length


def translation_lengths_batch(
    mats: np.ndarray, tol: Tolerances = DEFAULT, maxit: int = 3000
) -> np.ndarray:
    """Vectorized translation lengths for a stack of isometry matrices.

    Power-iterates all matrices at once; entries whose iteration does not
    converge to a real dominant eigenvalue above 1 + tol.classify report 0
    (elliptic/parabolic words).
    """
    a = np.asarray(mats, dtype=float)
    k, n, _ = a.shape
    v = np.ones((k, n))
    v[:, 0] += 0.5
    if n > 2:
        v[:, 1] += 0.25
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.maximum(np.abs(a).max(axis=(1, 2)), 1.0)
    lam = np.ones(k)
    res = np.full(k, np.inf)
    active = np.ones(k, dtype=bool)
    for it in range(maxit):
        w = np.einsum("kij,kj->ki", a[active], v[active])
        nw = np.linalg.norm(w, axis=1, keepdims=True)
        nw[nw == 0.0] = 1.0
        v[active] = w / nw
        if it % 25 == 24 or it == maxit - 1:
            mv = np.einsum("kij,kj->ki", a, v)
            lam = np.einsum("ki,ki->k", v, mv)
            res = np.linalg.norm(mv - lam[:, None] * v, axis=1)
            active = res > 1e-13 * scale
            if not active.any():
                break
    out = np.zeros(k)
    ok = (res <= 1e-9 * scale) & (lam > 1.0 + tol.classify)
    out[ok] = np.log(lam[ok])
    return out


# ---------------------------------------------------------------------------
# axis frames


@dataclass
class AxisFrame:
    """Spectral frame of a loxodromic element.

    v_plus / v_minus span the axis on the light cone with B(v+, v-) = -1;
    the columns of e_basis are a J-orthonormal (spacelike) basis of their
    B-orthogonal complement, and ``rotation`` is the orthogonal matrix of
    the element's action on that complement.
    """

    v_plus: np.ndarray
    v_minus: np.ndarray
    e_basis: np.ndarray
    rotation: np.ndarray
    length: float

    def frame_matrix(self) -> np.ndarray:
        return np.column_stack([self.v_plus, self.v_minus, self.e_basis])

    def reassemble(self) -> np.ndarray:
        n1 = self.v_plus.shape[0]
        lam = np.exp(self.length)
        block = np.zeros((n1, n1))
        block[0, 0] = lam
        block[1, 1] = 1.0 / lam
        block[2:, 2:] = self.rotation
        f = self.frame_matrix()
        return f @ block @ np.linalg.inv(f)


def axis_frame(iso: Isometry, tol: Tolerances = DEFAULT) -> AxisFrame:
    """Extract the light-cone eigenpair and axis-orthogonal rotation block.

    Raises for non-loxodromic input ("no axis") and when the power
    iteration cannot certify the eigenpairs ("axis extraction failed").
    """
    if classify(iso, tol=tol) != LOXODROMIC:
        raise GeometryError("no axis: element is not loxodromic")
    m = iso.matrix
    n1 = m.shape[0]
    j = minkowski_metric(n1)
    lam, vp, res_p = dominant_eigenpair(m)
    # the inverse J M^T J expands along v-, with the same factor e^length
    lam_i, vm, res_m = dominant_eigenpair(j @ m.T @ j)
    if res_p > 1e-8 or res_m > 1e-8:
        raise GeometryError("axis extraction failed: eigen residuals too large")
    if abs(lam - lam_i) > 1e-6 * max(1.0, abs(lam)):
        raise GeometryError("axis extraction failed: expansion factors disagree")
    vp = vp if vp[0] > 0 else -vp
    vm = vm if vm[0] > 0 else -vm
    s = -bilinear_form(vp, vm)
    if s <= 0:
        raise GeometryError("axis extraction failed: degenerate light-cone pair")
    vp = vp / np.sqrt(s)
    vm = vm / np.sqrt(s)
    # complement basis: project standard basis off span(v+, v-), J-Gram-Schmidt
    basis = []
    for k in range(n1):
        w = np.zeros(n1)
        w[k] = 1.0
        u = w + bilinear_form(w, vm) * vp + bilinear_form(w, vp) * vm
        for _ in range(2):
            for b in basis:
                u -= bilinear_form(u, b) * b
            u += bilinear_form(u, vm) * vp + bilinear_form(u, vp) * vm
        q = quadratic_form(u)
        if q > 1e-10:
            basis.append(u / np.sqrt(q))
        if len(basis) == n1 - 2:
            break
    if len(basis) != n1 - 2:
        raise GeometryError("axis extraction failed: complement basis incomplete")
    e = np.column_stack(basis)
    rot = np.array([[bilinear_form(e[:, a], m @ e[:, b]) for b in range(n1 - 2)] for a in range(n1 - 2)])
    if np.abs(rot.T @ rot - np.eye(n1 - 2)).max() > tol.iso * 10:
        raise GeometryError("axis extraction failed: complement action not orthogonal")
    length = float(np.log(lam))
    frame = AxisFrame(v_plus=vp, v_minus=vm, e_basis=e, rotation=rot, length=length)
    if np.abs(frame.reassemble() - m).max() > 1e-7 * max(np.abs(m).max(), 1.0):
        raise GeometryError("axis extraction failed: reassembly residual too large")
    return frame


# ---------------------------------------------------------------------------
# congruence fits


def _paired_gram_schmidt(src: np.ndarray, tgt: np.ndarray, rel_tol: float = 1e-7):
    """J-Gram-Schmidt both point sets with pivots chosen on the sources.

    The first accepted vector is timelike (points are on the sheet), all
    later ones spacelike.  Returns (frame_s, frame_t) as column matrices.
    """
    fs: list[np.ndarray] = []
    ft: list[np.ndarray] = []
    signs: list[float] = []
    for i in range(src.shape[0]):
        u = src[i].copy()
        w = tgt[i].copy()
        for _ in range(2):
            for f, g, s in zip(fs, ft, signs):
                u -= (bilinear_form(u, f) / s) * f
                w -= (bilinear_form(w, g) / s) * g
        qu = quadratic_form(u)
        if not fs:
            # first pivot: timelike by construction
            fs.append(u / np.sqrt(-qu))
            ft.append(w / np.sqrt(-quadratic_form(w)))
            signs.append(-1.0)
            continue
        if qu <= rel_tol:
            continue  # dependent on accepted span
        qw = quadratic_form(w)
        if qw <= 0:
            raise GeometryError("not congruent: target span degenerates")
        fs.append(u / np.sqrt(qu))
        ft.append(w / np.sqrt(qw))
        signs.append(1.0)
    return np.column_stack(fs), np.column_stack(ft)


def _complete_frame(frame: np.ndarray) -> np.ndarray:
    """Extend a J-orthonormal frame (timelike first) to a full one."""
    n1 = frame.shape[0]
    cols = [frame[:, k] for k in range(frame.shape[1])]
    signs = [-1.0] + [1.0] * (len(cols) - 1)
    for k in range(n1):
        if len(cols) == n1:
            break
        v = np.zeros(n1)
        v[k] = 1.0
        for _ in range(2):
            for u, s in zip(cols, signs):
                v -= (bilinear_form(v, u) / s) * u
        q = quadratic_form(v)
        if q > 1e-8:
            cols.append(v / np.sqrt(q))
            signs.append(1.0)
    if len(cols) != n1:
        raise GeometryError("frame completion failed")
    return np.column_stack(cols)


def fit_isometry(
    sources,
    targets,
    tol: Tolerances = DEFAULT,
    require_full_rank: bool = False,
) -> tuple[Isometry, float]:
    """Isometry mapping each source point to the matching target point.

    The pairwise B-Grams must agree within tol.fit, entrywise relative
    once entries exceed unit size ("not congruent" otherwise).  Solves
    the frame change on a maximal independent subset
    and re-J-orthonormalizes; on rank-deficient input the map is completed
    deterministically on the orthocomplement of the span (exactly
    determined on the span itself).  Returns (isometry, max displacement).
    """
    s = np.stack([p.coords if isinstance(p, HPoint) else np.asarray(p, float) for p in sources])
    t = np.stack([p.coords if isinstance(p, HPoint) else np.asarray(p, float) for p in targets])
    if s.shape != t.shape or s.shape[0] == 0:
        raise GeometryError("sources and targets must be equal-length nonempty sets")
    n1 = s.shape[1]
    j = minkowski_metric(n1)
    gram_s = s @ j @ s.T
    gram_t = t @ j @ t.T
    gram_scale = np.maximum(1.0, np.maximum(np.abs(gram_s), np.abs(gram_t)))
    if (np.abs(gram_s - gram_t) / gram_scale).max() > tol.fit:
        raise GeometryError("not congruent: source/target Grams disagree")
    frame_s, frame_t = _paired_gram_schmidt(s, t)
    if require_full_rank and frame_s.shape[1] < n1:
        raise GeometryError("degenerate configuration: sources do not span")
    phi_s = _complete_frame(frame_s)
    phi_t = _complete_frame(frame_t)
    m = phi_t @ j @ phi_s.T @ j
    m = j_orthonormalize(m)
    iso = Isometry(m, tol=tol.with_overrides(iso=max(tol.iso, 1e-7)))
    moved = (m @ s.T).T
    gap = -np.einsum("ij,ij->i", moved @ j, t)
    residual = float(np.arccosh(np.maximum(gap, 1.0)).max())
    return iso, residual


# ---------------------------------------------------------------------------
# constructors used across experiments and tests


def make_rotation(n_spatial: int, theta: float, plane: tuple[int, int] = (1, 2)) -> Isometry:
    """Elliptic rotation by theta in a spatial coordinate plane (fixes e0)."""
    i, k = plane
    if not (1 <= i < k <= n_spatial):
        raise GeometryError("rotation plane must use distinct spatial indices")
    m = np.eye(n_spatial + 1)
    m[i, i] = m[k, k] = np.cos(theta)
    m[i, k] = -np.sin(theta)
    m[k, i] = np.sin(theta)
    return Isometry(m)


def make_boost(n_spatial: int, length: float, axis: int = 1) -> Isometry:
    """Loxodromic translation by ``length`` along a coordinate axis."""
    if not 1 <= axis <= n_spatial:
        raise GeometryError("boost axis out of range")
    m = np.eye(n_spatial + 1)
    m[0, 0] = m[axis, axis] = np.cosh(length)
    m[0, axis] = m[axis, 0] = np.sinh(length)
    return Isometry(m)


def make_parabolic_2d(t: float) -> Isometry:
    """Parabolic element of O+(2,1) fixing the ideal point (1, 1, 0)."""
    m = np.array(
        [
            [1.0 + t * t / 2.0, -t * t / 2.0, t],
            [t * t / 2.0, 1.0 - t * t / 2.0, t],
            [t, -t, 1.0],
        ]
    )
    return Isometry(m)


def random_lie_element(rng: np.random.Generator, n_spatial: int) -> np.ndarray:
    """Random element of the Lie algebra so(N, 1): X^T J + J X = 0."""
    n1 = n_spatial + 1
    x = np.zeros((n1, n1))
    a = rng.normal(size=n_spatial)
    s = rng.normal(size=(n_spatial, n_spatial))
    s = (s - s.T) / 2.0
    x[0, 1:] = a
    x[1:, 0] = a
    x[1:, 1:] = s
    return x


def random_isometry(rng: np.random.Generator, n_spatial: int, scale: float = 1.0) -> Isometry:
    """exp of a random Lie-algebra element, re-J-orthonormalized."""
    x = scale * random_lie_element(rng, n_spatial)
    return Isometry(j_orthonormalize(scipy.linalg.expm(x)))


def random_elliptic(rng: np.random.Generator, n_spatial: int, angle_scale: float = 1.0) -> Isometry:
    """Random elliptic element: conjugated spatial rotation generator."""
    n1 = n_spatial + 1
    s = rng.normal(size=(n_spatial, n_spatial))
    s = (s - s.T) / 2.0
    x = np.zeros((n1, n1))
    x[1:, 1:] = s
    x *= angle_scale / max(np.abs(x).max(), 1e-15)
    g = random_isometry(rng, n_spatial, scale=0.5)
    z = g.matrix @ scipy.linalg.expm(x) @ g.inverse().matrix
    return Isometry(j_orthonormalize(z))


def elliptic_perturbation(
    rng: np.random.Generator, n_spatial: int, eps: float
) -> Isometry:
    """Elliptic perturbation exp(A) with ||A||_max = eps (conjugated rotation)."""
    n1 = n_spatial + 1
    s = rng.normal(size=(n_spatial, n_spatial))
    s = (s - s.T) / 2.0
    x = np.zeros((n1, n1))
    x[1:, 1:] = s
    g = random_isometry(rng, n_spatial, scale=0.4).matrix
    a = g @ x @ np.linalg.inv(g)
    a *= eps / max(np.abs(a).max(), 1e-300)
    return Isometry(j_orthonormalize(scipy.linalg.expm(a)))


def random_loxodromic(
    rng: np.random.Generator, n_spatial: int, length: float | None = None
) -> Isometry:
    """Random loxodromic with prescribed (or sampled) translation length."""
    ell = float(length) if length is not None else float(rng.uniform(0.3, 2.5))
    core = make_boost(n_spatial, ell).matrix
    if n_spatial >= 3:
        # add a rotation in the axis complement so the generic case is tested
        theta = rng.uniform(0.0, np.pi)
        rot = make_rotation(n_spatial, theta, plane=(2, 3)).matrix
        core = core @ rot
    g = random_isometry(rng, n_spatial, scale=0.6).matrix
    return Isometry(j_orthonormalize(g @ core @ np.linalg.inv(g)))
