"""Hyperboloid-model primitives in Minkowski space R^{N,1}.

Coordinates are (x0, x1, ..., xN) with quadratic form
Q(x) = -x0^2 + x1^2 + ... + xN^2; the model surface is the upper sheet
{Q(x) = -1, x0 > 0}.  All functions work on plain float ndarrays; HPoint
is a thin validated wrapper used at API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances


class GeometryError(ValueError):
    """Raised when a geometric precondition fails."""


def minkowski_metric(dim_total: int) -> np.ndarray:
    """J = diag(-1, 1, ..., 1) for vectors of length dim_total."""
    j = np.eye(dim_total)
    j[0, 0] = -1.0
    return j


@dataclass(frozen=True)
class QuadraticSpace:
    """Ambient Minkowski space with N spatial dimensions (signature (N, 1))."""

    spatial_dim: int

    @property
    def dim_total(self) -> int:
        return self.spatial_dim + 1

    @property
    def metric(self) -> np.ndarray:
        return minkowski_metric(self.dim_total)

    def contains(self, x: np.ndarray) -> bool:
        return x.shape == (self.dim_total,)


def bilinear_form(x: np.ndarray, y: np.ndarray) -> float:
    """Indefinite pairing B(x, y) = -x0*y0 + sum_i xi*yi.

    Supports broadcasting over leading axes; the last axis is the
    coordinate axis.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = x * y
    return prod[..., 1:].sum(axis=-1) - prod[..., 0]


def quadratic_form(x: np.ndarray) -> float:
    return bilinear_form(x, x)


class HPoint:
    """A point on the upper sheet of the hyperboloid.

    The constructor renormalizes x <- x / sqrt(-Q(x)) when |Q(x)+1| is
    within ``tol.renorm_window`` and rejects the input otherwise.  The
    window scales with max(1, |x|^2): Q is a difference of squares, so
    its float64 noise floor grows with the squared coordinate size, and
    an absolute gate would reject every point more than ~18 units deep.
    """

    __slots__ = ("coords",)

    def __init__(self, coords: np.ndarray, tol: Tolerances = DEFAULT):
        x = np.asarray(coords, dtype=float)
        if x.ndim != 1 or x.shape[0] < 3:
            raise GeometryError("point must be a vector in R^{N+1}, N >= 2")
        q = quadratic_form(x)
        window = tol.renorm_window * max(1.0, float(x @ x))
        if abs(q + 1.0) > window:
            raise GeometryError(
                f"not on the hyperboloid: Q(x) = {q!r} is outside the "
                f"renormalization window {window!r}"
            )
        if x[0] <= 0.0:
            raise GeometryError("not on the upper sheet: x0 <= 0")
        if q < -0.5:
            x = x / np.sqrt(-q)
        object.__setattr__(self, "coords", x)

    @property
    def spatial_dim(self) -> int:
        return self.coords.shape[0] - 1

    def __repr__(self) -> str:  # pragma: no cover
        return f"HPoint({self.coords!r})"


class IdealPoint:
    """A forward light-cone direction, normalized to x0 = 1."""

    __slots__ = ("coords",)

    def __init__(self, coords: np.ndarray, tol: Tolerances = DEFAULT):
        x = np.asarray(coords, dtype=float)
        if x.ndim != 1 or x.shape[0] < 3:
            raise GeometryError("ideal point must be a vector in R^{N+1}")
        if x[0] <= 0.0:
            raise GeometryError("ideal point must lie on the forward cone")
        x = x / x[0]
        q = quadratic_form(x)
        if abs(q) > max(tol.renorm_window, 0.0):
            raise GeometryError(f"not on the light cone: Q(x) = {q!r}")
        object.__setattr__(self, "coords", x)

    def __repr__(self) -> str:  # pragma: no cover
        return f"IdealPoint({self.coords!r})"


def base_point(spatial_dim: int) -> HPoint:
    """The centre (1, 0, ..., 0) of the model."""
    x = np.zeros(spatial_dim + 1)
    x[0] = 1.0
    return HPoint(x)


def lift(spatial: np.ndarray) -> np.ndarray:
    """Lift spatial coordinates u to (sqrt(1+|u|^2), u) on the sheet.

    Broadcasts over leading axes.
    """
    u = np.asarray(spatial, dtype=float)
    x0 = np.sqrt(1.0 + (u * u).sum(axis=-1, keepdims=True))
    return np.concatenate([x0, u], axis=-1)


def _coords(p) -> np.ndarray:
    return p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)


def distance(p, q) -> float:
    """Geodesic distance arccosh(-B(p, q)); broadcasts on arrays."""
    c = -bilinear_form(_coords(p), _coords(q))
    # pairwise products of sheet points satisfy -B >= 1; clamp roundoff
    return np.arccosh(np.maximum(c, 1.0))


def pairwise_distance(points: np.ndarray) -> np.ndarray:
    """Distance matrix for an (m, N+1) array of sheet points."""
    x = np.asarray(points, dtype=float)
    gram = x[:, 1:] @ x[:, 1:].T - np.outer(x[:, 0], x[:, 0])
    d = np.arccosh(np.maximum(-gram, 1.0))
    np.fill_diagonal(d, 0.0)
    return d


def geodesic_point(p: HPoint, q: HPoint, s: float, tol: Tolerances = DEFAULT) -> HPoint:
    """Point at parameter s on the unit-speed geodesic from p towards q.

    s = 0 gives p, s = 1 gives q; any real s is allowed.  Uses
    gamma(u) = cosh(u) a + sinh(u) b with a = p and b the unit spacelike
    initial direction towards q.
    """
    a = _coords(p)
    c = _coords(q)
    d = distance(p, q)
    if d <= tol.point:
        raise GeometryError("coincident endpoints")
    b = (c - np.cosh(d) * a) / np.sinh(d)
    u = s * d
    return HPoint(np.cosh(u) * a + np.sinh(u) * b, tol=tol)


@dataclass(frozen=True)
class GeodesicSubspaceSpec:
    """Totally geodesic subspace cut out by vanishing adapted coordinates.

    ``basis`` columns form a J-orthonormal frame (column 0 timelike); the
    subspace is {x : coordinate i of x in this frame = 0 for i in zero_set}.
    The identity frame describes coordinate subspaces.
    """

    zero_set: frozenset[int]
    basis: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        zs = frozenset(int(i) for i in self.zero_set)
        object.__setattr__(self, "zero_set", zs)
        if any(i <= 0 for i in zs):
            raise GeometryError("zero_set indices must be spatial (>= 1)")

    def frame(self, dim_total: int, tol: Tolerances = DEFAULT) -> np.ndarray:
        if self.basis is None:
            return np.eye(dim_total)
        b = np.asarray(self.basis, dtype=float)
        j = minkowski_metric(dim_total)
        if np.abs(b.T @ j @ b - j).max() > tol.renorm_window:
            raise GeometryError("adapted basis is not J-orthonormal")
        return b


def project_to_subspace(
    x: HPoint, sub: GeodesicSubspaceSpec, tol: Tolerances = DEFAULT
) -> tuple[HPoint, float]:
    """Nearest-point projection onto a geodesic subspace and the distance to it.

    In adapted coordinates c the projection zeroes the indices in
    ``zero_set`` and renormalizes; cosh of the distance is
    sqrt(c0^2 - sum of untouched spatial ci^2).
    """
    xv = _coords(x)
    n1 = xv.shape[0]
    if any(i >= n1 for i in sub.zero_set):
        raise GeometryError("zero_set index out of range")
    frame = sub.frame(n1, tol=tol)
    j = minkowski_metric(n1)
    # J-orthonormal frame inverts through the form: F^-1 = J F^T J
    c = j @ frame.T @ j @ xv
    y = c.copy()
    y[list(sub.zero_set)] = 0.0
    qy = y[1:] @ y[1:] - y[0] * y[0]
    if qy >= -tol.point:
        raise GeometryError("projection undefined: residual vector is not timelike")
    proj = frame @ (y / np.sqrt(-qy))
    dist = float(np.arccosh(max(np.sqrt(-qy), 1.0)))
    return HPoint(proj, tol=tol), dist


def busemann(xi: IdealPoint, origin: HPoint, x: HPoint) -> float:
    """Horofunction value at x, normalized to 0 at origin.

    beta(x) = ln(-B(x, xi) / -B(origin, xi)); decreases at unit rate along
    the geodesic ray from origin towards xi.
    """
    num = -bilinear_form(_coords(x), _coords(xi))
    den = -bilinear_form(_coords(origin), _coords(xi))
    if num <= 0.0 or den <= 0.0:
        raise GeometryError("ideal point must lie on the forward cone")
    return float(np.log(num / den))


def ray_point(origin: HPoint, xi: IdealPoint, r: float) -> HPoint:
    """Point at arclength r on the geodesic ray from origin towards xi."""
    a = _coords(origin)
    u = _coords(xi)
    beta = -bilinear_form(a, u)
    b = u / beta - a  # unit spacelike, tangent at origin
    return HPoint(np.cosh(r) * a + np.sinh(r) * b)
