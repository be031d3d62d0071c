"""Real spectral theory for orthogonal matrices.

Any orthogonal T is orthogonally similar to a block-diagonal form: 2x2
rotation blocks with angles in (0, pi), then an identity block, then a
negated identity block.  The decomposition drives the count of
independent skew-symmetric matrices commuting with T, which is the
dimension of the Lie algebra of T's centralizer in the orthogonal group
and hence the number of independent bending directions available
downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import DEFAULT, Tolerances
from .minkowski import GeometryError

FRAME_ORTHO_TOL = 1e-9
DEGENERATE_ANGLE = 1e-12


@dataclass(frozen=True)
class BlockDecomposition:
    """Orthogonal change of basis revealing the rotation-block structure.

    ``frame.T @ t @ frame`` is block diagonal: 2x2 rotations by the
    entries of ``rotation_blocks`` (ascending), then ``I_plus_dim``,
    then ``-I_minus_dim``.
    """

    frame: np.ndarray
    rotation_blocks: tuple[float, ...]
    plus_dim: int
    minus_dim: int
    notes: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def block_diagonal(self) -> np.ndarray:
        """The canonical form R(theta_1) + ... + I_p + (-I_q)."""
        b = np.zeros((self.dim, self.dim))
        i = 0
        for theta in self.rotation_blocks:
            c, s = math.cos(theta), math.sin(theta)
            b[i : i + 2, i : i + 2] = [[c, -s], [s, c]]
            i += 2
        for _ in range(self.plus_dim):
            b[i, i] = 1.0
            i += 1
        for _ in range(self.minus_dim):
            b[i, i] = -1.0
            i += 1
        return b

    def angle_classes(self, tau: float = 1e-9) -> list[tuple[float, int]]:
        """Merge angles within ``tau`` into (angle, multiplicity) classes."""
        classes: list[tuple[float, int]] = []
        for theta in self.rotation_blocks:
            if classes and theta - classes[-1][0] <= tau:
                old, m = classes[-1]
                classes[-1] = ((old * m + theta) / (m + 1), m + 1)
            else:
                classes.append((theta, 1))
        return classes

    def to_dict(self) -> dict:
        return {
            "angles": list(self.rotation_blocks),
            "plus_dim": self.plus_dim,
            "minus_dim": self.minus_dim,
            "frame": self.frame.tolist(),
        }


def _require_orthogonal(t: np.ndarray, tol: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise GeometryError("expected a square matrix")
    defect = float(np.abs(t.T @ t - np.eye(t.shape[0])).max())
    if defect > tol:
        raise GeometryError(f"matrix is not orthogonal: defect {defect:.2e}")
    return t


def orthogonal_block_decomposition(
    t: np.ndarray, tol: Tolerances = DEFAULT
) -> BlockDecomposition:
    """Rotation-block form of an orthogonal matrix via real Schur.

    The real Schur form of a normal matrix is block diagonal; its 2x2
    blocks are plane rotations and its 1x1 blocks are eigenvalues +-1.
    Columns of the Schur basis are reordered so rotation angles come
    first in ascending order, followed by the +1 and -1 eigenspaces.

    A 1x1 value farther than ``tol.pm_cluster`` from both +1 and -1 is
    rejected as non-orthogonal.  A 2x2 block is kept as a rotation down
    to angle 1e-12; blocks nearer 0 or pi than ``tol.pm_cluster`` are
    flagged in ``notes`` as borderline (folding them into the fixed
    spaces would violate the reconstruction gate).

    Parameters
    ----------
    t : ndarray
        Orthogonal matrix, ``||T^T T - I|| <= tol.iso``.
    tol : Tolerances, optional
        ``iso`` gates input and reconstruction, ``pm_cluster`` the
        eigenvalue clustering.

    Returns
    -------
    BlockDecomposition
        Frame with ``||frame^T frame - I|| <= 1e-9`` and reconstruction
        residual at most ``tol.iso``.
    """
    t = _require_orthogonal(t, tol.iso)
    n = t.shape[0]
    s, z = scipy.linalg.schur(t, output="real")
    rotations: list[tuple[float, int]] = []  # (theta, first column)
    plus_cols: list[int] = []
    minus_cols: list[int] = []
    notes: list[str] = []
    i = 0
    while i < n:
        if i + 1 < n and s[i + 1, i] != 0.0:
            theta = math.acos(min(1.0, max(-1.0, (s[i, i] + s[i + 1, i + 1]) / 2.0)))
            if s[i + 1, i] < 0.0:
                z[:, [i, i + 1]] = z[:, [i + 1, i]]
            if theta <= DEGENERATE_ANGLE:
                plus_cols += [i, i + 1]
            elif math.pi - theta <= DEGENERATE_ANGLE:
                minus_cols += [i, i + 1]
            else:
                if theta <= tol.pm_cluster or math.pi - theta <= tol.pm_cluster:
                    notes.append(f"rotation angle {theta:.3e} borderline near 0 or pi")
                rotations.append((theta, i))
            i += 2
        else:
            v = s[i, i]
            if abs(v - 1.0) <= tol.pm_cluster:
                plus_cols.append(i)
            elif abs(v + 1.0) <= tol.pm_cluster:
                minus_cols.append(i)
            else:
                raise GeometryError(f"real eigenvalue {v!r} is not within 1e-7 of +-1")
            i += 1
    rotations.sort(key=lambda item: item[0])
    order = [c for _, first in rotations for c in (first, first + 1)]
    order += plus_cols + minus_cols
    frame = z[:, order]
    dec = BlockDecomposition(
        frame=frame,
        rotation_blocks=tuple(theta for theta, _ in rotations),
        plus_dim=len(plus_cols),
        minus_dim=len(minus_cols),
        notes=tuple(notes),
    )
    if float(np.abs(frame.T @ frame - np.eye(n)).max()) > FRAME_ORTHO_TOL:
        raise GeometryError("Schur frame lost orthogonality")
    recon = float(np.abs(frame @ dec.block_diagonal() @ frame.T - t).max())
    if recon > tol.iso:
        raise GeometryError(f"block reconstruction residual {recon:.2e}")
    return dec


def _vec_transpose_permutation(n: int) -> np.ndarray:
    """P with P @ vec(B) = vec(B^T) for column-major vec."""
    p = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            p[i + j * n, j + i * n] = 1.0
    return p


def centralizer_algebra_dim(
    t: np.ndarray, tol: Tolerances = DEFAULT
) -> tuple[int, list[np.ndarray]]:
    """Dimension and basis of {B : BT = TB, B^T = -B}.

    These are the infinitesimal generators of the one-parameter
    orthogonal families commuting with T.  The dimension is the SVD
    nullity of the stacked linear system on vec(B) and is cross-checked
    against the block count: with angle-class multiplicities m_1..m_k
    (merged at 1e-9) and fixed-space dimensions p, q it must equal
    sum(m_j^2) + p(p-1)/2 + q(q-1)/2.

    Parameters
    ----------
    t : ndarray
        Orthogonal matrix.
    tol : Tolerances, optional
        Passed through to the block decomposition.

    Returns
    -------
    dim : int
        Nullspace dimension.
    basis : list of ndarray
        Orthonormal (in the Frobenius inner product) skew-symmetric
        matrices spanning the algebra; each commutes with T to 1e-8.
    """
    t = _require_orthogonal(t, tol.iso)
    n = t.shape[0]
    eye = np.eye(n)
    commute = np.kron(t.T, eye) - np.kron(eye, t)
    skew = _vec_transpose_permutation(n) + np.eye(n * n)
    stacked = np.vstack([commute, skew])
    _, sing, vt = np.linalg.svd(stacked)
    cutoff = max(stacked.shape) * np.finfo(float).eps * max(1.0, sing[0])
    dim = int((sing <= cutoff).sum()) + (n * n - len(sing))
    basis = []
    for row in vt[len(vt) - dim :]:
        b = row.reshape((n, n), order="F")
        basis.append((b - b.T) / 2.0)
    dec = orthogonal_block_decomposition(t, tol=tol)
    classes = dec.angle_classes()
    formula = (
        sum(m * m for _, m in classes)
        + dec.plus_dim * (dec.plus_dim - 1) // 2
        + dec.minus_dim * (dec.minus_dim - 1) // 2
    )
    if dim != formula:
        raise GeometryError(
            f"nullspace dimension {dim} disagrees with block count {formula}"
        )
    return dim, basis


def rotation_block_matrix(
    angles, plus_dim: int = 0, minus_dim: int = 0
) -> np.ndarray:
    """Block-diagonal orthogonal matrix from explicit rotation angles.

    One 2x2 rotation per listed angle (repeats give higher
    multiplicity), followed by +1 and -1 diagonal entries.
    """
    n = 2 * len(tuple(angles)) + plus_dim + minus_dim
    out = np.zeros((n, n))
    pos = 0
    for theta in angles:
        c, s = math.cos(theta), math.sin(theta)
        out[pos : pos + 2, pos : pos + 2] = [[c, -s], [s, c]]
        pos += 2
    for _ in range(plus_dim):
        out[pos, pos] = 1.0
        pos += 1
    for _ in range(minus_dim):
        out[pos, pos] = -1.0
        pos += 1
    return out


def spread_angles(count: int, rng: np.random.Generator | None = None) -> list[float]:
    """Strictly increasing angles in (0.3, pi - 0.3) with gaps >= 0.2*span/count.

    Jitter comes from ``rng`` when given (deterministic for a seeded
    generator), so repeated draws give distinct but well-separated
    angle sets that never straddle the +-1 clustering window.
    """
    if count <= 0:
        return []
    span = math.pi - 0.6
    out = []
    for i in range(count):
        u = float(rng.uniform(0.1, 0.9)) if rng is not None else 0.5
        out.append(0.3 + span * (i + u) / count)
    return out


def structured_orthogonal(rng: np.random.Generator, size: int):
    """Seeded orthogonal matrix with a known centralizer dimension.

    Draws rotation-block multiplicities and +-1 eigenspace sizes, builds
    the block diagonal with well-separated angles, and conjugates by a
    seeded orthogonal frame (QR with sign-fixed diagonal, so the draw is
    a deterministic function of the generator state).

    Returns (matrix, predicted_dim, structure) where predicted_dim is
    sum(m_j^2) + p(p-1)/2 + q(q-1)/2.
    """
    pairs = size // 2
    k = int(rng.integers(0, pairs + 1))
    mults = []
    used = 0
    for _ in range(k):
        if used >= pairs:
            break
        m = int(rng.integers(1, min(3, pairs - used) + 1))
        mults.append(m)
        used += m
    rest = size - 2 * used
    p = int(rng.integers(0, rest + 1))
    q = rest - p
    distinct = spread_angles(len(mults), rng)
    angles = [a for a, m in zip(distinct, mults) for _ in range(m)]
    core = rotation_block_matrix(angles, p, q)
    a = rng.standard_normal((size, size))
    qmat, r = np.linalg.qr(a)
    qmat = qmat * np.sign(np.diag(r))
    t = qmat @ core @ qmat.T
    predicted = sum(m * m for m in mults) + p * (p - 1) // 2 + q * (q - 1) // 2
    structure = {"rotation_multiplicities": mults, "plus": p, "minus": q}
    return t, predicted, structure
