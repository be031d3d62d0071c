"""Shared numerical tolerances and runtime knobs.

Every tolerance used by the library is collected here so experiments can
override them from config files or CLI flags instead of editing code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # hyperboloid membership: |Q(x)+1| after renormalization
    point: float = 1e-10
    # constructor renormalizes when |Q(x)+1| is within this window, rejects beyond
    renorm_window: float = 1e-6
    # max-norm residual of M^T J M - J for a valid isometry
    iso: float = 1e-8
    # spectral-radius margin separating loxodromic from elliptic/parabolic,
    # and the displacement threshold for the elliptic fixed-point search
    classify: float = 1e-7
    # congruence mismatch allowed between source/target Grams in isometry fits
    fit: float = 1e-6
    # embedding Gram reconstruction residual (no truncation)
    embed: float = 1e-8
    # relative signature cutoff: eigenvalues within sig_rel*||G|| of 0 count as 0
    sig_rel: float = 1e-9
    # relator / relation residual for representation tables
    rep: float = 1e-6
    # rotation angles closer than this are merged into one angle class
    angle: float = 1e-9
    # 1x1 spectral values this close to +/-1 join the +/-1 eigenspaces
    pm_cluster: float = 1e-7
    # re-J-orthonormalize running products every this many factors
    renorm_every: int = 50

    def with_overrides(self, **kw: float) -> "Tolerances":
        return replace(self, **kw)


DEFAULT = Tolerances()

TOL_FIELD_NAMES = tuple(f.name for f in fields(Tolerances))


def thread_count() -> int:
    """Worker-thread cap; HYPERLAB_THREADS overrides (min 1)."""
    raw = os.environ.get("HYPERLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(4, os.cpu_count() or 1)
    return max(1, n)
