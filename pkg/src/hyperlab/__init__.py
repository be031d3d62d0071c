"""Hyperboloid-model lab.

Linear algebra on the hyperboloid model of hyperbolic space, isometry
classification in O+(N, 1), kernel-based Minkowski embeddings of trees
and rescaled surface groups, the genus-2 octagon group with its graph-of-
groups splittings, axis-centralizer bending deformations, and a batch CLI
for quasi-isometry, discreteness, and stability reports.

Submodules are imported lazily by the CLI so thread caps set through the
``HYPERLAB_THREADS`` environment variable take effect before the numeric
stack loads; library users import them directly::

    from hyperlab.minkowski import lift, distance
    from hyperlab.groups import fuchsian_genus2
"""

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "bending",
    "cli",
    "config",
    "groups",
    "isometry",
    "kernel",
    "minkowski",
    "serialize",
    "spectral",
    "trees",
]
