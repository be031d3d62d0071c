"""Words, group presentations, Cayley balls, and the genus-2 surface group.

The centerpiece is :func:`fuchsian_genus2`, a closed-form discrete cocompact
subgroup of O+(2,1) built from the regular hyperbolic octagon with vertex
angle pi/4.  Opposite sides of that octagon are paired by hyperbolic
translations through the center; collecting those pairings into canonical
form yields four loxodromic generators a1, b1, a2, b2 satisfying the single
surface relator [a1,b1][a2,b2] = 1.

Also here: the two canonical splittings of the genus-2 group along a
separating curve (amalgam over <[a1,b1]>) and a non-separating curve
(HNN extension with stable letter b1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .isometry import Isometry, compose_many, j_orthonormalize, make_boost, make_rotation
from .minkowski import GeometryError, minkowski_metric


class GroupError(ValueError):
    """Raised for invalid words, presentations, or oversized enumerations."""


# ---------------------------------------------------------------------------
# words


def _reduce_letters(letters) -> tuple[int, ...]:
    out: list[int] = []
    for c in letters:
        c = int(c)
        if c == 0:
            raise GroupError("letter indices are signed and nonzero")
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word in signed generator indices (1-based)."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce_letters(self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-c for c in reversed(self.letters)))

    def conjugate_by(self, g: "Word") -> "Word":
        return g * self * g.inverse()

    def to_list(self) -> list[int]:
        return list(self.letters)

    def __repr__(self) -> str:
        return f"Word{self.letters!r}"


def reduce(letters) -> Word:
    """Freely reduce a letter sequence; idempotent."""
    return Word(tuple(letters))


def commutator(x: Word, y: Word) -> Word:
    return x * y * x.inverse() * y.inverse()


# ---------------------------------------------------------------------------
# presentations


@dataclass(frozen=True)
class GroupPresentation:
    """Finite presentation: generator names, relators, structural kind."""

    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    kind: str  # "free" or "surface_genus_<g>"

    def __post_init__(self):
        if self.kind.startswith("surface_genus_"):
            g = int(self.kind.rsplit("_", 1)[1])
            if len(self.generators) != 2 * g:
                raise GroupError("surface presentation needs 2g generators")
            if len(self.relators) != 1 or len(self.relators[0]) != 4 * g:
                raise GroupError("surface presentation needs one length-4g relator")
            if self.relators[0] != _surface_relator(g):
                raise GroupError("surface relator must be the product of handle commutators")
        elif self.kind == "free":
            if self.relators:
                raise GroupError("free presentation admits no relators")
        else:
            raise GroupError(f"unknown presentation kind {self.kind!r}")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def to_dict(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [w.to_list() for w in self.relators],
            "kind": self.kind,
        }

    @staticmethod
    def from_dict(d: dict) -> "GroupPresentation":
        return GroupPresentation(
            tuple(d["generators"]),
            tuple(Word(tuple(r)) for r in d["relators"]),
            d["kind"],
        )


def _surface_relator(genus: int) -> Word:
    letters: list[int] = []
    for h in range(genus):
        a, b = 2 * h + 1, 2 * h + 2
        letters += [a, b, -a, -b]
    return Word(tuple(letters))


def free_presentation(rank: int, names: tuple[str, ...] | None = None) -> GroupPresentation:
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(rank))
    return GroupPresentation(names, (), "free")


def surface_presentation(genus: int) -> GroupPresentation:
    names: list[str] = []
    for h in range(genus):
        names += [f"a{h + 1}", f"b{h + 1}"]
    return GroupPresentation(tuple(names), (_surface_relator(genus),), f"surface_genus_{genus}")


# ---------------------------------------------------------------------------
# Cayley balls


def _letter_order(rank: int) -> list[int]:
    return list(range(1, rank + 1)) + list(range(-1, -rank - 1, -1))


def _ball_size(rank: int, radius: int) -> int:
    m = 2 * rank
    total = 1
    layer = 1
    for k in range(1, radius + 1):
        layer = layer * (m if k == 1 else m - 1)
        total += layer
    return total


def cayley_ball(p: GroupPresentation, radius: int, policy="exhaustive") -> list[Word]:
    """Freely reduced words of length <= radius, in ShortLex order.

    ``policy`` is either ``"exhaustive"`` or a tuple ``("sampled", k, seed)``
    requesting k uniform reduced words per length.  Surface-group balls use
    free reduction only, so distinct listed words may coincide in the group;
    downstream consumers (QI fits, discreteness counts) tolerate duplicates.
    """
    if radius < 0:
        raise GroupError("radius must be nonnegative")
    if policy == "exhaustive":
        if p.kind.startswith("surface_genus_") and radius > 8:
            raise GroupError("ball too large")
        if _ball_size(p.rank, radius) > 10_000_000:
            raise GroupError("ball too large")
        order = _letter_order(p.rank)
        out = [Word(())]
        frontier: list[tuple[int, ...]] = [()]
        for _ in range(radius):
            nxt = []
            for w in frontier:
                for c in order:
                    if w and w[-1] == -c:
                        continue
                    nxt.append(w + (c,))
            out.extend(Word(w) for w in nxt)
            frontier = nxt
        return out
    if isinstance(policy, tuple) and len(policy) == 3 and policy[0] == "sampled":
        _, k, seed = policy
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        order = _letter_order(p.rank)
        out = [Word(())]
        for length in range(1, radius + 1):
            for _ in range(int(k)):
                w: list[int] = []
                while len(w) < length:
                    c = order[rng.integers(0, len(order))]
                    if w and w[-1] == -c:
                        continue
                    w.append(c)
                out.append(Word(tuple(w)))
        return out
    raise GroupError(f"unknown ball policy {policy!r}")


# ---------------------------------------------------------------------------
# representation tables


@dataclass
class RepresentationTable:
    """Generator images in O+(N,1) for a presentation, plus a word cache.

    Relator images must sit within ``relator_tol`` of the identity; the
    measured maximum residual is stored on construction.
    """

    presentation: GroupPresentation
    images: dict[str, Isometry]
    provenance: str = "unspecified"
    relator_tol: float = 1e-6
    tol: Tolerances = field(default_factory=lambda: DEFAULT)
    word_cache: dict[tuple[int, ...], Isometry] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    relator_residual: float = field(init=False, default=0.0)

    def __post_init__(self):
        missing = [g for g in self.presentation.generators if g not in self.images]
        if missing:
            raise GroupError(f"missing generator images: {missing}")
        dims = {im.matrix.shape[0] for im in self.images.values()}
        if len(dims) != 1:
            raise GroupError("generator images disagree on ambient dimension")
        worst = 0.0
        for rel in self.presentation.relators:
            m = self.evaluate(rel).matrix
            worst = max(worst, float(np.abs(m - np.eye(m.shape[0])).max()))
        self.relator_residual = worst
        if worst > self.relator_tol:
            raise GroupError(
                f"relator residual {worst:.3e} exceeds tolerance {self.relator_tol:.1e}"
            )

    @property
    def dim_total(self) -> int:
        return next(iter(self.images.values())).matrix.shape[0]

    def generator_image(self, index: int) -> Isometry:
        name = self.presentation.generators[abs(index) - 1]
        im = self.images[name]
        return im.inverse() if index < 0 else im

    def evaluate(self, word: Word) -> Isometry:
        """Image of a word, renormalized against drift on long products."""
        key = word.letters
        hit = self.word_cache.get(key)
        if hit is not None:
            return hit
        mats = [self.generator_image(c).matrix for c in key]
        if not mats:
            out = Isometry(np.eye(self.dim_total), tol=self.tol)
        else:
            out = Isometry(
                compose_many(mats, renorm_every=self.tol.renorm_every),
                tol=self.tol,
                check=False,
            )
        self.word_cache[key] = out
        return out

    def conjugated(self, g: Isometry) -> "RepresentationTable":
        """Table with every image replaced by g * image * g^-1.

        Conjugation decorrelates the rounding of exact-product images
        and renormalizing a column costs ~||M||^3 eps, so the relator
        gate is floored at the standard 1e-6 and loosened by ||g||^3;
        wilder conjugators still get rejected because their residual
        grows faster than the allowance.
        """
        gi = g.inverse()
        images = {
            name: Isometry(
                j_orthonormalize(g.matrix @ im.matrix @ gi.matrix), tol=self.tol
            )
            for name, im in self.images.items()
        }
        amplification = max(1.0, float(np.abs(g.matrix).max())) ** 3
        return RepresentationTable(
            self.presentation, images, provenance=f"conjugate({self.provenance})",
            relator_tol=max(self.relator_tol, 1e-6) * amplification, tol=self.tol,
        )

    def to_dict(self) -> dict:
        return {
            "presentation": self.presentation.to_dict(),
            "images": {k: v.to_dict() for k, v in sorted(self.images.items())},
            "provenance": self.provenance,
            "relator_tol": self.relator_tol,
            "relator_residual": self.relator_residual,
        }

    @staticmethod
    def from_dict(d: dict, tol: Tolerances = DEFAULT) -> "RepresentationTable":
        return RepresentationTable(
            GroupPresentation.from_dict(d["presentation"]),
            {k: Isometry.from_dict(v) for k, v in d["images"].items()},
            provenance=d.get("provenance", "unspecified"),
            relator_tol=float(d.get("relator_tol", 1e-6)),
            tol=tol,
        )


# ---------------------------------------------------------------------------
# the octagon group

def side_pairing_length(genus: int) -> float:
    """Translation length of each opposite-side pairing of the regular 4g-gon.

    The 4g-gon with vertex angle pi/(2g) (all vertices in one cycle) has
    apothem arccosh(cot(pi/4g)); each pairing translates through the center
    by twice that.
    """
    if genus < 2:
        raise GroupError("surface constructions need genus >= 2")
    return 2.0 * math.acosh(1.0 / math.tan(math.pi / (4.0 * genus)))


OCTAGON_SIDE_PAIRING_LENGTH = 2.0 * math.acosh(1.0 + math.sqrt(2.0))
"""Translation length of each opposite-side pairing of the regular octagon.

The octagon with vertex angle pi/4 has apothem arccosh(1 + sqrt(2)) (the
genus-2 value of :func:`side_pairing_length`); this is also the length of
the shortest closed geodesic of the quotient surface.
"""


def side_pairing_translations(genus: int = 2, tol: Tolerances = DEFAULT) -> list[Isometry]:
    """The 2g translations pairing opposite sides of the regular 4g-gon.

    Pairing k (k = 0..2g-1) translates along the axis through the center at
    angle (2k+1)pi/4g (the perpendicular bisector of sides k and k+2g) by
    :func:`side_pairing_length`.
    """
    length = side_pairing_length(genus)
    out = []
    for k in range(2 * genus):
        theta = (2 * k + 1) * math.pi / (4.0 * genus)
        r = make_rotation(2, theta)
        b = make_boost(2, length)
        m = j_orthonormalize(r.matrix @ b.matrix @ r.inverse().matrix)
        out.append(Isometry(m, tol=tol))
    return out


def octagon_side_pairings(tol: Tolerances = DEFAULT) -> list[Isometry]:
    """The four translations pairing opposite sides of the regular octagon."""
    return side_pairing_translations(2, tol=tol)


def canonical_generator_words(genus: int) -> dict[str, Word]:
    """Canonical surface generators as words in the 2g side pairings.

    The opposite-side pairings of the regular 4g-gon satisfy the
    alternating relator g0 g1^-1 g2 g3^-1 ... g0^-1 g1 g2^-1 g3 ... = 1,
    not the canonical product of commutators.  Handle collection rewrites
    the alternating word: a cyclic word of the form x y V x^-1 y^-1 Y
    equals [xy, Vy] * (V Y), and V Y is again alternating in the remaining
    letters, so induction peels off one commutator per handle:

        a_i = g_{2i-2} g_{2i-1}^-1
        b_i = g_{2i} g_{2i+1}^-1 ... g_{2g-2} g_{2g-1}^-1 g_{2i-2}^-1
        a_g = g_{2g-2},  b_g = g_{2g-1}^-1

    (1-based i < g; a commutator-preserving twist replaces the raw trailing
    letter of each b_i with g_{2i-2}^-1).  Letters in the returned words are
    1-based indices into the pairing list.
    """
    if genus < 2:
        raise GroupError("surface constructions need genus >= 2")
    words: dict[str, Word] = {}
    for i in range(genus - 1):
        tail = []
        for k in range(2 * i + 2, 2 * genus, 2):
            tail.extend((k + 1, -(k + 2)))
        words[f"a{i + 1}"] = Word((2 * i + 1, -(2 * i + 2)))
        words[f"b{i + 1}"] = Word(tuple(tail) + (-(2 * i + 1),))
    words[f"a{genus}"] = Word((2 * genus - 1,))
    words[f"b{genus}"] = Word((-2 * genus,))
    return words


def fuchsian_surface(genus: int = 2, tol: Tolerances = DEFAULT) -> RepresentationTable:
    """Discrete faithful genus-g surface representation into O+(2,1).

    Generator images evaluate :func:`canonical_generator_words` on the
    opposite-side pairings of the regular 4g-gon, so the canonical relator
    [a1,b1]...[ag,bg] holds at closed-form accuracy and all generators are
    loxodromic.

    Supported genus is 2 or 3.  From genus 4 on, relator evaluation passes
    through matrices whose Minkowski self-products cancel beyond float64
    range (intermediate entries exceed 1e9, so Q of a column is lost to
    rounding long before the product closes up), leaving nothing to certify.
    """
    if genus not in (2, 3):
        raise GroupError(
            "genus must be 2 or 3: relator certification beyond genus 3 "
            "exceeds float64 cancellation range"
        )
    g = side_pairing_translations(genus, tol=tol)
    mats = {}
    for k, iso in enumerate(g):
        mats[k + 1] = iso.matrix
        mats[-(k + 1)] = iso.inverse().matrix
    # genus-3 words pass through larger intermediate products, which scales
    # both the generator form residuals and the relator residual (measured:
    # 2.1e-8 worst form, 6.7e-5 relator, against 1.6e-9 relator at genus 2)
    image_tol = tol if genus == 2 else tol.with_overrides(iso=max(tol.iso, 1e-7))
    images = {}
    for name, word in canonical_generator_words(genus).items():
        m = mats[word.letters[0]]
        for letter in word.letters[1:]:
            m = m @ mats[letter]
        images[name] = Isometry(m, tol=image_tol)
    return RepresentationTable(
        surface_presentation(genus),
        images,
        provenance="fuchsian",
        relator_tol=1e-8 if genus == 2 else 1e-3,
        tol=tol,
    )


def fuchsian_genus2(tol: Tolerances = DEFAULT) -> RepresentationTable:
    """Discrete faithful genus-2 representation into O+(2,1).

    Generators are assembled from the octagon's opposite-side pairings
    g0..g3 so that the canonical relator [a1,b1][a2,b2] holds:

        a1 = g0 g1^-1,  b1 = g2 g3^-1 g0^-1,  a2 = g2,  b2 = g3^-1.

    a2 and b2 are themselves side pairings; a1 and b1 are short products of
    side pairings.  All four are loxodromic with translation length equal to
    the octagon pairing length, and the relator residual is ~2e-9.
    """
    return fuchsian_surface(2, tol=tol)


# ---------------------------------------------------------------------------
# splittings


@dataclass(frozen=True)
class SplittingData:
    """A splitting of the genus-2 group along a simple closed curve.

    ``amalgam``: the curve separates; the two halves are generated by
    ``A_generators`` and ``B_generators`` and glued over ``C_generator``.
    ``hnn``: the curve does not separate; the complement is generated by
    ``A_generators`` and the stable letter conjugates the two boundary
    images ``boundary_identifications = (f1, f2)`` of the curve class.
    """

    kind: str  # "amalgam" | "hnn"
    A_generators: tuple[Word, ...]
    C_generator: Word
    B_generators: tuple[Word, ...] | None = None
    stable_letter: str | None = None
    boundary_identifications: tuple[Word, Word] | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "kind": self.kind,
            "A_generators": [w.to_list() for w in self.A_generators],
            "C_generator": self.C_generator.to_list(),
        }
        if self.B_generators is not None:
            d["B_generators"] = [w.to_list() for w in self.B_generators]
        if self.stable_letter is not None:
            d["stable_letter"] = self.stable_letter
        if self.boundary_identifications is not None:
            d["boundary_identifications"] = [
                w.to_list() for w in self.boundary_identifications
            ]
        return d


def split_amalgam_surface(genus: int = 2) -> SplittingData:
    """Split along the separating curve [a1,b1] of a genus-g surface group.

    The first handle <a1,b1> is glued to the remaining genus-(g-1) piece
    <a2,b2,...,ag,bg> over the curve class [a1,b1] = ([a2,b2]...[ag,bg])^-1.
    """
    if genus < 2:
        raise GroupError("amalgam splitting needs genus >= 2")
    return SplittingData(
        kind="amalgam",
        A_generators=(Word((1,)), Word((2,))),
        B_generators=tuple(Word((k,)) for k in range(3, 2 * genus + 1)),
        C_generator=commutator(Word((1,)), Word((2,))),
    )


def split_amalgam_genus2() -> SplittingData:
    """Split along the separating curve [a1,b1]: <a1,b1> glued to <a2,b2>."""
    return split_amalgam_surface(2)


def split_hnn_genus2() -> SplittingData:
    """Split along the non-separating curve a1, with stable letter b1.

    The complement of the curve is generated by a1, a2, b2.  The curve
    class embeds on the two boundary sides as f2 = a1 and as the stable
    letter's conjugate of a1, which the relator rewrites inside
    <a1, a2, b2> as f1 = [a2,b2] a1; the defining relation
    f1 = b1 f2 b1^-1 then holds modulo the relator.
    """
    f1 = commutator(Word((3,)), Word((4,))) * Word((1,))
    f2 = Word((1,))
    return SplittingData(
        kind="hnn",
        A_generators=(Word((1,)), Word((3,)), Word((4,))),
        C_generator=Word((1,)),
        stable_letter="b1",
        boundary_identifications=(f1, f2),
    )


def verify_splitting(table: RepresentationTable, split: SplittingData) -> float:
    """Residual of the splitting's defining identity in the given table.

    Amalgam: image of C_generator * [B1, B2] * [B3, B4] * ... must be the
    identity (the relator glues [a1,b1] to the rest).  HNN: image of
    f1 * (s f2 s^-1)^-1 must be the identity.
    """
    n = table.dim_total
    if split.kind == "amalgam":
        w = split.C_generator
        for b_odd, b_even in zip(split.B_generators[::2], split.B_generators[1::2]):
            w = w * commutator(b_odd, b_even)
        return float(np.abs(table.evaluate(w).matrix - np.eye(n)).max())
    if split.kind == "hnn":
        f1, f2 = split.boundary_identifications
        s_index = table.presentation.generators.index(split.stable_letter) + 1
        s = table.evaluate(Word((s_index,))).matrix
        lhs = table.evaluate(f1).matrix
        rhs = s @ table.evaluate(f2).matrix @ (minkowski_metric(n) @ s.T @ minkowski_metric(n))
        return float(np.abs(lhs - rhs).max())
    raise GroupError(f"unknown splitting kind {split.kind!r}")


def _subgroup_letters(split_gens: tuple[Word, ...], length: int) -> list[Word]:
    """Reduced words of bounded length in the given subgroup generators."""
    out = [Word(())]
    frontier = [Word(())]
    letters = [w for g in split_gens for w in (g, g.inverse())]
    for _ in range(length):
        nxt = []
        for w in frontier:
            for let in letters:
                ww = w * let
                if len(ww) <= len(w):
                    continue
                nxt.append(ww)
        out.extend(nxt)
        frontier = nxt
    return out


def amalgam_overlap_report(
    table: RepresentationTable, split: SplittingData, depth: int = 4
) -> dict:
    """Exploratory scan: which small <A>-ball elements reappear in the <B>-ball.

    Matches are reported with the residual of their commutator against the
    image of C_generator.  Emitted for inspection, not asserted.
    """
    if split.kind != "amalgam":
        raise GroupError("overlap report applies to amalgam splittings")
    c_img = table.evaluate(split.C_generator).matrix
    a_words = _subgroup_letters(split.A_generators, depth)
    b_words = _subgroup_letters(split.B_generators, depth)

    def key(m: np.ndarray) -> tuple:
        return tuple(np.round(m * 1e6).astype(np.int64).ravel().tolist())

    b_index = {key(table.evaluate(w).matrix): w for w in b_words}
    matches = []
    for w in a_words:
        m = table.evaluate(w).matrix
        hit = b_index.get(key(m))
        if hit is None:
            continue
        comm = m @ c_img - c_img @ m
        matches.append(
            {
                "A_word": w.to_list(),
                "B_word": hit.to_list(),
                "commutes_with_c_residual": float(np.abs(comm).max()),
            }
        )
    return {"depth": depth, "matches": matches}
