"""Fringe enumeration, free-factor decision, algebraic extensions,
Takahasi closures, and degrees of compression.

The fringe is the set of folded quotients of the subgroup automaton over
all vertex partitions; it contains every algebraic extension.  The
free-factor test rewrites the smaller subgroup over a basis of the larger
one and minimizes its automaton under Whitehead automorphisms: by peak
reduction, a local minimum of the vertex count is global, and the minimum
is a one-vertex automaton exactly for free factors.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Iterator, Optional, Sequence

from .automaton import InvAutomaton
from .folding import Multigraph, Subgroup, basis, express, fold, stallings
from .subgroup import is_member, is_subgroup_of
from .words import (
    InvalidInputError,
    PreconditionError,
    ResourceLimitError,
    Word,
    concat,
    inverse,
    reduce_word,
)

FRINGE_VERTEX_CAP = 9
WHITEHEAD_RANK_CAP = 4


def _partitions(n: int) -> Iterator[list[int]]:
    """All partitions of range(n) as restricted-growth class vectors."""
    if n == 0:
        yield []
        return
    vec = [0] * n
    maxes = [0] * n
    while True:
        yield list(vec)
        i = n - 1
        while i > 0 and vec[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        vec[i] += 1
        maxes[i] = max(maxes[i - 1], vec[i])
        for j in range(i + 1, n):
            vec[j] = 0
            maxes[j] = maxes[i]


def quotient_subgroup(h: Subgroup, classes: Sequence[int]) -> Subgroup:
    """Identify vertices by class vector and fold."""
    aut = h.aut
    n_classes = max(classes) + 1 if classes else 1
    arcs = [(classes[u], a, classes[v]) for (u, a, v) in aut.arcs()]
    m = Multigraph(aut.rank, n_classes, classes[aut.base], arcs)
    folded, _ = fold(m)
    return Subgroup(folded)


def fringe(h: Subgroup, *, vertex_cap: int = FRINGE_VERTEX_CAP) -> list[Subgroup]:
    """Folded quotients over all vertex partitions, deduplicated; contains h
    and every algebraic extension of h."""
    nv = h.aut.n_vertices
    if nv > vertex_cap:
        raise ResourceLimitError(
            f"fringe needs all partitions of {nv} vertices (cap {vertex_cap})")
    out: dict[bytes, Subgroup] = {}
    for classes in _partitions(nv):
        q = quotient_subgroup(h, classes)
        out.setdefault(q.key(), q)
    return sorted(out.values(), key=lambda s: s.key())


# ---------------------------------------------------------------------------
# Whitehead automorphisms and the free-factor decision


def whitehead_automorphisms(rank: int) -> Iterator[list[Word]]:
    """Type II Whitehead automorphisms as letter-image tables (index i holds
    the image of letter i+1).  Per multiplier a, every positive letter other
    than |a| independently maps to x, xa, a^-1 x, or a^-1 x a."""
    letters = [s for a in range(1, rank + 1) for s in (a, -a)]
    for mult in letters:
        others = [x for x in range(1, rank + 1) if x != abs(mult)]
        for cases in product(range(4), repeat=len(others)):
            if all(c == 0 for c in cases):
                continue
            images: list[Word] = [(x,) for x in range(1, rank + 1)]
            for x, c in zip(others, cases):
                if c == 1:
                    images[x - 1] = (x, mult)
                elif c == 2:
                    images[x - 1] = (-mult, x)
                elif c == 3:
                    images[x - 1] = (-mult, x, mult)
            yield images


def apply_automorphism(images: Sequence[Word], w: Word) -> Word:
    out: Word = ()
    for s in w:
        img = images[s - 1] if s > 0 else inverse(images[-s - 1])
        out = concat(out, img)
    return out


def _whitehead_minimize(h: Subgroup) -> Subgroup:
    """Greedy strict descent on the vertex count of the subgroup automaton;
    peak reduction makes any local minimum global."""
    rank = h.ambient_rank
    cur = h
    improved = True
    while improved:
        improved = False
        best: Optional[Subgroup] = None
        gens = basis(cur)
        for images in whitehead_automorphisms(rank):
            img = stallings([apply_automorphism(images, w) for w in gens], rank)
            if img.size() < cur.size() and (best is None or img.size() < best.size()
                                            or (img.size() == best.size()
                                                and img.key() < best.key())):
                best = img
        if best is not None:
            cur = best
            improved = True
    return cur


def is_free_factor(h: Subgroup, k: Subgroup,
                   *, rank_cap: int = WHITEHEAD_RANK_CAP) -> bool:
    """Whether a basis of h extends to a basis of k (h must sit inside k).

    h is rewritten over a basis of k, so the question becomes whether some
    automorphism of the free group of rank rk(k) carries it onto a subset of
    the letters, i.e. whether its Whitehead minimum has one vertex.
    """
    if not is_subgroup_of(h, k):
        raise PreconditionError("first handle is not contained in the second")
    if h == k or h.is_trivial():
        return True
    b = basis(k)
    r = len(b)
    if r > rank_cap:
        raise ResourceLimitError(f"free-factor search capped at rank {rank_cap}")
    exprs = []
    for w in basis(h):
        e = express(w, b, k.ambient_rank)
        assert e is not None
        exprs.append(e)
    inner = stallings(exprs, r)
    return _whitehead_minimize(inner).size() == 1


def _is_ff_pair(h: Subgroup, k: Subgroup) -> bool:
    """is_free_factor with the inclusion test folded in (False if h is not
    even a subgroup of k)."""
    if h.ambient_rank != k.ambient_rank:
        return False
    if not is_subgroup_of(h, k):
        return False
    return is_free_factor(h, k)


def algebraic_extensions(h: Subgroup, *, vertex_cap: int = FRINGE_VERTEX_CAP
                         ) -> list[Subgroup]:
    """The fringe cleaned up in one pass: drop every member that admits a
    distinct fringe member as a proper free factor."""
    members = fringe(h, vertex_cap=vertex_cap)
    removed = [False] * len(members)
    for i, hi in enumerate(members):
        for j, hj in enumerate(members):
            if i == j or removed[j]:
                continue
            if _is_ff_pair(hi, hj):
                removed[j] = True
    return [m for i, m in enumerate(members) if not removed[i]]


def takahasi_closure(h: Subgroup, k: Subgroup,
                     *, vertex_cap: int = FRINGE_VERTEX_CAP) -> Subgroup:
    """The unique algebraic extension of h that is a free factor of k."""
    if not is_subgroup_of(h, k):
        raise PreconditionError("first handle is not contained in the second")
    candidates = [m for m in algebraic_extensions(h, vertex_cap=vertex_cap)
                  if is_subgroup_of(m, k) and is_free_factor(m, k)]
    assert len(candidates) == 1, \
        f"Takahasi closure must be unique, found {len(candidates)}"
    return candidates[0]


def compression(h: Subgroup, *, vertex_cap: int = FRINGE_VERTEX_CAP
                ) -> tuple[Fraction, Subgroup]:
    """Degree of compression rr(h)/min rr over algebraic extensions (0/0
    read as 1), with a witness attaining the minimum."""
    ae = algebraic_extensions(h, vertex_cap=vertex_cap)
    witness = min(ae, key=lambda m: (m.reduced_rank(), m.key()))
    lo = witness.reduced_rank()
    if lo == 0:
        assert h.reduced_rank() == 0
        return Fraction(1), witness
    return Fraction(h.reduced_rank(), lo), witness


def is_compressed(h: Subgroup, *, vertex_cap: int = FRINGE_VERTEX_CAP) -> bool:
    return compression(h, vertex_cap=vertex_cap)[0] == 1
