"""Subgroup queries over canonical handles: membership, index, normality,
normalizer, conjugacy, corank, Hall completions, Whitehead cut test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .automaton import NO, InvAutomaton, bouquet
from .folding import Multigraph, Subgroup, basis, fold, stallings, transversal_words
from .words import (
    InvalidInputError,
    PreconditionError,
    Word,
    check_word,
    concat,
    inverse,
    reduce_word,
)


def is_member(w: Word, h: Subgroup) -> bool:
    """w is in the subgroup iff its reduction reads a basepoint round."""
    word = reduce_word(check_word(w, h.ambient_rank))
    return h.aut.trace(h.aut.base, word) == h.aut.base


def is_subgroup_of(h: Subgroup, k: Subgroup) -> bool:
    if h.ambient_rank != k.ambient_rank:
        raise InvalidInputError("handles live over different alphabets")
    return all(is_member(w, k) for w in basis(h))


def conjugate_subgroup(h: Subgroup, w: Word) -> Subgroup:
    """h^w = w^-1 h w."""
    g = reduce_word(check_word(w, h.ambient_rank))
    return stallings([concat(inverse(g), b, g) for b in basis(h)], h.ambient_rank)


@dataclass(frozen=True)
class IndexReport:
    kind: str                      # "finite" | "infinite"
    index: Optional[int] = None
    transversal: Optional[list[Word]] = None


def index(h: Subgroup) -> IndexReport:
    """Finite iff the automaton is saturated, in which case the vertex count
    is the index and tree walks give a Schreier transversal."""
    if not h.aut.is_saturated():
        return IndexReport("infinite")
    return IndexReport("finite", h.aut.n_vertices, transversal_words(h.aut))


def coset_automaton(h: Subgroup, u: Word) -> tuple[InvAutomaton, int]:
    """Stallings automaton of the coset Hu: the subgroup automaton plus the
    hanging path for the untraceable suffix of u; returns it with the vertex
    accepting u.  No folding is needed because u is reduced and the suffix
    leaves at a deficient slot."""
    word = reduce_word(check_word(u, h.ambient_rank))
    aut = h.aut
    v = aut.base
    i = 0
    while i < len(word):
        nxt = aut.step(v, word[i])
        if nxt == NO:
            break
        v = nxt
        i += 1
    if i == len(word):
        return aut, v
    arcs = list(aut.arcs())
    n = aut.n_vertices
    for s in word[i:]:
        if s > 0:
            arcs.append((v, s, n))
        else:
            arcs.append((n, -s, v))
        v = n
        n += 1
    return InvAutomaton(aut.rank, n, aut.base, arcs, check=False), v


def in_coset(w: Word, h: Subgroup, u: Word) -> bool:
    return is_member(concat(w, inverse(u)), h)


# ---------------------------------------------------------------------------
# normality, normalizer, conjugacy


def is_normal(h: Subgroup) -> bool:
    """Nontrivial H is normal iff its automaton is saturated and vertex
    transitive; the trivial subgroup is normal by convention."""
    if h.is_trivial():
        return True
    return h.aut.is_saturated() and h.aut.is_vertex_transitive()


def _extended_neighborhood(h: Subgroup) -> tuple[InvAutomaton, int]:
    """The tail-length neighborhood of the restricted core inside the
    Schreier automaton, with the vertex carrying the original basepoint."""
    aut = h.aut
    rst, tail, old_ids = aut.trim_with_map("restricted_core")
    depth = tail
    arcs = list(rst.arcs())
    n = rst.n_vertices
    fwd = {(u, a): t for (u, a, t) in arcs}
    bwd = {(t, a): u for (u, a, t) in arcs}
    frontier = list(range(n))
    for d in range(depth):
        new_frontier = []
        for v in frontier:
            for a in range(1, rst.rank + 1):
                if (v, a) not in fwd:
                    fwd[(v, a)] = n
                    bwd[(n, a)] = v
                    arcs.append((v, a, n))
                    new_frontier.append(n)
                    n += 1
                if (v, a) not in bwd:
                    bwd[(v, a)] = n
                    fwd[(n, a)] = v
                    arcs.append((n, a, v))
                    new_frontier.append(n)
                    n += 1
        frontier = new_frontier
    est = InvAutomaton(aut.rank, n, rst.base, arcs, check=False)
    # locate the original basepoint: walk the tail word backwards from the
    # attachment vertex inside the saturated neighborhood
    tail_word = _tail_word(aut, old_ids)
    pos = est.trace(rst.base, inverse(tail_word))
    assert pos != NO
    return est, pos


def _tail_word(aut: InvAutomaton, old_ids: list[int]) -> Word:
    """Label of the walk from the basepoint to the restricted core."""
    keep = set(old_ids)
    v = aut.base
    word: list[int] = []
    prev = NO
    while v not in keep:
        step = next((s, w) for (s, w) in aut.neighbors(v) if w != prev)
        word.append(step[0])
        prev = v
        v = step[1]
    return tuple(word)


def normalizer(h: Subgroup) -> Subgroup:
    """N_F(H), built from label-automorphism images of the basepoint in the
    tail-neighborhood of the restricted core."""
    n = h.ambient_rank
    if h.is_trivial():
        return stallings([(a,) for a in range(1, n + 1)], n)
    est, base_pos = _extended_neighborhood(h)
    pointed = InvAutomaton(est.rank, est.n_vertices, base_pos,
                           est.arcs(), check=False)
    conjugators: list[Word] = []
    for v in pointed.automorphism_orbit_of_base():
        if v == base_pos:
            continue
        p = pointed.path_word(base_pos, v)
        assert p is not None
        conjugators.append(p)
    return stallings(basis(h) + conjugators, n)


def are_conjugate(h1: Subgroup, h2: Subgroup) -> Optional[Word]:
    """A conjugator w with h1^w == h2, or None.  Conjugacy holds iff the
    restricted cores agree as unpointed labeled digraphs."""
    if h1.ambient_rank != h2.ambient_rank:
        raise InvalidInputError("handles live over different alphabets")
    if h1.is_trivial() or h2.is_trivial():
        return () if h1.key() == h2.key() else None
    r1, _, old1 = h1.aut.trim_with_map("restricted_core")
    r2, _, old2 = h2.aut.trim_with_map("restricted_core")
    if r1.unbased_key() != r2.unbased_key():
        return None
    p = h1.aut.path_word(h1.aut.base, old1[r1.base])
    q = h2.aut.path_word(h2.aut.base, old2[r2.base])
    assert p is not None and q is not None
    # match r1's basepoint to a vertex of r2 giving the same based automaton
    for v in range(r2.n_vertices):
        rebased = InvAutomaton(r2.rank, r2.n_vertices, v, r2.arcs(), check=False)
        if rebased.canonical_key() == r1.canonical_key():
            s = r2.path_word(r2.base, v)
            assert s is not None
            w = concat(p, inverse(s), inverse(q))
            if conjugate_subgroup(h1, w) == h2:
                return w
    return None


# ---------------------------------------------------------------------------
# corank


def _smith_min_gens(rows: list[list[int]], n: int) -> int:
    """Minimal number of generators of Z^n / <rows> (count of non-unit
    invariant factors plus the free rank of the cokernel)."""
    m = [list(r) for r in rows]
    if not m:
        return n
    units = 0
    top = 0
    cols = n
    while top < len(m) and top < cols:
        # find a pivot of minimal absolute value
        piv = None
        for i in range(top, len(m)):
            for j in range(top, cols):
                if m[i][j] != 0 and (piv is None or abs(m[i][j]) < abs(m[piv[0]][piv[1]])):
                    piv = (i, j)
        if piv is None:
            break
        pi, pj = piv
        m[top], m[pi] = m[pi], m[top]
        for row in m:
            row[top], row[pj] = row[pj], row[top]
        done = False
        while not done:
            done = True
            for i in range(top + 1, len(m)):
                if m[i][top]:
                    q = m[i][top] // m[top][top]
                    m[i] = [a - q * b for a, b in zip(m[i], m[top])]
                    if m[i][top]:
                        m[top], m[i] = m[i], m[top]
                        done = False
            for j in range(top + 1, cols):
                if m[top][j]:
                    q = m[top][j] // m[top][top]
                    for row in m:
                        row[j] -= q * row[top]
                    if m[top][j]:
                        for row in m:
                            row[top], row[j] = row[j], row[top]
                        done = False
        if abs(m[top][top]) == 1:
            units += 1
        top += 1
    return n - units


def _abelianized(w: Word, n: int) -> list[int]:
    row = [0] * n
    for s in w:
        row[abs(s) - 1] += 1 if s > 0 else -1
    return row


def _corank_lower_bound(h: Subgroup) -> int:
    n = h.ambient_rank
    return _smith_min_gens([_abelianized(w, n) for w in basis(h)], n)


def add_generator(h: Subgroup, w: Word) -> Subgroup:
    """<h, w> by wedging one petal onto the subgroup automaton and folding."""
    word = reduce_word(check_word(w, h.ambient_rank))
    aut = h.aut
    arcs = list(aut.arcs())
    n = aut.n_vertices
    prev = aut.base
    for j, s in enumerate(word):
        nxt = aut.base if j == len(word) - 1 else n
        if j != len(word) - 1:
            n += 1
        if s > 0:
            arcs.append((prev, s, nxt))
        else:
            arcs.append((nxt, -s, prev))
        prev = nxt
    folded, _ = fold(Multigraph(aut.rank, n, aut.base, arcs))
    return Subgroup(folded)


def _one_generator_extensions(h: Subgroup, bridge_cap: int) -> list[Subgroup]:
    """All distinct <h, w> reachable by a vertex-pair identification or by a
    clean bridge word of length <= bridge_cap."""
    aut = h.aut
    n = aut.rank
    out: dict[bytes, Subgroup] = {}
    _, paths = aut.spanning_tree()

    def path(v: int) -> Word:
        p = paths[v]
        assert p is not None
        return p

    for u in range(aut.n_vertices):
        for v in range(u + 1, aut.n_vertices):
            k = add_generator(h, concat(path(u), inverse(path(v))))
            out.setdefault(k.key(), k)
    letters = [s for a in range(1, n + 1) for s in (a, -a)]

    def extend(x: int, m: tuple[int, ...], y: int) -> None:
        k = add_generator(h, concat(path(x), m, inverse(path(y))))
        out.setdefault(k.key(), k)

    for x in range(aut.n_vertices):
        for first in letters:
            if aut.step(x, first) != NO:
                continue
            stack: list[tuple[int, ...]] = [(first,)]
            while stack:
                m = stack.pop()
                for y in range(aut.n_vertices):
                    if aut.step(y, -m[-1]) == NO:
                        extend(x, m, y)
                if len(m) < bridge_cap:
                    for s in letters:
                        if s != -m[-1]:
                            stack.append(m + (s,))
    return list(out.values())


def corank(h: Subgroup, *, bridge_cap: int = 2) -> int:
    """Minimum number of elements to add to generate the whole ambient group.

    Breadth-first search over single-generator extensions (vertex-pair
    identifications plus short clean bridges), pruned by the abelianized
    lower bound; for saturated automata identifications alone are complete.
    """
    n = h.ambient_rank
    rose = Subgroup(bouquet(n)).key()
    if h.key() == rose:
        return 0
    seen = {h.key()}
    frontier = [h]
    for depth in range(1, n + 1):
        nxt: list[Subgroup] = []
        for k in frontier:
            for k2 in _one_generator_extensions(k, bridge_cap):
                key = k2.key()
                if key == rose:
                    return depth
                if key in seen:
                    continue
                if depth + _corank_lower_bound(k2) > n:
                    continue
                seen.add(key)
                nxt.append(k2)
        frontier = nxt
    return n


# ---------------------------------------------------------------------------
# Hall completions


def hall_complete(h: Subgroup, avoid: Sequence[Word] = ()) -> Subgroup:
    """A finite-index overgroup containing h as a free factor and avoiding
    every word in `avoid`.

    Avoid words are traced in as hanging paths, then every letter deficit is
    closed by pairing the i-th deficient vertex with the i-th co-deficient
    one; the embedded subgroup automaton (and each avoid path, which ends
    away from the basepoint) is untouched by the added arcs.
    """
    n = h.ambient_rank
    aut = h.aut
    for w in avoid:
        word = reduce_word(check_word(w, n))
        if not word:
            raise PreconditionError("avoid words must be nonempty")
        if is_member(word, h):
            raise PreconditionError("avoid word lies in the subgroup")
    arcs = list(aut.arcs())
    nv = aut.n_vertices
    fwd = {(u, a): t for (u, a, t) in arcs}
    bwd = {(t, a): u for (u, a, t) in arcs}

    def step(v: int, s: int) -> int:
        return fwd.get((v, s), NO) if s > 0 else bwd.get((v, -s), NO)

    for w in avoid:
        word = reduce_word(check_word(w, n))
        v = aut.base
        i = 0
        while i < len(word):
            t = step(v, word[i])
            if t == NO:
                break
            v = t
            i += 1
        for s in word[i:]:
            if s > 0:
                arcs.append((v, s, nv))
                fwd[(v, s)] = nv
                bwd[(nv, s)] = v
            else:
                arcs.append((nv, -s, v))
                fwd[(nv, -s)] = v
                bwd[(v, -s)] = nv
            v = nv
            nv += 1
    for a in range(1, n + 1):
        missing_out = [v for v in range(nv) if (v, a) not in fwd]
        missing_in = [v for v in range(nv) if (v, a) not in bwd]
        assert len(missing_out) == len(missing_in)
        for u, v in zip(missing_out, missing_in):
            arcs.append((u, a, v))
            fwd[(u, a)] = v
            bwd[(v, a)] = u
    return Subgroup(InvAutomaton(n, nv, aut.base, arcs, check=False))


def embeds_as_subautomaton(h: Subgroup, k: Subgroup) -> bool:
    """Vertex-injective, arc-preserving embedding of St(h) into St(k) sending
    basepoint to basepoint (the unique homomorphism, checked injective)."""
    img = [NO] * h.aut.n_vertices
    img[h.aut.base] = k.aut.base
    from collections import deque

    todo = deque([h.aut.base])
    while todo:
        u = todo.popleft()
        for s, v in h.aut.neighbors(u):
            w = k.aut.step(img[u], s)
            if w == NO:
                return False
            if img[v] == NO:
                img[v] = w
                todo.append(v)
            elif img[v] != w:
                return False
    return len(set(img)) == h.aut.n_vertices


# ---------------------------------------------------------------------------
# Whitehead cut test


def whitehead_cut_test(gens: Sequence[Word], rank: int) -> bool:
    """True ("passes") iff the Whitehead graph of the cyclic reductions is
    disconnected or has a cut vertex; failing certifies non-separability."""
    if not gens:
        raise InvalidInputError("need at least one word")
    from .words import cyclic_reduce

    def node(s: int) -> int:
        return 2 * (s - 1) if s > 0 else 2 * (-s - 1) + 1

    nodes = 2 * rank
    adj: list[set[int]] = [set() for _ in range(nodes)]
    edges = 0
    for w in gens:
        core, _ = cyclic_reduce(check_word(w, rank))
        m = len(core)
        for i in range(m):
            x = core[i]
            y = core[(i + 1) % m]
            a, b = node(x), node(-y)
            adj[a].add(b)
            adj[b].add(a)
            edges += 1

    def components(skip: int = -1) -> list[list[int]]:
        seen = [False] * nodes
        comps = []
        for s in range(nodes):
            if s == skip or seen[s]:
                continue
            comp = [s]
            seen[s] = True
            stack = [s]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if v != skip and not seen[v]:
                        seen[v] = True
                        comp.append(v)
                        stack.append(v)
            comps.append(comp)
        return comps

    comps = components()
    if len(comps) > 1:
        return True
    # cut vertex inside the (single) component
    for c in range(nodes):
        if not adj[c]:
            continue
        comp_of_c = next(comp for comp in comps if c in comp)
        if len(comp_of_c) <= 2:
            continue
        rest = [v for v in comp_of_c if v != c]
        sub = components(skip=c)
        containing = [comp for comp in sub if any(v in rest for v in comp)]
        pieces = [comp for comp in containing if set(comp) & set(rest)]
        if len(pieces) > 1:
            return True
    return False
