"""Pullback products, intersections, malnormality, commensurability.

The pullback of two subgroup automata has the vertex pairs as vertices and
a synchronized arc for every common letter; its cored base component is the
intersection automaton, and the remaining components carry the intersections
with conjugates (one per double coset), which is what the malnormality test
and the Hanna-Neumann-type sums consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .automaton import NO, InvAutomaton
from .folding import Subgroup, basis, stallings
from .subgroup import coset_automaton, index, is_member, is_subgroup_of
from .words import InvalidInputError, Word, concat, inverse, reduce_word


@dataclass
class Pullback:
    rank: int
    n1: int
    n2: int
    arcs: list[tuple[int, int, int]]     # on packed pair ids u*n2+v
    base_pair: int
    components: list[list[int]]          # all components, packed pair ids
    base_component: int                  # index into components

    def pair(self, packed: int) -> tuple[int, int]:
        return divmod(packed, self.n2)

    def component_stats(self) -> list[tuple[int, int]]:
        """(vertices, positive arcs) per component."""
        comp_of = {}
        for ci, comp in enumerate(self.components):
            for v in comp:
                comp_of[v] = ci
        counts = [[len(comp), 0] for comp in self.components]
        for (u, _a, _v) in self.arcs:
            counts[comp_of[u]][1] += 1
        return [(v, e) for v, e in counts]

    def component_reduced_ranks(self) -> list[int]:
        """Reduced rank rr = max(rank - 1, 0) per component.  Leaf stripping
        cannot change the cycle rank E - V + 1, so coring is implicit."""
        return [max(e - v, 0) for (v, e) in self.component_stats()]

    def to_dot(self) -> str:
        lines = ["digraph pullback {", "  rankdir=LR;"]
        from .words import render_letter

        for comp in self.components:
            for p in comp:
                i, j = self.pair(p)
                shape = "doublecircle" if p == self.base_pair else "circle"
                lines.append(f'  {p} [label="({i},{j})", shape={shape}];')
        for (u, a, v) in self.arcs:
            lines.append(f'  {u} -> {v} [label="{render_letter(a, self.rank)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _product(a1: InvAutomaton, a2: InvAutomaton) -> tuple[list[tuple[int, int, int]], int]:
    n2 = a2.n_vertices
    arcs: list[tuple[int, int, int]] = []
    for a in range(1, a1.rank + 1):
        row1 = a1.fwd[a - 1]
        row2 = a2.fwd[a - 1]
        for u1 in range(a1.n_vertices):
            v1 = row1[u1]
            if v1 == NO:
                continue
            for u2 in range(a2.n_vertices):
                v2 = row2[u2]
                if v2 != NO:
                    arcs.append((u1 * n2 + u2, a, v1 * n2 + v2))
    return arcs, n2


def pullback(h1: Subgroup, h2: Subgroup) -> Pullback:
    if h1.ambient_rank != h2.ambient_rank:
        raise InvalidInputError("handles live over different alphabets")
    a1, a2 = h1.aut, h2.aut
    arcs, n2 = _product(a1, a2)
    n = a1.n_vertices * n2
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (u, _a, v) in arcs:
        parent[find(u)] = find(v)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    components = sorted(groups.values())
    base_pair = a1.base * n2 + a2.base
    base_component = next(i for i, comp in enumerate(components) if base_pair in comp)
    return Pullback(h1.ambient_rank, a1.n_vertices, n2, arcs,
                    base_pair, components, base_component)


def _component_automaton(pb: Pullback, ci: int, base: int) -> InvAutomaton:
    comp = pb.components[ci]
    ids = {p: i for i, p in enumerate(comp)}
    arcs = [(ids[u], a, ids[v]) for (u, a, v) in pb.arcs if u in ids]
    return InvAutomaton(pb.rank, len(comp), ids[base], arcs, check=False)


def intersect(h1: Subgroup, h2: Subgroup) -> Subgroup:
    """H1 cap H2: the cored, canonicalized base component of the pullback."""
    pb = pullback(h1, h2)
    return Subgroup(_component_automaton(pb, pb.base_component, pb.base_pair))


def coset_intersect(h1: Subgroup, u: Word, h2: Subgroup, v: Word
                    ) -> Optional[tuple[Subgroup, Word]]:
    """(H1 cap H2, w) with H1 u cap H2 v = (H1 cap H2) w, or None when the
    cosets are disjoint (target pairs in different pullback components)."""
    if h1.ambient_rank != h2.ambient_rank:
        raise InvalidInputError("handles live over different alphabets")
    y1, t1 = coset_automaton(h1, u)
    y2, t2 = coset_automaton(h2, v)
    n2 = y2.n_vertices
    start = y1.base * n2 + y2.base
    goal = t1 * n2 + t2
    prev: dict[int, tuple[int, int]] = {start: (NO, 0)}
    from collections import deque

    todo = deque([start])
    while todo and goal not in prev:
        p = todo.popleft()
        p1, p2 = divmod(p, n2)
        for a in range(1, y1.rank + 1):
            for s in (a, -a):
                q1 = y1.step(p1, s)
                q2 = y2.step(p2, s)
                if q1 == NO or q2 == NO:
                    continue
                q = q1 * n2 + q2
                if q not in prev:
                    prev[q] = (p, s)
                    todo.append(q)
    if goal not in prev:
        return None
    word: list[int] = []
    cur = goal
    while cur != start:
        p, s = prev[cur]
        word.append(s)
        cur = p
    w = reduce_word(tuple(reversed(word)))
    return intersect(h1, h2), w


# ---------------------------------------------------------------------------
# malnormality


def is_malnormal(h: Subgroup) -> tuple[bool, Optional[Word]]:
    """Malnormal iff every non-base component of the self-pullback is a tree.

    On failure returns a verified witness g (not in h, with nontrivial
    h cap h^g).
    """
    if h.is_trivial():
        return True, None
    pb = pullback(h, h)
    stats = pb.component_stats()
    _, paths = h.aut.spanning_tree()
    for ci, comp in enumerate(pb.components):
        if ci == pb.base_component:
            continue
        nv, ne = stats[ci]
        if ne <= nv - 1:
            continue
        # non-tree component: read off a conjugator from any of its pairs
        for p in comp:
            x, y = pb.pair(p)
            px, py = paths[x], paths[y]
            assert px is not None and py is not None
            for g in (concat(py, inverse(px)), concat(px, inverse(py))):
                if g and not is_member(g, h):
                    conj = stallings([concat(inverse(g), b, g) for b in basis(h)],
                                     h.ambient_rank)
                    if not intersect(h, conj).is_trivial():
                        return False, g
        raise AssertionError("non-tree component without a verifiable witness")
    return True, None


# ---------------------------------------------------------------------------
# Hanna-Neumann quantities and commensurability


def shnc_report(h1: Subgroup, h2: Subgroup) -> dict:
    """Reduced-rank data of one intersection instance: the bound
    rr(H cap K) <= 2 rr(H) rr(K) and the component-sum bound
    sum_components rr <= rr(H) rr(K)."""
    pb = pullback(h1, h2)
    rrs = pb.component_reduced_ranks()
    inter_rr = rrs[pb.base_component]
    total = sum(rrs)
    prod = h1.reduced_rank() * h2.reduced_rank()
    return {
        "rr_intersection": inter_rr,
        "rr_component_sum": total,
        "rr_product": prod,
        "hanna_neumann_ok": inter_rr <= 2 * prod,
        "shnc_ok": total <= prod,
    }


def _index_within(inner: Subgroup, outer: Subgroup):
    """Index of inner in outer, by rewriting inner over a basis of outer."""
    if outer.is_trivial():
        return index(inner)  # inner == trivial; index 1
    from .folding import express

    b = basis(outer)
    exprs = []
    for w in basis(inner):
        e = express(w, b, outer.ambient_rank)
        assert e is not None, "inner subgroup not contained in outer"
        exprs.append(e)
    rewritten = stallings(exprs, len(b))
    return index(rewritten)


def commensurable(h1: Subgroup, h2: Subgroup) -> bool:
    """True iff the intersection has finite index in both handles."""
    inter = intersect(h1, h2)
    for h in (h1, h2):
        if h.is_trivial():
            if not inter.is_trivial():
                raise AssertionError("intersection exceeds a factor")
            continue
        if inter.is_trivial():
            return False
        if not is_subgroup_of(inter, h):
            raise AssertionError("intersection not inside a factor")
        if _index_within(inter, h).kind != "finite":
            return False
    return True
