"""Relative orders, spectra, roots, purity, and pure closures.

An element of order k >= 2 relative to a subgroup H corresponds to a word z
(cyclically reduced up to conjugacy) whose partial injection on the
restricted core has an injective k-cycle; relative to a proper coset Hu it
corresponds to a common-z injective path of length k between translates of
the basepoint and the coset vertex inside St(Hu).  Both reduce to finite
synchronized searches:

* pairs (u,v) and (v,u) in one component of the self-product certify an
  order-2 root, and any connecting word realizes it;
* for k >= 3, candidate vertex cycles/paths are read off per-component
  digraphs of the self-product and each candidate is checked by a
  breadth-first search over k-tuples advancing by a common letter.

The per-component digraph prune is complete: consecutive orbit pairs are
joined by walks reading the same z, hence lie in a single product component.
"""

from __future__ import annotations

from typing import Iterator, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .automaton import NO, InvAutomaton
from .folding import Subgroup, basis, stallings
from .subgroup import coset_automaton, is_member
from .words import (
    EMPTY,
    InvalidInputError,
    Word,
    check_word,
    concat,
    inverse,
    power,
    primitive_root,
    reduce_word,
)


# ---------------------------------------------------------------------------
# pair product helpers


def _steps(aut: InvAutomaton) -> list[np.ndarray]:
    """Signed-letter transition arrays a, a^-1, b, b^-1, ..."""
    out = []
    for a in range(aut.rank):
        out.append(np.asarray(aut.fwd[a], dtype=np.int64))
        out.append(np.asarray(aut.bwd[a], dtype=np.int64))
    return out


def _pair_labels(aut: InvAutomaton) -> np.ndarray:
    """Connected-component labels of the synchronized self-product, as a
    (V, V) array."""
    v = aut.n_vertices
    uu = np.repeat(np.arange(v), v)
    vv = np.tile(np.arange(v), v)
    rows = []
    cols = []
    for a in range(aut.rank):
        f = np.asarray(aut.fwd[a], dtype=np.int64)
        tu = f[uu]
        tv = f[vv]
        ok = (tu >= 0) & (tv >= 0)
        rows.append((uu * v + vv)[ok])
        cols.append((tu * v + tv)[ok])
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    g = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(v * v, v * v))
    _, labels = connected_components(g, directed=False)
    return labels.reshape(v, v)


def _sync_word(aut: InvAutomaton, start: tuple[int, ...], target: tuple[int, ...]
               ) -> Optional[Word]:
    """A word advancing every coordinate of `start` to `target` along walks
    reading it, or None.  Exhaustive over the finite tuple space."""
    if start == target:
        return EMPTY
    steps = _steps(aut)
    signed = [a + 1 for a in range(aut.rank)]
    signed = [s for a in range(aut.rank) for s in (a + 1, -(a + 1))]
    prev: dict[tuple[int, ...], tuple[tuple[int, ...], int]] = {start: (start, 0)}
    frontier = [start]
    while frontier:
        nxt = []
        for state in frontier:
            for i, s in enumerate(signed):
                arr = steps[i]
                out = []
                dead = False
                for x in state:
                    y = arr[x]
                    if y < 0:
                        dead = True
                        break
                    out.append(int(y))
                if dead:
                    continue
                t = tuple(out)
                if t in prev:
                    continue
                prev[t] = (state, s)
                if t == target:
                    word: list[int] = []
                    cur = t
                    while cur != start:
                        cur, ls = prev[cur]
                        word.append(ls)
                    return reduce_word(tuple(reversed(word)))
                nxt.append(t)
        frontier = nxt
    return None


def _component_digraphs(labels: np.ndarray) -> dict[int, list[tuple[int, int]]]:
    """Off-diagonal pairs grouped by product component."""
    v = labels.shape[0]
    out: dict[int, list[tuple[int, int]]] = {}
    for u in range(v):
        for w in range(v):
            if u != w:
                out.setdefault(int(labels[u, w]), []).append((u, w))
    return out


def _has_cycle(edges: list[tuple[int, int]]) -> bool:
    g = nx.DiGraph(edges)
    return not nx.is_directed_acyclic_graph(g)


def _cycle_candidates(edges: list[tuple[int, int]], length: Optional[int] = None
                      ) -> Iterator[list[int]]:
    g = nx.DiGraph(edges)
    for cyc in nx.simple_cycles(g, length_bound=length):
        if len(cyc) >= 2:
            yield cyc


# ---------------------------------------------------------------------------
# root search on the restricted core (subgroup case)


def _rotation_witness(rst: InvAutomaton, cycle: list[int]) -> Optional[Word]:
    start = tuple(cycle)
    target = tuple(cycle[1:] + cycle[:1])
    return _sync_word(rst, start, target)


def _root_cycles(rst: InvAutomaton, *, lengths: Optional[set[int]] = None,
                 first_only: bool = False) -> list[tuple[list[int], Word]]:
    """Realizable injective cycles (vertex cycle, witness word) in the
    restricted core, one per realized length unless first_only."""
    v = rst.n_vertices
    if v < 2:
        return []
    labels = _pair_labels(rst)
    found: dict[int, tuple[list[int], Word]] = {}
    # order 2 exactly: (u,v) and (v,u) in a common component
    if lengths is None or 2 in lengths:
        sym = (labels == labels.T) & ~np.eye(v, dtype=bool)
        hits = np.argwhere(sym)
        if len(hits):
            u, w = map(int, hits[0])
            z = _sync_word(rst, (u, w), (w, u))
            assert z is not None
            found[2] = ([u, w], z)
            if first_only:
                return [found[2]]
    comp_edges = _component_digraphs(labels)
    want = None if lengths is None else max(lengths)
    for edges in comp_edges.values():
        if len(edges) < 2 or not _has_cycle(edges):
            continue
        for cyc in _cycle_candidates(edges, length=want or v):
            m = len(cyc)
            if m in found or m < 3:
                continue
            if lengths is not None and m not in lengths:
                continue
            z = _rotation_witness(rst, cyc)
            if z is not None:
                found[m] = (cyc, z)
                if first_only:
                    return [found[m]]
    return [found[m] for m in sorted(found)]


def _subgroup_root_witnesses(h: Subgroup, *, first_only: bool = False
                             ) -> list[tuple[int, Word]]:
    """(order, witness element) pairs, one per realized order >= 2."""
    aut = h.aut
    rst, _tail, old_ids = aut.trim_with_map("restricted_core")
    out: list[tuple[int, Word]] = []
    for cyc, z in _root_cycles(rst, first_only=first_only):
        p = aut.path_word(aut.base, old_ids[cyc[0]])
        assert p is not None
        g = concat(p, z, inverse(p))
        out.append((len(cyc), g))
        if first_only:
            break
    return out


# ---------------------------------------------------------------------------
# public operations


def relative_order(w: Word, h: Subgroup, u: Word = EMPTY) -> int:
    """Least k >= 1 with w^k in Hu, else 0; the spectrum bound certifies 0
    once k exceeds the coset automaton's vertex count."""
    n = h.ambient_rank
    word = reduce_word(check_word(w, n))
    coset = reduce_word(check_word(u, n))
    if is_member(coset, h):
        bound = h.aut.trim("restricted_core")[0].n_vertices
        coset = EMPTY
    else:
        bound = coset_automaton(h, coset)[0].n_vertices
    acc: Word = EMPTY
    for k in range(1, bound + 1):
        acc = concat(acc, word)
        if is_member(concat(acc, inverse(coset)), h):
            return k
    return 0


def is_k_root(w: Word, h: Subgroup, k: int) -> bool:
    """w is a k-root of h iff w^k lands in h; every word is a 0-root."""
    if not isinstance(k, int) or k < 0:
        raise InvalidInputError("k must be a nonnegative integer")
    if k == 0:
        return True
    return is_member(power(w, k), h)


def element_roots(w: Word, rank: int) -> set[tuple[Word, int]]:
    """All pairs (g, k >= 1) with g^k = w, via the primitive period of the
    cyclic core; at most one root per exponent."""
    word = reduce_word(check_word(w, rank))
    if not word:
        raise InvalidInputError("every element is a root of the empty word")
    root, d = primitive_root(word)
    from .words import cyclic_reduce

    core, conj = cyclic_reduce(word)
    y = cyclic_reduce(root)[0]
    out: set[tuple[Word, int]] = set()
    for k in range(1, d + 1):
        if d % k == 0:
            g = concat(conj, power(y, d // k), inverse(conj))
            out.add((g, k))
    return out


class SpectrumReport:
    """Set of realized relative orders, 0 flagging the infinite-index case."""

    def __init__(self, orders: set[int], bound: int):
        self.orders = set(orders)
        self.bound = bound

    @property
    def positive(self) -> set[int]:
        return {k for k in self.orders if k > 0}

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SpectrumReport):
            return self.orders == other.orders
        if isinstance(other, (set, frozenset)):
            return self.orders == set(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"SpectrumReport({sorted(self.orders)})"


def spectrum(h: Subgroup, u: Word = EMPTY) -> SpectrumReport:
    """All orders realized relative to Hu.

    Subgroup case: realizable injective cycle lengths in the restricted
    core, plus 1, plus 0 when the index is infinite.  Proper coset case:
    realizable common-word path lengths from basepoint-translate to
    coset-vertex-translate inside St(Hu); 0 is always realized (no power of
    the identity meets a proper coset).
    """
    n = h.ambient_rank
    coset = reduce_word(check_word(u, n))
    if is_member(coset, h):
        rst, _ = h.aut.trim("restricted_core")
        orders = {1} | {len(cyc) for cyc, _z in _root_cycles(rst)}
        if not h.aut.is_saturated():
            orders.add(0)
        return SpectrumReport(orders, rst.n_vertices)
    y, t = coset_automaton(h, coset)
    orders = {0, 1}
    orders |= _coset_orders(y, t)
    return SpectrumReport(orders, y.n_vertices)


def _coset_orders(y: InvAutomaton, t: int) -> set[int]:
    v = y.n_vertices
    labels = _pair_labels(y)
    base_comp = int(labels[y.base, t])
    comp_edges = _component_digraphs(labels)
    out: set[int] = set()
    # endpoints (p, r) must be reachable from (base, t) by a common word
    endpoints = [(p, r) for p in range(v) for r in range(v)
                 if p != r and int(labels[p, r]) == base_comp]
    for comp, edges in comp_edges.items():
        g = nx.DiGraph(edges)
        for (p, r) in endpoints:
            if p not in g or r not in g:
                continue
            for path in nx.all_simple_paths(g, p, r, cutoff=v - 1):
                k = len(path) - 1
                if k < 2 or k in out:
                    continue
                z = _sync_word(y, tuple(path[:-1]), tuple(path[1:]))
                if z is None:
                    continue
                c = _sync_word(y, (y.base, t), (p, r))
                if c is None:
                    continue
                out.add(k)
    return out


def is_pure(h: Subgroup) -> bool:
    """No proper roots: the positive spectrum is {1}."""
    rst, _ = h.aut.trim("restricted_core")
    return not _root_cycles(rst, first_only=True)


def pure_closure(h: Subgroup) -> Subgroup:
    return pure_closure_steps(h)[0]


def pure_closure_steps(h: Subgroup) -> tuple[Subgroup, int]:
    """Adjoin discovered proper roots until pure; every root adjunction is an
    algebraic extension, so the chain stays inside the finite set of
    algebraic extensions of h and must stabilize.  Returns the closure and
    the number of adjunction rounds."""
    cur = h
    rounds = 0
    while True:
        witnesses = _subgroup_root_witnesses(cur)
        if not witnesses:
            return cur, rounds
        gens = basis(cur) + [g for _k, g in witnesses]
        nxt = stallings(gens, h.ambient_rank)
        assert nxt != cur, "root witness failed to enlarge the subgroup"
        cur = nxt
        rounds += 1
