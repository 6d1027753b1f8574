"""Flower construction, folding with event trace, and the subgroup handle.

The folding engine is a worklist over arcs with union-find on vertices:
inserting an arc into a per-vertex slot table either succeeds or collides
with an equally-labeled arc, in which case one arc is removed and, for an
open collision, the far endpoints are merged (re-enqueueing the smaller
adjacency).  Every collision removes exactly one arc, so the event count
equals the drop in arc count and the number of closed events is the loss.

The recorded event list is enough to lift any closed walk of the folded
automaton back to the flower, which is how membership witnesses and
relations are produced.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .automaton import NO, InvAutomaton
from .words import (
    EMPTY,
    InvalidInputError,
    Word,
    check_rank,
    check_word,
    concat,
    inverse,
    reduce_word,
    render_word,
)


@dataclass
class Multigraph:
    """Pre-deterministic involutive labeled digraph (the flower stage)."""

    rank: int
    n_vertices: int
    base: int
    arcs: list[tuple[int, int, int]]  # (src, positive letter, dst), duplicates allowed

    def validate(self) -> None:
        check_rank(self.rank)
        for (u, a, v) in self.arcs:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise InvalidInputError("arc endpoint out of range")
            if not (1 <= a <= self.rank):
                raise InvalidInputError(f"arc letter {a} out of range")


# Events: ("o", kept, removed, sigma, x, y_old, y_new, winner, loser)
#         ("c", kept, removed, sigma, x, y, y, -1, -1)
Event = tuple


@dataclass
class FoldingTrace:
    """Ordered folding log, sufficient to lift walks back to the flower."""

    n0: int
    base0: int
    src0: list[int]
    lab0: list[int]
    dst0: list[int]
    events: list[Event]
    survivors: list[int]
    vertex_map: list[int]            # flower vertex -> folded vertex id

    @property
    def loss(self) -> int:
        return sum(1 for ev in self.events if ev[0] == "c")

    # -- timed union-find over the event sequence ---------------------------

    def _timed_parents(self) -> tuple[list[int], list[int]]:
        parent = list(range(self.n0))
        stamp = [len(self.events) + 1] * self.n0
        for i, ev in enumerate(self.events):
            if ev[0] == "o":
                winner, loser = ev[7], ev[8]
                parent[loser] = winner
                stamp[loser] = i
        return parent, stamp

    def rep_at(self, parent: list[int], stamp: list[int], v: int, level: int) -> int:
        """Vertex class of v after the first `level` events."""
        while stamp[v] < level:
            v = parent[v]
        return v

    # -- lifting -------------------------------------------------------------

    def lift_round(self, walk: list[tuple[int, bool]], level: Optional[int] = None
                   ) -> list[tuple[int, bool]]:
        """Lift a closed basepoint walk (arc id, forward) from the given event
        level down to the flower, inserting trivially-labeled detours at each
        open event and cancelling backtracks at the end."""
        parent, stamp = self._timed_parents()
        if level is None:
            level = len(self.events)

        def tail(step: tuple[int, bool], lv: int) -> int:
            a, fwd = step
            return self.rep_at(parent, stamp, self.src0[a] if fwd else self.dst0[a], lv)

        def head(step: tuple[int, bool], lv: int) -> int:
            a, fwd = step
            return self.rep_at(parent, stamp, self.dst0[a] if fwd else self.src0[a], lv)

        for i in range(level - 1, -1, -1):
            ev = self.events[i]
            if ev[0] != "o":
                continue
            _, kept, removed, sigma, _x, y_old, y_new, _w, _l = ev
            if sigma > 0:
                conn_new_old = [(removed, False), (kept, True)]
            else:
                conn_new_old = [(removed, True), (kept, False)]
            conn_old_new = [(s, not d) for (s, d) in reversed(conn_new_old)]

            def connector(frm: int, to: int) -> list[tuple[int, bool]]:
                if frm == y_new and to == y_old:
                    return conn_new_old
                if frm == y_old and to == y_new:
                    return conn_old_new
                raise AssertionError("junction mismatch outside folded pair")

            b0 = self.rep_at(parent, stamp, self.base0, i)
            fixed: list[tuple[int, bool]] = []
            if walk:
                first_tail = tail(walk[0], i)
                if first_tail != b0:
                    fixed.extend(connector(b0, first_tail))
                for j, step in enumerate(walk):
                    fixed.append(step)
                    h = head(step, i)
                    nxt = tail(walk[j + 1], i) if j + 1 < len(walk) else b0
                    if h != nxt:
                        fixed.extend(connector(h, nxt))
                walk = fixed

        # free cancellation of immediate arc backtracks; the wrap junction is
        # left alone (e..e^-1 is still a basepoint round of the flower)
        out: list[tuple[int, bool]] = []
        for step in walk:
            if out and out[-1][0] == step[0] and out[-1][1] != step[1]:
                out.pop()
            else:
                out.append(step)
        return out

    def automaton_at_level(self, level: int) -> tuple[dict[int, list[tuple[int, int, bool]]], int]:
        """Adjacency (class -> [(class', arc id, forward)]) after `level` events."""
        parent, stamp = self._timed_parents()
        removed_before = {ev[2] for ev in self.events[:level]}
        adj: dict[int, list[tuple[int, int, bool]]] = {}
        for a in range(len(self.src0)):
            if a in removed_before:
                continue
            u = self.rep_at(parent, stamp, self.src0[a], level)
            v = self.rep_at(parent, stamp, self.dst0[a], level)
            adj.setdefault(u, []).append((v, a, True))
            adj.setdefault(v, []).append((u, a, False))
        return adj, self.rep_at(parent, stamp, self.base0, level)


def fold(m: Multigraph) -> tuple[InvAutomaton, FoldingTrace]:
    """Fold a multigraph to its deterministic quotient, logging every event."""
    m.validate()
    n = m.n_vertices
    src = [u for (u, _, _) in m.arcs]
    lab = [a for (_, a, _) in m.arcs]
    dst = [v for (_, _, v) in m.arcs]
    n_arcs = len(m.arcs)

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj: list[dict[int, int]] = [{} for _ in range(n)]
    alive = [True] * n_arcs
    events: list[Event] = []
    pending: deque[int] = deque(range(n_arcs))

    def slot_target(f: int, s: int) -> int:
        # target of the s-step realized by arc f (f occupies slot s at some vertex)
        return find(dst[f]) if s > 0 else find(src[f])

    def merge(a: int, b: int, ev_base: tuple) -> None:
        ra, rb = find(a), find(b)
        if len(adj[ra]) < len(adj[rb]):
            ra, rb = rb, ra
        # ra wins, rb is absorbed
        events.append(ev_base + (ra, rb))
        parent[rb] = ra
        for g in adj[rb].values():
            if alive[g]:
                pending.append(g)
        adj[rb] = {}

    while pending:
        e = pending.popleft()
        if not alive[e]:
            continue
        u = find(src[e])
        v = find(dst[e])
        a = lab[e]
        died = False
        for (x, s, y) in ((u, a, v), (v, -a, u)):
            cur = adj[x].get(s)
            if cur is not None and not alive[cur]:
                cur = None
            if cur is None:
                adj[x][s] = e
                continue
            if cur == e:
                continue
            # collision: e is removed, cur is kept
            alive[e] = False
            if adj[u].get(a) == e:
                del adj[u][a]
            if adj[v].get(-a) == e:
                del adj[v][-a]
            t = slot_target(cur, s)
            if t == y:
                events.append(("c", cur, e, s, x, t, y, -1, -1))
            else:
                merge(t, y, ("o", cur, e, s, x, t, y))
            died = True
            break
        if died:
            continue

    # compact the surviving classes into a fresh automaton
    reps: list[int] = []
    rep_id: dict[int, int] = {}
    seen = set()
    for v0 in range(n):
        r = find(v0)
        if r not in seen:
            seen.add(r)
            rep_id[r] = len(reps)
            reps.append(r)
    survivors = [e for e in range(n_arcs) if alive[e]]
    arcs = [(rep_id[find(src[e])], lab[e], rep_id[find(dst[e])]) for e in survivors]
    aut = InvAutomaton(m.rank, len(reps), rep_id[find(m.base)], arcs, check=False)
    vertex_map = [rep_id[find(v0)] for v0 in range(n)]
    trace = FoldingTrace(n0=n, base0=m.base, src0=src, lab0=lab, dst0=dst,
                         events=events, survivors=survivors, vertex_map=vertex_map)
    return aut, trace


# ---------------------------------------------------------------------------
# flowers


def flower(gens: Sequence[Word], rank: int) -> Multigraph:
    """Wedge of petal cycles spelling the (reduced, nonempty) generators.

    Generators reducing to the empty word are dropped.
    """
    petals = []
    for w in gens:
        r = reduce_word(check_word(w, rank))
        if r:
            petals.append(r)
    arcs: list[tuple[int, int, int]] = []
    n = 1
    for w in petals:
        prev = 0
        for j, x in enumerate(w):
            nxt = 0 if j == len(w) - 1 else n
            if j != len(w) - 1:
                n += 1
            if x > 0:
                arcs.append((prev, x, nxt))
            else:
                arcs.append((nxt, -x, prev))
            prev = nxt
    return Multigraph(rank=rank, n_vertices=n, base=0, arcs=arcs)


def _flower_with_layout(gens: Sequence[Word], rank: int
                        ) -> tuple[Multigraph, list[list[tuple[int, bool]]], list[int]]:
    """Flower plus, per petal, its arcs in spelling order with directions,
    and the map from petal number to position in the original list."""
    petals: list[Word] = []
    origin: list[int] = []
    for i, w in enumerate(gens):
        r = reduce_word(check_word(w, rank))
        if r:
            petals.append(r)
            origin.append(i)
    arcs: list[tuple[int, int, int]] = []
    layout: list[list[tuple[int, bool]]] = []
    n = 1
    for w in petals:
        prev = 0
        steps: list[tuple[int, bool]] = []
        for j, x in enumerate(w):
            nxt = 0 if j == len(w) - 1 else n
            if j != len(w) - 1:
                n += 1
            if x > 0:
                arcs.append((prev, x, nxt))
                steps.append((len(arcs) - 1, True))
            else:
                arcs.append((nxt, -x, prev))
                steps.append((len(arcs) - 1, False))
            prev = nxt
        layout.append(steps)
    return Multigraph(rank=rank, n_vertices=n, base=0, arcs=arcs), layout, origin


# ---------------------------------------------------------------------------
# the subgroup handle


class Subgroup:
    """A finitely generated subgroup, held as its canonical core automaton.

    Equality and hashing go through the canonical byte form, which by the
    uniqueness of reduced automata identifies the subgroup itself.
    """

    __slots__ = ("aut",)

    def __init__(self, aut: InvAutomaton, *, canonical: bool = False):
        if not canonical:
            aut, _ = aut.trim("core")
            aut = aut.canonicalize()
        self.aut = aut

    @property
    def ambient_rank(self) -> int:
        return self.aut.rank

    def rank(self) -> int:
        return self.aut.cycle_rank()

    def reduced_rank(self) -> int:
        return max(self.rank() - 1, 0)

    def size(self) -> int:
        return self.aut.n_vertices

    def is_trivial(self) -> bool:
        return self.aut.n_vertices == 1 and self.aut.n_arcs() == 0

    def is_whole_group(self) -> bool:
        return self.aut.n_vertices == 1 and self.aut.n_arcs() == self.aut.rank

    def key(self) -> bytes:
        return self.aut.canonical_key()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Subgroup) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        gens = ",".join(render_word(w, self.ambient_rank) for w in basis(self))
        return f"Subgroup(n={self.ambient_rank}, <{gens or '1'}>)"


def stallings(gens: Sequence[Word], rank: int) -> Subgroup:
    """The Stallings automaton of <gens>, canonical across generating sets."""
    aut, _ = fold(flower(gens, rank))
    return Subgroup(aut)


def subgroup_from_text(rank: int, gens_text: str) -> Subgroup:
    from .words import parse_words

    return stallings(parse_words(gens_text, rank), rank)


def basis(h: Subgroup) -> list[Word]:
    """Free basis from the BFS spanning tree: one reduced word per non-tree
    positive arc, rk = 1 - V + E of the core automaton."""
    aut = h.aut
    tree, paths = aut.spanning_tree()
    tree_set = set(tree)
    out: list[Word] = []
    for (u, a, v) in sorted(aut.arcs()):
        if (u, a, v) in tree_set:
            continue
        pu = paths[u]
        pv = paths[v]
        assert pu is not None and pv is not None
        out.append(concat(pu, (a,), inverse(pv)))
    return out


def transversal_words(aut: InvAutomaton) -> list[Word]:
    """Reduced label of the tree walk from the basepoint to every vertex."""
    _, paths = aut.spanning_tree()
    return [reduce_word(p) for p in paths if p is not None]


# ---------------------------------------------------------------------------
# walks in the folded automaton, expression, relations


def _arc_tables(aut: InvAutomaton, trace: FoldingTrace
                ) -> dict[tuple[int, int], tuple[int, bool]]:
    """(folded vertex, signed letter) -> (flower arc id, forward)."""
    table: dict[tuple[int, int], tuple[int, bool]] = {}
    for e in trace.survivors:
        u = trace.vertex_map[trace.src0[e]]
        v = trace.vertex_map[trace.dst0[e]]
        a = trace.lab0[e]
        table[(u, a)] = (e, True)
        table[(v, -a)] = (e, False)
    return table


def _decompose_into_petals(walk: list[tuple[int, bool]],
                           layout: list[list[tuple[int, bool]]],
                           origin: list[int]) -> tuple[int, ...]:
    """Split a reduced basepoint round of the flower into full petal
    traversals; reduced rounds cannot turn around inside a petal."""
    petal_start: dict[tuple[int, bool], int] = {}
    for g, steps in enumerate(layout):
        petal_start[steps[0]] = g
        last_arc, last_fwd = steps[-1]
        petal_start[(last_arc, not last_fwd)] = ~g  # backwards entry
    expr: list[int] = []
    i = 0
    while i < len(walk):
        step = walk[i]
        if step in petal_start:
            g = petal_start[step]
            if g >= 0:
                steps = layout[g]
                assert walk[i:i + len(steps)] == steps, "walk does not follow petal"
                i += len(steps)
                expr.append(origin[g] + 1)
            else:
                g = ~g
                steps = [(a, not d) for (a, d) in reversed(layout[g])]
                assert walk[i:i + len(steps)] == steps, "walk does not follow petal"
                i += len(steps)
                expr.append(-(origin[g] + 1))
        else:
            raise AssertionError("round does not start a petal at the basepoint")
    return tuple(expr)


def express(w: Word, gens: Sequence[Word], rank: int) -> Optional[tuple[int, ...]]:
    """Write w as a product of the given generators, or None if w is not in
    the subgroup.  Returns signed 1-based indices into gens; the expansion
    of the result reduces back to w."""
    w = reduce_word(check_word(w, rank))
    m, layout, origin = _flower_with_layout(gens, rank)
    aut, trace = fold(m)
    if not w:
        return ()
    table = _arc_tables(aut, trace)
    v = aut.base
    walk: list[tuple[int, bool]] = []
    for s in w:
        nxt = aut.step(v, s)
        if nxt == NO:
            return None
        walk.append(table[(v, s)])
        v = nxt
    if v != aut.base:
        return None
    lifted = trace.lift_round(walk)
    return _decompose_into_petals(lifted, layout, origin)


def expand_expression(expr: Sequence[int], gens: Sequence[Word]) -> Word:
    """Multiply out an expression returned by express/relations."""
    out: Word = EMPTY
    for s in expr:
        g = gens[abs(s) - 1]
        out = concat(out, g if s > 0 else inverse(g))
    return out


def relations(gens: Sequence[Word], rank: int) -> list[tuple[int, ...]]:
    """A complete set of relations among the generators: one relator per
    closed folding event; empty exactly when gens is a basis of <gens>."""
    m, layout, origin = _flower_with_layout(gens, rank)
    _, trace = fold(m)
    out: list[tuple[int, ...]] = []
    for i, ev in enumerate(trace.events):
        if ev[0] != "c":
            continue
        _, kept, removed, sigma, x, _y, _y2, _, _ = ev
        adj, b0 = trace.automaton_at_level(i)
        # BFS path base -> x in the level-i automaton
        prev: dict[int, tuple[int, int, bool]] = {b0: (NO, NO, True)}
        todo = deque([b0])
        while todo and x not in prev:
            u = todo.popleft()
            for (v, a_id, fwd) in adj.get(u, ()):
                if v not in prev:
                    prev[v] = (u, a_id, fwd)
                    todo.append(v)
        assert x in prev, "collision vertex unreachable from basepoint"
        gamma: list[tuple[int, bool]] = []
        cur = x
        while cur != b0:
            pu, a_id, fwd = prev[cur]
            gamma.append((a_id, fwd))
            cur = pu
        gamma.reverse()
        if sigma > 0:
            middle = [(removed, True), (kept, False)]
        else:
            middle = [(removed, False), (kept, True)]
        walk = gamma + middle + [(a, not d) for (a, d) in reversed(gamma)]
        lifted = trace.lift_round(walk, level=i)
        out.append(_decompose_into_petals(lifted, layout, origin))
    return out
