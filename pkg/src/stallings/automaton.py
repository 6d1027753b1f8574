"""Deterministic involutive pointed automata over a rank-n alphabet.

An automaton stores one partial injection per positive letter; the
negative-letter action is the inverse injection and is kept as a second
array purely for O(1) stepping.  Values are treated as immutable after
construction: every transformation returns a new instance.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator, Optional, Sequence

from .words import (
    InvalidInputError,
    Word,
    check_rank,
    check_word,
    reduce_word,
    render_letter,
    parse_word,
)

NO = -1  # absent transition


class InvAutomaton:
    """Pointed, deterministic, involutive automaton; connected by invariant.

    fwd[a][v] is the a-arc target from v (or NO); bwd[a][v] the a^-1 step.
    """

    __slots__ = ("rank", "n_vertices", "base", "fwd", "bwd", "_key")

    def __init__(self, rank: int, n_vertices: int, base: int,
                 arcs: Iterable[tuple[int, int, int]], *, check: bool = True):
        check_rank(rank)
        if n_vertices < 1:
            raise InvalidInputError("automaton needs at least one vertex")
        if not (0 <= base < n_vertices):
            raise InvalidInputError(f"basepoint {base} out of range")
        self.rank = rank
        self.n_vertices = n_vertices
        self.base = base
        fwd = [[NO] * n_vertices for _ in range(rank)]
        bwd = [[NO] * n_vertices for _ in range(rank)]
        for (u, a, v) in arcs:
            if not (1 <= a <= rank):
                raise InvalidInputError(f"arc letter {a} out of range")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise InvalidInputError("arc endpoint out of range")
            if fwd[a - 1][u] != NO or bwd[a - 1][v] != NO:
                raise InvalidInputError(
                    f"nondeterministic at ({u},{render_letter(a, rank)}): automaton must be folded first")
            fwd[a - 1][u] = v
            bwd[a - 1][v] = u
        self.fwd = fwd
        self.bwd = bwd
        self._key: Optional[bytes] = None
        if check and not self.is_connected():
            raise InvalidInputError("automaton must be connected")

    # -- basic structure ----------------------------------------------------

    def arcs(self) -> Iterator[tuple[int, int, int]]:
        """Positive arcs (src, letter, dst)."""
        for a in range(self.rank):
            row = self.fwd[a]
            for u in range(self.n_vertices):
                if row[u] != NO:
                    yield (u, a + 1, row[u])

    def n_arcs(self) -> int:
        return sum(1 for _ in self.arcs())

    def step(self, v: int, s: int) -> int:
        """One signed-letter step; NO if absent."""
        return self.fwd[s - 1][v] if s > 0 else self.bwd[-s - 1][v]

    def trace(self, v: int, word: Sequence[int]) -> int:
        """Endpoint of the unique walk reading word from v, or NO."""
        if not (0 <= v < self.n_vertices):
            raise InvalidInputError(f"vertex {v} out of range")
        for s in word:
            v = self.step(v, s)
            if v == NO:
                return NO
        return v

    def degree(self, v: int) -> int:
        d = 0
        for a in range(self.rank):
            if self.fwd[a][v] != NO:
                d += 1
            if self.bwd[a][v] != NO:
                d += 1
        return d

    def neighbors(self, v: int) -> Iterator[tuple[int, int]]:
        """(signed letter, target) pairs of defined slots at v."""
        for a in range(self.rank):
            if self.fwd[a][v] != NO:
                yield (a + 1, self.fwd[a][v])
            if self.bwd[a][v] != NO:
                yield (-(a + 1), self.bwd[a][v])

    def is_connected(self) -> bool:
        seen = [False] * self.n_vertices
        seen[self.base] = True
        todo = deque([self.base])
        count = 1
        while todo:
            u = todo.popleft()
            for _, v in self.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    todo.append(v)
        return count == self.n_vertices

    def deficit(self, s: int) -> int:
        """Number of vertices with no outgoing arc for the signed letter s."""
        if s == 0 or abs(s) > self.rank:
            raise InvalidInputError(f"letter {s} out of range")
        row = self.fwd[s - 1] if s > 0 else self.bwd[-s - 1]
        return sum(1 for v in row if v == NO)

    def deficient_vertices(self, s: int) -> list[int]:
        row = self.fwd[s - 1] if s > 0 else self.bwd[-s - 1]
        return [v for v in range(self.n_vertices) if row[v] == NO]

    def is_saturated(self) -> bool:
        return all(self.deficit(a) == 0 for a in range(1, self.rank + 1)) and \
            all(self.deficit(-a) == 0 for a in range(1, self.rank + 1))

    def cycle_rank(self) -> int:
        """First Betti number 1 - V + E of the underlying graph."""
        return 1 - self.n_vertices + self.n_arcs()

    # -- transformations ----------------------------------------------------

    def relabeled(self, perm: Sequence[int], n_new: Optional[int] = None,
                  base: Optional[int] = None) -> "InvAutomaton":
        """Apply the vertex relabeling perm (old id -> new id)."""
        n = n_new if n_new is not None else self.n_vertices
        arcs = [(perm[u], a, perm[v]) for (u, a, v) in self.arcs()]
        b = perm[self.base] if base is None else base
        return InvAutomaton(self.rank, n, b, arcs, check=False)

    def trim(self, mode: str = "core") -> tuple["InvAutomaton", int]:
        """Strip hanging trees.

        mode="core" keeps hanging trees through the basepoint (the tail);
        mode="restricted_core" removes the tail too and reports its length,
        rebasing at the attachment vertex.  The single-vertex automaton is
        returned unchanged in both modes.
        """
        aut, tail, _ = self.trim_with_map(mode)
        return aut, tail

    def trim_with_map(self, mode: str = "core") -> tuple["InvAutomaton", int, list[int]]:
        """trim plus the list sending new vertex ids to ids in self."""
        if mode not in ("core", "restricted_core"):
            raise InvalidInputError(f"unknown trim mode {mode!r}")
        alive = [True] * self.n_vertices
        deg = [self.degree(v) for v in range(self.n_vertices)]
        todo = deque(v for v in range(self.n_vertices)
                     if deg[v] <= 1 and v != self.base)
        while todo:
            v = todo.popleft()
            if not alive[v] or deg[v] > 1 or v == self.base:
                continue
            alive[v] = False
            for _, w in self.neighbors(v):
                if alive[w]:
                    deg[w] -= 1
                    if deg[w] <= 1 and w != self.base:
                        todo.append(w)
        tail = 0
        new_base = self.base
        if mode == "restricted_core":
            # peel the basepoint path into the restricted core
            def live_deg(v: int) -> int:
                return sum(1 for _, w in self.neighbors(v) if alive[w])

            while live_deg(new_base) == 1 and sum(alive) > 1:
                alive[new_base] = False
                nxt = next(w for _, w in self.neighbors(new_base) if alive[w])
                new_base = nxt
                tail += 1
        perm = [NO] * self.n_vertices
        old_ids: list[int] = []
        for v in range(self.n_vertices):
            if alive[v]:
                perm[v] = len(old_ids)
                old_ids.append(v)
        arcs = [(perm[u], a, perm[v]) for (u, a, v) in self.arcs()
                if alive[u] and alive[v]]
        aut = InvAutomaton(self.rank, len(old_ids), perm[new_base], arcs, check=False)
        return aut, tail, old_ids

    def bfs_order(self, start: int) -> list[int]:
        """Vertices in BFS discovery order with letters visited a, a^-1, b, ..."""
        order = [start]
        seen = [False] * self.n_vertices
        seen[start] = True
        todo = deque([start])
        while todo:
            u = todo.popleft()
            for a in range(1, self.rank + 1):
                for s in (a, -a):
                    v = self.step(u, s)
                    if v != NO and not seen[v]:
                        seen[v] = True
                        order.append(v)
                        todo.append(v)
        return order

    def canonicalize(self) -> "InvAutomaton":
        """Relabel vertices in BFS order from the basepoint (idempotent)."""
        order = self.bfs_order(self.base)
        perm = [NO] * self.n_vertices
        for new, old in enumerate(order):
            perm[old] = new
        return self.relabeled(perm)

    def canonical_key(self) -> bytes:
        if self._key is None:
            self._key = self.canonicalize().to_text().encode()
        return self._key

    def unbased_key(self) -> bytes:
        """Canonical form minimized over all basepoint choices (unpointed
        labeled-digraph isomorphism invariant)."""
        best = None
        for v in range(self.n_vertices):
            aut = InvAutomaton(self.rank, self.n_vertices, v,
                               self.arcs(), check=False)
            k = aut.canonical_key()
            if best is None or k < best:
                best = k
        assert best is not None
        return best

    # -- label-preserving automorphisms --------------------------------------

    def automorphism_from(self, target: int) -> Optional[list[int]]:
        """The unique label-automorphism sending the basepoint to target,
        or None if it does not extend.  Determinism makes the extension
        forced along a BFS."""
        n = self.n_vertices
        img = [NO] * n
        img[self.base] = target
        used = [False] * n
        used[target] = True
        todo = deque([self.base])
        while todo:
            u = todo.popleft()
            mu = img[u]
            for s in [x for a in range(1, self.rank + 1) for x in (a, -a)]:
                v = self.step(u, s)
                w = self.step(mu, s)
                if (v == NO) != (w == NO):
                    return None
                if v == NO:
                    continue
                if img[v] == NO:
                    if used[w]:
                        return None
                    img[v] = w
                    used[w] = True
                    todo.append(v)
                elif img[v] != w:
                    return None
        return img

    def automorphism_orbit_of_base(self) -> list[int]:
        return [v for v in range(self.n_vertices)
                if self.automorphism_from(v) is not None]

    def is_vertex_transitive(self) -> bool:
        return len(self.automorphism_orbit_of_base()) == self.n_vertices

    # -- paths ---------------------------------------------------------------

    def path_word(self, src: int, dst: int) -> Optional[Word]:
        """Label of some reduced walk src -> dst (BFS-shortest), None if
        disconnected (cannot happen on valid instances)."""
        if src == dst:
            return ()
        prev: dict[int, tuple[int, int]] = {src: (NO, 0)}
        todo = deque([src])
        while todo:
            u = todo.popleft()
            for s, v in self.neighbors(u):
                if v not in prev:
                    prev[v] = (u, s)
                    if v == dst:
                        out: list[int] = []
                        w = dst
                        while w != src:
                            pu, ps = prev[w]
                            out.append(ps)
                            w = pu
                        return tuple(reversed(out))
                    todo.append(v)
        return None

    def spanning_tree(self) -> tuple[list[tuple[int, int, int]], list[Optional[Word]]]:
        """BFS spanning tree from the basepoint with fixed letter order.

        Returns (tree arcs as (src, letter, dst) positives, path words from
        the basepoint to every vertex along the tree).
        """
        n = self.n_vertices
        paths: list[Optional[Word]] = [None] * n
        paths[self.base] = ()
        tree: list[tuple[int, int, int]] = []
        todo = deque([self.base])
        while todo:
            u = todo.popleft()
            for a in range(1, self.rank + 1):
                for s in (a, -a):
                    v = self.step(u, s)
                    if v != NO and paths[v] is None:
                        paths[v] = paths[u] + (s,)  # type: ignore[operator]
                        if s > 0:
                            tree.append((u, s, v))
                        else:
                            tree.append((v, -s, u))
                        todo.append(v)
        return tree, paths

    # -- serialization -------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"stallings v={self.n_vertices} base={self.base} rank_alphabet={self.rank}"]
        arcs = sorted(self.arcs())
        for (u, a, v) in arcs:
            lines.append(f"{u} {render_letter(a, self.rank)} {v}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "InvAutomaton":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("stallings "):
            raise InvalidInputError("missing automaton header line")
        fields = dict(part.split("=", 1) for part in lines[0].split()[1:])
        try:
            n = int(fields["v"])
            base = int(fields["base"])
            rank = int(fields["rank_alphabet"])
        except (KeyError, ValueError) as exc:
            raise InvalidInputError(f"bad header: {lines[0]!r}") from exc
        arcs = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise InvalidInputError(f"bad arc line {ln!r}")
            u, letter, v = parts
            s = parse_word(letter, rank)
            if len(s) != 1 or s[0] < 0:
                raise InvalidInputError(f"arc letter must be positive: {ln!r}")
            arcs.append((int(u), s[0], int(v)))
        return InvAutomaton(rank, n, base, arcs)

    def to_dot(self, name: str = "stallings") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for v in range(self.n_vertices):
            shape = "doublecircle" if v == self.base else "circle"
            lines.append(f'  {v} [shape={shape}];')
        for (u, a, v) in sorted(self.arcs()):
            lines.append(f'  {u} -> {v} [label="{render_letter(a, self.rank)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return (f"InvAutomaton(rank={self.rank}, vertices={self.n_vertices}, "
                f"arcs={self.n_arcs()}, base={self.base})")


def bouquet(rank: int) -> InvAutomaton:
    """The rose: one vertex, one loop per positive letter."""
    return InvAutomaton(rank, 1, 0, [(0, a, 0) for a in range(1, rank + 1)])


def single_vertex(rank: int) -> InvAutomaton:
    """Stallings automaton of the trivial subgroup."""
    return InvAutomaton(rank, 1, 0, [])


def trace_word(aut: InvAutomaton, v: int, word: Sequence[int]) -> Optional[int]:
    """Module-level trace; reduces the word first, returns None if absent."""
    w = reduce_word(check_word(word, aut.rank))
    t = aut.trace(v, w)
    return None if t == NO else t
