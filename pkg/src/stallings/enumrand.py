"""Counting and random generation: Hall's recursion, exhaustive index-k
enumeration, the graph-based sampler over tuples of partial injections, and
the coset-partition multiplicity check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Optional, Sequence

import numpy as np

from .automaton import InvAutomaton
from .folding import Subgroup
from .intersect import coset_intersect
from .spectra import is_pure
from .subgroup import index
from .words import InvalidInputError, ResourceLimitError, Word

RNG_ALGORITHM = "pcg64"


def hall_count(k: int, n: int) -> int:
    """Number of index-k subgroups of the rank-n free group, by the
    recursion N(k,n) = k(k!)^(n-1) - sum_{i<k} ((k-i)!)^(n-1) N(i,n)."""
    if not (isinstance(k, int) and k >= 1):
        raise InvalidInputError("index k must be a positive integer")
    if not (isinstance(n, int) and n >= 1):
        raise InvalidInputError("rank n must be a positive integer")
    table: list[int] = []
    for j in range(1, k + 1):
        val = j * math.factorial(j) ** (n - 1)
        for i in range(1, j):
            val -= math.factorial(j - i) ** (n - 1) * table[i - 1]
        table.append(val)
    return table[k - 1]


def enumerate_index(k: int, n: int, *, max_k: int = 6, max_n: int = 3
                    ) -> list[Subgroup]:
    """All subgroups of index exactly k in rank n, as canonical handles.

    Index-k subgroups are the saturated k-vertex automata: n-tuples of
    permutations acting transitively, deduplicated by canonical form.  This
    is a second, independent route to Hall's numbers.
    """
    if not (isinstance(k, int) and k >= 1):
        raise InvalidInputError("index k must be a positive integer")
    if k > max_k or n > max_n:
        raise ResourceLimitError(
            f"enumeration capped at k <= {max_k}, n <= {max_n}")
    if k == 1:
        from .automaton import bouquet

        return [Subgroup(bouquet(n))]
    perms = list(permutations(range(k)))
    out: dict[bytes, Subgroup] = {}
    stack: list[tuple] = [()]

    def transitive(tup: tuple) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for p in tup:
                for w in (p[v], p.index(v)):
                    if w not in seen:
                        seen.add(w)
                        frontier.append(w)
        return len(seen) == k

    def rec(tup: tuple) -> None:
        if len(tup) == n:
            if transitive(tup):
                arcs = [(v, a + 1, tup[a][v]) for a in range(n) for v in range(k)]
                h = Subgroup(InvAutomaton(n, k, 0, arcs, check=False))
                out.setdefault(h.key(), h)
            return
        for p in perms:
            rec(tup + (p,))

    rec(())
    return sorted(out.values(), key=lambda s: s.key())


# ---------------------------------------------------------------------------
# graph-based random model


def _partial_injection_weights(k: int) -> list[int]:
    # number of partial injections with domain size d: C(k,d)^2 d!
    return [math.comb(k, d) ** 2 * math.factorial(d) for d in range(k + 1)]


def _rand_below(rng: np.random.Generator, total: int) -> int:
    """Uniform integer in [0, total) with arbitrary precision (rejection)."""
    bits = total.bit_length()
    nbytes = (bits + 7) // 8
    while True:
        r = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - bits)
        if r < total:
            return r


def random_partial_injection(rng: np.random.Generator, k: int) -> np.ndarray:
    """Uniform over all partial injections on k points (-1 marks undefined):
    domain size by exact weight, then a uniform subset and an injective image
    from a Fisher-Yates prefix."""
    weights = _partial_injection_weights(k)
    total = sum(weights)
    r = _rand_below(rng, total)
    d = 0
    acc = 0
    for d, wt in enumerate(weights):
        acc += wt
        if r < acc:
            break
    tau = np.full(k, -1, dtype=np.int64)
    if d:
        domain = rng.choice(k, size=d, replace=False)
        image = rng.permutation(k)[:d]
        tau[domain] = image
    return tau


def _is_core_connected(taus: list[np.ndarray], k: int) -> bool:
    """Connected, and no hanging tree avoiding the basepoint 0: every
    non-basepoint vertex needs degree >= 2 after iterated leaf stripping;
    rejection needs only the no-strippable-leaf test plus connectivity."""
    deg = np.zeros(k, dtype=np.int64)
    parent = list(range(k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = 0
    for tau in taus:
        for u in range(k):
            v = int(tau[u])
            if v >= 0:
                deg[u] += 1
                deg[v] += 1
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
                edges += 1
    if k > 1 and any(deg[v] <= 1 for v in range(1, k)):
        return False
    root = find(0)
    if any(find(v) != root for v in range(k)):
        return False
    return True


def sample_subgroup(k: int, n: int, seed: int, *,
                    _rng: Optional[np.random.Generator] = None) -> Subgroup:
    """One subgroup, uniform over those of size exactly k (basepoint 0):
    rejection over n-tuples of uniform partial injections until the tuple is
    connected and core with respect to the basepoint."""
    if not (isinstance(k, int) and k >= 1):
        raise InvalidInputError("size k must be a positive integer")
    rng = _rng if _rng is not None else np.random.default_rng(seed)
    while True:
        taus = [random_partial_injection(rng, k) for _ in range(n)]
        if not _is_core_connected(taus, k):
            continue
        arcs = [(u, a + 1, int(taus[a][u]))
                for a in range(n) for u in range(k) if taus[a][u] >= 0]
        return Subgroup(InvAutomaton(n, k, 0, arcs, check=False))


@dataclass
class SampleStats:
    k: int
    n: int
    trials: int
    seed: int
    rejections: int = 0
    mean_rank: float = 0.0
    mean_size: float = 0.0
    purity_count: Optional[int] = None
    malnormal_count: Optional[int] = None
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def predicted_rank(self) -> float:
        # asymptotic expectation for the graph-based model
        return (self.n - 1) * self.k - self.n * math.sqrt(self.k) + 1

    def purity_freq(self) -> Optional[float]:
        if self.purity_count is None:
            return None
        return self.purity_count / self.trials

    def malnormal_freq(self) -> Optional[float]:
        if self.malnormal_count is None:
            return None
        return self.malnormal_count / self.trials

    def csv(self) -> str:
        header = "k,n,trials,mean_rank,predicted_rank,purity_freq,malnormal_freq"
        pf = self.purity_freq()
        mf = self.malnormal_freq()
        row = (f"{self.k},{self.n},{self.trials},{self.mean_rank:.4f},"
               f"{self.predicted_rank:.4f},"
               f"{'' if pf is None else f'{pf:.5f}'},"
               f"{'' if mf is None else f'{mf:.5f}'}")
        return header + "\n" + row


def rank_stats(k: int, n: int, trials: int, seed: int,
               *, compute: Sequence[str] = ("rank", "purity", "malnormal")
               ) -> SampleStats:
    """Monte Carlo over seeded sample_subgroup draws; per-trial generators
    are derived from (seed, trial) so the aggregate is order-independent."""
    if trials < 1:
        raise InvalidInputError("trials must be positive")
    stats = SampleStats(k=k, n=n, trials=trials, seed=seed)
    if "purity" in compute:
        stats.purity_count = 0
    if "malnormal" in compute:
        stats.malnormal_count = 0
    total_rank = 0
    total_size = 0
    rejections = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        # count rejections by sampling manually
        while True:
            taus = [random_partial_injection(rng, k) for _ in range(n)]
            if _is_core_connected(taus, k):
                break
            rejections += 1
        arcs = [(u, a + 1, int(taus[a][u]))
                for a in range(n) for u in range(k) if taus[a][u] >= 0]
        h = Subgroup(InvAutomaton(n, k, 0, arcs, check=False))
        total_rank += h.rank()
        total_size += h.size()
        if stats.purity_count is not None and is_pure(h):
            stats.purity_count += 1
        if stats.malnormal_count is not None:
            from .intersect import is_malnormal

            if is_malnormal(h)[0]:
                stats.malnormal_count += 1
    stats.rejections = rejections
    stats.mean_rank = total_rank / trials
    stats.mean_size = total_size / trials
    return stats


# ---------------------------------------------------------------------------
# coset partitions (Herzog-Schonheim checker)


def partition_check(cosets: Sequence[tuple[Subgroup, Word]]) -> str:
    """Classify a family of cosets H_i g_i: "not_partition",
    "partition_with_multiplicity", or "partition_without_multiplicity".

    Disjointness is pairwise coset intersection; totality is the index
    densities summing to 1 (valid for disjoint finite-index cosets).  The
    single-coset cover {(F, 1)} counts as multiplicity-free (the conjecture
    concerns s >= 2)."""
    if not cosets:
        return "not_partition"
    indices: list[int] = []
    for (h, _u) in cosets:
        rep = index(h)
        if rep.kind != "finite":
            return "not_partition"
        indices.append(rep.index)  # type: ignore[arg-type]
    for i in range(len(cosets)):
        for j in range(i + 1, len(cosets)):
            h1, u1 = cosets[i]
            h2, u2 = cosets[j]
            if coset_intersect(h1, u1, h2, u2) is not None:
                return "not_partition"
    if sum(Fraction(1, d) for d in indices) != 1:
        return "not_partition"
    if len(indices) >= 2 and len(set(indices)) < len(indices):
        return "partition_with_multiplicity"
    return "partition_without_multiplicity"
