"""Free-group word algebra.

Letters of the rank-n alphabet are the signed integers +1..+n (positive
letters) and -1..-n (their formal inverses); 0 is never a letter.  A word
is a tuple of letters, the empty tuple being the identity.  All public
functions take the ambient rank explicitly and reject letters outside it.

Text form: the i-th positive letter prints as the i-th lowercase ASCII
letter and its inverse as the corresponding uppercase letter ("a", "A",
"b", ...).  For ranks beyond 26 the numeric form ``x3`` / ``X3`` is used
instead.  The empty word prints as "1".
"""

from __future__ import annotations

from typing import Iterable, Sequence

Word = tuple[int, ...]

EMPTY: Word = ()


class InvalidInputError(ValueError):
    """Malformed word, letter out of range, rank mismatch and the like."""


class PreconditionError(ValueError):
    """A documented operation precondition does not hold."""


class ResourceLimitError(RuntimeError):
    """A configured size cap would be exceeded."""


def check_rank(rank: int) -> int:
    if not isinstance(rank, int) or rank < 1:
        raise InvalidInputError(f"alphabet rank must be a positive integer, got {rank!r}")
    return rank


def check_word(word: Sequence[int], rank: int) -> Word:
    """Validate letters against the ambient rank and return the word as a tuple."""
    w = tuple(word)
    for x in w:
        if not isinstance(x, int) or x == 0 or abs(x) > rank:
            raise InvalidInputError(f"letter {x!r} not in alphabet of rank {rank}")
    return w


def inverse(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def reduce_word(word: Sequence[int]) -> Word:
    """Free reduction by a single left-to-right stack pass.

    Confluence of adjacent cancellation makes the result the unique
    reduced form, so one pass suffices.
    """
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_reduced(word: Sequence[int]) -> bool:
    return all(word[i] != -word[i + 1] for i in range(len(word) - 1))


def is_cyclically_reduced(word: Sequence[int]) -> bool:
    if not is_reduced(word):
        return False
    return len(word) < 2 or word[0] != -word[-1]


def cyclic_reduce(word: Sequence[int]) -> tuple[Word, Word]:
    """Return (core, conjugator) with reduce(conjugator + core + conjugator^-1) == reduce(word)."""
    w = list(reduce_word(word))
    prefix: list[int] = []
    while len(w) >= 2 and w[0] == -w[-1]:
        prefix.append(w[0])
        w = w[1:-1]
    return tuple(w), tuple(prefix)


def concat(*words: Sequence[int]) -> Word:
    """Concatenate and freely reduce."""
    out: list[int] = []
    for w in words:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def conjugate(word: Sequence[int], by: Sequence[int]) -> Word:
    """w^g = g^-1 w g (right-action convention)."""
    return concat(inverse(by), word, by)


def power(word: Sequence[int], k: int) -> Word:
    if k < 0:
        return power(inverse(word), -k)
    out: Word = EMPTY
    for _ in range(k):
        out = concat(out, word)
    return out


def primitive_root(word: Sequence[int]) -> tuple[Word, int]:
    """Write reduce(word) = conj * y^d * conj^-1 with y cyclically reduced and
    not a proper power; return (reduce(conj y conj^-1), d).

    A cyclically reduced word is a proper power exactly when it is periodic
    as a linear string, so the primitive period gives the root.
    """
    core, conj = cyclic_reduce(word)
    m = len(core)
    if m == 0:
        return EMPTY, 0
    d = 1
    for p in range(1, m + 1):
        if m % p:
            continue
        if core == core[:p] * (m // p):
            d = m // p
            root = core[:p]
            break
    return concat(conj, root, inverse(conj)), d


# ---------------------------------------------------------------------------
# text form

_LC = "abcdefghijklmnopqrstuvwxyz"


def render_letter(x: int, rank: int) -> str:
    i = abs(x) - 1
    if rank <= 26:
        ch = _LC[i]
        return ch if x > 0 else ch.upper()
    return (f"x{i}" if x > 0 else f"X{i}")


def render_word(word: Sequence[int], rank: int) -> str:
    if not word:
        return "1"
    return "".join(render_letter(x, rank) for x in word)


def parse_word(text: str, rank: int) -> Word:
    """Parse the text form of a word over the given rank; does not reduce."""
    check_rank(rank)
    s = text.strip()
    if s in ("", "1"):
        return EMPTY
    out: list[int] = []
    if rank <= 26:
        for ch in s:
            if ch.islower():
                idx = _LC.find(ch)
                sign = 1
            elif ch.isupper():
                idx = _LC.find(ch.lower())
                sign = -1
            else:
                raise InvalidInputError(f"bad character {ch!r} in word {text!r}")
            if idx < 0 or idx >= rank:
                raise InvalidInputError(f"letter {ch!r} outside alphabet of rank {rank}")
            out.append(sign * (idx + 1))
    else:
        i = 0
        while i < len(s):
            ch = s[i]
            if ch not in ("x", "X"):
                raise InvalidInputError(f"expected x<k>/X<k> token at {s[i:]!r}")
            j = i + 1
            while j < len(s) and s[j].isdigit():
                j += 1
            if j == i + 1:
                raise InvalidInputError(f"missing letter index at {s[i:]!r}")
            idx = int(s[i + 1:j])
            if idx >= rank:
                raise InvalidInputError(f"letter index {idx} outside alphabet of rank {rank}")
            out.append((idx + 1) if ch == "x" else -(idx + 1))
            i = j
    return tuple(out)


def parse_words(text: str, rank: int) -> list[Word]:
    """Comma-separated list of words; empty string means the empty list."""
    s = text.strip()
    if not s:
        return []
    return [parse_word(part, rank) for part in s.split(",")]


def all_reduced_words(rank: int, max_len: int) -> Iterable[Word]:
    """Yield every reduced word of length <= max_len (breadth-first, ordered)."""
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    frontier: list[Word] = [EMPTY]
    yield EMPTY
    for _ in range(max_len):
        nxt: list[Word] = []
        for w in frontier:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                nw = w + (x,)
                nxt.append(nw)
                yield nw
        frontier = nxt
