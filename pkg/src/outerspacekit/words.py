"""Words, cyclic words and Whitehead automorphisms of a rank-n free group.

A letter is a nonzero integer: generator i is +i, its inverse is -i.
Text form uses lowercase a..z for generators and uppercase for inverses,
so "abA" is the reduced word a b a^-1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


class RankMismatchError(ValueError):
    """Operands live in free groups of different ranks."""


class InvalidMoveError(ValueError):
    """(A, a) does not satisfy a in A, a^-1 not in A."""


def letter_key(letter: int) -> tuple:
    """Deterministic letter order: 1 < -1 < 2 < -2 < ..."""
    return (abs(letter), letter < 0)


def word_key(letters) -> tuple:
    return tuple(letter_key(l) for l in letters)


def reduce_letters(letters) -> tuple:
    """Freely reduce a letter sequence (stack cancellation)."""
    out = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def inverse_letters(letters) -> tuple:
    return tuple(-l for l in reversed(letters))


def _check_letters(letters, rank=None):
    for l in letters:
        if not isinstance(l, int) or l == 0:
            raise ValueError(f"invalid letter {l!r}: letters are nonzero integers")
        if rank is not None and abs(l) > rank:
            raise ValueError(f"letter {l} out of rank range (rank {rank})")


def parse_letters(text: str, names: str = ALPHABET) -> tuple:
    """Parse text like 'xyXY' into letters, mapping names[i] -> i+1."""
    letters = []
    for ch in text:
        low = ch.lower()
        if low not in names:
            raise ValueError(f"unknown generator character {ch!r}")
        idx = names.index(low) + 1
        letters.append(idx if ch.islower() else -idx)
    return tuple(letters)


def format_letters(letters, names: str = ALPHABET) -> str:
    out = []
    for l in letters:
        if abs(l) > len(names):
            raise ValueError(f"no name for generator {abs(l)}")
        ch = names[abs(l) - 1]
        out.append(ch if l > 0 else ch.upper())
    return "".join(out)


def least_rotation(letters) -> tuple:
    """Lexicographically least rotation under letter_key (Booth's algorithm)."""
    n = len(letters)
    if n == 0:
        return ()
    s = [letter_key(l) for l in letters] * 2
    f = [-1] * len(s)
    k = 0
    for j in range(1, len(s)):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return tuple(letters[k:]) + tuple(letters[:k])


@dataclass(frozen=True)
class Word:
    """A freely reduced word. Construct with Word.make to reduce raw input."""

    letters: tuple = ()

    @staticmethod
    def make(letters, rank=None) -> "Word":
        _check_letters(letters, rank)
        return Word(reduce_letters(letters))

    @staticmethod
    def parse(text: str, rank=None) -> "Word":
        return Word.make(parse_letters(text), rank)

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(reduce_letters(self.letters + other.letters))

    def inverse(self) -> "Word":
        return Word(inverse_letters(self.letters))

    def __str__(self):
        return format_letters(self.letters) if self.letters else "1"

    def max_index(self) -> int:
        return max((abs(l) for l in self.letters), default=0)


def reduce_word(letters, rank=None) -> Word:
    """Unique freely reduced representative of a raw letter sequence."""
    return Word.make(letters, rank)


def cyclic_reduce(w: Word) -> tuple:
    """Split w = conjugator * core * conjugator^-1 with core cyclically reduced.

    Returns (CyclicWord, conjugator Word).
    """
    letters = list(w.letters)
    pre = []
    while len(letters) >= 2 and letters[0] == -letters[-1]:
        pre.append(letters[0])
        letters = letters[1:-1]
    return CyclicWord(canonical_cyclic(letters)), Word(tuple(pre))


def canonical_cyclic(letters) -> tuple:
    """Canonical form of a cyclically reduced word: least rotation over the
    word and its inverse (letter order 1 < -1 < 2 < -2 ...)."""
    a = least_rotation(letters)
    b = least_rotation(inverse_letters(letters))
    return a if word_key(a) <= word_key(b) else b


def _cyclically_reduce_letters(letters) -> tuple:
    letters = list(reduce_letters(letters))
    while len(letters) >= 2 and letters[0] == -letters[-1]:
        letters = letters[1:-1]
    return tuple(letters)


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word up to rotation and inversion, stored in
    canonical form. Construct with CyclicWord.make to normalize raw input."""

    letters: tuple = ()

    @staticmethod
    def make(letters, rank=None) -> "CyclicWord":
        _check_letters(letters, rank)
        return CyclicWord(canonical_cyclic(_cyclically_reduce_letters(letters)))

    @staticmethod
    def parse(text: str, rank=None) -> "CyclicWord":
        return CyclicWord.make(parse_letters(text), rank)

    @staticmethod
    def of(w: Word) -> "CyclicWord":
        return CyclicWord.make(w.letters)

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def as_word(self) -> Word:
        return Word(self.letters)

    def inverse(self) -> "CyclicWord":
        return self  # canonical form already identifies w with w^-1

    def __str__(self):
        return format_letters(self.letters) if self.letters else "1"

    def max_index(self) -> int:
        return max((abs(l) for l in self.letters), default=0)


class Automorphism:
    """An endomorphism of F_rank given by generator images.

    Bijectivity is not checked on construction; `verified` is set by explicit
    certification (Whitehead moves, verify_inverse, or .inverse()).
    """

    __slots__ = ("rank", "images", "verified", "_inv")

    def __init__(self, rank: int, images, verified: bool = False, _inv=None):
        images = tuple(images)
        if len(images) != rank:
            raise ValueError(f"need {rank} images, got {len(images)}")
        for im in images:
            if not isinstance(im, Word):
                raise TypeError("images must be Words")
            if im.max_index() > rank:
                raise ValueError("image letter out of rank range")
        self.rank = rank
        self.images = images
        self.verified = verified
        self._inv = _inv

    @staticmethod
    def identity(rank: int) -> "Automorphism":
        phi = Automorphism(rank, [Word((i,)) for i in range(1, rank + 1)], verified=True)
        phi._inv = phi
        return phi

    @staticmethod
    def from_strings(rank: int, *texts) -> "Automorphism":
        return Automorphism(rank, [Word.parse(t, rank) for t in texts])

    def image_of(self, letter: int) -> tuple:
        im = self.images[abs(letter) - 1].letters
        return im if letter > 0 else inverse_letters(im)

    def apply_letters(self, letters) -> tuple:
        out = []
        for l in letters:
            for m in self.image_of(l):
                if out and out[-1] == -m:
                    out.pop()
                else:
                    out.append(m)
        return tuple(out)

    def apply(self, w: Word) -> Word:
        if w.max_index() > self.rank:
            raise RankMismatchError("word rank exceeds automorphism rank")
        return Word(self.apply_letters(w.letters))

    def apply_cyclic(self, w: CyclicWord) -> CyclicWord:
        if w.max_index() > self.rank:
            raise RankMismatchError("word rank exceeds automorphism rank")
        return CyclicWord.make(self.apply_letters(w.letters))

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self after other: (self.compose(other))(w) = self(other(w))."""
        if self.rank != other.rank:
            raise RankMismatchError("rank mismatch in composition")
        images = [Word(self.apply_letters(im.letters)) for im in other.images]
        inv = None
        if self._inv is not None and other._inv is not None:
            inv = _lazy_compose_inverse(other._inv, self._inv)
        return Automorphism(self.rank, images, verified=self.verified and other.verified, _inv=inv)

    def is_identity(self) -> bool:
        return all(im.letters == (i + 1,) for i, im in enumerate(self.images))

    def power(self, k: int) -> "Automorphism":
        if k == 0:
            return Automorphism.identity(self.rank)
        base = self if k > 0 else self.inverse()
        out = base
        for _ in range(abs(k) - 1):
            out = out.compose(base)
        return out

    def inverse(self) -> "Automorphism":
        if self._inv is None:
            inv_images = inverse_images(self.images, self.rank)
            inv = Automorphism(self.rank, inv_images, verified=True)
            if not verify_inverse(self, inv):
                raise ValueError("failed to certify computed inverse")
            self.verified = True
            inv._inv = self
            self._inv = inv
        elif callable(self._inv):
            self._inv = self._inv()
            self._inv._inv = self
        return self._inv

    def __eq__(self, other):
        return (
            isinstance(other, Automorphism)
            and self.rank == other.rank
            and self.images == other.images
        )

    def __hash__(self):
        return hash((self.rank, self.images))

    def __str__(self):
        gens = ", ".join(
            f"{format_letters((i + 1,))}->{im}" for i, im in enumerate(self.images)
        )
        return f"Aut[{gens}]"

    __repr__ = __str__


def _lazy_compose_inverse(inv_other, inv_self):
    def build():
        a = inv_other() if callable(inv_other) else inv_other
        b = inv_self() if callable(inv_self) else inv_self
        return a.compose(b)

    return build


def apply_endomorphism(phi: Automorphism, w):
    """Image of a Word or CyclicWord under phi, reduced."""
    if isinstance(w, CyclicWord):
        return phi.apply_cyclic(w)
    return phi.apply(w)


def verify_inverse(phi: Automorphism, psi: Automorphism) -> bool:
    """True iff phi o psi and psi o phi both fix every generator."""
    if phi.rank != psi.rank:
        raise RankMismatchError("rank mismatch in verify_inverse")
    for i in range(1, phi.rank + 1):
        if phi.apply_letters(psi.image_of(i)) != (i,):
            return False
        if psi.apply_letters(phi.image_of(i)) != (i,):
            return False
    phi.verified = psi.verified = True
    if phi._inv is None:
        phi._inv = psi
    if psi._inv is None:
        psi._inv = phi
    return True


@dataclass(frozen=True)
class WhiteheadMove:
    """Whitehead automorphism data (A, a): a in A, a^-1 not in A."""

    A: frozenset
    a: int

    def __post_init__(self):
        if self.a not in self.A:
            raise InvalidMoveError("a must lie in A")
        if -self.a in self.A:
            raise InvalidMoveError("a^-1 must not lie in A")

    def inverse_move(self) -> "WhiteheadMove":
        return WhiteheadMove(frozenset(self.A - {self.a}) | {-self.a}, -self.a)

    def automorphism(self, rank: int) -> Automorphism:
        images = []
        a = self.a
        for x in range(1, rank + 1):
            if x == abs(a):
                images.append(Word((x,) if a > 0 else (x,)))
                continue
            xin = x in self.A
            xinvin = -x in self.A
            if xin and xinvin:
                letters = (a, x, -a)
            elif xin:
                letters = (x, -a)
            elif xinvin:
                letters = (a, x)
            else:
                letters = (x,)
            images.append(Word(letters))
        phi = Automorphism(rank, images, verified=True)
        inv = self.inverse_move()
        phi._inv = lambda: _move_automorphism_raw(inv, rank, phi)
        return phi

    def sort_key(self):
        return (letter_key(self.a), tuple(sorted(word_key((x,)) for x in self.A)))

    def __str__(self):
        body = "".join(sorted((format_letters((x,)) for x in self.A)))
        return f"({{{body}}}, {format_letters((self.a,))})"


def _move_automorphism_raw(move: WhiteheadMove, rank: int, inverse: Automorphism):
    phi = move.automorphism(rank)
    phi._inv = inverse
    return phi


def whitehead_move(A, a: int, rank: int) -> Automorphism:
    """The Whitehead automorphism phi_(A,a) on F_rank."""
    move = WhiteheadMove(frozenset(A), a)
    for x in move.A:
        if abs(x) > rank:
            raise ValueError(f"letter {x} out of rank range")
    return move.automorphism(rank)


def signed_letters(rank: int):
    for i in range(1, rank + 1):
        yield i
        yield -i


def all_whitehead_moves(rank: int):
    """All (A, a) moves, identity-like ones included, in deterministic order."""
    letters = sorted(signed_letters(rank), key=letter_key)
    for a in letters:
        others = [x for x in letters if x != a and x != -a]
        for r in range(len(others) + 1):
            for extra in itertools.combinations(others, r):
                yield WhiteheadMove(frozenset((a,) + extra), a)


# Basis certification (Stallings folding) and tuple inversion (Nielsen
# reduction with history). These back Automorphism.inverse and the
# marking-validity checks in the graph layer.


def is_basis(words, rank: int) -> bool:
    """True iff the given Words form a free basis of F_rank.

    Folds the wedge of word loops; the tuple is a basis iff the folded core
    graph is the full rank-n rose (n words generating F_n are a basis).
    """
    words = list(words)
    if len(words) != rank:
        return False
    parent = {}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(u, v):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv

    base = 0
    parent[base] = base
    nxt = 1
    edges = []
    for w in words:
        if not w.letters:
            return False
        prev = base
        for i, l in enumerate(w.letters):
            if i == len(w.letters) - 1:
                node = base
            else:
                node = nxt
                parent[node] = node
                nxt += 1
            if l > 0:
                edges.append((l, prev, node))
            else:
                edges.append((-l, node, prev))
            prev = node

    while True:
        out_seen, in_seen = {}, {}
        merged = False
        dedup = set()
        for (l, u, v) in edges:
            u, v = find(u), find(v)
            if (l, u, v) in dedup:
                continue
            dedup.add((l, u, v))
            if (l, u) in out_seen and find(out_seen[(l, u)]) != v:
                union(out_seen[(l, u)], v)
                merged = True
                break
            out_seen[(l, u)] = v
            if (l, v) in in_seen and find(in_seen[(l, v)]) != u:
                union(in_seen[(l, v)], u)
                merged = True
                break
            in_seen[(l, v)] = u
        if not merged:
            edges = sorted(dedup)
            break
        edges = [(l, find(u), find(v)) for (l, u, v) in edges]

    # Trim hanging trees away from the basepoint.
    b = find(base)
    while True:
        deg = {}
        for (l, u, v) in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        drop = {v for v, d in deg.items() if d <= 1 and v != b}
        if not drop:
            break
        edges = [e for e in edges if e[1] not in drop and e[2] not in drop]

    labels = {l for (l, u, v) in edges}
    return (
        len(edges) == rank
        and labels == set(range(1, rank + 1))
        and all(u == b and v == b for (_, u, v) in edges)
    )


def inverse_images(images, rank: int, max_states: int = 20000):
    """Images of the inverse automorphism, given generator images that form a
    basis. Greedy Nielsen reduction with history; short plateau search when no
    single transformation shortens the tuple."""
    words = [im.letters for im in images]
    exprs = [(i,) for i in range(1, rank + 1)]

    def total(ws):
        return sum(len(w) for w in ws)

    def options(ws):
        # (new_words_i, i, op) candidates, deterministic order
        for i in range(rank):
            for j in range(rank):
                if i == j:
                    continue
                for s in (1, -1):
                    wj = ws[j] if s > 0 else inverse_letters(ws[j])
                    yield i, j, s, "r", reduce_letters(ws[i] + wj)
                    yield i, j, s, "l", reduce_letters(wj + ws[i])

    def apply_op(ws, es, op):
        i, j, s, side, neww = op
        ej = es[j] if s > 0 else inverse_letters(es[j])
        ws = list(ws)
        es = list(es)
        ws[i] = neww
        es[i] = reduce_letters(es[i] + ej) if side == "r" else reduce_letters(ej + es[i])
        return ws, es

    def best_reducing(ws):
        best = None
        for i, j, s, side, neww in options(ws):
            gain = len(ws[i]) - len(neww)
            if gain > 0:
                key = (-gain, i, j, s == -1, side)
                if best is None or key < best[0]:
                    best = (key, (i, j, s, side, neww))
        return None if best is None else best[1]

    seen = set()
    while total(words) > rank:
        op = best_reducing(words)
        if op is not None:
            words, exprs = apply_op(words, exprs, op)
            continue
        # Plateau: breadth-first over length-preserving transformations.
        frontier = [(tuple(words), tuple(exprs))]
        seen.add(tuple(words))
        found = None
        for _ in range(4):
            nxt = []
            for ws, es in frontier:
                for i, j, s, side, neww in options(list(ws)):
                    if len(neww) != len(ws[i]):
                        continue
                    ws2, es2 = apply_op(list(ws), list(es), (i, j, s, side, neww))
                    key = tuple(ws2)
                    if key in seen:
                        continue
                    seen.add(key)
                    if len(seen) > max_states:
                        raise ValueError("not a basis or marking too complex to invert")
                    if best_reducing(ws2) is not None:
                        found = (ws2, es2)
                        break
                    nxt.append((tuple(ws2), tuple(es2)))
                if found:
                    break
            if found:
                break
            frontier = nxt
        if not found:
            raise ValueError("generator images do not form a basis")
        words, exprs = found

    result = [None] * rank
    for w, e in zip(words, exprs):
        if len(w) != 1:
            raise ValueError("generator images do not form a basis")
        letter = w[0]
        idx = abs(letter) - 1
        if result[idx] is not None:
            raise ValueError("generator images do not form a basis")
        result[idx] = Word(e if letter > 0 else inverse_letters(e))
    if any(r is None for r in result):
        raise ValueError("generator images do not form a basis")
    return result


def enumerate_cyclic_words(rank: int, max_len: int):
    """All canonical cyclic words of length 1..max_len, deterministic order."""
    letters = sorted(signed_letters(rank), key=letter_key)
    out = []
    for n in range(1, max_len + 1):
        seen = set()
        for tup in itertools.product(letters, repeat=n):
            red = _cyclically_reduce_letters(tup)
            if len(red) != n:
                continue
            can = canonical_cyclic(red)
            if can not in seen:
                seen.add(can)
                out.append(CyclicWord(can))
    return out
