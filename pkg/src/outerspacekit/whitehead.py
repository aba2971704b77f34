"""Whitehead graphs, cut-vertex analysis and length minimization.

The Whitehead graph of a set of cyclic words has the 2n signed letters as
vertices and one edge {u^-1, v} per cyclic two-letter subword uv, with
multiplicity. Connectivity and cut vertices drive Whitehead's reduction
algorithm: a basis element minimizes to a single letter, while a connected
cut-vertex-free graph certifies a non-basis element.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .words import (
    CyclicWord,
    WhiteheadMove,
    all_whitehead_moves,
    letter_key,
    signed_letters,
    word_key,
)


@dataclass(frozen=True)
class WhiteheadGraph:
    rank: int
    edges: tuple  # sorted ((u, v), multiplicity) pairs, u <= v by letter_key

    @staticmethod
    def from_counter(rank: int, counter: Counter) -> "WhiteheadGraph":
        items = sorted(
            ((tuple(sorted(e, key=letter_key)), m) for e, m in counter.items()),
            key=lambda it: word_key(it[0]),
        )
        return WhiteheadGraph(rank, tuple(items))

    def vertices(self):
        return sorted(signed_letters(self.rank), key=letter_key)

    def simple_edges(self):
        return [e for e, _ in self.edges]

    def used_vertices(self):
        used = set()
        for (u, v), _ in self.edges:
            used.add(u)
            used.add(v)
        return used

    def isolated_vertices(self):
        used = self.used_vertices()
        return [v for v in self.vertices() if v not in used]

    def degree(self, v) -> int:
        return sum(m for (a, b), m in self.edges if v in (a, b))

    def union(self, other: "WhiteheadGraph") -> "WhiteheadGraph":
        c = Counter(dict((frozenset(e), m) for e, m in self.edges))
        for e, m in other.edges:
            c[frozenset(e)] += m
        return WhiteheadGraph.from_counter(self.rank, c)

    def same_simple_graph(self, other: "WhiteheadGraph") -> bool:
        return self.rank == other.rank and set(self.simple_edges()) == set(
            other.simple_edges()
        )


def whitehead_graph(words, rank=None) -> WhiteheadGraph:
    """Superposition of the Whitehead graphs of the given cyclic words."""
    words = list(words)
    if rank is None:
        rank = max((w.max_index() for w in words), default=0)
    counter: Counter = Counter()
    for w in words:
        if not w:
            raise ValueError("empty cyclic word has no Whitehead graph")
        ls = w.letters
        n = len(ls)
        for i in range(n):
            u, v = ls[i], ls[(i + 1) % n]
            counter[frozenset((-u, v)) if -u != v else frozenset((v,))] += 1
    # -u == v cannot occur in a cyclically reduced word, keep guard simple
    for e in counter:
        if len(e) == 1:
            raise ValueError("self-loop in Whitehead graph: word not cyclically reduced")
    return WhiteheadGraph.from_counter(rank, counter)


def _components(vertices, adjacency):
    comps = []
    left = set(vertices)
    while left:
        start = min(left, key=letter_key)
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in adjacency.get(v, ()):
                if u in left and u not in comp:
                    comp.add(u)
                    stack.append(u)
        comps.append(comp)
        left -= comp
    return comps


@dataclass(frozen=True)
class CutReport:
    connected: bool  # over vertices that carry at least one edge
    cut_vertex: object  # least cut vertex, or None
    cut_vertices: tuple
    isolated: tuple  # signed letters with no incident edge
    components: tuple  # components over used vertices, as sorted tuples


def _adjacency(graph: WhiteheadGraph):
    adj = {}
    for (u, v), _ in graph.edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def cut_analysis(graph: WhiteheadGraph) -> CutReport:
    """Connectivity (over used vertices) and cut vertices of a Whitehead graph."""
    adj = _adjacency(graph)
    used = sorted(adj, key=letter_key)
    comps = _components(used, adj)
    connected = len(comps) <= 1
    cuts = []
    if connected and len(used) > 2:
        for v in used:
            rest = [u for u in used if u != v]
            sub = {u: {w for w in adj[u] if w != v} for u in rest}
            if len(_components(rest, sub)) > 1:
                cuts.append(v)
    cuts.sort(key=letter_key)
    return CutReport(
        connected=connected,
        cut_vertex=cuts[0] if cuts else None,
        cut_vertices=tuple(cuts),
        isolated=tuple(graph.isolated_vertices()),
        components=tuple(tuple(sorted(c, key=letter_key)) for c in comps),
    )


def moves_from_cut_vertex(graph: WhiteheadGraph, report: CutReport = None):
    """Length-reducing move candidates derived from cut vertices.

    For a cut vertex a and a component W'' of the used graph minus a that
    does not contain a^-1, the word-level reducing move is
    (A, a) with A = (W'')^-1 union {a}: its length change equals
    -(number of edges joining a to W'') < 0 on a connected graph.
    """
    if report is None:
        report = cut_analysis(graph)
    adj = _adjacency(graph)
    moves = []
    for a in report.cut_vertices:
        rest = [u for u in adj if u != a]
        sub = {u: {w for w in adj[u] if w != a} for u in rest}
        for comp in _components(rest, sub):
            if -a in comp:
                continue
            moves.append(WhiteheadMove(frozenset(-x for x in comp) | {a}, a))
    return moves


@dataclass
class ReductionTrace:
    steps: list = field(default_factory=list)  # (WhiteheadMove, before, after)
    final_words: list = field(default_factory=list)
    terminal_state: str = ""  # no-cut-vertex | disconnected-min | basis-reached

    def total_lengths(self):
        return [b for (_, b, _) in self.steps] + (
            [self.steps[-1][2]] if self.steps else []
        )


def _total(words):
    return sum(len(w) for w in words)


def _apply_move(move: WhiteheadMove, words, rank):
    phi = move.automorphism(rank)
    return [phi.apply_cyclic(w) for w in words]


def whitehead_minimize(words, rank=None) -> ReductionTrace:
    """Repeatedly apply a length-decreasing Whitehead move until none exists.

    Moves come from cut vertices when the (used) graph is connected and has
    one; otherwise from exhaustive search over all moves. Tie-break: largest
    decrease, then lexicographic (a, sorted A).
    """
    words = [w if isinstance(w, CyclicWord) else CyclicWord.make(w) for w in words]
    if any(not w for w in words):
        raise ValueError("whitehead_minimize requires nonempty words")
    if rank is None:
        rank = max(w.max_index() for w in words)
    trace = ReductionTrace()
    while True:
        graph = whitehead_graph(words, rank)
        report = cut_analysis(graph)
        before = _total(words)
        chosen = None
        if report.connected and report.cut_vertices:
            best = None
            for move in moves_from_cut_vertex(graph, report):
                new = _apply_move(move, words, rank)
                after = _total(new)
                key = (after, move.sort_key())
                if best is None or key < best[0]:
                    best = (key, move, new)
            after = best[0][0]
            if after >= before:
                raise AssertionError(
                    f"cut-vertex move {best[1]} failed to decrease length "
                    f"({before} -> {after})"
                )
            chosen = (best[1], best[2], after)
        else:
            best = None
            for move in all_whitehead_moves(rank):
                new = _apply_move(move, words, rank)
                after = _total(new)
                if after >= before:
                    continue
                key = (after, move.sort_key())
                if best is None or key < best[0]:
                    best = (key, move, new)
            if best is not None:
                chosen = (best[1], best[2], best[0][0])
        if chosen is None:
            break
        move, words, after = chosen
        trace.steps.append((move, before, after))
    trace.final_words = words
    if all(len(w) == 1 for w in words):
        trace.terminal_state = "basis-reached"
    else:
        graph = whitehead_graph(words, rank)
        report = cut_analysis(graph)
        if report.isolated or not report.connected:
            trace.terminal_state = "disconnected-min"
        else:
            trace.terminal_state = "no-cut-vertex"
    return trace


def is_primitive(w: CyclicWord, rank=None) -> bool:
    """True iff w is a basis element (minimizes to a single letter)."""
    if not w:
        raise ValueError("empty word")
    trace = whitehead_minimize([w], rank)
    return trace.terminal_state == "basis-reached"
