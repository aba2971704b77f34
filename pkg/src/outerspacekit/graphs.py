"""Points of Outer Space: metric graphs with markings.

A metric graph is stored with indexed edges; the half-edge +(i+1) traverses
edge i forward, -(i+1) backward. A marking fixes a basepoint and one closed
edge loop per free-group generator; edge labels (words conjugating the
geometric basis back to F_n) are derived by collapsing a deterministic
spanning tree and inverting the induced map on fundamental groups.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .words import (
    Automorphism,
    CyclicWord,
    Word,
    WhiteheadMove,
    canonical_cyclic,
    inverse_letters,
    is_basis,
    letter_key,
    reduce_letters,
    signed_letters,
    word_key,
)

LENGTH_TOL = 1e-9


class InvalidPointError(ValueError):
    """A graph/marking violates an Outer Space invariant."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class MetricGraph:
    """Finite graph with an edge metric. Vertices are 0..n_vertices-1."""

    __slots__ = ("n_vertices", "edge_ids", "ends", "lengths", "_out")

    def __init__(self, n_vertices, edge_ids, ends, lengths):
        self.n_vertices = int(n_vertices)
        self.edge_ids = tuple(edge_ids)
        self.ends = tuple((int(u), int(v)) for u, v in ends)
        self.lengths = tuple(float(x) for x in lengths)
        if not (len(self.edge_ids) == len(self.ends) == len(self.lengths)):
            raise ValueError("edge tables must have equal lengths")
        out = [[] for _ in range(self.n_vertices)]
        for i, (u, v) in enumerate(self.ends):
            out[u].append(i + 1)
            out[v].append(-(i + 1))
        self._out = tuple(tuple(sorted(hs, key=lambda h: (abs(h), h < 0))) for hs in out)

    @property
    def n_edges(self):
        return len(self.ends)

    def init_of(self, h: int) -> int:
        u, v = self.ends[abs(h) - 1]
        return u if h > 0 else v

    def term_of(self, h: int) -> int:
        return self.init_of(-h)

    def length_of(self, h: int) -> float:
        return self.lengths[abs(h) - 1]

    def out_halfedges(self, v: int):
        return self._out[v]

    def valence(self, v: int) -> int:
        return len(self._out[v])

    def volume(self) -> float:
        return math.fsum(self.lengths)

    def with_lengths(self, lengths) -> "MetricGraph":
        return MetricGraph(self.n_vertices, self.edge_ids, self.ends, lengths)

    def connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for h in self._out[v]:
                w = self.term_of(h)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def betti(self) -> int:
        return self.n_edges - self.n_vertices + 1

    def subgraph_is_forest(self, edge_indices) -> bool:
        parent = {}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for i in edge_indices:
            u, v = self.ends[i]
            parent.setdefault(u, u)
            parent.setdefault(v, v)
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


def tighten_path(graph: MetricGraph, path, check_incidence=True):
    """Remove backtracking from a half-edge path (homotopy rel endpoints)."""
    if check_incidence:
        for i in range(len(path) - 1):
            if graph.term_of(path[i]) != graph.init_of(path[i + 1]):
                raise ValueError(f"broken incidence at position {i}")
    out = []
    for h in path:
        if out and out[-1] == -h:
            out.pop()
        else:
            out.append(h)
    return tuple(out)


def cyclic_tighten(path):
    """Strip matching ends of a (freely reduced) closed path."""
    path = list(path)
    while len(path) >= 2 and path[0] == -path[-1]:
        path = path[1:-1]
    return tuple(path)


def reverse_path(path):
    return tuple(-h for h in reversed(path))


@dataclass(frozen=True)
class CandidateLoop:
    kind: str  # embedded | figure-eight | barbell
    path: tuple
    conjugacy_class: CyclicWord
    length: float


@dataclass
class ValidationReport:
    valid: bool
    problems: list


class MarkedMetricGraph:
    """A point of Outer Space: metric graph, basepoint, generator loops."""

    def __init__(self, graph, basepoint, gen_loops, _caches=None):
        self.graph = graph
        self.basepoint = int(basepoint)
        self.gen_loops = tuple(tuple(loop) for loop in gen_loops)
        self.rank = len(self.gen_loops)
        c = _caches or {}
        self._tree_parent = c.get("tree_parent")  # vertex -> halfedge into it
        self._geo_letter = c.get("geo_letter")  # edge index -> geometric letter
        self._basis_to_edges = c.get("basis_to_edges")  # Automorphism F_n -> F_geo
        self._edges_to_basis = c.get("edges_to_basis")
        self._candidates = None

    # -- spanning tree and geometric basis -------------------------------

    def _ensure_tree(self):
        if self._tree_parent is not None:
            return
        g = self.graph
        parent = {self.basepoint: 0}
        order = [self.basepoint]
        qi = 0
        while qi < len(order):
            v = order[qi]
            qi += 1
            for h in g.out_halfedges(v):
                w = g.term_of(h)
                if w not in parent:
                    parent[w] = h
                    order.append(w)
        if len(parent) != g.n_vertices:
            raise InvalidPointError(["graph is not connected"])
        self._tree_parent = parent
        tree_edges = {abs(h) - 1 for v, h in parent.items() if v != self.basepoint}
        geo = {}
        nxt = 1
        for i in range(g.n_edges):
            if i not in tree_edges:
                geo[i] = nxt
                nxt += 1
        self._geo_letter = geo

    def tree_path_from_base(self, v: int):
        """Half-edge path basepoint -> v inside the spanning tree."""
        self._ensure_tree()
        path = []
        while v != self.basepoint:
            h = self._tree_parent[v]
            path.append(h)
            v = self.graph.init_of(h)
        return tuple(reversed(path))

    def geo_word_of_path(self, path):
        """Word over the geometric basis crossed by a half-edge path."""
        self._ensure_tree()
        letters = []
        for h in path:
            g = self._geo_letter.get(abs(h) - 1)
            if g is not None:
                letters.append(g if h > 0 else -g)
        return reduce_letters(letters)

    def marking_map(self) -> Automorphism:
        """F_n -> F(geometric basis), generator -> geometric word of its loop."""
        if self._basis_to_edges is None:
            self._ensure_tree()
            n_geo = len(self._geo_letter)
            if n_geo != self.rank:
                raise InvalidPointError(
                    [f"first Betti number {n_geo} does not match rank {self.rank}"]
                )
            images = [Word(self.geo_word_of_path(loop)) for loop in self.gen_loops]
            self._basis_to_edges = Automorphism(self.rank, images)
        return self._basis_to_edges

    def marking_inverse(self) -> Automorphism:
        """F(geometric basis) -> F_n; certified inverse of marking_map."""
        if self._edges_to_basis is None:
            self._edges_to_basis = self.marking_map().inverse()
        return self._edges_to_basis

    def halfedge_label(self, h: int):
        """Label word (letters in F_n) of an oriented edge; empty on the tree."""
        self._ensure_tree()
        g = self._geo_letter.get(abs(h) - 1)
        if g is None:
            return ()
        w = self.marking_inverse().images[g - 1].letters
        return w if h > 0 else inverse_letters(w)

    def path_word(self, path) -> Word:
        """Based word of a closed path at the basepoint (exact element)."""
        return Word(self.marking_inverse().apply_letters(self.geo_word_of_path(path)))

    def path_class(self, path) -> CyclicWord:
        """Conjugacy class of a closed path."""
        return CyclicWord.make(self.path_word(path).letters)

    # -- realizing words --------------------------------------------------

    def realize_based(self, letters):
        """Tightened based edge path of a word via the generator loops."""
        out = []
        for l in letters:
            loop = self.gen_loops[abs(l) - 1]
            if l < 0:
                loop = reverse_path(loop)
            for h in loop:
                if out and out[-1] == -h:
                    out.pop()
                else:
                    out.append(h)
        return tuple(out)

    def based_length(self, letters) -> float:
        path = self.realize_based(letters)
        return math.fsum(self.graph.length_of(h) for h in path)

    def loop_length(self, alpha) -> float:
        """Length of the immersed loop freely homotopic to alpha."""
        letters = alpha.letters if hasattr(alpha, "letters") else tuple(alpha)
        if not letters:
            raise ValueError("loop_length of empty class")
        path = cyclic_tighten(self.realize_based(letters))
        return math.fsum(self.graph.length_of(h) for h in path)

    # -- action of automorphisms -----------------------------------------

    def act(self, phi: Automorphism) -> "MarkedMetricGraph":
        """Right action: same metric graph, marking precomposed with phi."""
        if phi.rank != self.rank:
            raise ValueError("rank mismatch in act")
        if not phi.verified:
            raise ValueError("act requires a verified (certified bijective) automorphism")
        inv = phi.inverse()
        new_loops = [self.realize_based(phi.images[i].letters) for i in range(self.rank)]
        caches = {"tree_parent": self._tree_parent, "geo_letter": self._geo_letter}
        new = MarkedMetricGraph(self.graph, self.basepoint, new_loops, _caches=caches)
        if self._basis_to_edges is not None:
            new._basis_to_edges = self._basis_to_edges.compose(phi)
        if self._edges_to_basis is not None:
            old = self._edges_to_basis
            new._edges_to_basis = Automorphism(
                self.rank,
                [inv.apply(w) for w in old.images],
                verified=old.verified and inv.verified,
            )
        return new

    def with_lengths(self, lengths) -> "MarkedMetricGraph":
        caches = {
            "tree_parent": self._tree_parent,
            "geo_letter": self._geo_letter,
            "basis_to_edges": self._basis_to_edges,
            "edges_to_basis": self._edges_to_basis,
        }
        return MarkedMetricGraph(
            self.graph.with_lengths(lengths), self.basepoint, self.gen_loops, caches
        )

    # -- candidates --------------------------------------------------------

    def candidates(self):
        if self._candidates is None:
            self._candidates = enumerate_candidates(self)
        return self._candidates


def _rotate_cycle_to(path, vertex, graph):
    for k, h in enumerate(path):
        if graph.init_of(h) == vertex:
            return path[k:] + path[:k]
    raise ValueError("vertex not on cycle")


def _embedded_circles(graph: MetricGraph):
    """All embedded circles as (edge set, vertex set, halfedge cycle)."""
    circles = []
    m = graph.n_edges
    for s in range(m):
        h0 = s + 1
        a = graph.init_of(h0)
        b = graph.term_of(h0)
        if a == b:
            circles.append((frozenset([s]), frozenset([a]), (h0,)))
            continue
        # vertex-simple paths from b back to a using edges with index > s
        stack = [(b, (h0,), frozenset([a, b]))]
        while stack:
            v, path, visited = stack.pop()
            for h in graph.out_halfedges(v):
                i = abs(h) - 1
                if i <= s:
                    continue
                w = graph.term_of(h)
                if w == a:
                    circles.append(
                        (frozenset(abs(x) - 1 for x in path + (h,)), visited, path + (h,))
                    )
                elif w not in visited:
                    stack.append((w, path + (h,), visited | {w}))
    return circles


def _arcs_between(graph, verts1, verts2, forbidden_edges):
    """Embedded arcs from verts1 to verts2 with interior off both circles."""
    arcs = []
    blocked = verts1 | verts2
    for u in sorted(verts1):
        stack = [(u, (), frozenset([u]))]
        while stack:
            v, path, visited = stack.pop()
            for h in graph.out_halfedges(v):
                i = abs(h) - 1
                if i in forbidden_edges:
                    continue
                if path and abs(h) == abs(path[-1]):
                    continue
                w = graph.term_of(h)
                if w in verts2:
                    arcs.append(path + (h,))
                elif w not in visited and w not in blocked:
                    stack.append((w, path + (h,), visited | {w}))
    return arcs


def enumerate_candidates(point: MarkedMetricGraph):
    """Candidate loops of a point: embedded circles, figure eights, barbells.

    Complete up to rotation and inversion; each carries its conjugacy class.
    """
    g = point.graph
    circles = _embedded_circles(g)
    raw = []
    for edges, verts, path in circles:
        raw.append(("embedded", path))
    for i in range(len(circles)):
        e1, v1, p1 = circles[i]
        for j in range(i + 1, len(circles)):
            e2, v2, p2 = circles[j]
            if e1 & e2:
                continue
            common = v1 & v2
            if len(common) == 1:
                v = next(iter(common))
                a = _rotate_cycle_to(p1, v, g)
                b = _rotate_cycle_to(p2, v, g)
                raw.append(("figure-eight", a + b))
                raw.append(("figure-eight", a + reverse_path(b)))
            elif not common:
                for arc in _arcs_between(g, v1, v2, e1 | e2):
                    u1 = g.init_of(arc[0])
                    u2 = g.term_of(arc[-1])
                    a = _rotate_cycle_to(p1, u1, g)
                    b = _rotate_cycle_to(p2, u2, g)
                    raw.append(("barbell", a + arc + b + reverse_path(arc)))
                    raw.append(
                        ("barbell", a + arc + reverse_path(b) + reverse_path(arc))
                    )
    kind_order = {"embedded": 0, "figure-eight": 1, "barbell": 2}
    seen = {}
    for kind, path in raw:
        cls = point.path_class(path)
        length = math.fsum(g.length_of(h) for h in path)
        key = cls.letters
        if key not in seen or kind_order[kind] < kind_order[seen[key].kind]:
            seen[key] = CandidateLoop(kind, tuple(path), cls, length)
    return sorted(
        seen.values(), key=lambda c: (kind_order[c.kind], word_key(c.conjugacy_class.letters))
    )


def validate_point(point: MarkedMetricGraph) -> ValidationReport:
    """Check all Outer Space invariants of a marked metric graph."""
    problems = []
    g = point.graph
    for v in range(g.n_vertices):
        if g.valence(v) < 3:
            problems.append(f"vertex {v} has valence {g.valence(v)} < 3")
    vol = g.volume()
    if abs(vol - 1.0) > LENGTH_TOL:
        problems.append(f"volume {vol!r} != 1")
    for i, l in enumerate(g.lengths):
        if l < 0.0 or l > 1.0:
            problems.append(f"edge {g.edge_ids[i]} length {l} outside [0, 1]")
    zero = [i for i, l in enumerate(g.lengths) if l == 0.0]
    if zero and not g.subgraph_is_forest(zero):
        problems.append("zero-length subgraph contains a circle")
    if not g.connected():
        problems.append("graph is not connected")
        return ValidationReport(False, problems)
    if g.betti() != point.rank:
        problems.append(f"first Betti number {g.betti()} != rank {point.rank}")
    if not (0 <= point.basepoint < g.n_vertices):
        problems.append(f"basepoint {point.basepoint} is not a vertex")
        return ValidationReport(False, problems)
    for i, loop in enumerate(point.gen_loops):
        if not loop:
            problems.append(f"marking loop {i + 1} is empty")
            continue
        try:
            tightened = tighten_path(g, loop)
        except ValueError as e:
            problems.append(f"marking loop {i + 1}: {e}")
            continue
        if g.init_of(loop[0]) != point.basepoint or g.term_of(loop[-1]) != point.basepoint:
            problems.append(f"marking loop {i + 1} is not closed at the basepoint")
    if problems:
        return ValidationReport(False, problems)
    try:
        m = point.marking_map()
    except InvalidPointError as e:
        return ValidationReport(False, problems + e.problems)
    if not is_basis(m.images, point.rank):
        problems.append("marking loops do not define a basis of the free group")
    else:
        point.marking_inverse()  # certifies invertibility by composition
        from .whitehead import whitehead_minimize

        label_classes = [
            CyclicWord.make(w.letters) for w in point.marking_inverse().images
        ]
        trace = whitehead_minimize(label_classes, point.rank)
        if trace.terminal_state != "basis-reached":
            problems.append("edge labels fail Whitehead basis minimization")
    return ValidationReport(not problems, problems)


def minimal_model(point: MarkedMetricGraph) -> MarkedMetricGraph:
    """Collapse a maximal forest avoiding the longest edge and renormalize.

    The result is a rose or a two-vertex bar-and-loops graph within
    log(3n-3) of the input point.
    """
    g = point.graph
    longest = max(range(g.n_edges), key=lambda i: (g.lengths[i], -i))
    # spanning structure avoiding `longest` where possible
    parent = {}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for v in range(g.n_vertices):
        parent[v] = v
    forest = []
    order = sorted(range(g.n_edges), key=lambda i: (i == longest, i))
    for i in order:
        u, v = g.ends[i]
        if find(u) != find(v):
            parent[find(u)] = find(v)
            forest.append(i)
    if longest in forest:
        forest.remove(longest)  # separating edge: collapse the rest of the tree
    # rebuild union-find over the collapsed forest only
    parent = {v: v for v in range(g.n_vertices)}
    for i in forest:
        u, v = g.ends[i]
        if find(u) != find(v):
            parent[find(u)] = find(v)
    classes = sorted({find(v) for v in range(g.n_vertices)})
    new_index = {c: k for k, c in enumerate(classes)}
    kept = [i for i in range(g.n_edges) if i not in forest]
    vol = math.fsum(g.lengths[i] for i in kept)
    new_graph = MetricGraph(
        len(classes),
        [g.edge_ids[i] for i in kept],
        [(new_index[find(g.ends[i][0])], new_index[find(g.ends[i][1])]) for i in kept],
        [g.lengths[i] / vol for i in kept],
    )
    old_to_new = {}
    kept_set = set(kept)
    for k, i in enumerate(kept):
        old_to_new[i + 1] = k + 1
        old_to_new[-(i + 1)] = -(k + 1)
    new_loops = []
    for loop in point.gen_loops:
        mapped = [old_to_new[h] for h in loop if abs(h) - 1 in kept_set]
        new_loops.append(tighten_path(new_graph, mapped))
    return MarkedMetricGraph(
        new_graph, new_index[find(point.basepoint)], new_loops
    )


def rose(rank: int, lengths=None) -> MarkedMetricGraph:
    """The standard rose with the identity marking."""
    if lengths is None:
        lengths = [1.0 / rank] * rank
    g = MetricGraph(1, [f"e{i + 1}" for i in range(rank)], [(0, 0)] * rank, lengths)
    point = MarkedMetricGraph(g, 0, [(i + 1,) for i in range(rank)])
    ident = Automorphism.identity(rank)
    point._basis_to_edges = Automorphism(rank, ident.images, verified=True)
    point._edges_to_basis = point._basis_to_edges.inverse()
    return point


def random_point(rank: int, seed: int, n_moves: int = 3, jitter: float = 0.3):
    """Deterministic random point: rose acted by random Whitehead moves with
    multiplicatively jittered, renormalized lengths."""
    if not (0.0 <= jitter < 1.0):
        raise ValueError("jitter must lie in [0, 1) to keep lengths positive")
    rng = random.Random(seed)
    point = rose(rank)
    letters = sorted(signed_letters(rank), key=letter_key)
    for _ in range(n_moves):
        a = rng.choice(letters)
        extra = [x for x in letters if x != a and x != -a and rng.random() < 0.5]
        move = WhiteheadMove(frozenset([a, *extra]), a)
        point = point.act(move.automorphism(rank))
    lengths = [l * (1.0 + jitter * (2.0 * rng.random() - 1.0)) for l in point.graph.lengths]
    vol = math.fsum(lengths)
    point = point.with_lengths([l / vol for l in lengths])
    report = validate_point(point)
    if not report.valid:
        raise AssertionError(f"random_point produced invalid point: {report.problems}")
    return point


# -- file format --------------------------------------------------------


def _parse_length(x):
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


def point_from_dict(data: dict, validate=True) -> MarkedMetricGraph:
    try:
        rank = int(data["rank"])
        vertex_names = list(data["vertices"])
        edges = data["edges"]
        marking = data["marking"]
        basepoint_name = data["basepoint"]
    except KeyError as e:
        raise ValueError(f"graph file missing key {e}")
    vidx = {str(name): i for i, name in enumerate(map(str, vertex_names))}
    edge_ids = []
    ends = []
    lengths = []
    for e in edges:
        edge_ids.append(str(e["id"]))
        ends.append((vidx[str(e["from"])], vidx[str(e["to"])]))
        lengths.append(_parse_length(e["length"]))
    eidx = {eid: i for i, eid in enumerate(edge_ids)}
    if len(eidx) != len(edge_ids):
        raise ValueError("duplicate edge ids")
    graph = MetricGraph(len(vertex_names), edge_ids, ends, lengths)

    def halfedge(ref: str):
        rev = ref.startswith("~")
        name = ref[1:] if rev else ref
        if name not in eidx:
            raise ValueError(f"unknown edge id {name!r} in marking")
        h = eidx[name] + 1
        return -h if rev else h

    keys = sorted(marking)
    if len(keys) != rank:
        raise ValueError(f"marking has {len(keys)} generators, rank is {rank}")
    loops = [tuple(halfedge(r) for r in marking[k]) for k in keys]
    point = MarkedMetricGraph(graph, vidx[str(basepoint_name)], loops)
    if validate:
        report = validate_point(point)
        if not report.valid:
            raise InvalidPointError(report.problems)
    return point


def load_point(path, validate=True) -> MarkedMetricGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return point_from_dict(json.load(fh), validate=validate)


def point_to_dict(point: MarkedMetricGraph) -> dict:
    g = point.graph
    from .words import ALPHABET

    def ref(h):
        return ("~" if h < 0 else "") + g.edge_ids[abs(h) - 1]

    return {
        "rank": point.rank,
        "vertices": [f"v{i}" for i in range(g.n_vertices)],
        "edges": [
            {"id": g.edge_ids[i], "from": f"v{g.ends[i][0]}", "to": f"v{g.ends[i][1]}",
             "length": g.lengths[i]}
            for i in range(g.n_edges)
        ],
        "marking": {
            ALPHABET[i]: [ref(h) for h in loop] for i, loop in enumerate(point.gen_loops)
        },
        "basepoint": f"v{point.basepoint}",
    }
