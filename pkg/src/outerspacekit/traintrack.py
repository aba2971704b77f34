"""Train-track self-maps: gates, Perron-Frobenius metrics, legality,
lamination leaf segments and the cut-vertex-free point search.

A graph self-map carries edge-image paths over a marked graph. When every
edge image is legal for the induced gate structure and the transition
matrix is irreducible, the Perron-Frobenius eigenvector yields the metric
in which the map stretches every edge by the eigenvalue.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    MarkedMetricGraph,
    MetricGraph,
    cyclic_tighten,
    point_from_dict,
    reverse_path,
    tighten_path,
)
from .whitehead import (
    CutReport,
    WhiteheadGraph,
    cut_analysis,
    moves_from_cut_vertex,
    whitehead_graph,
)
from .words import (
    Automorphism,
    CyclicWord,
    Word,
    WhiteheadMove,
    reduce_letters,
    verify_inverse,
    word_key,
)

log = logging.getLogger(__name__)

PF_RESIDUAL = 1e-12
PF_MAX_ITER = 100_000


class NotTrainTrackError(ValueError):
    """The self-map is not a usable (irreducible) train-track map."""


class GraphSelfMap:
    """A self-map of a marked graph: vertex images and tight edge images."""

    def __init__(self, point: MarkedMetricGraph, vertex_images, edge_images):
        self.point = point
        g = point.graph
        self.vertex_images = {int(v): int(w) for v, w in vertex_images.items()}
        self.edge_images = {int(e): tuple(p) for e, p in edge_images.items()}
        for v in range(g.n_vertices):
            if v not in self.vertex_images:
                raise ValueError(f"missing vertex image for vertex {v}")
        for e in range(1, g.n_edges + 1):
            path = self.edge_images.get(e)
            if not path:
                raise ValueError(f"edge {g.edge_ids[e - 1]} has empty or missing image")
            if tighten_path(g, path) != path:
                raise ValueError(f"image of edge {g.edge_ids[e - 1]} is not tight")
            u, v = g.ends[e - 1]
            if g.init_of(path[0]) != self.vertex_images[u]:
                raise ValueError(f"image of edge {g.edge_ids[e - 1]} starts at wrong vertex")
            if g.term_of(path[-1]) != self.vertex_images[v]:
                raise ValueError(f"image of edge {g.edge_ids[e - 1]} ends at wrong vertex")

    @property
    def graph(self) -> MetricGraph:
        return self.point.graph

    def image_of(self, h: int):
        path = self.edge_images[abs(h)]
        return path if h > 0 else reverse_path(path)

    def image_of_path(self, path):
        out = []
        for h in path:
            out.extend(self.image_of(h))
        return tighten_path(self.graph, out, check_incidence=False)

    def direction_map(self):
        """First half-edge of each half-edge image."""
        dmap = {}
        for e in range(1, self.graph.n_edges + 1):
            dmap[e] = self.image_of(e)[0]
            dmap[-e] = self.image_of(-e)[0]
        return dmap

    def transition_matrix(self) -> np.ndarray:
        """A[j][i] counts crossings of edge i (either way) by the image of edge j."""
        m = self.graph.n_edges
        A = np.zeros((m, m), dtype=np.int64)
        for e in range(1, m + 1):
            for h in self.edge_images[e]:
                A[e - 1][abs(h) - 1] += 1
        return A

    def associated_automorphism(self) -> Automorphism:
        """Outer class of the induced map on the fundamental group."""
        p = self.point
        rho = p.tree_path_from_base(self.vertex_images[p.basepoint])
        images = []
        for loop in p.gen_loops:
            mapped = tuple(rho) + self.image_of_path(loop) + reverse_path(rho)
            images.append(p.path_word(tighten_path(self.graph, mapped, check_incidence=False)))
        return Automorphism(p.rank, images)


@dataclass(frozen=True)
class TrainTrackStructure:
    gates: tuple  # frozensets of half-edges, partitioned by initial vertex

    def gate_of(self, h: int):
        for gate in self.gates:
            if h in gate:
                return gate
        raise KeyError(h)

    def is_legal_turn(self, h1: int, h2: int) -> bool:
        return self.gate_of(h1) is not self.gate_of(h2)

    def gates_at(self, graph, v):
        return [g for g in self.gates if graph.init_of(next(iter(g))) == v]


def gates(f: GraphSelfMap) -> TrainTrackStructure:
    """Gate partition induced by f: directions merge when some iterate of the
    direction map sends them to the same direction."""
    g = f.graph
    dmap = f.direction_map()
    dirs = sorted(dmap, key=lambda h: (abs(h), h < 0))
    n = len(dirs)
    parent = {h: h for h in dirs}

    def find(h):
        while parent[h] != h:
            parent[h] = parent[parent[h]]
            h = parent[h]
        return h

    iterate = {h: h for h in dirs}
    for _ in range(2 * n):
        iterate = {h: dmap[iterate[h]] for h in dirs}
        for i, h1 in enumerate(dirs):
            for h2 in dirs[i + 1 :]:
                if g.init_of(h1) == g.init_of(h2) and iterate[h1] == iterate[h2]:
                    parent[find(h1)] = find(h2)
    groups = {}
    for h in dirs:
        groups.setdefault(find(h), []).append(h)
    return TrainTrackStructure(
        tuple(sorted((frozenset(v) for v in groups.values()), key=lambda s: min(abs(h) for h in s)))
    )


@dataclass
class TrainTrackReport:
    is_tt: bool
    irreducible: bool
    illegal_turn: object  # (h1, h2) crossed by some edge image, or None


def _path_turns(path, cyclic=False):
    turns = []
    for i in range(len(path) - 1):
        turns.append((-path[i], path[i + 1]))
    if cyclic and len(path) >= 1:
        turns.append((-path[-1], path[0]))
    return turns


def is_irreducible_matrix(A: np.ndarray) -> bool:
    m = A.shape[0]
    B = np.linalg.matrix_power(np.eye(m) + A.astype(float), m)
    return bool((B > 0).all())


def verify_train_track(f: GraphSelfMap) -> TrainTrackReport:
    """Check edge-image legality for the induced gates, and irreducibility."""
    structure = gates(f)
    illegal = None
    for e in range(1, f.graph.n_edges + 1):
        for (h1, h2) in _path_turns(f.edge_images[e]):
            if not structure.is_legal_turn(h1, h2):
                illegal = (h1, h2)
                break
        if illegal:
            break
    irreducible = is_irreducible_matrix(f.transition_matrix())
    return TrainTrackReport(is_tt=illegal is None, irreducible=irreducible, illegal_turn=illegal)


class TrainTrackMap:
    """A verified train-track map with its PF eigenvalue and metric."""

    def __init__(self, selfmap: GraphSelfMap, structure, matrix, lam, pf_point):
        self.selfmap = selfmap
        self.structure = structure
        self.matrix = matrix
        self.lam = lam
        self.point = pf_point  # marked graph with the PF metric, volume 1
        self._automorphism = None
        self._leaf_cache = {}

    @property
    def graph(self):
        return self.point.graph

    def automorphism(self) -> Automorphism:
        if self._automorphism is None:
            self._automorphism = self.selfmap.associated_automorphism()
        return self._automorphism

    def bcc_bound(self) -> float:
        # BCC(f) <= Lip(f) * vol = lam on the volume-1 PF metric
        return self.lam

    def legality_threshold(self) -> float:
        return 4.0 * self.bcc_bound() / (self.lam - 1.0)

    def leaf_path(self, edge_index: int, k: int):
        """f^k(e) as a tight half-edge path (legal, so no cancellation)."""
        if k < 0:
            raise ValueError("k must be >= 0")
        key = (edge_index, k)
        if key not in self._leaf_cache:
            if k == 0:
                self._leaf_cache[key] = (edge_index,)
            else:
                prev = self.leaf_path(edge_index, k - 1)
                out = []
                for h in prev:
                    out.extend(self.selfmap.image_of(h))
                self._leaf_cache[key] = tuple(out)
        return self._leaf_cache[key]

    def leaf_word(self, edge_index: int, k: int) -> Word:
        """Word traced in the fundamental group by the tile f^k(e)."""
        return Word(
            self.point.marking_inverse().apply_letters(
                self.point.geo_word_of_path(self.leaf_path(edge_index, k))
            )
        )


def pf_metric(f: GraphSelfMap) -> TrainTrackMap:
    """PF eigenvalue and metric of an irreducible train-track self-map.

    Power iteration on M + I (all-ones start, 1e-12 residual); rejects
    reducible matrices and eigenvalues within 1e-9 of 1.
    """
    report = verify_train_track(f)
    if not report.is_tt:
        raise NotTrainTrackError(
            f"not a train-track map: edge image crosses illegal turn {report.illegal_turn}"
        )
    if not report.irreducible:
        raise NotTrainTrackError("transition matrix is reducible")
    A = f.transition_matrix().astype(float)
    m = A.shape[0]
    v = np.ones(m)
    shifted = A + np.eye(m)
    lam = 0.0
    for _ in range(PF_MAX_ITER):
        w = shifted @ v
        v = w / w.sum()
        lam = float(v @ (A @ v) / (v @ v))
        if np.max(np.abs(A @ v - lam * v)) < PF_RESIDUAL:
            break
    else:
        raise NotTrainTrackError("power iteration did not converge")
    if lam <= 1.0 + 1e-9:
        raise NotTrainTrackError(f"expansion factor {lam} <= 1 (finite order map)")
    lengths = v / v.sum()
    pf_point = f.point.with_lengths(list(lengths))
    structure = gates(f)
    tt = TrainTrackMap(GraphSelfMap(pf_point, f.vertex_images, f.edge_images),
                       structure, f.transition_matrix(), lam, pf_point)
    return tt


@dataclass
class LegalityReport:
    bcc_bound: float
    kappa: float
    legal_pieces: list  # (path, metric length), maximal legal subpaths
    leg: float
    total_length: float


def legality_report(alpha, tt: TrainTrackMap, cyclic=True) -> LegalityReport:
    """Split a loop (or path) at illegal turns; LEG is the fraction of length
    carried by legal pieces longer than the threshold kappa."""
    g = tt.graph
    if hasattr(alpha, "letters"):
        path = cyclic_tighten(tt.point.realize_based(alpha.letters))
    else:
        path = tuple(alpha)
    if not path:
        raise ValueError("empty loop")
    total = math.fsum(g.length_of(h) for h in path)
    n = len(path)
    illegal_after = []  # positions i where the turn (path[i], path[i+1]) is illegal
    limit = n if cyclic else n - 1
    for i in range(limit):
        h1, h2 = path[i], path[(i + 1) % n]
        if not tt.structure.is_legal_turn(-h1, h2):
            illegal_after.append(i)
    pieces = []
    if not illegal_after:
        pieces.append(path)
    elif cyclic:
        k = len(illegal_after)
        for t in range(k):
            start = (illegal_after[t] + 1) % n
            end = illegal_after[(t + 1) % k]
            piece = []
            i = start
            while True:
                piece.append(path[i])
                if i == end:
                    break
                i = (i + 1) % n
            pieces.append(tuple(piece))
    else:
        bounds = [-1] + illegal_after + [n - 1]
        for a, b in zip(bounds[:-1], bounds[1:]):
            if b > a:
                pieces.append(path[a + 1 : b + 1])
    kappa = tt.legality_threshold()
    with_lengths = [(p, math.fsum(g.length_of(h) for h in p)) for p in pieces]
    leg = math.fsum(l for (_, l) in with_lengths if l > kappa) / total
    return LegalityReport(
        bcc_bound=tt.bcc_bound(),
        kappa=kappa,
        legal_pieces=with_lengths,
        leg=leg,
        total_length=total,
    )


def leaf_segment(tt: TrainTrackMap, edge_index: int, k: int):
    """(half-edge path, Word form) of the stable leaf segment f^k(e)."""
    path = tt.leaf_path(edge_index, k)
    return path, tt.leaf_word(edge_index, k)


def _path_tokens(path):
    # injective encoding of half-edges as characters, for substring scans
    return "".join(chr(0x100 + h + 0x800) for h in path)


def longest_leaf_piece(alpha, leaf_path, tt: TrainTrackMap) -> float:
    """Max PF-metric length of a subpath of the loop alpha (either direction,
    doubled cyclically) occurring in the given leaf segment."""
    g = tt.graph
    if hasattr(alpha, "letters"):
        loop = cyclic_tighten(tt.point.realize_based(alpha.letters))
    else:
        loop = tuple(alpha)
    if not loop:
        raise ValueError("empty loop")
    leaf_tok = _path_tokens(leaf_path)
    best = 0.0
    for variant in (loop, reverse_path(loop)):
        doubled = variant + variant
        for start in range(len(variant)):
            length = 0.0
            for end in range(start, min(start + len(variant), len(doubled))):
                seg = doubled[start : end + 1]
                if _path_tokens(seg) not in leaf_tok:
                    break
                length = math.fsum(g.length_of(h) for h in seg)
            best = max(best, length)
    return best


@dataclass
class LaminationLengthEstimate:
    frequencies: np.ndarray
    sequence: list
    value: float
    k_used: int
    converged: bool


def tile_frequencies(tt: TrainTrackMap) -> np.ndarray:
    """PF occurrence frequencies of edges in the leaf, normalized to sum 1."""
    A = tt.matrix.astype(float)
    m = A.shape[0]
    v = np.ones(m)
    shifted = A.T + np.eye(m)
    for _ in range(PF_MAX_ITER):
        w = shifted @ v
        v = w / w.sum()
        if np.max(np.abs(A.T @ v - (v @ (A.T @ v) / (v @ v)) * v)) < PF_RESIDUAL:
            break
    return v / v.sum()


def lamination_length_ratio(
    tt: TrainTrackMap,
    target: MarkedMetricGraph,
    tolerance: float = 1e-6,
    k_cap: int = 25,
    k_min: int = 2,
    consecutive: int = 1,
) -> LaminationLengthEstimate:
    """Length of the attracting lamination in `target`, scaled by the
    train-track base: limit of tile-frequency-weighted length ratios a_k.

    Both sides measure the tile words through the same based-path
    functional, so the estimate is exactly 1 when target is the base point.
    Convergence declares after `consecutive` successive differences below
    tolerance, from depth k_min on (marking junk decays like 1/lambda^k).
    """
    if target.rank != tt.point.rank:
        raise ValueError("rank mismatch")
    r = tile_frequencies(tt)
    m = tt.graph.n_edges
    seq = []
    prev = None
    streak = 0
    for k in range(1, k_cap + 1):
        num = 0.0
        den = 0.0
        for j in range(m):
            w = tt.leaf_word(j + 1, k).letters
            num += r[j] * target.based_length(w)
            den += r[j] * tt.point.based_length(w)
        a_k = num / den
        seq.append(a_k)
        if prev is not None and abs(a_k - prev) < tolerance:
            streak += 1
            if k >= k_min and streak >= consecutive:
                return LaminationLengthEstimate(r, seq, a_k, k, True)
        else:
            streak = 0
        prev = a_k
    log.warning("lamination length ratio did not converge by k=%d", k_cap)
    return LaminationLengthEstimate(r, seq, seq[-1], k_cap, False)


# -- lamination Whitehead graphs and the cut-vertex-free point search ----


def lamination_whitehead_graph(
    tt: TrainTrackMap, point: MarkedMetricGraph, k_start: int = 3, k_cap: int = 20
):
    """Whitehead graph (over the oriented edges of `point`, a rose) of the
    stabilized leaf segments of tt's lamination realized at `point`.

    Turns are read off the realized leaf paths; the wrap-around turn is not
    taken. k is increased until the graph is unchanged for two consecutive
    depths; returns (graph, k_used).
    """
    if point.graph.n_vertices != 1:
        raise ValueError("lamination Whitehead graphs are computed at roses")
    rank = point.rank
    prev = None
    for k in range(k_start, k_cap + 1):
        edges = set()
        for j in range(1, tt.graph.n_edges + 1):
            w = tt.leaf_word(j, k).letters
            path = point.realize_based(w)
            for (u, v) in _path_turns(path):
                edges.add(frozenset((u, v)))
        graph = WhiteheadGraph.from_counter(rank, Counter({e: 1 for e in edges}))
        if prev is not None and graph.same_simple_graph(prev):
            return graph, k
        prev = graph
    log.warning("lamination Whitehead graph did not stabilize by k=%d", k_cap)
    return prev, k_cap


@dataclass
class CutVertexSearchResult:
    point: MarkedMetricGraph
    moves: list  # WhiteheadMove over the rose's edge alphabet
    plus_trace: list  # lamination length estimates per visited point
    minus_trace: list
    combined_graph: WhiteheadGraph
    stabilization_k: int
    axis_distance: float  # min over a small window of d(G_m, F) + d(F, G_m)


def _acted_by_edge_move(X: MarkedMetricGraph, move: WhiteheadMove):
    """Act so that realized edge paths transform by the edge-alphabet move."""
    nu = move.automorphism(X.rank)
    conj = X.marking_inverse().compose(nu).compose(X.marking_map())
    conj.verified = True
    return X.act(conj)


def no_cut_vertex_search(
    ttF: TrainTrackMap,
    ttB: TrainTrackMap,
    start: MarkedMetricGraph,
    tolerance: float = 2e-3,
    max_steps: int = 200,
    max_depth_boost: int = 9,
) -> CutVertexSearchResult:
    """Find a rose point where the combined Whitehead graph of the attracting
    and repelling laminations is connected with no cut vertex.

    While a cut vertex exists, act by a Whitehead move derived from it that
    strictly decreases both lamination length functionals. The leaf graphs
    stabilize empirically; when no cut-vertex move decreases both
    functionals the leaf depth is boosted to expose missing turns.
    """
    phi = ttF.automorphism()
    psi = ttB.automorphism()
    if not verify_inverse(phi, psi):
        raise ValueError("backward map is not inverse to the forward map")
    if start.graph.n_vertices != 1:
        raise ValueError("search starts at a rose point")
    def plateau(tt, point):
        return lamination_length_ratio(
            tt, point, tolerance, k_cap=20, k_min=8, consecutive=2
        ).value

    X = start
    moves = []
    plus_trace = [plateau(ttF, X)]
    minus_trace = [plateau(ttB, X)]
    k_used = 0
    for _ in range(max_steps):
        boost = 0
        decision = None  # ("done", combined) or ("step", move, X2, plus, minus)
        while decision is None:
            gF, kF = lamination_whitehead_graph(ttF, X, k_start=3 + boost)
            gB, kB = lamination_whitehead_graph(ttB, X, k_start=3 + boost)
            combined = gF.union(gB)
            k_used = max(kF, kB)
            report = cut_analysis(combined)
            if report.isolated or not report.connected:
                raise NotTrainTrackError(
                    "combined lamination Whitehead graph is disconnected "
                    "(input not fully irreducible)"
                )
            if not report.cut_vertices:
                decision = ("done", combined)
                break
            viable = []
            for move in moves_from_cut_vertex(combined, report):
                X2 = _acted_by_edge_move(X, move)
                p2 = plateau(ttF, X2)
                m2 = plateau(ttB, X2)
                if p2 < plus_trace[-1] - 1e-9 and m2 < minus_trace[-1] - 1e-9:
                    drop = (plus_trace[-1] - p2) + (minus_trace[-1] - m2)
                    viable.append(((-drop, move.sort_key()), move, X2, p2, m2))
            if viable:
                decision = ("step",) + min(viable)[1:]
            else:
                boost += 3
                if boost > max_depth_boost:
                    raise NotTrainTrackError(
                        "no cut-vertex move decreases both lamination lengths "
                        "(leaf stabilization failed)"
                    )
        if decision[0] == "done":
            from .metric import distance

            prox = min(
                distance(X, start.act(phi.power(m))).value
                + distance(start.act(phi.power(m)), X).value
                for m in range(-3, 4)
            )
            return CutVertexSearchResult(
                X, moves, plus_trace, minus_trace, decision[1], k_used, prox
            )
        _, move, X, plus, minus = decision
        moves.append(move)
        plus_trace.append(plus)
        minus_trace.append(minus)
    raise NotTrainTrackError(f"cut-vertex search did not terminate in {max_steps} steps")


# -- file format ----------------------------------------------------------


def selfmap_from_dict(data: dict, validate=True) -> GraphSelfMap:
    point = point_from_dict(data["graph"], validate=validate)
    g = point.graph
    eidx = {eid: i + 1 for i, eid in enumerate(g.edge_ids)}

    def halfedge(ref: str):
        rev = ref.startswith("~")
        name = ref[1:] if rev else ref
        if name not in eidx:
            raise ValueError(f"unknown edge id {name!r} in edge image")
        return -eidx[name] if rev else eidx[name]

    edge_images = {
        eidx[str(k)]: tuple(halfedge(r) for r in path)
        for k, path in data["edge_images"].items()
    }
    vertices = {str(name): i for i, name in enumerate(map(str, data["graph"]["vertices"]))}
    if "vertex_images" in data:
        vertex_images = {vertices[str(k)]: vertices[str(v)] for k, v in data["vertex_images"].items()}
    else:
        vertex_images = {
            g.init_of(e): g.init_of(edge_images[e][0]) for e in edge_images
        } | {g.term_of(e): g.term_of(edge_images[e][-1]) for e in edge_images}
    return GraphSelfMap(point, vertex_images, edge_images)


def load_selfmap(path, validate=True) -> GraphSelfMap:
    with open(path, "r", encoding="utf-8") as fh:
        return selfmap_from_dict(json.load(fh), validate=validate)
