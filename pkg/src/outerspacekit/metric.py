"""The asymmetric Lipschitz distance on Outer Space.

The distance from x to y is the log of the maximal stretch over the
candidate loops of x (embedded circles, figure eights, barbells); a
brute-force oracle maximizes over all conjugacy classes up to a length
bound instead. Explicit linear maps get their Lipschitz constant and green
subgraph computed edge by edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graphs import MarkedMetricGraph, tighten_path
from .words import (
    CyclicWord,
    Word,
    enumerate_cyclic_words,
    reduce_letters,
    word_key,
)

TIE_TOL = 1e-12


@dataclass
class DistanceResult:
    value: float
    witness: object  # CandidateLoop achieving the max
    table: list  # (conjugacy class, length at x, length at y, ratio)


def stretch_factor(alpha, x: MarkedMetricGraph, y: MarkedMetricGraph) -> float:
    """loop_length(alpha, y) / loop_length(alpha, x)."""
    return y.loop_length(alpha) / x.loop_length(alpha)


def distance(x: MarkedMetricGraph, y: MarkedMetricGraph) -> DistanceResult:
    """Lipschitz distance d(x, y) maximized over the candidates of x."""
    if x.rank != y.rank:
        raise ValueError(f"rank mismatch: {x.rank} vs {y.rank}")
    table = []
    for cand in x.candidates():
        lx = cand.length
        ly = y.loop_length(cand.conjugacy_class)
        table.append((cand, lx, ly, ly / lx))
    best = max(r for (_, _, _, r) in table)
    winners = [
        c for (c, _, _, r) in table if r >= best * (1.0 - TIE_TOL)
    ]
    witness = min(winners, key=lambda c: word_key(c.conjugacy_class.letters))
    return DistanceResult(
        value=math.log(best),
        witness=witness,
        table=[(c.conjugacy_class, lx, ly, r) for (c, lx, ly, r) in table],
    )


def distance_value(x, y) -> float:
    return distance(x, y).value


def distance_oracle(x: MarkedMetricGraph, y: MarkedMetricGraph, max_len: int) -> float:
    """Log max stretch over all conjugacy classes of word length <= max_len."""
    if max_len < 1:
        raise ValueError("oracle length bound must be >= 1")
    best = 0.0
    first = True
    for w in enumerate_cyclic_words(x.rank, max_len):
        r = y.loop_length(w) / x.loop_length(w)
        if first or r > best:
            best = r
            first = False
    return math.log(best)


@dataclass
class LinearMapSpec:
    """A candidate difference of markings given combinatorially.

    vertex_images maps x-vertices to y-vertices; edge_images maps each
    forward half-edge index (1-based) of x to a half-edge path in y.
    """

    vertex_images: dict
    edge_images: dict


@dataclass
class LipschitzReport:
    slopes: dict  # edge id -> slope
    lip: float
    green: list  # edge ids attaining the max slope


def _image_path(spec: LinearMapSpec, h: int):
    path = spec.edge_images[abs(h)]
    if h > 0:
        return tuple(path)
    return tuple(-e for e in reversed(path))


def _common_conjugator_is_inner(images, rank):
    """True iff x_i -> images[i] is an inner automorphism of F_rank."""
    # cyclically reduce the first image, tracking the conjugator u
    w = list(images[0])
    pre = []
    while len(w) >= 2 and w[0] == -w[-1]:
        pre.append(w[0])
        w = w[1:-1]
    if tuple(w) != (1,):
        return False
    u = tuple(pre)  # images[0] = u x_1 u^-1
    inv_u = tuple(-l for l in reversed(u))
    stripped = [reduce_letters(inv_u + tuple(im) + u) for im in images]
    if rank == 1:
        return stripped[0] == (1,)
    # the residual conjugator is a power x_1^k; read k off the second image
    second = stripped[1]
    k = 0
    i = 0
    while i < len(second) and second[i] == second[0] and abs(second[i]) == 1:
        k += 1 if second[i] > 0 else -1
        i += 1
    conj = tuple([1] * k) if k >= 0 else tuple([-1] * (-k))
    inv_conj = tuple(-l for l in reversed(conj))
    for idx, im in enumerate(stripped):
        if im != reduce_letters(conj + (idx + 1,) + inv_conj):
            return False
    return True


def linear_map_lipschitz(
    spec: LinearMapSpec, x: MarkedMetricGraph, y: MarkedMetricGraph
) -> LipschitzReport:
    """Per-edge slopes, Lipschitz constant and green subgraph of a linear map.

    The map must be a difference of markings: its images of the generator
    loops of x must agree with the marking of y up to a single common
    conjugation (checked exactly on the fundamental group).
    """
    gx, gy = x.graph, y.graph
    for e in range(1, gx.n_edges + 1):
        if e not in spec.edge_images:
            raise ValueError(f"edge image missing for edge index {e}")
        path = spec.edge_images[e]
        if not path:
            raise ValueError(f"edge {e} mapped to a constant; not a linear map spec")
        u, v = gx.ends[e - 1]
        if gy.init_of(path[0]) != spec.vertex_images[u]:
            raise ValueError(f"image of edge {e} does not start at the vertex image")
        if gy.term_of(path[-1]) != spec.vertex_images[v]:
            raise ValueError(f"image of edge {e} does not end at the vertex image")
        tighten_path(gy, path)  # raises on broken incidence
    # consistency with the markings, checked on generator loops
    base_img = spec.vertex_images[x.basepoint]
    rho = y.tree_path_from_base(base_img)
    images = []
    for loop in x.gen_loops:
        mapped = []
        for h in loop:
            mapped.extend(_image_path(spec, h))
        based = tuple(rho) + tuple(mapped) + tuple(-h for h in reversed(rho))
        images.append(y.path_word(tighten_path(gy, based, check_incidence=False)).letters)
    if not _common_conjugator_is_inner(images, x.rank):
        raise ValueError("edge images are inconsistent with the markings")
    slopes = {}
    for e in range(1, gx.n_edges + 1):
        img = tighten_path(gy, spec.edge_images[e], check_incidence=False)
        l_img = math.fsum(gy.length_of(h) for h in img)
        slopes[gx.edge_ids[e - 1]] = l_img / gx.lengths[e - 1]
    lip = max(slopes.values())
    green = [eid for eid, s in sorted(slopes.items()) if s >= lip * (1.0 - 1e-9)]
    return LipschitzReport(slopes=slopes, lip=lip, green=green)


def points_equal(p: MarkedMetricGraph, q: MarkedMetricGraph, tol: float = 1e-9) -> bool:
    """Point equality via the metric characterization: d = 0 both ways."""
    return distance(p, q).value <= tol and distance(q, p).value <= tol
