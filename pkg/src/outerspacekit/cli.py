"""Command line front end.

Exit codes: 0 success, 1 domain errors (invalid graph, non-train-track
map), 2 usage and I/O errors. Floats print with 9 significant digits;
structured output goes to --out as CSV.
"""

from __future__ import annotations

import argparse
import sys

from . import axes as ax_mod
from .axes import (
    Axis,
    BALL_HEADER,
    MORSE_HEADER,
    PAIR_HEADER,
    PROBE_HEADER,
    contraction_experiment,
    detour_path,
    divergence_check,
    length_profile,
    max_projection_diameter,
    project,
    tree_inequality_probe,
    two_axis_report,
    write_csv,
)
from .graphs import InvalidPointError, load_point, random_point, validate_point
from .metric import distance, distance_oracle
from .traintrack import (
    NotTrainTrackError,
    lamination_length_ratio,
    leaf_segment,
    legality_report,
    load_selfmap,
    no_cut_vertex_search,
    pf_metric,
    verify_train_track,
)
from .whitehead import is_primitive, whitehead_minimize
from .words import ALPHABET, CyclicWord, format_letters


def _f(x: float) -> str:
    return f"{x:.9g}"


class DomainError(Exception):
    pass


def _parse_words(texts, rank=None):
    """Map the sorted distinct generator letters of the inputs onto 1..k,
    unless they already are a prefix of a..z."""
    letters = sorted({ch.lower() for t in texts for ch in t})
    for ch in letters:
        if not ch.isalpha():
            raise ValueError(f"invalid character {ch!r} in word")
    k = len(letters)
    if letters == list(ALPHABET[:k]):
        names = ALPHABET
    else:
        names = "".join(letters)
    words = []
    for t in texts:
        ls = []
        for ch in t:
            idx = names.index(ch.lower()) + 1
            ls.append(idx if ch.islower() else -idx)
        words.append(tuple(ls))
    inferred = max((abs(l) for w in words for l in w), default=1)
    if rank is not None and rank < inferred:
        raise ValueError(f"--rank {rank} smaller than the {inferred} generators used")
    return words, (rank or inferred), names


def _load_point(path):
    try:
        return load_point(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}")
    except InvalidPointError:
        raise
    except (KeyError, ValueError) as e:
        raise DomainError(f"invalid graph file {path}: {e}")


def _load_axis(fwd_path, bwd_path):
    fwd = pf_metric(_load_selfmap(fwd_path))
    bwd = pf_metric(_load_selfmap(bwd_path))
    return Axis(fwd, bwd)


def _load_selfmap(path):
    try:
        return load_selfmap(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}")
    except (KeyError, ValueError) as e:
        if isinstance(e, InvalidPointError):
            raise
        raise DomainError(f"invalid self-map file {path}: {e}")


class UsageError(Exception):
    pass


def cmd_validate(args):
    import json

    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"cannot parse {args.file}: {e}")
    if "edge_images" in data:
        sm = _load_selfmap(args.file)
        report = verify_train_track(sm)
        print(f"self-map: train-track={report.is_tt} irreducible={report.irreducible}")
        if not report.is_tt:
            raise DomainError(f"illegal turn {report.illegal_turn}")
        return
    from .graphs import point_from_dict

    point = point_from_dict(data, validate=False)
    report = validate_point(point)
    if report.valid:
        print("valid")
    else:
        for p in report.problems:
            print(f"invalid: {p}")
        raise DomainError("point fails validation")


def cmd_dist(args):
    x = _load_point(args.x)
    y = _load_point(args.y)
    res = distance(x, y)
    print(f"value {_f(res.value)}")
    print(f"witness {res.witness.conjugacy_class} ({res.witness.kind})")
    rows = [(str(c), _f(lx), _f(ly), _f(r)) for (c, lx, ly, r) in res.table]
    table = write_csv(["class", "len_x", "len_y", "stretch"], rows, args.out)
    if not args.out:
        sys.stdout.write(table)
    if args.oracle:
        o = distance_oracle(x, y, args.oracle)
        print(f"oracle(L={args.oracle}) {_f(o)}")


def cmd_candidates(args):
    x = _load_point(args.x)
    for c in x.candidates():
        print(f"{c.kind} {c.conjugacy_class} length {_f(c.length)}")


def cmd_whitehead(args):
    words, rank, names = _parse_words(args.words, args.rank)
    cyc = [CyclicWord.make(w, rank) for w in words]
    if args.action == "primitive":
        if len(cyc) != 1:
            raise UsageError("primitive takes exactly one word")
        print("primitive" if is_primitive(cyc[0], rank) else "not primitive")
        return
    trace = whitehead_minimize(cyc, rank)
    for k, (move, before, after) in enumerate(trace.steps, 1):
        body = "".join(sorted(format_letters((x,), names) for x in move.A))
        print(f"step {k}: move ({{{body}}}, {format_letters((move.a,), names)}), "
              f"length {before}->{after}")
    finals = " ".join(format_letters(w.letters, names) or "1" for w in trace.final_words)
    print(f"final {finals} ({trace.terminal_state})")


def cmd_tt(args):
    sm = _load_selfmap(args.map)
    if args.action == "verify":
        rep = verify_train_track(sm)
        print(f"train-track {rep.is_tt}")
        print(f"irreducible {rep.irreducible}")
        if rep.illegal_turn:
            print(f"illegal-turn {rep.illegal_turn}")
        if not (rep.is_tt and rep.irreducible):
            raise DomainError("not an irreducible train-track map")
        return
    tt = _pf(sm)
    if args.action == "pf":
        print(f"lambda {_f(tt.lam)}")
        for eid, l in zip(tt.graph.edge_ids, tt.graph.lengths):
            print(f"length {eid} {_f(l)}")
    elif args.action == "leaf":
        edge_ids = list(tt.graph.edge_ids)
        if args.edge not in edge_ids:
            raise UsageError(f"unknown edge {args.edge}")
        path, word = leaf_segment(tt, edge_ids.index(args.edge) + 1, args.iters)
        refs = " ".join(("~" if h < 0 else "") + edge_ids[abs(h) - 1] for h in path)
        print(f"path {refs}")
        print(f"word {word}")


def _pf(sm):
    try:
        return pf_metric(sm)
    except NotTrainTrackError as e:
        raise DomainError(str(e))


def cmd_tt_whsearch(args):
    fwd = _pf(_load_selfmap(args.forward))
    bwd = _pf(_load_selfmap(args.backward))
    from .graphs import rose

    start = _load_point(args.start) if args.start else rose(fwd.point.rank)
    try:
        res = no_cut_vertex_search(fwd, bwd, start)
    except NotTrainTrackError as e:
        raise DomainError(str(e))
    print(f"moves {len(res.moves)}")
    for mv in res.moves:
        print(f"move {mv}")
    print(f"stabilized-k {res.stabilization_k}")
    print(f"lamination-plus {' '.join(_f(v) for v in res.plus_trace)}")
    print(f"lamination-minus {' '.join(_f(v) for v in res.minus_trace)}")
    print(f"axis-distance {_f(res.axis_distance)}")


def cmd_axis(args):
    ax = _load_axis(args.forward, args.backward)
    if args.action == "project":
        X = _load_point(args.point)
        pr = project(X, ax)
        print(f"argmin {' '.join(map(str, pr.argmin))}")
        print(f"value {_f(pr.value)}")
        print(f"diam {_f(pr.diam_dist)}")
    elif args.action == "profile":
        words, rank, names = _parse_words([args.word], ax.rank)
        prof = length_profile(CyclicWord.make(words[0], rank), ax,
                              (-args.window, args.window))
        for m, v in prof.values:
            print(f"l({m}) {_f(v)}")
        print(f"min-set {' '.join(map(str, prof.min_set))}")
        print(f"slopes right {_f(prof.right_slope)} left {_f(prof.left_slope)}")
        if prof.min_at_boundary:
            print("warning: minimum at window boundary; widen the window")
    elif args.action == "contract":
        records = contraction_experiment(ax, args.samples, args.seed, args.mode)
        header = BALL_HEADER if args.mode == "balls" else MORSE_HEADER
        text = write_csv(header, [r.row() for r in records], args.out)
        if not args.out:
            sys.stdout.write(text)
        print(f"max-diam {_f(max_projection_diameter(records))}"
              if args.mode == "balls" else f"max-off-axis "
              f"{_f(max(r.max_off_axis for r in records))}")
    elif args.action == "diverge":
        path = detour_path(ax, args.radius, args.seed)
        rep = divergence_check(path, ax, args.radius, args.d_emp, args.c_emp)
        print(f"avoids-ball {rep.avoids_ball}")
        print(f"length {_f(rep.length)}")
        print(f"bound {_f(rep.bound)} (b'={_f(rep.b_prime)})")
        print(f"satisfied {rep.satisfied}{' (vacuous)' if rep.vacuous else ''}")
    elif args.action == "pair":
        import random as _random

        from .axes import _random_composite

        rng = _random.Random(args.seed)
        rows = []
        for i in range(args.pairs):
            psi = _random_composite(ax.rank, rng, 4)
            axB = ax.translate(psi)
            rep = two_axis_report(ax, axB, window=args.window)
            rows.append((args.window, rep.diam, rep.parallel))
        text = write_csv(PAIR_HEADER, rows, args.out)
        if not args.out:
            sys.stdout.write(text)


def build_parser():
    p = argparse.ArgumentParser(
        prog="osk",
        description="Outer Space toolkit: Lipschitz distances, Whitehead "
        "reduction, train tracks, axes and projection experiments.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("validate", help="validate a graph or self-map file")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("dist", help="Lipschitz distance between two points")
    sp.add_argument("x")
    sp.add_argument("y")
    sp.add_argument("--oracle", type=int, metavar="L",
                    help="also brute-force over words of length <= L")
    sp.add_argument("--out", help="write the per-candidate table as CSV")
    sp.set_defaults(func=cmd_dist)

    sp = sub.add_parser("candidates", help="list candidate loops of a point")
    sp.add_argument("x")
    sp.set_defaults(func=cmd_candidates)

    sp = sub.add_parser("whitehead", help="Whitehead minimization / primitivity")
    sp.add_argument("action", choices=["minimize", "primitive"])
    sp.add_argument("words", nargs="+")
    sp.add_argument("--rank", type=int)
    sp.set_defaults(func=cmd_whitehead)

    sp = sub.add_parser("tt", help="train-track operations")
    ttsub = sp.add_subparsers(dest="action", required=True)
    for name in ("verify", "pf"):
        q = ttsub.add_parser(name)
        q.add_argument("map")
        q.set_defaults(func=cmd_tt, action=name)
    q = ttsub.add_parser("leaf")
    q.add_argument("map")
    q.add_argument("--edge", required=True)
    q.add_argument("--iters", type=int, required=True)
    q.set_defaults(func=cmd_tt, action="leaf")
    q = ttsub.add_parser("whsearch")
    q.add_argument("forward")
    q.add_argument("backward")
    q.add_argument("--start", help="start rose point (default: standard rose)")
    q.set_defaults(func=cmd_tt_whsearch)

    sp = sub.add_parser("axis", help="axis projections and experiments")
    axsub = sp.add_subparsers(dest="action", required=True)

    def common(q):
        q.add_argument("forward", help="train-track self-map file for phi")
        q.add_argument("backward", help="train-track self-map file for phi^-1")

    q = axsub.add_parser("project")
    common(q)
    q.add_argument("point")
    q.set_defaults(func=cmd_axis, action="project")
    q = axsub.add_parser("profile")
    common(q)
    q.add_argument("--word", required=True)
    q.add_argument("--window", type=int, default=6)
    q.set_defaults(func=cmd_axis, action="profile")
    q = axsub.add_parser("contract")
    common(q)
    q.add_argument("--samples", type=int, default=20)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--mode", choices=["balls", "morse"], default="balls")
    q.add_argument("--out")
    q.set_defaults(func=cmd_axis, action="contract")
    q = axsub.add_parser("diverge")
    common(q)
    q.add_argument("--radius", type=float, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--d-emp", type=float, default=0.5)
    q.add_argument("--c-emp", type=float, default=0.1)
    q.set_defaults(func=cmd_axis, action="diverge")
    q = axsub.add_parser("pair")
    common(q)
    q.add_argument("--pairs", type=int, default=3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--window", type=int, default=6)
    q.add_argument("--out")
    q.set_defaults(func=cmd_axis, action="pair")

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    for name in ("seed", "samples", "window", "iters", "oracle", "radius", "pairs"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            print(f"error: --{name} must be positive", file=sys.stderr)
            return 2
    try:
        args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DomainError, InvalidPointError, NotTrainTrackError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
