"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's high-level algorithms: the
primitivity oracle does a breadth-first search over Whitehead moves with
the intermediate length bounded by the start length (peak reduction makes
this complete for the minimal length question).
"""

from collections import deque

from outerspacekit.words import CyclicWord, all_whitehead_moves

_memo = {}


def bfs_primitive(word: CyclicWord, rank: int) -> bool:
    start = word.letters
    if not start:
        raise ValueError("empty word")
    key = (rank, start)
    if key in _memo:
        return _memo[key]
    bound = len(start)
    moves = [m.automorphism(rank) for m in all_whitehead_moves(rank)]
    seen = {start}
    queue = deque([start])
    best = len(start)
    while queue:
        current = queue.popleft()
        best = min(best, len(current))
        if best == 1:
            break
        for phi in moves:
            nxt = phi.apply_cyclic(CyclicWord(current)).letters
            if len(nxt) <= bound and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    answer = best == 1
    # every visited word lies in the same Aut-orbit, so shares the answer
    for w in seen:
        _memo[(rank, w)] = answer
    return answer
