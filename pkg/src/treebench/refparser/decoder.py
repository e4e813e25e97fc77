"""Maximum spanning arborescence decoding (Chu-Liu/Edmonds).

Scores live in an EdgeScoreTable over (head, dependent, label) triples. The
decoder first resolves the best label per candidate arc, then finds the
arborescence rooted at node 0 that maximizes the summed arc scores. A
single-root constraint (exactly one child of node 0) is the default, since
that is what makes the output a valid UD tree.
"""

from __future__ import annotations

from dataclasses import dataclass


class DecodeError(Exception):
    pass


@dataclass
class EdgeScoreTable:
    """scores[h][d][li] for h in 0..n, d in 1..n, h != d; None where undefined."""

    n: int
    labels: tuple[str, ...]
    scores: list[list[list[float] | None]]

    @classmethod
    def filled(cls, n: int, labels: tuple[str, ...], value: float = 0.0) -> "EdgeScoreTable":
        scores: list[list[list[float] | None]] = [
            [None if (d == 0 or d == h) else [value] * len(labels) for d in range(n + 1)]
            for h in range(n + 1)
        ]
        return cls(n, labels, scores)

    def set(self, head: int, dep: int, label: str, value: float) -> None:
        cell = self.scores[head][dep]
        assert cell is not None
        cell[self.labels.index(label)] = value

    def get(self, head: int, dep: int, label: str) -> float:
        cell = self.scores[head][dep]
        assert cell is not None
        return cell[self.labels.index(label)]


def _find_cycle(best_head: dict[int, int], nodes: list[int], root: int) -> list[int] | None:
    color: dict[int, int] = {root: 2}
    for start in nodes:
        if color.get(start, 0) != 0:
            continue
        path: list[int] = []
        x = start
        while color.get(x, 0) == 0:
            color[x] = 1
            path.append(x)
            x = best_head[x]
        if color[x] == 1:
            cycle = path[path.index(x):]
            return cycle
        for v in path:
            color[v] = 2
    return None


def _solve(nodes: list[int], edges: dict[tuple[int, int], float], root: int, next_id: int) -> dict[int, int]:
    """Choose one incoming edge per non-root node; returns dep -> head.

    Ties go to the head scanned first (ascending node id).
    """
    best_head: dict[int, int] = {}
    best_w: dict[int, float] = {}
    for v in nodes:
        if v == root:
            continue
        bh, bw = None, None
        for u in nodes:
            if u == v:
                continue
            w = edges.get((u, v))
            if w is None:
                continue
            if bw is None or w > bw:
                bh, bw = u, w
        if bh is None:
            raise DecodeError(f"node {v} has no incoming edges")
        best_head[v] = bh
        best_w[v] = bw

    cycle = _find_cycle(best_head, nodes, root)
    if cycle is None:
        return dict(best_head)

    c = next_id
    cyc = set(cycle)
    new_nodes = [v for v in nodes if v not in cyc] + [c]
    new_edges: dict[tuple[int, int], float] = {}
    enter_via: dict[int, int] = {}          # outside head u -> cycle node its edge enters
    leave_via: dict[int, int] = {}          # outside dep v -> cycle node its edge leaves

    for (u, v), w in edges.items():
        u_in, v_in = u in cyc, v in cyc
        if u_in and v_in:
            continue
        if v_in:
            adj = w - best_w[v]
            cur = new_edges.get((u, c))
            if cur is None or adj > cur:
                new_edges[(u, c)] = adj
                enter_via[u] = v
        elif u_in:
            cur = new_edges.get((c, v))
            if cur is None or w > cur:
                new_edges[(c, v)] = w
                leave_via[v] = u
        else:
            new_edges[(u, v)] = w

    sub = _solve(new_nodes, new_edges, root, next_id + 1)

    result: dict[int, int] = {}
    entered: int | None = None
    for v, u in sub.items():
        if v == c:
            entered = enter_via[u]
            result[entered] = u
        elif u == c:
            result[v] = leave_via[v]
        else:
            result[v] = u
    assert entered is not None
    for x in cycle:
        if x != entered:
            result[x] = best_head[x]
    return result


def max_arborescence(weights: list[list[float | None]], single_root: bool = True) -> list[int]:
    """weights[h][d] (None where h==d or d==0); returns head of token d at index d-1."""
    n = len(weights) - 1
    if n == 0:
        return []
    if n == 1:
        return [0]

    finite = [w for row in weights for w in row if w is not None]
    edges = {
        (h, d): weights[h][d]
        for h in range(n + 1)
        for d in range(1, n + 1)
        if h != d and weights[h][d] is not None
    }

    if single_root:
        # Charging every root edge a constant larger than the score range makes
        # the optimum use as few of them as possible, i.e. exactly one.
        penalty = (max(finite) - min(finite) + 1.0) * (n + 1)
        shifted = dict(edges)
        for d in range(1, n + 1):
            if (0, d) in shifted:
                shifted[(0, d)] -= penalty
        heads_map = _solve(list(range(n + 1)), shifted, 0, n + 1)
        heads = [heads_map[d] for d in range(1, n + 1)]
        if heads.count(0) != 1:
            heads = _best_single_root(edges, n)
        return heads

    heads_map = _solve(list(range(n + 1)), edges, 0, n + 1)
    return [heads_map[d] for d in range(1, n + 1)]


def _best_single_root(edges: dict[tuple[int, int], float], n: int) -> list[int]:
    """Exact fallback: re-decode once per candidate root child, keep the best."""
    best_heads: list[int] | None = None
    best_score = None
    floor = min(edges.values()) - 1.0
    for r in range(1, n + 1):
        trial = dict(edges)
        for d in range(1, n + 1):
            if d != r and (0, d) in trial:
                trial[(0, d)] = floor - (max(edges.values()) - floor + 1.0) * (n + 1)
        try:
            heads_map = _solve(list(range(n + 1)), trial, 0, n + 1)
        except DecodeError:
            continue
        heads = [heads_map[d] for d in range(1, n + 1)]
        if heads.count(0) != 1 or heads[r - 1] != 0:
            continue
        score = sum(edges[(h, d)] for d, h in enumerate(heads, start=1))
        if best_score is None or score > best_score:
            best_heads, best_score = heads, score
    if best_heads is None:
        raise DecodeError("no single-root arborescence exists")
    return best_heads


def decode(table: EdgeScoreTable, single_root: bool = True,
           root_label: str | None = None) -> tuple[list[int], list[str]]:
    """Return (heads, deprels) of the maximum-score arborescence.

    Per arc the label is the argmax over the label set, ties resolved toward
    the lexicographically smaller label; arc ties resolve toward the lower
    head id. With ``root_label`` set, arcs from node 0 are pinned to that
    label and other arcs never receive it (UD validity).
    """
    n, labels = table.n, table.labels
    if n == 0:
        return [], []
    if not labels:
        raise DecodeError("empty label set")

    lex = sorted(range(len(labels)), key=lambda i: labels[i])
    constrain = root_label is not None and root_label in labels
    root_li = labels.index(root_label) if constrain else -1
    nonroot_lex = [i for i in lex if i != root_li] or lex

    best_label: list[list[int]] = [[-1] * (n + 1) for _ in range(n + 1)]
    weights: list[list[float | None]] = [[None] * (n + 1) for _ in range(n + 1)]
    for h in range(n + 1):
        for d in range(1, n + 1):
            cell = table.scores[h][d]
            if cell is None:
                continue
            if constrain and h == 0:
                li = root_li
            else:
                candidates = nonroot_lex if constrain else lex
                li = candidates[0]
                w = cell[li]
                for i in candidates[1:]:
                    if cell[i] > w:
                        li, w = i, cell[i]
            best_label[h][d] = li
            weights[h][d] = cell[li]

    heads = max_arborescence(weights, single_root=single_root)
    deprels = [labels[best_label[h][d]] for d, h in enumerate(heads, start=1)]
    return heads, deprels


def tree_score(table: EdgeScoreTable, heads: list[int]) -> float:
    """Score of a head assignment with per-arc argmax labels."""
    total = 0.0
    for d, h in enumerate(heads, start=1):
        cell = table.scores[h][d]
        assert cell is not None
        total += max(cell)
    return total
