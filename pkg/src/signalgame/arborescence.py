"""Minimum-weight spanning arborescences on small dense digraphs.

The stochastic potential of a recurrent class is the weight of the cheapest
spanning tree in which every other class has a unique directed path into that
root. Each non-root node therefore carries exactly one outgoing edge; this is
the mirror image of the textbook rooted branching, so we run Chu-Liu/Edmonds
on the transposed weight matrix. Graphs here have at most a few hundred
nodes, so a plain recursive contraction is ample.
"""

from __future__ import annotations

import numpy as np

_INF = float("inf")


def _chu_liu_edmonds(weights: list[list[float]], root: int) -> dict[int, int]:
    """Min-cost arborescence with every non-root receiving one in-edge.

    ``weights[u][v]`` is the cost of edge u -> v; forbidden edges are inf.
    Returns parent[v] = u for every non-root v. Ties break toward the
    smallest head index for determinism.
    """
    n = len(weights)
    best_parent: dict[int, int] = {}
    for v in range(n):
        if v == root:
            continue
        cost, parent = _INF, -1
        for u in range(n):
            if u != v and weights[u][v] < cost:
                cost, parent = weights[u][v], u
        if parent < 0:
            raise ValueError(f"node {v} has no incoming edge; graph is not connected to it")
        best_parent[v] = parent

    cycle = _find_cycle(best_parent, root)
    if cycle is None:
        return best_parent

    cycle_set = set(cycle)
    # Contract the cycle into one supernode and recurse on the reduced graph.
    keep = [v for v in range(n) if v not in cycle_set]
    index = {v: k for k, v in enumerate(keep)}
    c_idx = len(keep)
    size = c_idx + 1
    reduced = [[_INF] * size for _ in range(size)]
    into_choice: dict[int, tuple[int, int]] = {}  # reduced tail -> (u, v) original
    out_choice: dict[int, tuple[int, int]] = {}  # reduced head -> (u, v) original
    for u in range(n):
        for v in range(n):
            if u == v or weights[u][v] == _INF:
                continue
            if u in cycle_set and v in cycle_set:
                continue
            if u in cycle_set:
                k = index[v]
                if weights[u][v] < reduced[c_idx][k]:
                    reduced[c_idx][k] = weights[u][v]
                    out_choice[k] = (u, v)
            elif v in cycle_set:
                k = index[u]
                adjusted = weights[u][v] - weights[best_parent[v]][v]
                if adjusted < reduced[k][c_idx]:
                    reduced[k][c_idx] = adjusted
                    into_choice[k] = (u, v)
            else:
                reduced[index[u]][index[v]] = weights[u][v]

    # The root has no parent pointer, so it never sits on the contracted cycle.
    sub_parent = _chu_liu_edmonds(reduced, index[root])

    parent: dict[int, int] = {}
    reattach: int | None = None
    for v_red, u_red in sub_parent.items():
        if v_red == c_idx:
            u, v = into_choice[u_red]
            parent[v] = u
            reattach = v
        elif u_red == c_idx:
            u, v = out_choice[v_red]
            parent[v] = u
        else:
            parent[keep[v_red]] = keep[u_red]
    for v in cycle:
        if v != reattach:
            parent[v] = best_parent[v]
    return parent


def _find_cycle(parent: dict[int, int], root: int) -> list[int] | None:
    seen_all: set[int] = {root}
    for start in parent:
        if start in seen_all:
            continue
        path: list[int] = []
        on_path: set[int] = set()
        v = start
        while v not in seen_all and v not in on_path:
            path.append(v)
            on_path.add(v)
            if v == root or v not in parent:
                break
            v = parent[v]
        if v in on_path:
            return path[path.index(v):]
        seen_all.update(path)
    return None


def min_in_arborescence(weights: np.ndarray, root: int) -> tuple[float, dict[int, int]]:
    """Cheapest spanning tree with a directed path from every node into root.

    ``weights[i, j]`` is the cost of edge i -> j (np.inf where absent). Every
    non-root node keeps exactly one outgoing edge; returns (total weight,
    {node: successor toward the root}).
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError("weights must be square")
    if not 0 <= root < n:
        raise IndexError(f"root {root} out of range")
    if n == 1:
        return 0.0, {}
    transposed = [[float(w[j][i]) for j in range(n)] for i in range(n)]
    parent_in = _chu_liu_edmonds(transposed, root)
    successor = {v: u for v, u in parent_in.items()}
    total = float(sum(w[v, u] for v, u in successor.items()))
    return total, successor
