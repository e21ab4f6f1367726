"""Dinic max-flow on float capacities, JIT-compiled.

Used by the assignment solver's first phase to find the maximum assignable
population exactly (float arithmetic only ever subtracts equal values when
saturating an arc, so residuals hit zero bit-exactly and the loop
terminates in at most V blocking-flow phases).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _build_adjacency(n_nodes, arc_from, arc_to, arc_cap):
    m = arc_from.size
    to = np.empty(2 * m, np.int64)
    cap = np.empty(2 * m, np.float64)
    nxt = np.full(2 * m, -1, np.int64)
    head = np.full(n_nodes, -1, np.int64)
    for i in range(m):
        a = 2 * i
        to[a] = arc_to[i]
        cap[a] = arc_cap[i]
        to[a + 1] = arc_from[i]
        cap[a + 1] = 0.0
        nxt[a] = head[arc_from[i]]
        head[arc_from[i]] = a
        nxt[a + 1] = head[arc_to[i]]
        head[arc_to[i]] = a + 1
    return head, nxt, to, cap


@njit(cache=True)
def _dinic(n_nodes, head, nxt, to, cap, source, sink):
    level = np.empty(n_nodes, np.int64)
    cur = np.empty(n_nodes, np.int64)
    queue = np.empty(n_nodes, np.int64)
    path_arc = np.empty(n_nodes + 1, np.int64)
    total = 0.0
    while True:
        level[:] = -1
        level[source] = 0
        qh, qt = 0, 0
        queue[qt] = source
        qt += 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            a = head[u]
            while a != -1:
                v = to[a]
                if cap[a] > 0.0 and level[v] == -1:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                a = nxt[a]
        if level[sink] == -1:
            break
        cur[:] = head
        while True:
            u = source
            depth = 0
            found = False
            while True:
                if u == sink:
                    found = True
                    break
                a = cur[u]
                advanced = False
                while a != -1:
                    v = to[a]
                    if cap[a] > 0.0 and level[v] == level[u] + 1:
                        path_arc[depth] = a
                        depth += 1
                        u = v
                        advanced = True
                        break
                    a = nxt[a]
                    cur[u] = a
                if advanced:
                    continue
                level[u] = -1
                if depth == 0:
                    break
                depth -= 1
                u = to[path_arc[depth] ^ 1]
                cur[u] = nxt[cur[u]]
            if not found:
                break
            push = 1e300
            for i in range(depth):
                if cap[path_arc[i]] < push:
                    push = cap[path_arc[i]]
            for i in range(depth):
                a = path_arc[i]
                cap[a] -= push
                cap[a ^ 1] += push
            total += push
    return total


def max_flow(n_nodes: int, arc_from, arc_to, arc_cap, source: int, sink: int) -> float:
    """Maximum s-t flow value for a directed graph given as arc arrays."""
    arc_from = np.ascontiguousarray(arc_from, dtype=np.int64)
    arc_to = np.ascontiguousarray(arc_to, dtype=np.int64)
    arc_cap = np.ascontiguousarray(arc_cap, dtype=np.float64)
    if arc_from.size == 0:
        return 0.0
    head, nxt, to, cap = _build_adjacency(n_nodes, arc_from, arc_to, arc_cap)
    return float(_dinic(n_nodes, head, nxt, to, cap, source, sink))
