"""Pure-Python max-flow kernel (Dinic's algorithm).

Kept dependency-free and structurally identical to the compiled kernel in
_mincut_c.pyx so either can back the flow solver.  Arc order is preserved,
which makes the residual reachability (and hence the canonical cut) stable
across runs and across the two kernels.
"""

from __future__ import annotations

from collections import deque

__all__ = ["max_flow"]


def max_flow(n: int, arcs, s: int, t: int) -> tuple[int, list[bool]]:
    """Run Dinic on `arcs` = [(u, v, cap), ...] (directed, cap >= 0).

    Returns (flow value, reachable) where reachable marks the source side of
    the canonical minimum cut: nodes reachable from s in the final residual
    graph.
    """
    head: list[list[int]] = [[] for _ in range(n)]
    to: list[int] = []
    cap: list[int] = []

    for u, v, c in arcs:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0)

    level = [0] * n
    it = [0] * n
    flow = 0

    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for eid in head[u]:
                v = to[eid]
                if cap[eid] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    dq.append(v)
        if level[t] < 0:
            break
        for i in range(n):
            it[i] = 0

        # iterative blocking-flow DFS
        while True:
            path: list[int] = []
            u = s
            pushed = 0
            while True:
                if u == t:
                    bottleneck = min(cap[eid] for eid in path)
                    for eid in path:
                        cap[eid] -= bottleneck
                        cap[eid ^ 1] += bottleneck
                    pushed = bottleneck
                    break
                advanced = False
                while it[u] < len(head[u]):
                    eid = head[u][it[u]]
                    v = to[eid]
                    if cap[eid] > 0 and level[v] == level[u] + 1:
                        path.append(eid)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    level[u] = -1
                    if u == s:
                        break
                    eid = path.pop()
                    u = to[eid ^ 1]
                    it[u] += 1
            if pushed == 0:
                break
            flow += pushed

    reachable = [False] * n
    reachable[s] = True
    dq = deque([s])
    while dq:
        u = dq.popleft()
        for eid in head[u]:
            v = to[eid]
            if cap[eid] > 0 and not reachable[v]:
                reachable[v] = True
                dq.append(v)
    return flow, reachable
