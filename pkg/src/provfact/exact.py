"""Exact minimal-factorization search over plan assignments.

Depth-first branch-and-bound: one decision per witness (which minimal plan
it uses), cost counted over distinct prefix instances via reference counts.
Witnesses are ordered by decreasing sharing opportunity so conflicts surface
early, and independent sharing components are solved separately.  Pruning
uses an admissible sharing-aware bound: private prefix instances count at
full weight, shareable ones at weight divided by the number of undecided
witnesses that could still use them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .cq import Query
from .provenance import Factorization, WitnessSet, assemble, instantiate
from .veo import enumerate_mveo, table_prefixes

log = logging.getLogger(__name__)

__all__ = ["ExactResult", "solve_exact", "lower_bound"]

_EPS = 1e-6


@dataclass(frozen=True)
class ExactResult:
    factorization: Factorization
    length: int
    optimal: bool
    nodes: int
    lower_bound: int

    @property
    def expression(self):
        return self.factorization.expression

    @property
    def assignment(self):
        return self.factorization.assignment


def lower_bound(q: Query, witnesses) -> int:
    """Admissible bound: per witness, the cheapest full-variable prefix load
    over its plans.  Full-variable instances are value-determined by the
    witness and can never be shared with another witness."""
    mveo = enumerate_mveo(q)
    allvars = q.variables
    full = []
    for v in mveo:
        full.append(
            sum(tp.weight for tp in table_prefixes(v, q) if tp.varset == allvars)
        )
    return sum(min(full) for _ in witnesses) if witnesses else 0


def _prepare(q: Query, W: WitnessSet):
    """Intern every (witness, plan) prefix-instance list as integer ids."""
    mveo = enumerate_mveo(q)
    prefixes = [table_prefixes(v, q) for v in mveo]
    serial_ids: dict[str, int] = {}
    weights: list[int] = []
    inst_lists: list[list[list[int]]] = []  # [witness][veo] -> instance ids
    produced_by: list[set[int]] = []  # instance id -> witness indices

    for wi, w in enumerate(W.witnesses):
        per_veo = []
        for vi, v in enumerate(mveo):
            ids = []
            for tp in prefixes[vi]:
                inst = instantiate(tp, w)
                iid = serial_ids.get(inst.serial)
                if iid is None:
                    iid = len(weights)
                    serial_ids[inst.serial] = iid
                    weights.append(tp.weight)
                    produced_by.append(set())
                produced_by[iid].add(wi)
                ids.append(iid)
            per_veo.append(ids)
        inst_lists.append(per_veo)
    return mveo, inst_lists, weights, produced_by


def _reduce_plans(n, k, inst_lists, weights):
    """Per-witness plan dominance, iterated to a fixpoint.

    Two plans whose shareable-instance sets coincide differ only in private
    cost, so only the cheapest (lex-first on ties) can appear in a
    lexicographically-first optimum.  A plan is likewise dominated when
    another plan's shareable set is a subset and its worst-case cost
    (private + all its shareable weights) does not exceed the private cost.
    Dropping plans shrinks the potential-user sets, which may privatize more
    instances, hence the fixpoint loop.
    """
    kept = [list(range(k)) for _ in range(n)]
    while True:
        pb: dict[int, set[int]] = {}
        for wi in range(n):
            for vi in kept[wi]:
                for i in inst_lists[wi][vi]:
                    pb.setdefault(i, set()).add(wi)
        changed = False
        for wi in range(n):
            share = {}
            priv = {}
            for vi in kept[wi]:
                ids = inst_lists[wi][vi]
                share[vi] = frozenset(i for i in ids if len(pb[i]) > 1)
                priv[vi] = sum(weights[i] for i in ids if len(pb[i]) == 1)
            new = []
            for vi in kept[wi]:
                dominated = False
                for vj in kept[wi]:
                    if vj == vi:
                        continue
                    if share[vj] == share[vi]:
                        if (priv[vj], vj) < (priv[vi], vi):
                            dominated = True
                            break
                    elif share[vj] < share[vi]:
                        worst = priv[vj] + sum(weights[i] for i in share[vj])
                        if worst < priv[vi] or (worst == priv[vi] and vj < vi):
                            dominated = True
                            break
                if not dominated:
                    new.append(vi)
            if new != kept[wi]:
                kept[wi] = new
                changed = True
        if not changed:
            return kept, pb


def _components(n, kept, inst_lists, pb):
    """Union witnesses that can share an instance through kept plans."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, users in pb.items():
        if len(users) > 1:
            it = iter(users)
            first = find(next(it))
            for other in it:
                parent[find(other)] = first
    groups: dict[int, list[int]] = {}
    for wi in range(n):
        groups.setdefault(find(wi), []).append(wi)
    return list(groups.values())


def _solve_component(wits, kept, inst_lists, weights, pb, order_key, budget):
    """Lex-first DFS over one sharing component.

    Returns (cost, assignment dict wi->vi, nodes, exhausted, frontier).
    The greedy incumbent only seeds the bound (exclusive, +1), so the first
    complete assignment the DFS accepts is the lexicographically first
    optimum in search order.
    """
    order = sorted(wits, key=order_key)
    n = len(order)
    pos_of = {wi: p for p, wi in enumerate(order)}

    # per-position kept plans, split into private cost and shareable ids
    plans = [kept[wi] for wi in order]
    privc = []
    shares = []
    for p, wi in enumerate(order):
        pc, sh = [], []
        for vi in plans[p]:
            ids = inst_lists[wi][vi]
            pc.append(sum(weights[i] for i in ids if len(pb[i]) == 1))
            sh.append([i for i in ids if len(pb[i]) > 1])
        privc.append(pc)
        shares.append(sh)

    # shared-instance bookkeeping local to the component
    users: dict[int, list[tuple[int, int]]] = {}
    for p in range(n):
        for ci, ids in enumerate(shares[p]):
            for i in ids:
                users.setdefault(i, []).append((p, ci))
    und = {i: len({p for p, _ in us}) for i, us in users.items()}
    refcount = dict.fromkeys(users, 0)

    rem = [[0.0] * len(plans[p]) for p in range(n)]
    for i, us in users.items():
        c = weights[i] / und[i]
        for p, ci in us:
            rem[p][ci] += c
    minrem = [min(privc[p][ci] + rem[p][ci] for ci in range(len(plans[p]))) for p in range(n)]
    undecided_total = sum(minrem)

    def greedy():
        used: set[int] = set()
        total = 0
        asg = []
        for p, wi in enumerate(order):
            best = None
            for ci, vi in enumerate(plans[p]):
                add = privc[p][ci] + sum(
                    weights[i] for i in shares[p][ci] if i not in used
                )
                if best is None or add < best[0]:
                    best = (add, ci)
            total += best[0]
            asg.append(best[1])
            used.update(shares[p][best[1]])
        return total, asg

    greedy_cost, greedy_asg = greedy()
    best_cost = greedy_cost + 1  # exclusive: lets DFS re-find a tying optimum
    best_from_dfs = None

    nodes = 0
    exhausted = False
    level = 0
    choice = [0] * n
    assign_cur = [0] * n
    cost_at = [0] * (n + 1)
    entry_lb = [0.0] * n  # admissible bound for the whole subtree at a level

    def touch_min(p):
        nonlocal undecided_total
        m = min(privc[p][ci] + rem[p][ci] for ci in range(len(plans[p])))
        if m != minrem[p]:
            undecided_total += m - minrem[p]
            minrem[p] = m

    def enter(p):
        # witness at p becomes decided: shrink denominators of its instances
        nonlocal undecided_total
        entry_lb[p] = cost_at[p] + undecided_total
        undecided_total -= minrem[p]
        dirty = set()
        seen = set()
        for ids in shares[p]:
            for i in ids:
                if i in seen:
                    continue
                seen.add(i)
                und[i] -= 1
                if refcount[i] == 0 and und[i] > 0:
                    delta = weights[i] * (1.0 / und[i] - 1.0 / (und[i] + 1))
                    for p2, ci in users[i]:
                        if p2 > p:
                            rem[p2][ci] += delta
                            dirty.add(p2)
        for p2 in dirty:
            touch_min(p2)

    def leave(p):
        nonlocal undecided_total
        dirty = set()
        seen = set()
        for ids in shares[p]:
            for i in ids:
                if i in seen:
                    continue
                seen.add(i)
                if refcount[i] == 0 and und[i] > 0:
                    delta = weights[i] * (1.0 / und[i] - 1.0 / (und[i] + 1))
                    for p2, ci in users[i]:
                        if p2 > p:
                            rem[p2][ci] -= delta
                            dirty.add(p2)
                und[i] += 1
        for p2 in dirty:
            touch_min(p2)
        undecided_total += minrem[p]

    def apply(p, ci):
        added = privc[p][ci]
        dirty = set()
        for i in shares[p][ci]:
            if refcount[i] == 0:
                added += weights[i]
                if und[i] > 0:
                    c = weights[i] / und[i]
                    for p2, c2 in users[i]:
                        if p2 > p:
                            rem[p2][c2] -= c
                            dirty.add(p2)
            refcount[i] += 1
        for p2 in dirty:
            touch_min(p2)
        return added

    def undo(p, ci):
        dirty = set()
        for i in shares[p][ci]:
            refcount[i] -= 1
            if refcount[i] == 0 and und[i] > 0:
                c = weights[i] / und[i]
                for p2, c2 in users[i]:
                    if p2 > p:
                        rem[p2][c2] += c
                        dirty.add(p2)
        for p2 in dirty:
            touch_min(p2)

    enter(0)
    while level >= 0:
        if level == n:
            if cost_at[n] < best_cost:
                # strict improvement keeps the first optimum in search order
                best_cost = cost_at[n]
                best_from_dfs = assign_cur.copy()
            level -= 1
            undo(level, assign_cur[level])
            continue
        if choice[level] == len(plans[level]):
            choice[level] = 0
            leave(level)
            level -= 1
            if level >= 0:
                undo(level, assign_cur[level])
            continue
        if nodes >= budget:
            exhausted = True
            break
        ci = choice[level]
        choice[level] += 1
        nodes += 1
        added = apply(level, ci)
        newcost = cost_at[level] + added
        if newcost + math.ceil(undecided_total - _EPS) < best_cost:
            assign_cur[level] = ci
            cost_at[level + 1] = newcost
            level += 1
            if level < n:
                enter(level)
        else:
            undo(level, ci)

    if best_from_dfs is not None:
        cost, chosen = best_cost, best_from_dfs
    else:
        cost, chosen = greedy_cost, greedy_asg

    frontier = cost
    if exhausted:
        # the open frontier bounds any optimum the truncated search missed
        open_bounds = [
            int(math.ceil(entry_lb[lv] - _EPS))
            for lv in range(level + 1)
            if lv < n and choice[lv] < len(plans[lv])
        ]
        frontier = min([cost] + open_bounds)

    assignment = {order[p]: plans[p][chosen[p]] for p in range(n)}
    return cost, assignment, nodes, exhausted, frontier


def solve_exact(q: Query, W: WitnessSet, budget: int = 500_000) -> ExactResult:
    """Search all plan assignments for a minimum-length factorization.

    `budget` caps the number of search nodes; when exhausted the incumbent is
    returned with optimal=False and a frontier-derived lower bound.
    """
    if not W.witnesses:
        empty = assemble(q, W, {})
        return ExactResult(empty, 0, True, 0, 0)

    mveo, inst_lists, weights, produced_by = _prepare(q, W)
    n = len(W.witnesses)
    k = len(mveo)

    kept, pb = _reduce_plans(n, k, inst_lists, weights)

    # search order: most shared-prefix candidates first, then witness key
    shared_count = [
        sum(1 for vi in kept[wi] for i in inst_lists[wi][vi] if len(pb[i]) > 1)
        for wi in range(n)
    ]

    def order_key(wi):
        return (-shared_count[wi], W.witnesses[wi].key)

    comps = _components(n, kept, inst_lists, pb)
    comps.sort(key=lambda ws: min(order_key(wi) for wi in ws))

    total_cost = 0
    total_nodes = 0
    total_frontier = 0
    any_exhausted = False
    full_assign: dict[int, int] = {}
    for wits in comps:
        left = max(budget - total_nodes, 0)
        cost, assignment, nodes, exhausted, frontier = _solve_component(
            wits, kept, inst_lists, weights, pb, order_key, left
        )
        total_cost += cost
        total_nodes += nodes
        total_frontier += frontier
        any_exhausted = any_exhausted or exhausted
        full_assign.update(assignment)

    assignment = {W.witnesses[wi]: mveo[vi] for wi, vi in full_assign.items()}
    fact = assemble(q, W, assignment)
    if fact.length != total_cost:
        raise AssertionError(
            f"assembled length {fact.length} != searched cost {total_cost}"
        )
    log.debug(
        "exact search: %d nodes, length %d, optimal=%s",
        total_nodes,
        total_cost,
        not any_exhausted,
    )
    return ExactResult(
        factorization=fact,
        length=total_cost,
        optimal=not any_exhausted,
        nodes=total_nodes,
        lower_bound=total_frontier if any_exhausted else total_cost,
    )
