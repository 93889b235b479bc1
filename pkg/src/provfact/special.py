"""Query classification and special-case solvers.

Three query shapes admit dedicated polynomial algorithms (matched up to
renaming of relations and variables):

* two-star   A(x), B(x,y), C(y)        — orient witness edges away from a
  maximum independent set of the bipartite value graph;
* unary triangle  U(x), R(x,y), S(y,z), T(z,x) — a two-level vertex-cover
  instance over prefix-instance nodes with forcing;
* endpoint two-chain  A(x), R(x,y), S(y,z), B(z) — pre-assign the branching
  plan to doubly-shared witnesses, then run the flow solver over a fixed
  four-plan ordering.

`dispatch` routes a (query, witness set) to the cheapest method that is
still exact where exactness is known, falling back to exact search plus the
flow heuristic elsewhere.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass

from .cq import Query, connected_components, is_hierarchical, has_triad
from .exact import solve_exact
from .flow import ExtractionFailure, build_flow_graph, extract_factorization, min_cut
from .provenance import (
    Expr,
    Factorization,
    TupleKey,
    Witness,
    WitnessSet,
    assemble,
    e_and,
    verify_equivalence,
    ExpansionTooLarge,
)
from .veo import Veo, build_ordering, enumerate_mveo, veo_node, TooManyVariables

log = logging.getLogger(__name__)

__all__ = [
    "QueryClass",
    "RunReport",
    "ShapeMismatch",
    "classify",
    "solve_q2star",
    "solve_triangle_unary",
    "solve_two_chain_we",
    "dispatch",
]


class ShapeMismatch(ValueError):
    """The witness set's query does not have the needed special shape."""


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

_SHAPES = {
    "q2star": (frozenset([0]), frozenset([0, 1]), frozenset([1])),
    "triangle-unary": (
        frozenset([0]),
        frozenset([0, 1]),
        frozenset([1, 2]),
        frozenset([2, 0]),
    ),
    "two-chain-we": (
        frozenset([0]),
        frozenset([0, 1]),
        frozenset([1, 2]),
        frozenset([2]),
    ),
}


def _shape_signature(q: Query) -> tuple | None:
    """Canonical atom-varset multiset under variable renaming (small queries)."""
    variables = sorted(q.variables)
    if len(variables) > 6:
        return None
    best = None
    for perm in itertools.permutations(range(len(variables))):
        idx = {v: perm[i] for i, v in enumerate(variables)}
        sig = tuple(
            sorted(
                (frozenset(idx[v] for v in a.vars) for a in q.atoms),
                key=lambda s: (len(s), sorted(s)),
            )
        )
        if best is None or sig < best:
            best = sig
    return best


@dataclass(frozen=True)
class QueryClass:
    """Structural tags steering method selection."""

    tags: frozenset[str]
    k: int | None  # |mveo|, when enumerable

    def __contains__(self, tag: str) -> bool:
        return tag in self.tags


def classify(q: Query) -> QueryClass:
    tags = set()
    if is_hierarchical(q):
        tags.add("hierarchical")
    if has_triad(q) is not None:
        tags.add("triad")
    else:
        tags.add("linear")
    sig = _shape_signature(q)
    for name, shape in _SHAPES.items():
        if sig is not None and sig == tuple(
            sorted(shape, key=lambda s: (len(s), sorted(s)))
        ):
            tags.add(name)
    k = None
    try:
        k = len(enumerate_mveo(q))
        if k == 2:
            tags.add("two-mveo")
    except TooManyVariables:
        pass
    if len(connected_components(q)) > 1:
        tags.add("disconnected")
    return QueryClass(tags=frozenset(tags), k=k)


def _tuple_counts(W: WitnessSet) -> dict[TupleKey, int]:
    counts: dict[TupleKey, int] = {}
    for w in W.witnesses:
        for t in w.tuples:
            counts[t] = counts.get(t, 0) + 1
    return counts


def _find_plan(mveo: tuple[Veo, ...], plan: Veo) -> Veo:
    for v in mveo:
        if v == plan:
            return v
    raise AssertionError(f"constructed plan {plan} not among minimal plans")


# ---------------------------------------------------------------------------
# two-star: A(x), B(x,y), C(y)
# ---------------------------------------------------------------------------

def _kuhn_matching(adj: dict, left: list) -> dict:
    """Deterministic augmenting-path bipartite matching; returns right->left."""
    match_r: dict = {}

    def try_augment(u, visited) -> bool:
        for v in adj[u]:
            if v in visited:
                continue
            visited.add(v)
            if v not in match_r or try_augment(match_r[v], visited):
                match_r[v] = u
                return True
        return False

    for u in left:
        try_augment(u, set())
    return match_r


def _koenig_cover(adj: dict, left: list, match_r: dict) -> tuple[set, set]:
    """Minimum vertex cover (cover_l, cover_r) from a maximum matching."""
    match_l = {u: v for v, u in match_r.items()}
    z_l = {u for u in left if u not in match_l}
    z_r: set = set()
    queue = list(z_l)
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if v not in z_r:
                z_r.add(v)
                if v in match_r and match_r[v] not in z_l:
                    z_l.add(match_r[v])
                    queue.append(match_r[v])
    cover_l = {u for u in left if u not in z_l}
    cover_r = z_r
    return cover_l, cover_r


def _q2star_roles(q: Query) -> tuple[str, str]:
    unary = sorted((a for a in q.atoms if len(a.vars) == 1), key=lambda a: a.relation)
    binary = [a for a in q.atoms if len(a.vars) == 2]
    if len(unary) != 2 or len(binary) != 1:
        raise ShapeMismatch(f"{q.name} is not a two-star query")
    x, y = unary[0].vars[0], unary[1].vars[0]
    if binary[0].varset != frozenset((x, y)):
        raise ShapeMismatch(f"{q.name} is not a two-star query")
    return x, y


def solve_q2star(W: WitnessSet) -> Factorization:
    """Optimal factorization for the two-star query.

    Witnesses are edges of a bipartite value graph; rooting a witness at one
    side shares that side's prefix.  Every orientation's sink set is an
    independent set, so a maximum independent set (complement of a minimum
    vertex cover) gives the minimum number of distinct roots.
    """
    q = W.query
    x, y = _q2star_roles(q)
    mveo = enumerate_mveo(q)
    plan_x = _find_plan(mveo, veo_node((x,), (veo_node((y,)),)))
    plan_y = _find_plan(mveo, veo_node((y,), (veo_node((x,)),)))

    edges = [(("L", w.values[x]), ("R", w.values[y])) for w in W.witnesses]
    left = sorted({l for l, _ in edges})
    adj: dict = {l: sorted({r for l2, r in edges if l2 == l}) for l in left}
    match_r = _kuhn_matching(adj, left)
    cover_l, cover_r = _koenig_cover(adj, left, match_r)

    assignment: dict[Witness, Veo] = {}
    for w, (l, r) in zip(W.witnesses, edges):
        if r not in cover_r:  # right endpoint independent: orient into it
            assignment[w] = plan_x
        elif l not in cover_l:  # left endpoint independent
            assignment[w] = plan_y
        else:  # both covered: orientation free, keep the x-rooted plan
            assignment[w] = plan_x
    return assemble(q, W, assignment)


# ---------------------------------------------------------------------------
# unary triangle: U(x), R(x,y), S(y,z), T(z,x)
# ---------------------------------------------------------------------------

def _triangle_roles(q: Query) -> tuple[str, str, str]:
    unary = [a for a in q.atoms if len(a.vars) == 1]
    binary = sorted((a for a in q.atoms if len(a.vars) == 2), key=lambda a: a.relation)
    if len(unary) != 1 or len(binary) != 3:
        raise ShapeMismatch(f"{q.name} is not a unary-triangle query")
    x = unary[0].vars[0]
    with_x = [a for a in binary if x in a.varset]
    rest = [a for a in binary if x not in a.varset]
    if len(with_x) != 2 or len(rest) != 1:
        raise ShapeMismatch(f"{q.name} is not a unary-triangle query")
    y = next(v for v in with_x[0].vars if v != x)
    z = next(v for v in with_x[1].vars if v != x)
    if rest[0].varset != frozenset((y, z)):
        raise ShapeMismatch(f"{q.name} is not a unary-triangle query")
    return x, y, z


def solve_triangle_unary(
    W: WitnessSet, counts: dict[TupleKey, int] | None = None
) -> Factorization:
    """Optimal factorization for the unary triangle.

    A witness whose x-y or x-z binary tuple repeats must take a linear plan
    (conflict graph on the two second-level prefix instances); the rest trade
    the shared x prefix against the shared (yz) root.  Both graphs are
    bipartite, solved together by one vertex cover with the x nodes of
    conflicted values forced into the cover.
    """
    q = W.query
    x, y, z = _triangle_roles(q)
    mveo = enumerate_mveo(q)
    plan_xy = _find_plan(
        mveo, veo_node((x,), (veo_node((y,), (veo_node((z,)),)),))
    )
    plan_xz = _find_plan(
        mveo, veo_node((x,), (veo_node((z,), (veo_node((y,)),)),))
    )
    plan_yz = _find_plan(mveo, veo_node((y, z), (veo_node((x,)),)))

    if counts is None:
        counts = _tuple_counts(W)
    ridx = next(i for i, a in enumerate(q.atoms) if a.varset == frozenset((x, y)))
    tidx = next(i for i, a in enumerate(q.atoms) if a.varset == frozenset((x, z)))

    first_type = []
    second_type = []
    for w in W.witnesses:
        if counts[w.tuples[ridx]] > 1 or counts[w.tuples[tidx]] > 1:
            first_type.append(w)
        else:
            second_type.append(w)

    # node spaces: left = xy-instances and x-instances, right = xz and yz
    forced = {("x", w.values[x]) for w in first_type}
    edges: list[tuple[tuple, tuple, Witness]] = []
    for w in first_type:
        edges.append(
            (("xy", w.values[x], w.values[y]), ("xz", w.values[x], w.values[z]), w)
        )
    for w in second_type:
        edges.append((("x", w.values[x]), ("yz", w.values[y], w.values[z]), w))

    active = [(l, r) for l, r, _ in edges if l not in forced]
    left = sorted({l for l, _ in active})
    adj = {l: sorted({r for l2, r in active if l2 == l}) for l in left}
    match_r = _kuhn_matching(adj, left)
    cover_l, cover_r = _koenig_cover(adj, left, match_r)
    cover = cover_l | cover_r | forced

    assignment: dict[Witness, Veo] = {}
    for l, r, w in edges:
        if l[0] == "xy":
            assignment[w] = plan_xy if l in cover else plan_xz
        else:
            assignment[w] = plan_xy if l in cover else plan_yz
    return assemble(q, W, assignment)


# ---------------------------------------------------------------------------
# endpoint two-chain: A(x), R(x,y), S(y,z), B(z)
# ---------------------------------------------------------------------------

def _two_chain_roles(q: Query) -> tuple[str, str, str]:
    unary = sorted((a for a in q.atoms if len(a.vars) == 1), key=lambda a: a.relation)
    binary = [a for a in q.atoms if len(a.vars) == 2]
    if len(unary) != 2 or len(binary) != 2:
        raise ShapeMismatch(f"{q.name} is not an endpoint two-chain")
    x, z = unary[0].vars[0], unary[1].vars[0]
    r_atom = next((a for a in binary if x in a.varset), None)
    s_atom = next((a for a in binary if z in a.varset), None)
    if r_atom is None or s_atom is None or r_atom is s_atom:
        raise ShapeMismatch(f"{q.name} is not an endpoint two-chain")
    y = next(v for v in r_atom.vars if v != x)
    if s_atom.varset != frozenset((y, z)):
        raise ShapeMismatch(f"{q.name} is not an endpoint two-chain")
    return x, y, z


def solve_two_chain_we(
    W: WitnessSet, counts: dict[TupleKey, int] | None = None
) -> Factorization:
    """Optimal factorization for the endpoint two-chain.

    Witnesses whose x-y tuple and y-z tuple both repeat take the branching
    plan y <- (x, z); the remainder is solved exactly by the flow cut over
    the fixed linear-plan ordering [x<-z<-y, x<-y<-z, z<-y<-x, z<-x<-y].
    """
    q = W.query
    x, y, z = _two_chain_roles(q)
    mveo = enumerate_mveo(q)
    plan_branch = _find_plan(
        mveo, veo_node((y,), (veo_node((x,)), veo_node((z,))))
    )
    chain = lambda a, b, c: veo_node((a,), (veo_node((b,), (veo_node((c,)),)),))
    omega = (
        _find_plan(mveo, chain(x, z, y)),
        _find_plan(mveo, chain(x, y, z)),
        _find_plan(mveo, chain(z, y, x)),
        _find_plan(mveo, chain(z, x, y)),
    )

    if counts is None:
        counts = _tuple_counts(W)
    ridx = next(i for i, a in enumerate(q.atoms) if a.varset == frozenset((x, y)))
    sidx = next(i for i, a in enumerate(q.atoms) if a.varset == frozenset((y, z)))

    assignment: dict[Witness, Veo] = {}
    rest: list[Witness] = []
    for w in W.witnesses:
        if counts[w.tuples[ridx]] > 1 and counts[w.tuples[sidx]] > 1:
            assignment[w] = plan_branch
        else:
            rest.append(w)

    if rest:
        sub = WitnessSet(q, tuple(rest))
        ordering = build_ordering(q, mode="flat", mveo=omega)
        g = build_flow_graph(q, sub, ordering)
        res = min_cut(g)
        _, sub_assign = extract_factorization(g, res)
        assignment.update(sub_assign)
    return assemble(q, W, assignment)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    """Outcome of one factorization run."""

    query: str
    method: str
    n: int
    length: int
    repeats: int
    optimal: bool
    factorization: Factorization | None
    lower_bound: int | None = None
    elapsed_ms: float = 0.0
    notes: tuple[str, ...] = ()
    verified: bool | None = None

    @property
    def expression(self) -> Expr | None:
        return self.factorization.expression if self.factorization else None


def _best_single_plan(q: Query, W: WitnessSet) -> Factorization:
    best = None
    for v in enumerate_mveo(q):
        f = assemble(q, W, {w: v for w in W.witnesses})
        if best is None or f.length < best.length:
            best = f
    if best is None:
        raise ValueError("query has no plans")
    return best


def _project_witnesses(q: Query, W: WitnessSet, sub: Query) -> WitnessSet:
    keep_vars = sorted(sub.variables)
    idx = [i for i, a in enumerate(q.atoms) if a in sub.atoms]
    seen: dict[tuple, Witness] = {}
    for w in W.witnesses:
        binding = tuple((v, w.values[v]) for v in keep_vars)
        if binding not in seen:
            seen[binding] = Witness(
                binding=binding, tuples=tuple(w.tuples[i] for i in idx)
            )
    witnesses = tuple(sorted(seen.values(), key=lambda w: w.key))
    return WitnessSet(sub, witnesses)


def _flow_run(q, W, strict_rp, kernel, ordering=None):
    ordering = ordering or build_ordering(q, mode="nested-rp")
    g = build_flow_graph(q, W, ordering, strict_rp=strict_rp)
    res = min_cut(g, kernel=kernel)
    fact, _ = extract_factorization(g, res)
    return fact, res


def dispatch(
    q: Query,
    W: WitnessSet,
    policy: str = "auto",
    budget: int = 500_000,
    strict_rp: bool = False,
    ordering=None,
    kernel: str = "auto",
    verify: bool = True,
) -> RunReport:
    """Route to a solving method and return a uniform report.

    policy: auto | exact | flow | single-plan | special.
    """
    start = time.perf_counter()
    notes: list[str] = []
    lower = None

    if not W.witnesses:
        fact = assemble(q, W, {})
        return RunReport(
            query=q.name, method="empty", n=0, length=0, repeats=0,
            optimal=True, factorization=fact,
            elapsed_ms=(time.perf_counter() - start) * 1000,
        )

    cls = classify(q)
    method = policy
    optimal = True
    fact: Factorization | None = None

    if policy == "auto" and "disconnected" in cls:
        parts = []
        for i, comp in enumerate(connected_components(q)):
            sub = Query(f"{q.name}.{i + 1}", tuple(a for a in q.atoms if a in comp))
            sub_W = _project_witnesses(q, W, sub)
            rep = dispatch(
                sub, sub_W, policy="auto", budget=budget,
                strict_rp=strict_rp, kernel=kernel, verify=False,
            )
            parts.append(rep)
        expr = e_and([p.factorization.expression for p in parts])
        length = sum(p.length for p in parts)
        fact = Factorization(
            assignment=(), expression=expr, length=length,
            repeats=sum(p.repeats for p in parts),
        )
        return RunReport(
            query=q.name, method="components", n=len(W.witnesses),
            length=length, repeats=fact.repeats,
            optimal=all(p.optimal for p in parts), factorization=fact,
            elapsed_ms=(time.perf_counter() - start) * 1000,
            notes=tuple(f"{p.query}: {p.method}" for p in parts),
        )

    if policy == "exact":
        res = solve_exact(q, W, budget=budget)
        fact, optimal, lower = res.factorization, res.optimal, res.lower_bound
        if not res.optimal:
            notes.append(f"budget exhausted after {res.nodes} nodes")
    elif policy == "flow":
        fact, cut = _flow_run(q, W, strict_rp, kernel, ordering)
        optimal = cls.k is not None and (cls.k <= 2 or "hierarchical" in cls)
        if not optimal:
            notes.append(f"cut value {cut.value}; optimality not guaranteed")
    elif policy == "single-plan":
        fact = _best_single_plan(q, W)
        optimal = "hierarchical" in cls
    elif policy == "special":
        if "q2star" in cls:
            fact, method = solve_q2star(W), "q2star"
        elif "triangle-unary" in cls:
            fact, method = solve_triangle_unary(W), "triangle-unary"
        elif "two-chain-we" in cls:
            fact, method = solve_two_chain_we(W), "two-chain-we"
        else:
            raise ShapeMismatch(f"{q.name} matches no special-case solver")
    else:  # auto
        if "hierarchical" in cls:
            fact, method = _best_single_plan(q, W), "single-plan"
        elif "q2star" in cls:
            fact, method = solve_q2star(W), "q2star"
        elif "triangle-unary" in cls:
            fact, method = solve_triangle_unary(W), "triangle-unary"
        elif "two-chain-we" in cls:
            fact, method = solve_two_chain_we(W), "two-chain-we"
        elif cls.k == 2:
            fact, _ = _flow_run(q, W, strict_rp, kernel, ordering)
            method = "flow"
        else:
            res = solve_exact(q, W, budget=budget)
            if res.optimal:
                fact, method, lower = res.factorization, "exact", res.lower_bound
            else:
                optimal = False
                lower = res.lower_bound
                notes.append(
                    f"exact budget exhausted after {res.nodes} nodes;"
                    f" lower bound {res.lower_bound}"
                )
                try:
                    flow_fact, _ = _flow_run(q, W, strict_rp, kernel, ordering)
                except ExtractionFailure:
                    flow_fact = None
                    notes.append("flow extraction failed")
                if flow_fact is not None and flow_fact.length < res.length:
                    fact, method = flow_fact, "flow"
                else:
                    fact, method = res.factorization, "exact"

    assert fact is not None
    verified = None
    if verify:
        try:
            verified = verify_equivalence(fact, W)
        except ExpansionTooLarge:
            notes.append("equivalence verification skipped (expansion too large)")
        else:
            if not verified:
                raise AssertionError(
                    f"{method} produced a non-equivalent factorization"
                )
    return RunReport(
        query=q.name,
        method=method,
        n=len(W.witnesses),
        length=fact.length,
        repeats=fact.repeats,
        optimal=optimal,
        factorization=fact,
        lower_bound=lower,
        elapsed_ms=(time.perf_counter() - start) * 1000,
        notes=tuple(notes),
        verified=verified,
    )
