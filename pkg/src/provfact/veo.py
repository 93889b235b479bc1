"""Variable elimination orders (VEOs) for sj-free Boolean CQs.

A VEO is a rooted tree over a partition of the query variables such that
every atom's variables lie on a single root-to-node path.  Each VEO encodes
a query plan; its per-atom *table prefixes* (minimal root paths covering the
atom) are the sharable units of a factorization.  This module enumerates all
legal VEOs, computes dissociations and the Pareto-minimal set (mveo), table
prefixes with weights, and the run orderings (flat and nested) consumed by
the flow heuristic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

from .cq import Atom, Query

__all__ = [
    "Veo",
    "TablePrefix",
    "Ordering",
    "OmegaNode",
    "TooManyVariables",
    "InvalidPermutation",
    "veo_node",
    "enumerate_veos",
    "dissociation_of",
    "enumerate_mveo",
    "table_prefixes",
    "prefix_path",
    "build_ordering",
    "check_rp",
]

Node = tuple[str, ...]


class TooManyVariables(ValueError):
    """Query exceeds the variable cap for brute-force VEO enumeration."""


class InvalidPermutation(ValueError):
    """A flat ordering permutation does not cover mveo(Q) exactly once."""


def _node_str(node: Node) -> str:
    return node[0] if len(node) == 1 else "(" + "".join(node) + ")"


@dataclass(frozen=True)
class Veo:
    """A rooted tree of disjoint variable sets; immutable and canonically ordered."""

    node: Node
    children: tuple["Veo", ...] = ()

    @cached_property
    def serial(self) -> str:
        ns = _node_str(self.node)
        if not self.children:
            return ns
        if len(self.children) == 1:
            return f"{ns} <- {self.children[0].serial}"
        return f"{ns} <- (" + ", ".join(c.serial for c in self.children) + ")"

    @cached_property
    def vars_below(self) -> frozenset[str]:
        out = set(self.node)
        for c in self.children:
            out |= c.vars_below
        return frozenset(out)

    @cached_property
    def root_paths(self) -> frozenset[tuple[Node, ...]]:
        """All root paths of the tree (every prefix of every root-to-node path)."""
        out: set[tuple[Node, ...]] = set()
        stack: list[tuple[tuple[Node, ...], Veo]] = [((self.node,), self)]
        while stack:
            path, t = stack.pop()
            out.add(path)
            for c in t.children:
                stack.append((path + (c.node,), c))
        return frozenset(out)

    def __str__(self) -> str:
        return self.serial

    def __repr__(self) -> str:
        return f"Veo({self.serial!r})"


def veo_node(vars_: tuple[str, ...] | frozenset[str], children: tuple[Veo, ...] = ()) -> Veo:
    """Canonicalizing constructor: sorts node variables and children."""
    return Veo(tuple(sorted(vars_)), tuple(sorted(children, key=lambda c: c.serial)))


def _set_partitions(items: list) -> list[list[list]]:
    """All partitions of `items` into unordered nonempty blocks."""
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [[first] + part[i]] + part[i + 1:])
        out.append([[first]] + part)
    return out


def enumerate_veos(q: Query, max_vars: int = 8) -> tuple[Veo, ...]:
    """All legal VEOs of q, sorted by canonical serialization.

    Brute force over rooted trees of variable-set partitions, pruning any
    branch that would split an atom's variables across subtrees.
    """
    variables = frozenset(q.variables)
    if len(variables) > max_vars:
        raise TooManyVariables(
            f"{len(variables)} variables exceeds the enumeration cap {max_vars}"
        )
    constraints = frozenset(a.varset for a in q.atoms)
    memo: dict[tuple[frozenset[str], frozenset[frozenset[str]]], tuple[Veo, ...]] = {}

    def trees(vs: frozenset[str], cons: frozenset[frozenset[str]]) -> tuple[Veo, ...]:
        key = (vs, cons)
        if key in memo:
            return memo[key]
        out: list[Veo] = []
        ordered = sorted(vs)
        for r in range(1, len(ordered) + 1):
            for root in itertools.combinations(ordered, r):
                root_set = frozenset(root)
                remaining = vs - root_set
                residual = [c - root_set for c in cons if c - root_set]
                if not remaining:
                    out.append(Veo(tuple(root)))
                    continue
                # variables bound together by a residual constraint must share a subtree
                parent = {v: v for v in remaining}

                def find(v):
                    while parent[v] != v:
                        parent[v] = parent[parent[v]]
                        v = parent[v]
                    return v

                for c in residual:
                    it = iter(c)
                    head = find(next(it))
                    for v in it:
                        parent[find(v)] = head
                groups: dict[str, set[str]] = {}
                for v in remaining:
                    groups.setdefault(find(v), set()).add(v)
                group_list = [frozenset(g) for g in groups.values()]
                for part in _set_partitions(group_list):
                    block_trees = []
                    for block in part:
                        block_vars = frozenset().union(*block)
                        block_cons = frozenset(c for c in residual if c <= block_vars)
                        sub = trees(block_vars, block_cons)
                        if not sub:
                            break
                        block_trees.append(sub)
                    else:
                        for combo in itertools.product(*block_trees):
                            out.append(veo_node(root, tuple(combo)))
        result = tuple(sorted(out, key=lambda v: v.serial))
        memo[key] = result
        return result

    return trees(variables, constraints)


def prefix_path(v: Veo, avars: frozenset[str]) -> tuple[Node, ...]:
    """The minimal root path of v whose variable union covers `avars`."""
    path: list[Node] = []
    rest = set(avars)
    cur = v
    while True:
        path.append(cur.node)
        rest.difference_update(cur.node)
        if not rest:
            return tuple(path)
        nxt = None
        for c in cur.children:
            if c.vars_below & rest:
                if nxt is not None or not rest <= c.vars_below:
                    raise ValueError(f"variables {sorted(avars)} not on one root path of {v}")
                nxt = c
        if nxt is None:
            raise ValueError(f"variables {sorted(avars)} missing from {v}")
        cur = nxt


def dissociation_of(v: Veo, q: Query) -> tuple[frozenset[str], ...]:
    """Per-atom added-variable sets: vars on the atom's table prefix minus its own."""
    out = []
    for a in q.atoms:
        pvars = frozenset(x for node in prefix_path(v, a.varset) for x in node)
        out.append(pvars - a.varset)
    return tuple(out)


def enumerate_mveo(q: Query, max_vars: int = 8) -> tuple[Veo, ...]:
    """The Pareto-minimal VEOs under componentwise subset order of dissociations.

    VEOs with identical dissociations collapse to the lexicographically
    smallest serialization; the result is sorted by serialization.
    """
    by_dissoc: dict[tuple[frozenset[str], ...], Veo] = {}
    for v in enumerate_veos(q, max_vars):
        d = dissociation_of(v, q)
        cur = by_dissoc.get(d)
        if cur is None or v.serial < cur.serial:
            by_dissoc[d] = v
    items = sorted(by_dissoc.items(), key=lambda kv: kv[1].serial)

    def dominates(d1, d2) -> bool:
        return d1 != d2 and all(a <= b for a, b in zip(d1, d2))

    minimal = [
        v for d, v in items if not any(dominates(d2, d) for d2, _ in items)
    ]
    return tuple(minimal)


@dataclass(frozen=True)
class TablePrefix:
    """A distinct table-prefix path of a VEO with its multiplicity weight."""

    path: tuple[Node, ...]
    atoms: tuple[str, ...]  # relation names sharing this exact path
    weight: int

    @cached_property
    def serial(self) -> str:
        return " <- ".join(_node_str(n) for n in self.path)

    @cached_property
    def varset(self) -> frozenset[str]:
        return frozenset(x for node in self.path for x in node)

    def __str__(self) -> str:
        return self.serial


def table_prefixes(v: Veo, q: Query) -> tuple[TablePrefix, ...]:
    """One TablePrefix per distinct prefix path of v, weight = #atoms mapped to it."""
    groups: dict[tuple[Node, ...], list[str]] = {}
    for a in q.atoms:
        groups.setdefault(prefix_path(v, a.varset), []).append(a.relation)
    out = [
        TablePrefix(path, tuple(sorted(rels)), len(rels))
        for path, rels in groups.items()
    ]
    return tuple(sorted(out, key=lambda tp: tp.serial))


# --------------------------------------------------------------------------
# Run orderings for the flow construction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaNode:
    """One segment of a nested ordering.

    Exactly one of the following holds: `sub` is set (a leaf fragment hanging
    below the shared `ext` path, which may be empty), `seq` is nonempty
    (sequential alternatives below `ext`), or `par` is nonempty (independent
    parallel components below `ext`, combined by Cartesian product).
    """

    ext: tuple[Node, ...] = ()
    sub: Veo | None = None
    seq: tuple["OmegaNode", ...] = ()
    par: tuple[tuple["OmegaNode", ...], ...] = ()

    def fragments(self) -> list[Veo]:
        """All plan fragments represented by this segment."""
        if self.seq:
            tails = [f for alt in self.seq for f in alt.fragments()]
        elif self.par:
            comps = [[f for alt in comp for f in alt.fragments()] for comp in self.par]
            tails = None
            out = []
            for combo in itertools.product(*comps):
                out.append(_chain(self.ext, tuple(combo)))
            return out
        else:
            tails = [self.sub] if self.sub is not None else []
            if not self.ext:
                return list(tails)
            if not tails:
                return [_chain(self.ext, ())]
        return [_chain(self.ext, (t,)) for t in tails]


def _chain(ext: tuple[Node, ...], tails: tuple[Veo, ...]) -> Veo:
    if not ext:
        if len(tails) != 1:
            raise ValueError("empty chain requires exactly one tail")
        return tails[0]
    cur = veo_node(ext[-1], tails)
    for nd in reversed(ext[:-1]):
        cur = veo_node(nd, (cur,))
    return cur


@dataclass(frozen=True)
class Ordering:
    """An ordering of mveo(Q) for the flow graph: flat columns or nested segments."""

    mode: str  # "flat" | "nested-rp"
    alts: tuple[OmegaNode, ...]
    veos: tuple[Veo, ...] = field(init=False)
    rp: bool = field(init=False)

    def __post_init__(self):
        flat = tuple(f for alt in self.alts for f in alt.fragments())
        object.__setattr__(self, "veos", flat)
        object.__setattr__(self, "rp", self._check_rp())

    @property
    def has_parallel(self) -> bool:
        def walk(n: OmegaNode) -> bool:
            return bool(n.par) or any(walk(c) for c in n.seq) or any(
                walk(c) for comp in n.par for c in comp
            )
        return any(walk(a) for a in self.alts)

    def _check_rp(self) -> bool:
        if not self.has_parallel:
            return check_rp(self.veos)
        # Parallel segments: a shared path must either be a trie path of the
        # segment structure (covered by some cumulative ext) or confined to
        # one component's contiguous alternatives; validated recursively.
        ok = True

        def walk(alts: tuple[OmegaNode, ...], cum: tuple[Node, ...]):
            nonlocal ok
            frag_lists = []
            for alt in alts:
                frags = alt.fragments()
                frag_lists.append(frags)
            # contiguity across this sequence of alternatives
            cols: dict[tuple[Node, ...], list[int]] = {}
            for i, frags in enumerate(frag_lists):
                for f in frags:
                    for p in f.root_paths:
                        lst = cols.setdefault(p, [])
                        if not lst or lst[-1] != i:
                            lst.append(i)
            for p, idxs in cols.items():
                if idxs[-1] - idxs[0] + 1 != len(idxs):
                    ok = False
            for alt in alts:
                sub_cum = cum + alt.ext
                if alt.seq:
                    walk(alt.seq, sub_cum)
                for comp in alt.par:
                    walk(comp, sub_cum)

        walk(self.alts, ())
        return ok


def check_rp(veos: tuple[Veo, ...] | list[Veo]) -> bool:
    """Running-prefixes check for a flat sequence: every shared root path
    must occupy a contiguous range of positions."""
    cols: dict[tuple[Node, ...], list[int]] = {}
    for i, v in enumerate(veos):
        for p in v.root_paths:
            cols.setdefault(p, []).append(i)
    return all(c[-1] - c[0] + 1 == len(c) for c in cols.values())


def _nest(fragments: list[Veo]) -> tuple[OmegaNode, ...]:
    """Group plan fragments into nested segments by shared root nodes."""
    groups: dict[Node, list[Veo]] = {}
    for f in fragments:
        groups.setdefault(f.node, []).append(f)
    out: list[OmegaNode] = []
    for node_key in sorted(groups):
        members = sorted(groups[node_key], key=lambda v: v.serial)
        if len(members) == 1:
            out.append(OmegaNode(sub=members[0]))
            continue
        forests = [m.children for m in members]
        if all(len(fr) == 1 for fr in forests):
            out.append(OmegaNode(ext=(node_key,), seq=_nest([fr[0] for fr in forests])))
            continue
        par = _try_parallel(node_key, members)
        if par is not None:
            out.append(par)
        else:
            # mixed shapes: keep the group's members adjacent as plain leaves
            out.extend(OmegaNode(sub=m) for m in members)
    return tuple(out)


def _try_parallel(node_key: Node, members: list[Veo]) -> OmegaNode | None:
    """Detect a Cartesian-product group: identical component variable-set
    signatures across members and a full product of per-component options."""
    sigs = {
        tuple(sorted((c.vars_below for c in m.children), key=sorted))
        for m in members
    }
    if len(sigs) != 1:
        return None
    comp_varsets = sorted(next(iter(sigs)), key=sorted)
    if len(comp_varsets) < 2:
        return None
    options: list[list[Veo]] = []
    for cv in comp_varsets:
        opts = sorted(
            {c for m in members for c in m.children if c.vars_below == cv},
            key=lambda v: v.serial,
        )
        options.append(opts)
    if math.prod(len(o) for o in options) != len(members):
        return None
    combos = {
        tuple(sorted(combo, key=lambda v: v.serial))
        for combo in itertools.product(*options)
    }
    have = {tuple(sorted(m.children, key=lambda v: v.serial)) for m in members}
    if combos != have:
        return None
    return OmegaNode(
        ext=(node_key,), par=tuple(_nest(list(opts)) for opts in options)
    )


def build_ordering(
    q: Query,
    mode: str = "nested-rp",
    perm: list[int] | None = None,
    mveo: tuple[Veo, ...] | None = None,
) -> Ordering:
    """Build a run ordering over mveo(q).

    nested-rp: group plans by root node, order groups by their variable
    tuples, recurse below shared roots, and split independent components
    into parallel segments.  flat: use the canonical mveo order or an
    explicit 0-based permutation of it.
    """
    plans = mveo if mveo is not None else enumerate_mveo(q)
    if mode == "nested-rp":
        return Ordering(mode="nested-rp", alts=_nest(list(plans)))
    if mode == "flat":
        if perm is None:
            perm = list(range(len(plans)))
        if sorted(perm) != list(range(len(plans))):
            raise InvalidPermutation(
                f"{perm} is not a permutation of 0..{len(plans) - 1}"
            )
        ordered = tuple(plans[i] for i in perm)
        return Ordering(mode="flat", alts=tuple(OmegaNode(sub=v) for v in ordered))
    raise ValueError(f"unknown ordering mode: {mode!r}")
