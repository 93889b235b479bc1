"""Databases, witnesses, and factorization assembly/measurement.

The provenance of a Boolean CQ over a database is a DNF with one product
term per witness.  A factorization is an equivalent nested AND/OR
expression; its length counts literal leaves only.  Assembly builds the
expression for a witness→plan assignment by merging shared table-prefix
instances in a trie, so that equal instances — even across different
plans — are written once.
"""

from __future__ import annotations

import itertools
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .cq import Atom, Query
from .veo import Node, TablePrefix, Veo, prefix_path

log = logging.getLogger(__name__)

__all__ = [
    "Database",
    "Witness",
    "WitnessSet",
    "PrefixInstance",
    "Expr",
    "Factorization",
    "FormatError",
    "ArityMismatch",
    "UnboundVariable",
    "IllegalAssignment",
    "ExpansionTooLarge",
    "tuple_id",
    "parse_database",
    "load_database",
    "compute_witnesses",
    "instantiate",
    "assemble",
    "verify_equivalence",
    "detect_p4",
    "fact_decision",
]

TupleKey = tuple[str, tuple[str, ...]]


class FormatError(ValueError):
    """Malformed database text or CSV directory."""


class ArityMismatch(ValueError):
    """A stored tuple's width disagrees with the query atom's arity."""


class UnboundVariable(KeyError):
    """A witness does not bind a variable required by the path."""


class IllegalAssignment(ValueError):
    """A witness was assigned a plan that is not legal for the query."""


class ExpansionTooLarge(RuntimeError):
    """DNF expansion exceeded the term guard."""


def tuple_id(rel: str, values: tuple[str, ...]) -> str:
    """Render a tuple id like ``r_1`` or ``s_11`` (separators for wide constants)."""
    if all(len(v) == 1 for v in values):
        return f"{rel.lower()}_{''.join(values)}"
    return f"{rel.lower()}_{'_'.join(values)}"


@dataclass(frozen=True)
class Database:
    """Relation name → sorted, deduplicated tuples of string constants."""

    relations: dict[str, tuple[tuple[str, ...], ...]]

    @staticmethod
    def from_dict(rels: dict[str, list[tuple[str, ...]] | set[tuple[str, ...]]]) -> "Database":
        clean = {
            name: tuple(sorted({tuple(str(c) for c in row) for row in rows}))
            for name, rows in rels.items()
        }
        return Database(clean)

    def size(self) -> int:
        return sum(len(rows) for rows in self.relations.values())

    def text(self) -> str:
        """Serialize to the sectioned text format."""
        lines = []
        for name in sorted(self.relations):
            lines.append(f"[{name}]")
            lines.extend(",".join(row) for row in self.relations[name])
        return "\n".join(lines) + "\n"


def parse_database(text: str) -> Database:
    """Parse the sectioned text format: ``[Rel]`` headers, one comma-separated
    row per line; ``#`` starts a comment."""
    rels: dict[str, set[tuple[str, ...]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise FormatError(f"line {lineno}: empty relation name")
            rels.setdefault(current, set())
            continue
        if current is None:
            raise FormatError(f"line {lineno}: row before any [Relation] header")
        row = tuple(c.strip() for c in line.split(","))
        if any(not c for c in row):
            raise FormatError(f"line {lineno}: empty constant in row {line!r}")
        rels[current].add(row)
    return Database.from_dict(rels)


def load_database(source: str | os.PathLike) -> Database:
    """Load a database from a sectioned text file or a directory of
    ``Rel.csv`` files (headerless, comma-separated rows)."""
    p = Path(source)
    if p.is_dir():
        rels: dict[str, set[tuple[str, ...]]] = {}
        for csv_path in sorted(p.glob("*.csv")):
            name = csv_path.stem
            rows = set()
            for lineno, raw in enumerate(csv_path.read_text().splitlines(), start=1):
                line = raw.strip()
                if not line:
                    continue
                row = tuple(c.strip() for c in line.split(","))
                if any(not c for c in row):
                    raise FormatError(f"{csv_path.name}:{lineno}: empty constant")
                rows.add(row)
            rels[name] = rows
        if not rels:
            raise FormatError(f"{p}: no .csv files found")
        return Database.from_dict(rels)
    if not p.exists():
        raise FormatError(f"{p}: no such file or directory")
    return parse_database(p.read_text())


@dataclass(frozen=True)
class Witness:
    """One satisfying valuation: a variable binding plus its matched tuples."""

    binding: tuple[tuple[str, str], ...]  # sorted (variable, constant)
    tuples: tuple[TupleKey, ...]  # aligned with the query's atoms

    @cached_property
    def key(self) -> str:
        return "_".join(f"{var}{val}" for var, val in self.binding)

    @cached_property
    def values(self) -> dict[str, str]:
        return dict(self.binding)

    @cached_property
    def tuple_set(self) -> frozenset[TupleKey]:
        return frozenset(self.tuples)

    @cached_property
    def tuple_ids(self) -> tuple[str, ...]:
        return tuple(tuple_id(rel, vals) for rel, vals in self.tuples)

    def __str__(self) -> str:
        return " ".join(sorted(self.tuple_ids))


@dataclass(frozen=True)
class WitnessSet:
    """The provenance DNF: all witnesses of a query over a database."""

    query: Query
    witnesses: tuple[Witness, ...]

    def __len__(self) -> int:
        return len(self.witnesses)

    def __iter__(self):
        return iter(self.witnesses)

    @cached_property
    def distinct_tuples(self) -> frozenset[TupleKey]:
        return frozenset(t for w in self.witnesses for t in w.tuples)

    def dnf_terms(self) -> set[frozenset[TupleKey]]:
        return {w.tuple_set for w in self.witnesses}

    def dnf_string(self, ascii_only: bool = False) -> str:
        sep = " v " if ascii_only else " ∨ "
        return sep.join(" ".join(sorted(w.tuple_ids)) for w in self.witnesses)


def compute_witnesses(q: Query, d: Database) -> WitnessSet:
    """All witnesses via hash join over the atoms in source order; the result
    is sorted by binding serialization for determinism."""
    for atom in q.atoms:
        for row in d.relations.get(atom.relation, ()):
            if len(row) != len(atom.vars):
                raise ArityMismatch(
                    f"{atom.relation} row {row} has arity {len(row)}, "
                    f"atom {atom} expects {len(atom.vars)}"
                )
    bindings: list[dict[str, str]] = [{}]
    bound: set[str] = set()
    for atom in q.atoms:
        rows = d.relations.get(atom.relation, ())
        shared = [i for i, v in enumerate(atom.vars) if v in bound]
        fresh = [i for i, v in enumerate(atom.vars) if v not in bound]
        index: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
        for row in rows:
            index.setdefault(tuple(row[i] for i in shared), []).append(row)
        new_bindings = []
        for b in bindings:
            key = tuple(b[atom.vars[i]] for i in shared)
            for row in index.get(key, ()):
                nb = dict(b)
                for i in fresh:
                    nb[atom.vars[i]] = row[i]
                new_bindings.append(nb)
        bindings = new_bindings
        bound.update(atom.vars)
        if not bindings:
            break

    witnesses = []
    for b in bindings:
        tups = tuple(
            (a.relation, tuple(b[v] for v in a.vars)) for a in q.atoms
        )
        witnesses.append(Witness(tuple(sorted(b.items())), tups))
    witnesses.sort(key=lambda w: w.key)
    return WitnessSet(q, tuple(witnesses))


@dataclass(frozen=True)
class PrefixInstance:
    """A table-prefix path with constants substituted; equality is by serialization."""

    path: tuple[tuple[Node, tuple[str, ...]], ...]

    @cached_property
    def serial(self) -> str:
        return " <- ".join(
            "".join(f"{var}{val}" for var, val in zip(node, vals))
            for node, vals in self.path
        )

    @cached_property
    def varset(self) -> frozenset[str]:
        return frozenset(v for node, _ in self.path for v in node)

    @cached_property
    def values(self) -> dict[str, str]:
        return {
            var: val for node, vals in self.path for var, val in zip(node, vals)
        }

    def __str__(self) -> str:
        return self.serial


def instantiate(prefix_or_veo, witness: Witness) -> PrefixInstance:
    """Substitute witness constants into a table prefix (or path-shaped VEO)."""
    if isinstance(prefix_or_veo, TablePrefix):
        path = prefix_or_veo.path
    elif isinstance(prefix_or_veo, Veo):
        path = []
        cur: Veo | None = prefix_or_veo
        while cur is not None:
            path.append(cur.node)
            if len(cur.children) > 1:
                raise ValueError(
                    f"{prefix_or_veo} is not path-shaped; instantiate table prefixes instead"
                )
            cur = cur.children[0] if cur.children else None
        path = tuple(path)
    else:
        path = tuple(prefix_or_veo)
    vals = witness.values
    inst = []
    for node in path:
        try:
            inst.append((node, tuple(vals[v] for v in node)))
        except KeyError as exc:
            raise UnboundVariable(f"witness {witness.key} does not bind {exc.args[0]}")
    return PrefixInstance(tuple(inst))


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Monotone Boolean expression tree over tuple literals."""

    op: str  # "var" | "and" | "or" | "false"
    key: TupleKey | None = None
    children: tuple["Expr", ...] = ()

    @cached_property
    def length(self) -> int:
        if self.op == "var":
            return 1
        return sum(c.length for c in self.children)

    @cached_property
    def tuple_keys(self) -> frozenset[TupleKey]:
        if self.op == "var":
            return frozenset([self.key])
        out: set[TupleKey] = set()
        for c in self.children:
            out |= c.tuple_keys
        return frozenset(out)

    def pretty(self, ascii_only: bool = False) -> str:
        orsep = " v " if ascii_only else " ∨ "

        def rec(e: Expr) -> str:
            if e.op == "var":
                return tuple_id(e.key[0], e.key[1])
            if e.op == "false":
                return "false"
            if e.op == "or":
                return orsep.join(rec(c) for c in e.children)
            parts = []
            for c in e.children:
                s = rec(c)
                if c.op == "or" and len(c.children) > 1:
                    s = f"({s})"
                parts.append(s)
            return " ".join(parts)

        return rec(self)

    def __str__(self) -> str:
        return self.pretty()


def e_var(key: TupleKey) -> Expr:
    return Expr("var", key=key)


def e_and(children: list[Expr]) -> Expr:
    flat: list[Expr] = []
    for c in children:
        if c.op == "and":
            flat.extend(c.children)
        else:
            flat.append(c)
    if len(flat) == 1:
        return flat[0]
    return Expr("and", children=tuple(flat))


def e_or(children: list[Expr]) -> Expr:
    flat: list[Expr] = []
    for c in children:
        if c.op == "or":
            flat.extend(c.children)
        else:
            flat.append(c)
    if len(flat) == 1:
        return flat[0]
    return Expr("or", children=tuple(flat))


def expand(e: Expr, max_terms: int = 200_000) -> set[frozenset[TupleKey]]:
    """Distribute into DNF product terms, guarded by a term-count cap."""
    if e.op == "false":
        return set()
    if e.op == "var":
        return {frozenset([e.key])}
    child_terms = [expand(c, max_terms) for c in e.children]
    if e.op == "or":
        out: set[frozenset[TupleKey]] = set()
        for ts in child_terms:
            out |= ts
            if len(out) > max_terms:
                raise ExpansionTooLarge(f"more than {max_terms} product terms")
        return out
    # and: cross product
    terms: set[frozenset[TupleKey]] = {frozenset()}
    for ts in child_terms:
        nxt = set()
        for a in terms:
            for b in ts:
                nxt.add(a | b)
                if len(nxt) > max_terms:
                    raise ExpansionTooLarge(f"more than {max_terms} product terms")
        terms = nxt
    return terms


@dataclass(frozen=True)
class Factorization:
    """A witness→plan assignment together with its assembled expression."""

    assignment: tuple[tuple[Witness, Veo], ...]
    expression: Expr
    length: int
    repeats: int

    @cached_property
    def assignment_map(self) -> dict[Witness, Veo]:
        return dict(self.assignment)

    def pretty(self, ascii_only: bool = False) -> str:
        return self.expression.pretty(ascii_only)


# --------------------------------------------------------------------------
# Assembly
# --------------------------------------------------------------------------

def _anchored_tuples(q: Query, inst: PrefixInstance) -> tuple[TupleKey, ...]:
    """Tuples charged to a prefix-instance node: atoms whose variables lie on
    the path and intersect its last node (determined by the path alone)."""
    last_node = inst.path[-1][0]
    vals = inst.values
    pathvars = inst.varset
    out = []
    for a in q.atoms:
        if a.varset <= pathvars and a.varset & frozenset(last_node):
            out.append((a.relation, tuple(vals[v] for v in a.vars)))
    return tuple(sorted(set(out)))


@dataclass
class _TrieNode:
    inst: PrefixInstance
    tuples: tuple[TupleKey, ...]
    # branch signature (tuple of child node varsets) → child node varset → child serials
    groups: dict[tuple[Node, ...], dict[Node, set[str]]] = field(default_factory=dict)


def assemble(q: Query, W: WitnessSet, assignment: dict[Witness, Veo]) -> Factorization:
    """Build the factorization expression for a witness→plan assignment.

    The expression is a trie over serialized prefix instances: at each node,
    AND the tuples anchored there with, per branch signature, an AND over
    branches of ORs over child instances.  Instances shared across witnesses
    (and across different plans) merge.
    """
    if set(assignment) != set(W.witnesses):
        raise IllegalAssignment("assignment must cover exactly the witness set")
    if not W.witnesses:
        return Factorization((), Expr("false"), 0, 0)

    trie: dict[str, _TrieNode] = {}
    roots: set[str] = set()

    def node_for(inst: PrefixInstance) -> _TrieNode:
        n = trie.get(inst.serial)
        if n is None:
            n = _TrieNode(inst, _anchored_tuples(q, inst))
            trie[inst.serial] = n
        return n

    for w, v in sorted(assignment.items(), key=lambda kv: kv[0].key):
        if v.vars_below != q.variables:
            raise IllegalAssignment(f"plan {v} does not cover the variables of {q.name}")
        vals = w.values

        def walk(t: Veo, path: tuple[tuple[Node, tuple[str, ...]], ...]):
            try:
                step = path + ((t.node, tuple(vals[x] for x in t.node)),)
            except KeyError as exc:
                raise IllegalAssignment(
                    f"witness {w.key} does not bind {exc.args[0]}"
                )
            inst = PrefixInstance(step)
            n = node_for(inst)
            sig = tuple(sorted(c.node for c in t.children))
            if sig:
                branches = n.groups.setdefault(sig, {})
                for c in t.children:
                    child_inst = PrefixInstance(
                        step + ((c.node, tuple(vals[x] for x in c.node)),)
                    )
                    branches.setdefault(c.node, set()).add(child_inst.serial)
                    walk(c, step)
            else:
                n.groups.setdefault((), {})
            return inst

        root_inst = walk(v, ())
        roots.add(root_inst.serial)

    def build(serial: str) -> Expr:
        n = trie[serial]
        parts: list[Expr] = [e_var(t) for t in n.tuples]
        group_exprs: list[Expr] = []
        for sig in sorted(n.groups):
            if not sig:
                continue
            branches = n.groups[sig]
            branch_exprs = [
                e_or([build(cs) for cs in sorted(branches[bn])])
                for bn in sorted(branches)
            ]
            group_exprs.append(e_and(branch_exprs))
        if group_exprs:
            if () in n.groups:
                # a witness terminates here while others continue below; the
                # terminating witness is already fully covered by the node's
                # tuples, so the continuations stay mandatory only for their
                # own group — expressed as OR with the empty continuation.
                # (Cannot occur for legal plans over set semantics; guarded.)
                raise IllegalAssignment(
                    f"node {serial} mixes terminal and continuing plans"
                )
            parts.append(e_or(group_exprs))
        return e_and(parts) if parts else Expr("false")

    expr = e_or([build(r) for r in sorted(roots)])
    length = expr.length
    repeats = length - len(expr.tuple_keys)
    assignment_items = tuple(sorted(assignment.items(), key=lambda kv: kv[0].key))
    return Factorization(assignment_items, expr, length, repeats)


def verify_equivalence(f: Factorization, W: WitnessSet, max_terms: int = 200_000) -> bool:
    """Expand the expression to DNF terms and compare with the witness terms."""
    try:
        terms = expand(f.expression, max_terms)
    except RecursionError:
        raise ExpansionTooLarge("expression too deep to expand")
    return terms == W.dnf_terms()


def detect_p4(W: WitnessSet):
    """Find a P4 pattern (w1, r, w2, s, w3): w2 shares r with w1 and s with w3,
    while w1 lacks s and w3 lacks r.  Returns the pattern or None (read-once)."""
    ws = W.witnesses
    for w2 in ws:
        for w1 in ws:
            if w1 is w2:
                continue
            shared_r = w1.tuple_set & w2.tuple_set
            if not shared_r:
                continue
            for w3 in ws:
                if w3 is w2 or w3 is w1:
                    continue
                shared_s = (w3.tuple_set & w2.tuple_set) - w1.tuple_set
                if not shared_s:
                    continue
                for r in sorted(shared_r - w3.tuple_set):
                    s = min(shared_s)
                    return (w1, r, w2, s, w3)
    return None


def fact_decision(q: Query, d: Database, k: int) -> bool:
    """Is there a factorization with at most k repeated literals?"""
    from .exact import solve_exact  # local import to avoid a module cycle

    W = compute_witnesses(q, d)
    if not W.witnesses:
        return True
    res = solve_exact(q, W)
    return (res.length - len(W.distinct_tuples)) <= k
