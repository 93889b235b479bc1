"""Flow/min-cut heuristic for minimal factorization.

Each witness contributes a source-to-sink chain of zero-capacity plan nodes
(one per ordering leaf); every prefix instance becomes a weighted node that
bypasses the chain segment its plan positions span, shared across witnesses.
A minimum s-t node cut then selects one plan per witness plus the prefix
instances those plans need; cross-witness paths through shared instance
nodes are what can push the cut above the true optimum on non-amenable
queries (leakage).

Parallel segments of a nested ordering become parallel sub-chains between
shared connectors, so a cut chooses one alternative per independent
component.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .cq import Query
from .provenance import (
    Factorization,
    PrefixInstance,
    Witness,
    WitnessSet,
    assemble,
    instantiate,
)
from .veo import Node, Ordering, Veo, _chain, prefix_path

log = logging.getLogger(__name__)

__all__ = [
    "FlowGraph",
    "FlowResult",
    "NonRpOrdering",
    "ExtractionFailure",
    "KernelUnavailable",
    "build_flow_graph",
    "min_cut",
    "extract_factorization",
    "kernel_name",
]


class NonRpOrdering(ValueError):
    """strict running-prefixes mode rejected a non-RP ordering."""


class ExtractionFailure(RuntimeError):
    """No plan assignment could be read off the minimum cut."""


class KernelUnavailable(ImportError):
    """The requested max-flow kernel is not importable."""


def _load_kernel(kind: str = "auto"):
    if kind in ("auto", "c"):
        try:
            from . import _mincut_c  # type: ignore[attr-defined]

            return _mincut_c.max_flow, "c"
        except ImportError:
            if kind == "c":
                raise KernelUnavailable("compiled kernel _mincut_c is not built")
    if kind in ("auto", "py"):
        from . import _mincut

        return _mincut.max_flow, "py"
    raise ValueError(f"unknown kernel {kind!r}")


def kernel_name(kind: str = "auto") -> str:
    """Which kernel `kind` resolves to ("c" or "py")."""
    return _load_kernel(kind)[1]


# node keys: ("s",) ("t",) ("c", w, i) ("q", w, leaf) ("p", serial)
_S = ("s",)
_T = ("t",)


@dataclass
class _Site:
    a: int  # left connector node id
    b: int  # right connector node id
    leaf: tuple[int, int] | None  # (witness, leaf index) when attached at a leaf


@dataclass
class _Shadow:
    """Per-witness mirror of one ordering alternative, for extraction."""

    ext: tuple[Node, ...]
    ext_serials: list[str] = field(default_factory=list)
    leaf: tuple[int, int] | None = None
    sub: Veo | None = None
    leaf_serials: list[str] = field(default_factory=list)
    children: list["_Shadow"] = field(default_factory=list)
    comps: list[list["_Shadow"]] = field(default_factory=list)


@dataclass
class FlowGraph:
    query: Query
    witnesses: WitnessSet
    ordering: Ordering
    node_count: int
    arcs: list[tuple[int, int, int]]
    source: int
    sink: int
    cap_nodes: dict[tuple, tuple[int, int, int]]  # key -> (in_id, out_id, cap)
    shadows: list[_Shadow]  # one per (witness, top alternative), grouped
    shadow_tops: list[list[_Shadow]]  # per witness, top-level alternatives
    instances: dict[str, PrefixInstance]
    folded: dict[str, tuple[int, int]]  # serial -> owning leaf key
    inf: int
    names: dict[int, str]

    def dot(self) -> str:
        """GraphViz rendering of the construction (for --dump-graph)."""
        lines = ["digraph flow {", "  rankdir=LR;"]
        for nid in range(self.node_count):
            label = self.names.get(nid, f"n{nid}")
            lines.append(f'  n{nid} [label="{label}"];')
        for u, v, c in self.arcs:
            style = "" if c < self.inf else " [style=dashed]"
            cap = str(c) if c < self.inf else "inf"
            lines.append(f'  n{u} -> n{v} [label="{cap}"]{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass
class FlowResult:
    value: int
    cut: set[tuple]  # cap-node keys on the cut frontier
    kernel: str
    reachable: list[bool]


def _anchored_weight(q: Query, path: tuple[Node, ...]) -> int:
    pathvars = frozenset(v for node in path for v in node)
    last = frozenset(path[-1])
    return sum(
        1 for a in q.atoms if a.varset <= pathvars and a.varset & last
    )


def build_flow_graph(
    q: Query, W: WitnessSet, ordering: Ordering, strict_rp: bool = False
) -> FlowGraph:
    """Construct the witness-chain / instance-bypass graph for `ordering`."""
    if strict_rp and not ordering.rp:
        raise NonRpOrdering(
            "ordering violates the running-prefixes property in strict mode"
        )

    names: dict[int, str] = {}
    next_id = [0]

    def new_node(label: str) -> int:
        nid = next_id[0]
        next_id[0] += 1
        names[nid] = label
        return nid

    source = new_node("S")
    sink = new_node("T")

    # pass 1: walk every witness, recording attachment sites per instance
    sites: dict[str, list[tuple[int, _Site]]] = {}  # serial -> [(witness, site)]
    instances: dict[str, PrefixInstance] = {}
    weights: dict[str, int] = {}
    leaf_bounds: dict[tuple[int, int], tuple[int, int]] = {}
    shadow_tops: list[list[_Shadow]] = []
    chain_arcs: list[tuple[int, int]] = []  # connector-to-connector plumbing

    def attach(wi: int, inst: PrefixInstance, wgt: int, a: int, b: int, leaf):
        rec = sites.setdefault(inst.serial, [])
        rec.append((wi, _Site(a, b, leaf)))
        instances[inst.serial] = inst
        prev = weights.get(inst.serial)
        if prev is not None and prev != wgt:
            raise AssertionError(f"inconsistent weight for instance {inst.serial}")
        weights[inst.serial] = wgt

    for wi, w in enumerate(W.witnesses):
        leaf_counter = [0]
        tops: list[_Shadow] = []

        def walk_seq(alts, a, b, cum, out_list):
            conns = [a]
            for _ in range(len(alts) - 1):
                conns.append(new_node(f"c{wi}.{len(conns)}"))
            conns.append(b)
            for i, alt in enumerate(alts):
                out_list.append(walk_alt(alt, conns[i], conns[i + 1], cum))

        def walk_alt(alt, a, b, cum) -> _Shadow:
            new_cum = cum + alt.ext
            sh = _Shadow(ext=alt.ext)
            for d in range(len(cum) + 1, len(new_cum) + 1):
                path = new_cum[:d]
                wgt = _anchored_weight(q, path)
                if wgt:
                    inst = instantiate(path, w)
                    attach(wi, inst, wgt, a, b, None)
                    sh.ext_serials.append(inst.serial)
            if alt.sub is not None:
                fragment = _chain(new_cum, (alt.sub,)) if new_cum else alt.sub
                leaf_key = (wi, leaf_counter[0])
                leaf_counter[0] += 1
                sh.leaf = leaf_key
                sh.sub = alt.sub
                leaf_bounds[leaf_key] = (a, b)
                groups: dict[tuple[Node, ...], int] = {}
                for atom in q.atoms:
                    if atom.varset <= fragment.vars_below:
                        p = prefix_path(fragment, atom.varset)
                        if len(p) > len(new_cum):
                            groups[p] = groups.get(p, 0) + 1
                for p in sorted(groups):
                    inst = instantiate(p, w)
                    attach(wi, inst, groups[p], a, b, leaf_key)
                    sh.leaf_serials.append(inst.serial)
            elif alt.seq:
                walk_seq(alt.seq, a, b, new_cum, sh.children)
            else:
                for comp in alt.par:
                    comp_out: list[_Shadow] = []
                    walk_seq(comp, a, b, new_cum, comp_out)
                    sh.comps.append(comp_out)
            return sh

        w_start = new_node(f"c{wi}.s")
        w_end = new_node(f"c{wi}.e")
        chain_arcs.append((source, w_start))
        chain_arcs.append((w_end, sink))
        walk_seq(ordering.alts, w_start, w_end, (), tops)
        shadow_tops.append(tops)

    # merge adjacent sites (shared connector) into runs, per witness+instance
    merged: dict[str, list[tuple[int, _Site]]] = {}
    for serial, recs in sites.items():
        by_w: dict[int, list[_Site]] = {}
        for wi, site in recs:
            by_w.setdefault(wi, []).append(site)
        out: list[tuple[int, _Site]] = []
        for wi, slist in by_w.items():
            runs: list[_Site] = []
            for s in slist:
                if runs and runs[-1].b == s.a:
                    prev = runs[-1]
                    runs[-1] = _Site(prev.a, s.b, None)
                else:
                    runs.append(s)
            out.extend((wi, r) for r in runs)
        merged[serial] = out

    # fold instances touched by exactly one leaf globally into that leaf's q
    folded: dict[str, tuple[int, int]] = {}
    q_caps: dict[tuple[int, int], int] = {key: 0 for key in leaf_bounds}
    for serial, recs in merged.items():
        if len(recs) == 1 and recs[0][1].leaf is not None:
            leaf = recs[0][1].leaf
            q_caps[leaf] += weights[serial]
            folded[serial] = leaf

    total = sum(weights.values()) + 1
    inf = total

    cap_nodes: dict[tuple, tuple[int, int, int]] = {}
    arcs: list[tuple[int, int, int]] = [(u, v, inf) for u, v in chain_arcs]

    for leaf_key in sorted(leaf_bounds):
        a, b = leaf_bounds[leaf_key]
        nin = new_node(f"q{leaf_key[0]}.{leaf_key[1]}.in")
        nout = new_node(f"q{leaf_key[0]}.{leaf_key[1]}.out")
        cap_nodes[("q",) + leaf_key] = (nin, nout, q_caps[leaf_key])
        arcs.append((nin, nout, q_caps[leaf_key]))
        arcs.append((a, nin, inf))
        arcs.append((nout, b, inf))

    for serial in sorted(merged):
        if serial in folded:
            continue
        nin = new_node(f"p[{serial}].in")
        nout = new_node(f"p[{serial}].out")
        cap_nodes[("p", serial)] = (nin, nout, weights[serial])
        arcs.append((nin, nout, weights[serial]))
        seen_arcs = set()
        for _, site in merged[serial]:
            if (site.a, nin) not in seen_arcs:
                arcs.append((site.a, nin, inf))
                seen_arcs.add((site.a, nin))
            if (nout, site.b) not in seen_arcs:
                arcs.append((nout, site.b, inf))
                seen_arcs.add((nout, site.b))

    g = FlowGraph(
        query=q,
        witnesses=W,
        ordering=ordering,
        node_count=next_id[0],
        arcs=arcs,
        source=source,
        sink=sink,
        cap_nodes=cap_nodes,
        shadows=[sh for tops in shadow_tops for sh in tops],
        shadow_tops=shadow_tops,
        instances=instances,
        folded=folded,
        inf=inf,
        names=names,
    )
    log.debug(
        "flow graph: %d nodes, %d arcs, %d instance nodes, %d folded",
        g.node_count,
        len(arcs),
        len(merged) - len(folded),
        len(folded),
    )
    return g


def min_cut(g: FlowGraph, kernel: str = "auto") -> FlowResult:
    """Max-flow / min-cut over the graph; the cut is the canonical residual
    frontier (cap nodes whose entry is reachable from S but whose exit is not).
    """
    fn, used = _load_kernel(kernel)
    value, reachable = fn(g.node_count, g.arcs, g.source, g.sink)
    cut = {
        key
        for key, (nin, nout, cap) in g.cap_nodes.items()
        if reachable[nin] and not reachable[nout]
    }
    cut_weight = sum(g.cap_nodes[key][2] for key in cut)
    if cut_weight != value:
        raise AssertionError(
            f"cut frontier weight {cut_weight} != flow value {value}"
        )
    return FlowResult(value=int(value), cut=cut, kernel=used, reachable=reachable)


def _paid(serial: str, cut: set, folded: dict) -> bool:
    leaf = folded.get(serial)
    if leaf is not None:
        return ("q",) + leaf in cut
    return ("p", serial) in cut


def _extract_alt(sh: _Shadow, cut: set, folded: dict) -> Veo | None:
    """Fragment below the parent's cumulative path, or None if not selected."""
    if not all(_paid(s, cut, folded) for s in sh.ext_serials):
        return None
    if sh.leaf is not None:
        if ("q",) + sh.leaf not in cut:
            return None
        if not all(_paid(s, cut, folded) for s in sh.leaf_serials):
            return None
        return _chain(sh.ext, (sh.sub,)) if sh.ext else sh.sub
    if sh.children:
        for child in sh.children:
            frag = _extract_alt(child, cut, folded)
            if frag is not None:
                return _chain(sh.ext, (frag,)) if sh.ext else frag
        return None
    tails = []
    for comp in sh.comps:
        for child in comp:
            frag = _extract_alt(child, cut, folded)
            if frag is not None:
                tails.append(frag)
                break
        else:
            return None
    return _chain(sh.ext, tuple(tails))


def extract_factorization(
    g: FlowGraph, res: FlowResult
) -> tuple[Factorization, dict[Witness, Veo]]:
    """Read a plan assignment off the cut (leftmost selected alternative per
    witness) and assemble it; guaranteed no longer than the cut value."""
    assignment: dict[Witness, Veo] = {}
    for wi, w in enumerate(g.witnesses.witnesses):
        chosen = None
        for sh in g.shadow_tops[wi]:
            chosen = _extract_alt(sh, res.cut, g.folded)
            if chosen is not None:
                break
        if chosen is None:
            raise ExtractionFailure(
                f"no plan for witness {w.key} is fully covered by the cut"
            )
        assignment[w] = chosen
    fact = assemble(g.query, g.witnesses, assignment)
    if fact.length > res.value:
        raise AssertionError(
            f"extracted length {fact.length} exceeds cut value {res.value}"
        )
    return fact, assignment
