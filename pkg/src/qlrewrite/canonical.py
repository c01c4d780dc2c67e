"""Canonical models for OWL 2 QL KBs: type graph, bounded unraveling, certain answers.

The type graph is the finite quotient of the canonical model: one node per
ABox individual plus one per witness class [R],[B].  Its unraveling (walks
from individuals along generating edges) reconstructs the canonical model;
`materialize` produces the prefix tree of walks up to a depth, and certain
answers are decided by homomorphism search over that truncation.  Two engines
are provided: a dynamic program over (query node, element) pairs for
tree-shaped queries, and generic backtracking for everything else.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dl import (
    ABox,
    Atomic,
    BasicConcept,
    CQ,
    ConceptAtom,
    Const,
    Exists,
    InconsistentKBError,
    ResourceCapError,
    Role,
    RoleAtom,
    TBox,
    Top,
    TOP,
    Var,
    basic_key,
)
from .taxonomy import (
    SubsumptionIndex,
    entailed_role_edges,
    entailment_index,
    individual_memberships,
    is_consistent,
)

INCONSISTENT = "inconsistent"

DEFAULT_ELEMENT_CAP = 200_000


@dataclass(frozen=True)
class WitnessClass:
    """Witness w_[RB], identified by class representatives of [R] and [B]."""

    role: Role
    filler: BasicConcept

    def sort_key(self) -> tuple:
        return (self.role.name, self.role.inverted, basic_key(self.filler))

    def label(self) -> str:
        filler = "top" if isinstance(self.filler, Top) else str(self.filler)
        return f"w[{self.role}|{filler}]"


@dataclass
class TypeGraph:
    individuals: tuple[str, ...]
    witnesses: tuple[WitnessClass, ...]
    memberships: dict[object, frozenset[BasicConcept]]
    gen_edges: dict[object, tuple[WitnessClass, ...]]
    fwd_roles: dict[WitnessClass, frozenset[str]]  # P such that R sub P
    bwd_roles: dict[WitnessClass, frozenset[str]]  # P such that R sub inv(P)
    abox_edges: dict[tuple[str, str], frozenset[str]]
    index: SubsumptionIndex = field(repr=False, default=None)

    def concept_names_at(self, node) -> frozenset[str]:
        return frozenset(b.name for b in self.memberships[node] if isinstance(b, Atomic))


def _class_pair(index: SubsumptionIndex, role: Role, filler: BasicConcept) -> WitnessClass:
    return WitnessClass(index.role_rep(role), index.concept_rep(filler))


def _pair_le(index: SubsumptionIndex, p: WitnessClass, q: WitnessClass) -> bool:
    return index.role_subsumes(p.role, q.role) and index.concept_subsumes(p.filler, q.filler)


def _minimal_pairs(index: SubsumptionIndex, pairs: set[WitnessClass]) -> list[WitnessClass]:
    out = []
    for p in pairs:
        if not any(q != p and _pair_le(index, q, p) and not _pair_le(index, p, q) for q in pairs):
            out.append(p)
    return sorted(out, key=WitnessClass.sort_key)


def build_type_graph(t: TBox, a: ABox) -> TypeGraph:
    """Generating relation and memberships of the canonical model's quotient."""
    if not is_consistent(t, a):
        raise InconsistentKBError("knowledge base is inconsistent")
    index = entailment_index(t, extra=a.signature)
    ind_members = individual_memberships(index, a)
    abox_edges = entailed_role_edges(index, a)
    individuals = tuple(sorted(a.individuals()))

    declared: dict[WitnessClass, None] = {}
    for ax in index.qualified_axioms:
        declared.setdefault(_class_pair(index, ax.role, ax.filler), None)
    declared_pairs = list(declared)

    def entailed_pairs(members: frozenset[BasicConcept]) -> set[WitnessClass]:
        out = set()
        for wc in declared_pairs:
            if isinstance(wc.filler, Top):
                if Exists(wc.role) in members:
                    out.add(wc)
                continue
            for ax in index.qualified_axioms:
                if ax.lhs in members and _class_pair(index, ax.role, ax.filler) == wc:
                    out.add(wc)
                    break
        return out

    def witness_members(wc: WitnessClass) -> frozenset[BasicConcept]:
        members = set(index.up_set(Exists(wc.role.inverse())))
        if not isinstance(wc.filler, Top):
            members |= index.up_set(wc.filler)
        return frozenset(members)

    def role_entailed_between(role: Role, x: str, y: str) -> bool:
        if role.inverted:
            return role.name in abox_edges.get((y, x), frozenset())
        return role.name in abox_edges.get((x, y), frozenset())

    memberships: dict[object, frozenset[BasicConcept]] = dict(ind_members)
    gen_edges: dict[object, list[WitnessClass]] = {}
    generators: dict[WitnessClass, set[object]] = {}
    emitted: dict[object, set[WitnessClass]] = {}

    work: list[object] = []

    def add_edge(src, wc: WitnessClass) -> None:
        emitted.setdefault(src, set()).add(wc)
        gen_edges.setdefault(src, []).append(wc)
        if wc not in memberships:
            memberships[wc] = witness_members(wc)
            generators[wc] = set()
        if src not in generators[wc]:
            generators[wc].add(src)
            if wc not in work:
                work.append(wc)

    for ind in individuals:
        members = ind_members.get(ind, frozenset({TOP}))
        for wc in _minimal_pairs(index, entailed_pairs(members)):
            witnessed = any(
                role_entailed_between(wc.role, ind, b)
                and (isinstance(wc.filler, Top) or wc.filler in ind_members.get(b, frozenset()))
                for b in individuals
            )
            if not witnessed:
                add_edge(ind, wc)

    while work:
        src = work.pop(0)
        incoming_role = src.role
        for wc in _minimal_pairs(index, entailed_pairs(memberships[src])):
            if wc in emitted.get(src, set()):
                continue
            if index.role_subsumes(incoming_role, wc.role.inverse()):
                # the parent may already provide the (R, B)-successor; the edge
                # is needed only if some generator lacks the filler
                needed = any(
                    not (isinstance(wc.filler, Top) or wc.filler in memberships[u])
                    for u in generators[src]
                )
            else:
                needed = True
            if needed:
                add_edge(src, wc)

    witnesses = tuple(sorted(generators, key=WitnessClass.sort_key))
    fwd = {}
    bwd = {}
    for wc in witnesses:
        ups = index._role_up.get(wc.role, frozenset({wc.role}))
        fwd[wc] = frozenset(r.name for r in ups if not r.inverted)
        bwd[wc] = frozenset(r.name for r in ups if r.inverted)
    return TypeGraph(
        individuals=individuals,
        witnesses=witnesses,
        memberships=memberships,
        gen_edges={k: tuple(sorted(v, key=WitnessClass.sort_key)) for k, v in gen_edges.items()},
        fwd_roles=fwd,
        bwd_roles=bwd,
        abox_edges=abox_edges,
        index=index,
    )


@dataclass
class TruncatedModel:
    """Prefix tree of generated walks up to `depth`, plus the ABox core."""

    graph: TypeGraph
    depth: int
    parent: list[int | None]
    wclass: list[WitnessClass | None]
    node_of: list[object]
    depth_of: list[int]
    children: list[list[int]]
    concepts: list[frozenset[str]]
    ind_ids: dict[str, int]

    def __len__(self) -> int:
        return len(self.parent)

    def elements(self) -> range:
        return range(len(self.parent))

    def path_name(self, e: int) -> str:
        parts = []
        cur: int | None = e
        while cur is not None:
            node = self.node_of[cur]
            parts.append(node if isinstance(node, str) else node.label())
            cur = self.parent[cur]
        return ".".join(reversed(parts))

    def edge_roles(self, e1: int, e2: int) -> frozenset[str]:
        """Role names P with P(e1, e2) in the truncated canonical model."""
        if self.parent[e2] == e1:
            return self.graph.fwd_roles[self.wclass[e2]]
        if self.parent[e1] == e2:
            return self.graph.bwd_roles[self.wclass[e1]]
        n1, n2 = self.node_of[e1], self.node_of[e2]
        if isinstance(n1, str) and isinstance(n2, str):
            return self.graph.abox_edges.get((n1, n2), frozenset())
        return frozenset()

    def neighbors(self, e: int) -> list[int]:
        out = list(self.children[e])
        if self.parent[e] is not None:
            out.append(self.parent[e])
        node = self.node_of[e]
        if isinstance(node, str):
            for (x, y) in self.graph.abox_edges:
                if x == node:
                    out.append(self.ind_ids[y])
                elif y == node:
                    out.append(self.ind_ids[x])
        return out

    def has_concept(self, e: int, name: str) -> bool:
        return name in self.concepts[e]


def materialize(g: TypeGraph, depth: int, element_cap: int = DEFAULT_ELEMENT_CAP) -> TruncatedModel:
    """All generated paths of length <= depth, breadth first, children sorted."""
    parent: list[int | None] = []
    wclass: list[WitnessClass | None] = []
    node_of: list[object] = []
    depth_of: list[int] = []
    children: list[list[int]] = []
    concepts: list[frozenset[str]] = []
    ind_ids: dict[str, int] = {}

    def new_element(par, wc, node, d) -> int:
        if len(parent) >= element_cap:
            raise ResourceCapError(f"materialization exceeds {element_cap} elements")
        parent.append(par)
        wclass.append(wc)
        node_of.append(node)
        depth_of.append(d)
        children.append([])
        concepts.append(g.concept_names_at(node))
        return len(parent) - 1

    frontier = []
    for ind in g.individuals:
        e = new_element(None, None, ind, 0)
        ind_ids[ind] = e
        frontier.append(e)
    for d in range(1, depth + 1):
        nxt = []
        for e in frontier:
            for wc in g.gen_edges.get(node_of[e], ()):
                c = new_element(e, wc, wc, d)
                children[e].append(c)
                nxt.append(c)
        if not nxt:
            break
        frontier = nxt
    return TruncatedModel(
        graph=g,
        depth=depth,
        parent=parent,
        wclass=wclass,
        node_of=node_of,
        depth_of=depth_of,
        children=children,
        concepts=concepts,
        ind_ids=ind_ids,
    )


def default_depth(q: CQ, g: TypeGraph) -> int:
    """Truncation depth: query terms plus number of witness classes.

    Any homomorphic image fits within this many levels: components touching
    the core span at most |terms| levels, and components inside the anonymous
    forest can be shifted up to hang below a shortest walk to their top class.
    """
    return len(q.terms()) + len(g.witnesses)


def is_tree_shaped(q: CQ) -> bool:
    """Gaifman graph is acyclic with no multi-edges and no constants."""
    if q.constants():
        return False
    edges = set()
    for atom in q.atoms:
        if isinstance(atom, RoleAtom):
            if atom.arg1 == atom.arg2:
                return False
            e = frozenset((atom.arg1, atom.arg2))
            if e in edges:
                return False
            edges.add(e)
    # acyclicity: |E| = |V| - #components
    vars_ = q.variables()
    adj: dict[Var, set[Var]] = {v: set() for v in vars_}
    for e in edges:
        x, y = tuple(e)
        adj[x].add(y)
        adj[y].add(x)
    seen: set[Var] = set()
    comps = 0
    for v in vars_:
        if v in seen:
            continue
        comps += 1
        stack = [v]
        seen.add(v)
        while stack:
            cur = stack.pop()
            for n in adj[cur]:
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
    return len(edges) == len(vars_) - comps


def _atom_requirements(q: CQ):
    concept_req: dict[Var, set[str]] = {}
    edge_req: dict[tuple[Var, Var], set[tuple[str, bool]]] = {}
    for atom in q.atoms:
        if isinstance(atom, ConceptAtom):
            concept_req.setdefault(atom.term, set()).add(atom.concept)
        else:
            x, y = atom.arg1, atom.arg2
            key = (x, y) if (x.name <= y.name) else (y, x)
            forward = key == (x, y)
            edge_req.setdefault(key, set()).add((atom.role, forward))
    return concept_req, edge_req


def _edge_ok(m: TruncatedModel, e1: int, e2: int, req: set[tuple[str, bool]]) -> bool:
    fwd = None
    bwd = None
    for name, forward in req:
        if forward:
            if fwd is None:
                fwd = m.edge_roles(e1, e2)
            if name not in fwd:
                return False
        else:
            if bwd is None:
                bwd = m.edge_roles(e2, e1)
            if name not in bwd:
                return False
    return True


def tree_hom_exists(q: CQ, m: TruncatedModel, pinned: dict[Var, int]) -> bool:
    """Yannakakis-style DP over (query node, element) pairs; q must be tree shaped."""
    concept_req, edge_req = _atom_requirements(q)
    vars_ = sorted(q.variables())
    adj: dict[Var, list[Var]] = {v: [] for v in vars_}
    for (x, y) in edge_req:
        adj[x].append(y)
        adj[y].append(x)

    def label_ok(v: Var, e: int) -> bool:
        if v in pinned and pinned[v] != e:
            return False
        return all(m.has_concept(e, c) for c in concept_req.get(v, ()))

    feasible: dict[Var, set[int]] = {}
    visited: set[Var] = set()
    for start in vars_:
        if start in visited:
            continue
        # root the component and process in post-order
        order = []
        parent_var: dict[Var, Var | None] = {start: None}
        stack = [start]
        visited.add(start)
        while stack:
            cur = stack.pop()
            order.append(cur)
            for n in adj[cur]:
                if n not in parent_var:
                    parent_var[n] = cur
                    visited.add(n)
                    stack.append(n)
        for v in reversed(order):
            kids = [n for n in adj[v] if parent_var.get(n) is v]
            ok: set[int] = set()
            for e in m.elements():
                if not label_ok(v, e):
                    continue
                good = True
                for y in kids:
                    key = (v, y) if v.name <= y.name else (y, v)
                    req = edge_req[key]
                    req_vy = {(n, f if key == (v, y) else not f) for n, f in req}
                    if not any(
                        e2 in feasible[y] and _edge_ok(m, e, e2, req_vy)
                        for e2 in m.neighbors(e)
                    ):
                        good = False
                        break
                if good:
                    ok.add(e)
            feasible[v] = ok
        if not feasible[start]:
            return False
    return True


def hom_exists(q: CQ, m: TruncatedModel, seed: dict | None = None) -> bool:
    """Backtracking homomorphism search; seed maps query terms to element ids."""
    assignment: dict = {}
    for t in q.terms():
        if isinstance(t, Const):
            if t.name not in m.ind_ids:
                return False
            assignment[t] = m.ind_ids[t.name]
    if seed:
        for t, e in seed.items():
            if t in assignment and assignment[t] != e:
                return False
            assignment[t] = e

    atoms = list(q.atoms)

    def order_atoms() -> list:
        remaining = atoms[:]
        bound = set(assignment)
        out = []
        while remaining:
            remaining.sort(
                key=lambda a: (-sum(1 for t in a.terms() if t in bound), isinstance(a, RoleAtom))
            )
            nxt = remaining.pop(0)
            out.append(nxt)
            bound.update(nxt.terms())
        return out

    ordered = order_atoms()

    def candidates(atom, asg) -> list[dict]:
        if isinstance(atom, ConceptAtom):
            t = atom.term
            if t in asg:
                return [{}] if m.has_concept(asg[t], atom.concept) else []
            return [{t: e} for e in m.elements() if m.has_concept(e, atom.concept)]
        x, y = atom.arg1, atom.arg2
        if x in asg and y in asg:
            return [{}] if atom.role in m.edge_roles(asg[x], asg[y]) else []
        if x in asg:
            return [
                {y: e2} if y not in asg else {}
                for e2 in m.neighbors(asg[x])
                if atom.role in m.edge_roles(asg[x], e2)
            ]
        if y in asg:
            return [
                {x: e1}
                for e1 in m.neighbors(asg[y])
                if atom.role in m.edge_roles(e1, asg[y])
            ]
        out = []
        for e1 in m.elements():
            for e2 in m.neighbors(e1):
                if atom.role in m.edge_roles(e1, e2):
                    ext = {x: e1}
                    ext[y] = e2  # x == y is impossible here (no self-loop with x unbound twice)
                    if x == y and e1 != e2:
                        continue
                    out.append(ext)
        return out

    def search(i: int, asg: dict) -> bool:
        if i == len(ordered):
            return True
        atom = ordered[i]
        for ext in candidates(atom, asg):
            new = dict(asg)
            new.update(ext)
            if search(i + 1, new):
                return True
        return False

    return search(0, assignment)


def certain_answers(
    t: TBox,
    a: ABox,
    q: CQ,
    depth: int | None = None,
    element_cap: int = DEFAULT_ELEMENT_CAP,
    force_backtracking: bool = False,
):
    """Certain answers over (T, A); returns the INCONSISTENT marker if (T, A) has no model.

    Tree-shaped queries go through the DP engine, everything else through
    backtracking over the truncated unraveling.
    """
    if not is_consistent(t, a):
        return INCONSISTENT
    g = build_type_graph(t, a)
    d = default_depth(q, g) if depth is None else depth
    m = materialize(g, d, element_cap=element_cap)
    inds = sorted(a.individuals())
    use_tree = is_tree_shaped(q) and not force_backtracking
    answers = set()
    for combo in itertools.product(inds, repeat=len(q.answer_vars)):
        pinned = {v: m.ind_ids[c] for v, c in zip(q.answer_vars, combo)}
        if use_tree:
            ok = tree_hom_exists(q, m, pinned)
        else:
            ok = hom_exists(q, m, seed=pinned)
        if ok:
            answers.add(combo)
    return answers


def to_dot(m: TruncatedModel) -> str:
    """Deterministic DOT export: nodes in lexicographic path order."""
    names = {e: m.path_name(e) for e in m.elements()}
    order = sorted(m.elements(), key=lambda e: names[e])
    lines = ["digraph canonical {"]
    for e in order:
        label = names[e].split(".")[-1]
        cs = ",".join(sorted(m.concepts[e]))
        lines.append(f'  "{names[e]}" [label="{label}\\n{{{cs}}}"];')
    for e in order:
        p = m.parent[e]
        if p is not None:
            roles = ",".join(sorted(m.graph.fwd_roles[m.wclass[e]]))
            back = ",".join(sorted(m.graph.bwd_roles[m.wclass[e]]))
            label = roles
            if back:
                label = f"{roles};inv:{back}" if roles else f"inv:{back}"
            lines.append(f'  "{names[p]}" -> "{names[e]}" [label="{label}"];')
    for (x, y) in sorted(m.graph.abox_edges):
        roles = ",".join(sorted(m.graph.abox_edges[(x, y)]))
        lines.append(f'  "{x}" -> "{y}" [label="{roles}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
