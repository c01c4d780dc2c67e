"""Subsumption, disjointness and consistency for OWL 2 QL TBoxes.

The index closes the declared inclusions saturatively: qualified existentials
contribute their unqualified projection (B sub ex R . B' gives B sub ex R),
role inclusions lift to existentials and mirror under inversion, and the
whole order is transitively closed.  Unsatisfiable concepts (forced empty by
disjointness) are computed as a fixpoint and subsume everything, which makes
the order sound *and complete* for entailment over the basic concepts of the
signature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dl import (
    ABox,
    Atomic,
    BOT,
    BasicConcept,
    Bottom,
    ConceptAssertion,
    ConceptDisjoint,
    ConceptSub,
    Exists,
    ExistsQualified,
    Role,
    RoleAssertion,
    RoleDisjoint,
    RoleSub,
    Signature,
    TBox,
    Top,
    TOP,
    basic_key,
)


@dataclass(frozen=True)
class QualifiedAxiom:
    """A declared inclusion lhs sub ex role . filler (filler Top if plain)."""

    lhs: BasicConcept
    role: Role
    filler: BasicConcept


@dataclass
class SubsumptionIndex:
    signature: Signature
    basics: tuple[BasicConcept, ...]
    roles: tuple[Role, ...]
    qualified_axioms: tuple[QualifiedAxiom, ...]
    _up: dict[BasicConcept, frozenset[BasicConcept]] = field(repr=False, default_factory=dict)
    _role_up: dict[Role, frozenset[Role]] = field(repr=False, default_factory=dict)
    _cdisj: frozenset[tuple[BasicConcept, BasicConcept]] = frozenset()
    _rdisj: frozenset[tuple[Role, Role]] = frozenset()
    _c_unsat: frozenset[BasicConcept] = frozenset()
    _r_unsat: frozenset[Role] = frozenset()

    # -- orders ------------------------------------------------------------

    def up_set(self, b: BasicConcept) -> frozenset[BasicConcept]:
        if isinstance(b, Top):
            return frozenset({TOP})
        if isinstance(b, Bottom):
            return frozenset(self.basics) | {BOT, TOP}
        return self._up.get(b, frozenset({b, TOP}))

    def concept_subsumes(self, b1: BasicConcept, b2: BasicConcept) -> bool:
        """T entails b1 sub b2."""
        if isinstance(b2, Top) or isinstance(b1, Bottom):
            return True
        if self.concept_unsat(b1):
            return True
        if isinstance(b2, Bottom):
            return False
        return b2 in self.up_set(b1)

    def role_subsumes(self, r1: Role, r2: Role) -> bool:
        return r1 == r2 or self.role_unsat(r1) or r2 in self._role_up.get(r1, frozenset({r1}))

    def concept_unsat(self, b: BasicConcept) -> bool:
        if isinstance(b, Bottom):
            return True
        return b in self._c_unsat

    def role_unsat(self, r: Role) -> bool:
        return r in self._r_unsat

    def concept_disjoint(self, b1: BasicConcept, b2: BasicConcept) -> bool:
        """T entails b1 & b2 sub bot."""
        if self.concept_unsat(b1) or self.concept_unsat(b2):
            return True
        up1, up2 = self.up_set(b1), self.up_set(b2)
        return any((d1 in up1 and d2 in up2) or (d1 in up2 and d2 in up1) for d1, d2 in self._cdisj)

    def role_disjoint(self, r1: Role, r2: Role) -> bool:
        if self.role_unsat(r1) or self.role_unsat(r2):
            return True
        up1 = self._role_up.get(r1, frozenset({r1}))
        up2 = self._role_up.get(r2, frozenset({r2}))
        return any((d1 in up1 and d2 in up2) or (d1 in up2 and d2 in up1) for d1, d2 in self._rdisj)

    # -- equivalence classes -------------------------------------------------

    def concept_rep(self, b: BasicConcept) -> BasicConcept:
        cls = [c for c in self.basics if self.concept_subsumes(b, c) and self.concept_subsumes(c, b)]
        cls.append(b)
        return min(cls, key=basic_key)

    def role_rep(self, r: Role) -> Role:
        cls = [s for s in self.roles if self.role_subsumes(r, s) and self.role_subsumes(s, r)]
        cls.append(r)
        return min(cls)

    def equivalence_classes(self) -> list[frozenset[BasicConcept]]:
        seen: set[BasicConcept] = set()
        out = []
        for b in self.basics:
            if b in seen:
                continue
            cls = frozenset(
                c for c in self.basics if self.concept_subsumes(b, c) and self.concept_subsumes(c, b)
            )
            seen |= cls
            out.append(cls)
        return out


def _role_universe(sig: Signature) -> list[Role]:
    return [Role(p, inv) for p in sorted(sig.roles) for inv in (False, True)]


def _basic_universe(sig: Signature) -> list[BasicConcept]:
    out: list[BasicConcept] = [Atomic(a) for a in sorted(sig.concepts)]
    out.extend(Exists(r) for r in _role_universe(sig))
    return out


def entailment_index(t: TBox, extra: Signature | None = None) -> SubsumptionIndex:
    """Close a TBox into a SubsumptionIndex over its signature (plus `extra`)."""
    sig = t.signature.union(extra) if extra is not None else t.signature
    basics = _basic_universe(sig)
    roles = _role_universe(sig)

    role_edges: dict[Role, set[Role]] = {r: {r} for r in roles}
    for inc in t.inclusions:
        if isinstance(inc, RoleSub):
            role_edges.setdefault(inc.lhs, {inc.lhs}).add(inc.rhs)
            role_edges.setdefault(inc.lhs.inverse(), {inc.lhs.inverse()}).add(inc.rhs.inverse())
    role_up = {r: frozenset(_reach(r, role_edges)) for r in role_edges}

    edges: dict[BasicConcept, set[BasicConcept]] = {b: {b, TOP} for b in basics}
    bot_seeds: set[BasicConcept] = set()
    qualified: list[QualifiedAxiom] = []
    cdisj: set[tuple[BasicConcept, BasicConcept]] = set()
    rdisj: set[tuple[Role, Role]] = set()
    for inc in t.inclusions:
        if isinstance(inc, ConceptSub):
            rhs = inc.rhs
            if isinstance(rhs, Exists):
                rhs = ExistsQualified(rhs.role, TOP)
            if isinstance(rhs, Bottom):
                bot_seeds.add(inc.lhs)
            elif isinstance(rhs, Atomic):
                edges.setdefault(inc.lhs, {inc.lhs, TOP}).add(rhs)
            elif isinstance(rhs, ExistsQualified):
                edges.setdefault(inc.lhs, {inc.lhs, TOP}).add(Exists(rhs.role))
                qualified.append(QualifiedAxiom(inc.lhs, rhs.role, rhs.filler))
        elif isinstance(inc, ConceptDisjoint):
            cdisj.add((inc.lhs, inc.rhs))
            cdisj.add((inc.rhs, inc.lhs))
        elif isinstance(inc, RoleDisjoint):
            rdisj.add((inc.lhs, inc.rhs))
            rdisj.add((inc.rhs, inc.lhs))
            rdisj.add((inc.lhs.inverse(), inc.rhs.inverse()))
            rdisj.add((inc.rhs.inverse(), inc.lhs.inverse()))

    for r, ups in role_up.items():
        for s in ups:
            edges.setdefault(Exists(r), {Exists(r), TOP}).add(Exists(s))
    up = {b: frozenset(_reach(b, edges)) for b in edges}

    # Unsatisfiability fixpoint: disjointness can force concepts/roles empty,
    # including through the witness type of a qualified existential.
    c_unsat: set[BasicConcept] = set(bot_seeds)
    r_unsat: set[Role] = set()

    def up_of(b: BasicConcept) -> frozenset[BasicConcept]:
        if isinstance(b, Top):
            return frozenset({TOP})
        return up.get(b, frozenset({b, TOP}))

    def clash(members: set[BasicConcept]) -> bool:
        if members & c_unsat:
            return True
        return any(d1 in members and d2 in members for d1, d2 in cdisj)

    changed = True
    while changed:
        changed = False
        for r in roles:
            if r in r_unsat:
                continue
            ups = role_up.get(r, frozenset({r}))
            bad = any(d1 in ups and d2 in ups for d1, d2 in rdisj)
            bad = bad or Exists(r) in c_unsat or Exists(r.inverse()) in c_unsat
            if bad:
                r_unsat.add(r)
                changed = True
        for b in basics:
            if b in c_unsat:
                continue
            bad = bool(up_of(b) & c_unsat) or clash(set(up_of(b)))
            if not bad and isinstance(b, Exists):
                bad = b.role in r_unsat
            if bad:
                c_unsat.add(b)
                changed = True
        for ax in qualified:
            if ax.lhs in c_unsat:
                continue
            members = set(up_of(Exists(ax.role.inverse()))) | set(up_of(ax.filler))
            if ax.role in r_unsat or ax.filler in c_unsat or clash(members):
                c_unsat.add(ax.lhs)
                changed = True

    return SubsumptionIndex(
        signature=sig,
        basics=tuple(basics),
        roles=tuple(roles),
        qualified_axioms=tuple(qualified),
        _up=up,
        _role_up=role_up,
        _cdisj=frozenset(cdisj),
        _rdisj=frozenset(rdisj),
        _c_unsat=frozenset(c_unsat),
        _r_unsat=frozenset(r_unsat),
    )


def _reach(start, edges) -> set:
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for nxt in edges.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def individual_memberships(index: SubsumptionIndex, a: ABox) -> dict[str, frozenset[BasicConcept]]:
    """Entailed basic-concept memberships of every ABox individual, upward closed."""
    seeds: dict[str, set[BasicConcept]] = {ind: set() for ind in a.individuals()}
    for f in a.assertions:
        if isinstance(f, ConceptAssertion):
            seeds.setdefault(f.individual, set()).add(Atomic(f.concept))
        else:
            seeds.setdefault(f.subject, set()).add(Exists(Role(f.role)))
            seeds.setdefault(f.object, set()).add(Exists(Role(f.role, True)))
    out = {}
    for ind, ss in seeds.items():
        members: set[BasicConcept] = {TOP}
        for s in ss:
            members |= index.up_set(s)
        out[ind] = frozenset(members)
    return out


def entailed_role_edges(index: SubsumptionIndex, a: ABox) -> dict[tuple[str, str], frozenset[str]]:
    """Entailed role atoms between individuals: (x, y) -> role names P with K |= P(x,y)."""
    out: dict[tuple[str, str], set[str]] = {}
    for f in a.assertions:
        if not isinstance(f, RoleAssertion):
            continue
        for s in index._role_up.get(Role(f.role), frozenset({Role(f.role)})):
            if s.inverted:
                out.setdefault((f.object, f.subject), set()).add(s.name)
            else:
                out.setdefault((f.subject, f.object), set()).add(s.name)
    return {k: frozenset(v) for k, v in out.items()}


def is_consistent(t: TBox, a: ABox) -> bool:
    """Whether (T, A) has a model.

    Individual types are closed under the index and checked against
    disjointness; the reachable witness types of the anonymous part are
    covered by the index's unsatisfiability fixpoint (a clash inside or below
    a witness type makes the triggering concept unsatisfiable).
    """
    index = entailment_index(t, extra=a.signature)
    members = individual_memberships(index, a)
    for ms in members.values():
        if any(index.concept_unsat(m) for m in ms):
            return False
        pairs = [(d1, d2) for d1, d2 in index._cdisj]
        if any(d1 in ms and d2 in ms for d1, d2 in pairs):
            return False
    # role assertions on the same ordered pair
    by_pair: dict[tuple[str, str], set[Role]] = {}
    for f in a.assertions:
        if isinstance(f, RoleAssertion):
            by_pair.setdefault((f.subject, f.object), set()).add(Role(f.role))
            by_pair.setdefault((f.object, f.subject), set()).add(Role(f.role, True))
    for rs in by_pair.values():
        for r1, r2 in itertools.combinations_with_replacement(sorted(rs), 2):
            if index.role_disjoint(r1, r2):
                return False
    return True
