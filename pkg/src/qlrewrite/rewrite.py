"""Pure positive-existential rewriting and its single-constant completion.

The classical rewriting saturates a set of CQs under backward application of
the (entailment-closed) inclusions: concept/role atoms are strengthened to
subsumed predicates, role atoms with an unshared existential end are absorbed
into the concepts that generate them, a qualified existential absorbs the
whole atom neighbourhood of a variable that fits its witness (role atoms
oriented from one common parent plus filler-entailed concept atoms), and
unifiable atom pairs are merged so absorption can fire (the reduce step).

The completion wraps an ABox-family-correct sentence into a rewriting that is
also right on the remaining single-individual ABoxes by adding one disjunct
per concept disjoint from the encoding's root concept.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .dl import (
    Atomic,
    BasicConcept,
    CQ,
    ConceptAtom,
    Const,
    Exists,
    ExistsQualified,
    ConceptSub,
    ResourceCapError,
    Role,
    RoleAtom,
    RoleSub,
    Signature,
    TBox,
    Term,
    Var,
)
from .encode import EncodedInstance
from .fo import FoAtom, Formula, fo_and, fo_exists, fo_or, FALSE
from .taxonomy import SubsumptionIndex, entailment_index

FRESH_ROLE_PREFIX = "_q_"


def _atom_terms(atom) -> tuple[Term, ...]:
    return atom.terms()


def _occurrences(atoms: frozenset) -> dict[Term, int]:
    out: dict[Term, int] = {}
    for a in atoms:
        for t in _atom_terms(a):
            out[t] = out.get(t, 0) + 1
    return out


def _substitute(atoms: frozenset, sub: dict[Term, Term]) -> frozenset:
    """Apply a (triangular, chain-following) unifier."""

    def s(t: Term) -> Term:
        while t in sub:
            t = sub[t]
        return t

    return _map_terms(atoms, s)


def _rename(atoms: frozenset, mapping: dict[Term, Term]) -> frozenset:
    """Apply a simultaneous variable renaming (no chain following)."""
    return _map_terms(atoms, lambda t: mapping.get(t, t))


def _map_terms(atoms: frozenset, s) -> frozenset:
    out = set()
    for a in atoms:
        if isinstance(a, ConceptAtom):
            out.add(ConceptAtom(a.concept, s(a.term)))
        else:
            out.add(RoleAtom(a.role, s(a.arg1), s(a.arg2)))
    return frozenset(out)


def _canonical(atoms: frozenset, answer_vars: tuple[Var, ...]) -> frozenset:
    """Rename existential variables deterministically (two refinement passes)."""
    from .dl import atom_key

    fixed = set(answer_vars)
    prefix = "e"
    while any(v.name.startswith(prefix) for v in fixed):
        prefix += "_"
    current = atoms
    for _ in range(2):
        mapping: dict[Var, Var] = {}
        for a in sorted(current, key=atom_key):
            for t in _atom_terms(a):
                if isinstance(t, Var) and t not in fixed and t not in mapping:
                    mapping[t] = Var(f"{prefix}{len(mapping)}")
        current = _rename(current, mapping)
    return current


def _realize(b: BasicConcept, t: Term, fresh) -> object:
    """The atom realizing membership in a basic concept at term t."""
    if isinstance(b, Atomic):
        return ConceptAtom(b.name, t)
    assert isinstance(b, Exists)
    if b.role.inverted:
        return RoleAtom(b.role.name, fresh(), t)
    return RoleAtom(b.role.name, t, fresh())


def pe_rewrite_classical(
    q: CQ,
    t: TBox,
    max_cqs: int = 20000,
    max_steps: int = 2_000_000,
    minimize: bool = False,
) -> Formula:
    """Pure PE-rewriting of q w.r.t. t as a union of CQs (no new constants,
    no equality); sound and complete over consistent ABoxes."""
    index = entailment_index(t, extra=q.signature)
    answer = q.answer_vars
    sig_preds = set(q.signature.concepts) | set(q.signature.roles) | set(
        t.signature.concepts
    ) | set(t.signature.roles)

    counter = itertools.count()

    def fresh() -> Var:
        return Var(f"_f{next(counter)}")

    def strengthen_concept(name: str) -> list[BasicConcept]:
        out = []
        for b in index.basics:
            if isinstance(b, (Atomic, Exists)) and not index.concept_unsat(b):
                if b != Atomic(name) and index.concept_subsumes(b, Atomic(name)):
                    out.append(b)
        return out

    def strengthen_role(role: Role) -> list[Role]:
        return [
            s
            for s in index.roles
            if s != role and not index.role_unsat(s) and index.role_subsumes(s, role)
        ]

    def absorbers(role: Role) -> list[BasicConcept]:
        out = []
        for b in index.basics:
            if isinstance(b, (Atomic, Exists)) and not index.concept_unsat(b):
                if index.concept_subsumes(b, Exists(role)):
                    out.append(b)
        return out

    start = _canonical(frozenset(q.atoms), answer)
    seen = {start}
    work = [start]
    steps = 0

    def push(atoms: frozenset) -> None:
        canon = _canonical(atoms, answer)
        if canon not in seen:
            if len(seen) >= max_cqs:
                raise ResourceCapError(f"rewriting exceeds {max_cqs} CQs")
            seen.add(canon)
            work.append(canon)

    qualified = list(index.qualified_axioms)

    def absorb_qualified(cq: frozenset) -> list[frozenset]:
        """Collapse the whole neighbourhood of an existential variable that
        fits a witness of lhs sub ex R . B onto the lhs at the parent term."""
        out = []
        by_var: dict[Var, list] = {}
        for atom in cq:
            for term in atom.terms():
                if isinstance(term, Var) and term not in answer:
                    by_var.setdefault(term, []).append(atom)
        for ax in qualified:
            inv = Exists(ax.role.inverse())
            for y, atoms_y in by_var.items():
                parents: set[Term] = set()
                fits = True
                for atom in atoms_y:
                    if isinstance(atom, ConceptAtom):
                        c = Atomic(atom.concept)
                        if not (
                            index.concept_subsumes(ax.filler, c)
                            or index.concept_subsumes(inv, c)
                        ):
                            fits = False
                            break
                    else:
                        if atom.arg1 == atom.arg2:
                            fits = False
                            break
                        if atom.arg2 == y:
                            need, other = Role(atom.role), atom.arg1
                        else:
                            need, other = Role(atom.role, True), atom.arg2
                        if not index.role_subsumes(ax.role, need):
                            fits = False
                            break
                        parents.add(other)
                if fits and len(parents) == 1:
                    parent = parents.pop()
                    out.append((cq - frozenset(atoms_y)) | {_realize(ax.lhs, parent, fresh)})
        return out

    while work:
        cq = work.pop()
        occ = _occurrences(cq)
        for atom in cq:
            steps += 1
            if steps > max_steps:
                raise ResourceCapError(f"rewriting exceeds {max_steps} steps")
            rest = cq - {atom}
            if isinstance(atom, ConceptAtom):
                for b in strengthen_concept(atom.concept):
                    push(rest | {_realize(b, atom.term, fresh)})
            else:
                role = Role(atom.role)
                for s in strengthen_role(role):
                    if s.inverted:
                        push(rest | {RoleAtom(s.name, atom.arg2, atom.arg1)})
                    else:
                        push(rest | {RoleAtom(s.name, atom.arg1, atom.arg2)})
                arg1, arg2 = atom.arg1, atom.arg2
                if (
                    isinstance(arg2, Var)
                    and arg2 not in answer
                    and occ.get(arg2, 0) == 1
                ):
                    for b in absorbers(role):
                        push(rest | {_realize(b, arg1, fresh)})
                if (
                    isinstance(arg1, Var)
                    and arg1 not in answer
                    and occ.get(arg1, 0) == 1
                    and arg1 != arg2
                ):
                    for b in absorbers(role.inverse()):
                        push(rest | {_realize(b, arg2, fresh)})
        for rewritten in absorb_qualified(cq):
            push(rewritten)
        # reduce: unify atom pairs so absorption can fire
        for a1, a2 in itertools.combinations(sorted(cq, key=str), 2):
            sub = _mgu(a1, a2, answer)
            if sub is not None:
                push(_substitute(cq, sub))

    disjuncts = [cq for cq in sorted(seen, key=_cq_key) if _signature_only(cq, sig_preds)]
    if minimize:
        disjuncts = _minimize(disjuncts, answer)
    return _to_formula(disjuncts, answer)


def _mgu(a1, a2, answer_vars) -> dict[Term, Term] | None:
    """Most general unifier treating constants and answer variables as rigid."""
    if type(a1) is not type(a2):
        return None
    if isinstance(a1, ConceptAtom):
        if a1.concept != a2.concept:
            return None
        pairs = [(a1.term, a2.term)]
    else:
        if a1.role != a2.role:
            return None
        pairs = [(a1.arg1, a2.arg1), (a1.arg2, a2.arg2)]
    rigid = set(answer_vars)
    sub: dict[Term, Term] = {}

    def find(t: Term) -> Term:
        while t in sub:
            t = sub[t]
        return t

    for x, y in pairs:
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        x_flex = isinstance(rx, Var) and rx not in rigid
        y_flex = isinstance(ry, Var) and ry not in rigid
        if x_flex:
            sub[rx] = ry
        elif y_flex:
            sub[ry] = rx
        else:
            return None
    return sub if sub else None


def _signature_only(cq: frozenset, sig_preds: set[str]) -> bool:
    for a in cq:
        pred = a.concept if isinstance(a, ConceptAtom) else a.role
        if pred.startswith(FRESH_ROLE_PREFIX) or pred not in sig_preds:
            return False
    return True


def _cq_key(cq: frozenset) -> tuple:
    from .dl import atom_key

    return (len(cq), tuple(sorted(atom_key(a) for a in cq)))


def _hom_maps(small: frozenset, big: frozenset, answer_vars) -> bool:
    """Is there a hom from `small` to `big` fixing answer vars and constants?"""
    small_atoms = sorted(small, key=str)
    facts_c: dict[str, set] = {}
    facts_r: dict[str, set] = {}
    for a in big:
        if isinstance(a, ConceptAtom):
            facts_c.setdefault(a.concept, set()).add(a.term)
        else:
            facts_r.setdefault(a.role, set()).add((a.arg1, a.arg2))

    def extend(i: int, env: dict) -> bool:
        if i == len(small_atoms):
            return True
        atom = small_atoms[i]

        def cands():
            if isinstance(atom, ConceptAtom):
                for t in facts_c.get(atom.concept, ()):
                    yield (atom.term, t),
            else:
                for (t1, t2) in facts_r.get(atom.role, ()):
                    yield (atom.arg1, t1), (atom.arg2, t2)

        for pairs in cands():
            new = dict(env)
            ok = True
            for src, dst in pairs:
                if isinstance(src, Const) or src in set(answer_vars):
                    if src != dst:
                        ok = False
                        break
                elif src in new and new[src] != dst:
                    ok = False
                    break
                else:
                    new[src] = dst
            if ok and extend(i + 1, new):
                return True
        return False

    return extend(0, {})


def _minimize(disjuncts: list[frozenset], answer_vars) -> list[frozenset]:
    """Drop disjuncts subsumed by another (hom from the other into them);
    among hom-equivalent disjuncts the smallest key survives."""
    kept: list[frozenset] = []
    for cq in disjuncts:
        redundant = False
        for other in disjuncts:
            if other == cq or not _hom_maps(other, cq, answer_vars):
                continue
            if _hom_maps(cq, other, answer_vars) and _cq_key(cq) < _cq_key(other):
                continue
            redundant = True
            break
        if not redundant:
            kept.append(cq)
    return kept


def _to_formula(disjuncts: list[frozenset], answer_vars) -> Formula:
    parts = []
    for cq in disjuncts:
        atoms = sorted(cq, key=str)
        evars = sorted(
            {t for a in atoms for t in a.terms() if isinstance(t, Var) and t not in answer_vars}
        )
        fo_atoms = [
            FoAtom(a.concept, (a.term,))
            if isinstance(a, ConceptAtom)
            else FoAtom(a.role, (a.arg1, a.arg2))
            for a in atoms
        ]
        parts.append(fo_exists(evars, fo_and(fo_atoms)))
    return fo_or(parts) if parts else FALSE


def basics_disjoint_from_root(index: SubsumptionIndex, root: str) -> list[BasicConcept]:
    """Signature basics B with root & B entailed disjoint, deterministic order."""
    out = []
    for b in index.basics:
        if b == Atomic(root):
            continue
        if index.concept_disjoint(Atomic(root), b):
            out.append(b)
    return out


def concept_membership_formula(b: BasicConcept, x: Var, fresh_name: str = "yB") -> Formula:
    """B(x) as a formula; ex P becomes exists y P(x,y) per the footnote."""
    if isinstance(b, Atomic):
        return FoAtom(b.name, (x,))
    assert isinstance(b, Exists)
    y = Var(fresh_name)
    if b.role.inverted:
        return fo_exists((y,), FoAtom(b.role.name, (y, x)))
    return fo_exists((y,), FoAtom(b.role.name, (x, y)))


def complete_fo(q0: Formula, t: TBox, inst: EncodedInstance) -> Formula:
    """Turn a sentence correct on the encoding's input ABoxes into a full
    FO-rewriting over the single-constant signature: exists x (A0(x) and
    (q0 or the disjunction of concepts disjoint from A0))."""
    if len(inst.signature.individuals) != 1:
        raise ValueError("completion requires a single-constant signature")
    index = entailment_index(t, extra=inst.signature)
    x = Var("x0")
    disjuncts: list[Formula] = [q0]
    for i, b in enumerate(basics_disjoint_from_root(index, "A0")):
        disjuncts.append(concept_membership_formula(b, x, fresh_name=f"yB{i}"))
    return fo_exists((x,), fo_and((FoAtom("A0", (x,)), fo_or(disjuncts))))
