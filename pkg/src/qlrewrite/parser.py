"""Text formats for TBoxes, ABoxes and CQs.

TBox, one inclusion per line, ``#`` comments:

    concept := bot | NAME | ex ROLE | ex ROLE . NAME
    ROLE    := NAME | inv(NAME)
    lines   := C sub C | C & C sub bot | R sub R | R & R sub bot

ABox lines are ``NAME(ind)`` / ``NAME(ind,ind)``; a CQ is one line
``q(x1,...,xk) :- atom, atom, ...``.

A bare-name line ``X sub Y`` is ambiguous between a concept and a role
inclusion.  Strict mode resolves it from the declared signature; lenient mode
reads it as a concept inclusion unless both names carry role evidence
elsewhere in the document (``ex``/``inv`` use).
"""

from __future__ import annotations

import re

from .dl import (
    ABox,
    Atomic,
    BOT,
    BasicConcept,
    CQ,
    Concept,
    ConceptAssertion,
    ConceptAtom,
    ConceptDisjoint,
    ConceptSub,
    Const,
    ExistsQualified,
    Exists,
    Role,
    RoleAssertion,
    RoleAtom,
    RoleDisjoint,
    RoleSub,
    Signature,
    TBox,
    TOP,
    Var,
)

_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_NAME_RE = re.compile(rf"^{_NAME}$")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _strip_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line))
    return out


def _parse_role(tok: str, line: int) -> Role:
    tok = tok.strip()
    m = re.fullmatch(rf"inv\(\s*({_NAME})\s*\)", tok)
    if m:
        return Role(m.group(1), True)
    if _NAME_RE.match(tok):
        return Role(tok, False)
    raise ParseError(f"bad role {tok!r}", line)


def _parse_concept(tok: str, line: int, rhs: bool) -> Concept:
    tok = tok.strip()
    if tok == "bot":
        return BOT
    m = re.fullmatch(rf"ex\s+(inv\(\s*{_NAME}\s*\)|{_NAME})\s*(?:\.\s*({_NAME}))?", tok)
    if m:
        role = _parse_role(m.group(1), line)
        if m.group(2) is None:
            return ExistsQualified(role, TOP) if rhs else Exists(role)
        if not rhs:
            raise ParseError("qualified existential on left-hand side", line)
        return ExistsQualified(role, Atomic(m.group(2)))
    if _NAME_RE.match(tok):
        return Atomic(tok)
    raise ParseError(f"bad concept {tok!r}", line)


def _role_evidence(text: str) -> set[str]:
    names = set()
    for m in re.finditer(rf"inv\(\s*({_NAME})\s*\)", text):
        names.add(m.group(1))
    for m in re.finditer(rf"\bex\s+({_NAME})", text):
        if m.group(1) != "inv":
            names.add(m.group(1))
    return names


def parse_tbox(text: str, signature: Signature | None = None, strict: bool = False) -> TBox:
    """Parse a TBox document; lenient mode auto-declares names."""
    base = signature or Signature()
    known_roles = set(base.roles) | _role_evidence(text)
    concepts: set[str] = set(base.concepts)
    roles: set[str] = set(base.roles)
    inclusions = []

    def is_role_name(name: str) -> bool:
        return name in known_roles

    def register(c: Concept, line: int) -> None:
        if isinstance(c, Atomic):
            if strict and c.name not in base.concepts:
                raise ParseError(f"undeclared concept name {c.name!r}", line)
            concepts.add(c.name)
        elif isinstance(c, (Exists, ExistsQualified)):
            role = c.role
            if strict and role.name not in base.roles:
                raise ParseError(f"undeclared role name {role.name!r}", line)
            roles.add(role.name)
            if isinstance(c, ExistsQualified):
                register(c.filler, line)

    for line_no, line in _strip_lines(text):
        m = re.fullmatch(r"(.*?)\bsub\b(.*)", line)
        if not m:
            raise ParseError(f"expected 'sub' in {line!r}", line_no)
        lhs_text, rhs_text = m.group(1).strip(), m.group(2).strip()
        disjoint = "&" in lhs_text
        parts = [p.strip() for p in lhs_text.split("&")] if disjoint else [lhs_text]
        if disjoint and (len(parts) != 2 or rhs_text != "bot"):
            raise ParseError("disjointness line must be 'X & Y sub bot'", line_no)

        role_line = any(p.startswith("inv(") for p in parts + [rhs_text])
        if not role_line:
            plain = [p for p in parts + ([] if disjoint else [rhs_text])]
            role_line = all(_NAME_RE.match(p) and is_role_name(p) for p in plain) and bool(plain)
        if role_line:
            lhs_roles = [_parse_role(p, line_no) for p in parts]
            for r in lhs_roles:
                if strict and r.name not in base.roles:
                    raise ParseError(f"undeclared role name {r.name!r}", line_no)
                roles.add(r.name)
            if disjoint:
                inclusions.append(RoleDisjoint(lhs_roles[0], lhs_roles[1]))
            else:
                rhs_role = _parse_role(rhs_text, line_no)
                if strict and rhs_role.name not in base.roles:
                    raise ParseError(f"undeclared role name {rhs_role.name!r}", line_no)
                roles.add(rhs_role.name)
                inclusions.append(RoleSub(lhs_roles[0], rhs_role))
            continue

        lhs_concepts = [_parse_concept(p, line_no, rhs=False) for p in parts]
        for c in lhs_concepts:
            register(c, line_no)
        if disjoint:
            inclusions.append(ConceptDisjoint(lhs_concepts[0], lhs_concepts[1]))
        else:
            rhs = _parse_concept(rhs_text, line_no, rhs=True)
            register(rhs, line_no)
            inclusions.append(ConceptSub(lhs_concepts[0], rhs))

    sig = Signature(frozenset(concepts), frozenset(roles), base.individuals)
    return TBox(tuple(inclusions), sig)


_ATOM_RE = re.compile(rf"({_NAME})\s*\(\s*({_NAME})\s*(?:,\s*({_NAME})\s*)?\)")


def parse_abox(text: str, signature: Signature | None = None, strict: bool = False) -> ABox:
    base = signature or Signature()
    concepts, roles = set(base.concepts), set(base.roles)
    individuals = list(base.individuals)
    assertions = []
    for line_no, line in _strip_lines(text):
        m = _ATOM_RE.fullmatch(line)
        if not m:
            raise ParseError(f"bad assertion {line!r}", line_no)
        pred, a1, a2 = m.group(1), m.group(2), m.group(3)
        if a2 is None:
            if pred in roles:
                raise ParseError(f"arity mismatch: role {pred!r} used with one argument", line_no)
            if strict and pred not in base.concepts:
                raise ParseError(f"undeclared concept name {pred!r}", line_no)
            concepts.add(pred)
            assertions.append(ConceptAssertion(pred, a1))
        else:
            if pred in concepts:
                raise ParseError(f"arity mismatch: concept {pred!r} used with two arguments", line_no)
            if strict and pred not in base.roles:
                raise ParseError(f"undeclared role name {pred!r}", line_no)
            roles.add(pred)
            assertions.append(RoleAssertion(pred, a1, a2))
        for ind in (a1, a2):
            if ind is not None and ind not in individuals:
                individuals.append(ind)
    sig = Signature(frozenset(concepts), frozenset(roles), tuple(individuals))
    return ABox(frozenset(assertions), sig)


def parse_cq(text: str, signature: Signature | None = None, strict: bool = False) -> CQ:
    base = signature or Signature()
    lines = _strip_lines(text)
    if len(lines) != 1:
        raise ParseError("expected a single 'q(...) :- body' line")
    line_no, line = lines[0]
    m = re.fullmatch(r"q\s*\(([^)]*)\)\s*:-\s*(.*)", line)
    if not m:
        raise ParseError("expected 'q(vars) :- atom, atom, ...'", line_no)
    head = [v.strip() for v in m.group(1).split(",") if v.strip()]
    concepts, roles = set(base.concepts), set(base.roles)
    known_inds = set(base.individuals)

    def term(tok: str) -> Var | Const:
        return Const(tok) if tok in known_inds else Var(tok)

    atoms = []
    body = m.group(2).strip()
    for am in _ATOM_RE.finditer(body):
        pred, t1, t2 = am.group(1), am.group(2), am.group(3)
        if t2 is None:
            if strict and pred not in base.concepts:
                raise ParseError(f"undeclared concept name {pred!r}", line_no)
            concepts.add(pred)
            atoms.append(ConceptAtom(pred, term(t1)))
        else:
            if strict and pred not in base.roles:
                raise ParseError(f"undeclared role name {pred!r}", line_no)
            roles.add(pred)
            atoms.append(RoleAtom(pred, term(t1), term(t2)))
    leftover = _ATOM_RE.sub("", body).replace(",", "").strip()
    if leftover or not atoms:
        raise ParseError(f"bad query body {body!r}", line_no)
    sig = Signature(frozenset(concepts), frozenset(roles), base.individuals)
    try:
        return CQ(tuple(Var(v) for v in head), tuple(atoms), sig)
    except ValueError as exc:
        raise ParseError(str(exc), line_no) from exc


def print_tbox(t: TBox) -> str:
    return "\n".join(str(i) for i in t.inclusions) + ("\n" if t.inclusions else "")


def print_abox(a: ABox) -> str:
    return str(a) + ("\n" if a.assertions else "")


def print_cq(q: CQ) -> str:
    return str(q) + "\n"
