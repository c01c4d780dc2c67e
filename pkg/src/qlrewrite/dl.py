"""Core OWL 2 QL data model: signatures, roles, concepts, inclusions, ABoxes, CQs.

Everything here is an immutable value; reasoning lives in `taxonomy` and
`canonical`.  Concept grammar:

    role           R ::= P | inv(P)
    basic concept  B ::= bot | A | ex R
    concept        C ::= B | ex R . B      (right-hand sides only)

``ex R`` on a right-hand side is normalized to ``ex R . top`` so the witness
machinery is uniform; ``top`` is a reserved marker satisfied everywhere and is
not a signature name.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union


@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def inverse(self) -> Role:
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return f"inv({self.name})" if self.inverted else self.name


@dataclass(frozen=True, order=True)
class Bottom:
    def __str__(self) -> str:
        return "bot"


@dataclass(frozen=True, order=True)
class Top:
    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True, order=True)
class Atomic:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    role: Role

    def __str__(self) -> str:
        return f"ex {self.role}"


BasicConcept = Union[Bottom, Top, Atomic, Exists]

BOT = Bottom()
TOP = Top()


def basic_key(b: BasicConcept) -> tuple:
    """Deterministic sort key across the BasicConcept variants."""
    if isinstance(b, Bottom):
        return (0, "", False)
    if isinstance(b, Top):
        return (1, "", False)
    if isinstance(b, Atomic):
        return (2, b.name, False)
    return (3, b.role.name, b.role.inverted)


@dataclass(frozen=True)
class ExistsQualified:
    """Right-hand-side concept ex R . B; filler Top encodes plain ex R."""

    role: Role
    filler: BasicConcept

    def __post_init__(self) -> None:
        if isinstance(self.filler, Bottom):
            raise ValueError("qualified existential with bot filler")

    def __str__(self) -> str:
        if isinstance(self.filler, Top):
            return f"ex {self.role}"
        return f"ex {self.role} . {self.filler}"


Concept = Union[BasicConcept, ExistsQualified]


def as_rhs_concept(c: Concept) -> Concept:
    """Normalize a right-hand side: ex R becomes ex R . top."""
    if isinstance(c, Exists):
        return ExistsQualified(c.role, TOP)
    return c


@dataclass(frozen=True)
class ConceptSub:
    lhs: BasicConcept
    rhs: Concept

    def __str__(self) -> str:
        return f"{self.lhs} sub {self.rhs}"


@dataclass(frozen=True)
class RoleSub:
    lhs: Role
    rhs: Role

    def __str__(self) -> str:
        return f"{self.lhs} sub {self.rhs}"


@dataclass(frozen=True)
class ConceptDisjoint:
    lhs: BasicConcept
    rhs: BasicConcept

    def __str__(self) -> str:
        return f"{self.lhs} & {self.rhs} sub bot"


@dataclass(frozen=True)
class RoleDisjoint:
    lhs: Role
    rhs: Role

    def __str__(self) -> str:
        return f"{self.lhs} & {self.rhs} sub bot"


Inclusion = Union[ConceptSub, RoleSub, ConceptDisjoint, RoleDisjoint]


@dataclass(frozen=True)
class Signature:
    """Concept names, role names and an ordered individual universe."""

    concepts: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()
    individuals: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        overlap = (self.concepts & self.roles) | (self.concepts & set(self.individuals)) | (
            self.roles & set(self.individuals)
        )
        if overlap:
            raise ValueError(f"signature name classes overlap: {sorted(overlap)}")

    def union(self, other: Signature) -> Signature:
        inds = list(self.individuals)
        for ind in other.individuals:
            if ind not in inds:
                inds.append(ind)
        return Signature(self.concepts | other.concepts, self.roles | other.roles, tuple(inds))

    def with_individuals(self, inds: Iterable[str]) -> Signature:
        out = list(self.individuals)
        for ind in inds:
            if ind not in out:
                out.append(ind)
        return Signature(self.concepts, self.roles, tuple(out))


@dataclass(frozen=True)
class TBox:
    inclusions: tuple[Inclusion, ...]
    signature: Signature = field(default_factory=Signature)

    def __str__(self) -> str:
        return "\n".join(str(i) for i in self.inclusions)


@dataclass(frozen=True)
class ConceptAssertion:
    concept: str
    individual: str

    def __str__(self) -> str:
        return f"{self.concept}({self.individual})"


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: str
    object: str

    def __str__(self) -> str:
        return f"{self.role}({self.subject},{self.object})"


Assertion = Union[ConceptAssertion, RoleAssertion]


def assertion_key(f: Assertion) -> tuple:
    if isinstance(f, ConceptAssertion):
        return (0, f.concept, f.individual, "")
    return (1, f.role, f.subject, f.object)


@dataclass(frozen=True)
class ABox:
    assertions: frozenset[Assertion]
    signature: Signature = field(default_factory=Signature)

    def individuals(self) -> set[str]:
        out: set[str] = set()
        for f in self.assertions:
            if isinstance(f, ConceptAssertion):
                out.add(f.individual)
            else:
                out.add(f.subject)
                out.add(f.object)
        return out

    def __str__(self) -> str:
        return "\n".join(str(f) for f in sorted(self.assertions, key=assertion_key))


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Var, Const]


@dataclass(frozen=True)
class ConceptAtom:
    concept: str
    term: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.term,)

    def __str__(self) -> str:
        return f"{self.concept}({self.term})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    arg1: Term
    arg2: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.arg1, self.arg2)

    def __str__(self) -> str:
        return f"{self.role}({self.arg1},{self.arg2})"


Atom = Union[ConceptAtom, RoleAtom]


def atom_key(a: Atom) -> tuple:
    if isinstance(a, ConceptAtom):
        return (0, a.concept, str(a.term), "")
    return (1, a.role, str(a.arg1), str(a.arg2))


@dataclass(frozen=True)
class CQ:
    """Conjunctive query q(x1..xk) :- atoms; all non-answer variables are existential."""

    answer_vars: tuple[Var, ...]
    atoms: tuple[Atom, ...]
    signature: Signature = field(default_factory=Signature)

    def __post_init__(self) -> None:
        body_vars = {t for a in self.atoms for t in a.terms() if isinstance(t, Var)}
        for v in self.answer_vars:
            if v not in body_vars:
                raise ValueError(f"unsafe head variable {v.name}")

    def variables(self) -> set[Var]:
        return {t for a in self.atoms for t in a.terms() if isinstance(t, Var)}

    def existential_vars(self) -> set[Var]:
        return self.variables() - set(self.answer_vars)

    def terms(self) -> set[Term]:
        return {t for a in self.atoms for t in a.terms()}

    def constants(self) -> set[Const]:
        return {t for t in self.terms() if isinstance(t, Const)}

    def __str__(self) -> str:
        head = f"q({','.join(v.name for v in self.answer_vars)})"
        return f"{head} :- {', '.join(str(a) for a in self.atoms)}"


class InconsistentKBError(ValueError):
    """Raised where an operation requires a consistent knowledge base."""


class ResourceCapError(RuntimeError):
    """A configured resource cap (elements, clauses, disjuncts) was exceeded."""
