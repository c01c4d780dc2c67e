"""First-order formulas over a data signature and their evaluation in I_A.

I_A is the finite interpretation whose domain is *all* signature individuals
(facts only for the asserted atoms), optionally extended with pairwise
distinct numeric constants that belong to no predicate but equality.

Two evaluation routes: a plain recursive evaluator, and a constraint solver
for large positive-existential bodies (union-find over equalities, deferred
atom checks, most-constrained-disjunction branching).  Both implement the
same semantics; property tests compare them on small formulas.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

from .dl import ABox, CQ, ConceptAssertion, ConceptAtom, Const, RoleAssertion, Signature, Var


@dataclass(frozen=True, order=True)
class Num:
    value: int

    def __str__(self) -> str:
        return str(self.value)


Term = Union[Var, Const, Num]
Value = Union[Const, Num]


@dataclass(frozen=True)
class FoTrue:
    pass


@dataclass(frozen=True)
class FoFalse:
    pass


TRUE = FoTrue()
FALSE = FoFalse()


@dataclass(frozen=True)
class FoAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class FoEq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class FoNot:
    body: "Formula"


@dataclass(frozen=True)
class FoAnd:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class FoOr:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class FoExists:
    vars: tuple[Var, ...]
    body: "Formula"


@dataclass(frozen=True)
class FoForall:
    vars: tuple[Var, ...]
    body: "Formula"


Formula = Union[FoTrue, FoFalse, FoAtom, FoEq, FoNot, FoAnd, FoOr, FoExists, FoForall]


def fo_and(parts) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return FoAnd(parts)


def fo_or(parts) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return FoOr(parts)


def fo_exists(vars_, body) -> Formula:
    vars_ = tuple(vars_)
    return FoExists(vars_, body) if vars_ else body


def free_vars(f: Formula) -> set[Var]:
    if isinstance(f, FoAtom):
        return {t for t in f.args if isinstance(t, Var)}
    if isinstance(f, FoEq):
        return {t for t in (f.lhs, f.rhs) if isinstance(t, Var)}
    if isinstance(f, FoNot):
        return free_vars(f.body)
    if isinstance(f, (FoAnd, FoOr)):
        out: set[Var] = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    if isinstance(f, (FoExists, FoForall)):
        return free_vars(f.body) - set(f.vars)
    return set()


def fo_size(f: Formula) -> int:
    """AST node count, term occurrences included."""
    if isinstance(f, (FoTrue, FoFalse)):
        return 1
    if isinstance(f, FoAtom):
        return 1 + len(f.args)
    if isinstance(f, FoEq):
        return 3
    if isinstance(f, FoNot):
        return 1 + fo_size(f.body)
    if isinstance(f, (FoAnd, FoOr)):
        return 1 + sum(fo_size(p) for p in f.parts)
    return 1 + len(f.vars) + fo_size(f.body)


def is_pure_pe(f: Formula, allowed_constants: set[str] | None = None) -> bool:
    """Positive existential over the signature: no negation, universals,
    equality, numeric constants, nor individual constants outside the allowance."""
    if isinstance(f, (FoTrue, FoFalse)):
        return True
    if isinstance(f, FoAtom):
        for t in f.args:
            if isinstance(t, Num):
                return False
            if isinstance(t, Const) and allowed_constants is not None and t.name not in allowed_constants:
                return False
        return True
    if isinstance(f, (FoAnd, FoOr)):
        return all(is_pure_pe(p, allowed_constants) for p in f.parts)
    if isinstance(f, FoExists):
        return is_pure_pe(f.body, allowed_constants)
    return False


def cq_to_fo(q: CQ) -> Formula:
    """The CQ as an existentially closed conjunction (answer vars free)."""
    atoms = []
    for a in q.atoms:
        if isinstance(a, ConceptAtom):
            atoms.append(FoAtom(a.concept, (a.term,)))
        else:
            atoms.append(FoAtom(a.role, (a.arg1, a.arg2)))
    return fo_exists(sorted(q.existential_vars()), fo_and(atoms))


@dataclass
class InterpretationIA:
    signature: Signature
    concept_facts: dict[str, frozenset[str]]
    role_facts: dict[str, frozenset[tuple[str, str]]]
    num_constants: int = 0

    @classmethod
    def from_abox(cls, a: ABox, num_constants: int = 0) -> "InterpretationIA":
        concepts: dict[str, set[str]] = {}
        roles: dict[str, set[tuple[str, str]]] = {}
        for f in a.assertions:
            if isinstance(f, ConceptAssertion):
                concepts.setdefault(f.concept, set()).add(f.individual)
            elif isinstance(f, RoleAssertion):
                roles.setdefault(f.role, set()).add((f.subject, f.object))
        sig = a.signature.with_individuals(sorted(a.individuals()))
        return cls(
            signature=sig,
            concept_facts={k: frozenset(v) for k, v in concepts.items()},
            role_facts={k: frozenset(v) for k, v in roles.items()},
            num_constants=num_constants,
        )

    def domain(self) -> list[Value]:
        out: list[Value] = [Const(i) for i in self.signature.individuals]
        out.extend(Num(k) for k in range(1, self.num_constants + 1))
        return out

    def holds(self, pred: str, args: tuple[Value, ...]) -> bool:
        if any(isinstance(v, Num) for v in args):
            return False
        if len(args) == 1:
            return args[0].name in self.concept_facts.get(pred, frozenset())
        return (args[0].name, args[1].name) in self.role_facts.get(pred, frozenset())


class UnboundVariableError(ValueError):
    pass


_CSP_THRESHOLD = 3  # positive existential blocks above this many variables go to the solver


def eval_fo(f: Formula, ia: InterpretationIA, binding: dict[Var, Value] | None = None) -> bool:
    """Standard FO semantics over I_A's finite domain."""
    binding = dict(binding or {})
    missing = free_vars(f) - set(binding)
    if missing:
        raise UnboundVariableError(f"unbound free variables: {sorted(v.name for v in missing)}")
    domain = ia.domain()
    if not domain:
        raise ValueError("empty domain: signature declares no individuals")
    return _eval(f, ia, binding, domain)


def _resolve(t: Term, binding) -> Value:
    return binding[t] if isinstance(t, Var) else t


def _eval(f: Formula, ia, binding, domain) -> bool:
    if isinstance(f, FoTrue):
        return True
    if isinstance(f, FoFalse):
        return False
    if isinstance(f, FoAtom):
        return ia.holds(f.pred, tuple(_resolve(t, binding) for t in f.args))
    if isinstance(f, FoEq):
        return _resolve(f.lhs, binding) == _resolve(f.rhs, binding)
    if isinstance(f, FoNot):
        return not _eval(f.body, ia, binding, domain)
    if isinstance(f, FoAnd):
        return all(_eval(p, ia, binding, domain) for p in f.parts)
    if isinstance(f, FoOr):
        return any(_eval(p, ia, binding, domain) for p in f.parts)
    if isinstance(f, FoExists):
        if len(f.vars) > _CSP_THRESHOLD and _positive(f.body):
            return _solve_positive(f, ia, binding, domain)
        for combo in itertools.product(domain, repeat=len(f.vars)):
            inner = dict(binding)
            inner.update(zip(f.vars, combo))
            if _eval(f.body, ia, inner, domain):
                return True
        return False
    if isinstance(f, FoForall):
        for combo in itertools.product(domain, repeat=len(f.vars)):
            inner = dict(binding)
            inner.update(zip(f.vars, combo))
            if not _eval(f.body, ia, inner, domain):
                return False
        return True
    raise TypeError(f"not a formula: {f!r}")


def _positive(f: Formula) -> bool:
    if isinstance(f, (FoTrue, FoFalse, FoAtom, FoEq)):
        return True
    if isinstance(f, (FoAnd, FoOr)):
        return all(_positive(p) for p in f.parts)
    if isinstance(f, FoExists):
        return _positive(f.body)
    return False


class _Solver:
    """Union-find over terms with a trail, deferred ground-atom checks, and
    most-constrained-first branching over disjunction blocks."""

    def __init__(self, ia: InterpretationIA, domain):
        self.ia = ia
        self.domain = domain
        self.parent: dict = {}
        self.trail: list = []
        self.fresh = 0

    def find(self, t):
        while t in self.parent:
            t = self.parent[t]
        return t

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if not isinstance(ra, Var) and not isinstance(rb, Var):
            return False  # distinct constants
        if not isinstance(ra, Var):
            ra, rb = rb, ra
        self.parent[ra] = rb
        self.trail.append(ra)
        return True

    def checkpoint(self) -> int:
        return len(self.trail)

    def rollback(self, mark: int) -> None:
        while len(self.trail) > mark:
            del self.parent[self.trail.pop()]

    def rename(self, f: Formula, mapping: dict[Var, Var]) -> Formula:
        if isinstance(f, (FoTrue, FoFalse)):
            return f
        if isinstance(f, FoAtom):
            return FoAtom(f.pred, tuple(mapping.get(t, t) if isinstance(t, Var) else t for t in f.args))
        if isinstance(f, FoEq):
            sub = lambda t: mapping.get(t, t) if isinstance(t, Var) else t
            return FoEq(sub(f.lhs), sub(f.rhs))
        if isinstance(f, FoAnd):
            return FoAnd(tuple(self.rename(p, mapping) for p in f.parts))
        if isinstance(f, FoOr):
            return FoOr(tuple(self.rename(p, mapping) for p in f.parts))
        if isinstance(f, FoExists):
            inner = dict(mapping)
            fresh = []
            for v in f.vars:
                self.fresh += 1
                nv = Var(f"_s{self.fresh}")
                inner[v] = nv
                fresh.append(nv)
            return FoExists(tuple(fresh), self.rename(f.body, inner))
        raise TypeError(f"solver only handles positive formulas, got {f!r}")

    def add(self, f: Formula, blocks: list, atoms: list) -> bool:
        """Decompose a conjunct into equalities, atoms and pending Or-blocks."""
        if isinstance(f, FoTrue):
            return True
        if isinstance(f, FoFalse):
            return False
        if isinstance(f, FoEq):
            return self.union(f.lhs, f.rhs)
        if isinstance(f, FoAtom):
            atoms.append(f)
            return True
        if isinstance(f, FoAnd):
            return all(self.add(p, blocks, atoms) for p in f.parts)
        if isinstance(f, FoExists):
            return self.add(self.rename(f, {}).body, blocks, atoms)
        if isinstance(f, FoOr):
            blocks.append(f.parts)
            return True
        raise TypeError(f"solver only handles positive formulas, got {f!r}")

    def atom_state(self, atom: FoAtom):
        """True/False when ground under the current assignment, None otherwise."""
        vals = []
        for t in atom.args:
            r = self.find(t)
            if isinstance(r, Var):
                return None
            vals.append(r)
        return self.ia.holds(atom.pred, tuple(vals))

    def quick_dead(self, alt: Formula) -> bool:
        """Shallow consistency filter for a disjunct under the current state."""
        if isinstance(alt, FoFalse):
            return True
        if isinstance(alt, FoEq):
            ra, rb = self.find(alt.lhs), self.find(alt.rhs)
            return ra != rb and not isinstance(ra, Var) and not isinstance(rb, Var)
        if isinstance(alt, FoAtom):
            return self.atom_state(alt) is False
        if isinstance(alt, FoAnd):
            return any(self.quick_dead(p) for p in alt.parts)
        return False

    def solve(self, blocks: list, atoms: list) -> bool:
        mark = self.checkpoint()
        pending = []
        for atom in atoms:
            st = self.atom_state(atom)
            if st is False:
                self.rollback(mark)
                return False
            if st is None:
                pending.append(atom)
        if not blocks:
            ok = self.finish(pending)
            if not ok:
                self.rollback(mark)
            return ok
        # most constrained disjunction first
        best_i, best_live = None, None
        for i, alts in enumerate(blocks):
            live = [a for a in alts if not self.quick_dead(a)]
            if not live:
                self.rollback(mark)
                return False
            if best_live is None or len(live) < len(best_live):
                best_i, best_live = i, live
                if len(live) == 1:
                    break
        rest = blocks[:best_i] + blocks[best_i + 1 :]
        for alt in best_live:
            sub_mark = self.checkpoint()
            sub_blocks = list(rest)
            sub_atoms = list(pending)
            if self.add(alt, sub_blocks, sub_atoms) and self.solve(sub_blocks, sub_atoms):
                return True
            self.rollback(sub_mark)
        self.rollback(mark)
        return False

    def finish(self, pending: list[FoAtom]) -> bool:
        """All blocks decided; enumerate residual unresolved variables."""
        unresolved: list[Var] = []
        seen = set()
        for atom in pending:
            for t in atom.args:
                r = self.find(t)
                if isinstance(r, Var) and r not in seen:
                    seen.add(r)
                    unresolved.append(r)
        if not unresolved:
            return all(self.atom_state(a) is True for a in pending)
        v = unresolved[0]
        for val in self.domain:
            mark = self.checkpoint()
            self.parent[v] = val
            self.trail.append(v)
            ok = True
            for atom in pending:
                st = self.atom_state(atom)
                if st is False:
                    ok = False
                    break
            if ok and self.finish([a for a in pending if self.atom_state(a) is None]):
                return True
            self.rollback(mark)
        return False


def _solve_positive(f: FoExists, ia, binding, domain) -> bool:
    solver = _Solver(ia, domain)
    # pin the outer binding
    for var, val in binding.items():
        solver.parent[var] = val
    body = solver.rename(FoExists(f.vars, f.body), {})
    blocks: list = []
    atoms: list = []
    if not solver.add(body.body, blocks, atoms):
        return False
    return solver.solve(blocks, atoms)


# -- S-expression serialization ---------------------------------------------


def _term_sexpr(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return f"(ind {t.name})"
    return f"(num {t.value})"


def to_sexpr(f: Formula) -> str:
    if isinstance(f, FoTrue):
        return "true"
    if isinstance(f, FoFalse):
        return "false"
    if isinstance(f, FoAtom):
        return f"(atom {f.pred} {' '.join(_term_sexpr(t) for t in f.args)})"
    if isinstance(f, FoEq):
        return f"(= {_term_sexpr(f.lhs)} {_term_sexpr(f.rhs)})"
    if isinstance(f, FoNot):
        return f"(not {to_sexpr(f.body)})"
    if isinstance(f, FoAnd):
        return f"(and {' '.join(to_sexpr(p) for p in f.parts)})"
    if isinstance(f, FoOr):
        return f"(or {' '.join(to_sexpr(p) for p in f.parts)})"
    kind = "exists" if isinstance(f, FoExists) else "forall"
    vs = " ".join(v.name for v in f.vars)
    return f"({kind} ({vs}) {to_sexpr(f.body)})"


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_tokens(tokens: list[str], pos: int):
    tok = tokens[pos]
    if tok != "(":
        if tok == "true":
            return TRUE, pos + 1
        if tok == "false":
            return FALSE, pos + 1
        return Var(tok), pos + 1
    head = tokens[pos + 1]
    pos += 2
    if head == "ind":
        out = Const(tokens[pos])
        return out, pos + 2
    if head == "num":
        return Num(int(tokens[pos])), pos + 2
    if head in ("exists", "forall"):
        assert tokens[pos] == "("
        pos += 1
        vs = []
        while tokens[pos] != ")":
            vs.append(Var(tokens[pos]))
            pos += 1
        pos += 1
        body, pos = _parse_tokens(tokens, pos)
        assert tokens[pos] == ")"
        cls = FoExists if head == "exists" else FoForall
        return cls(tuple(vs), body), pos + 1
    if head == "atom":
        pred = tokens[pos]
        pos += 1
        args = []
        while tokens[pos] != ")":
            arg, pos = _parse_tokens(tokens, pos)
            args.append(arg)
        return FoAtom(pred, tuple(args)), pos + 1
    if head == "=":
        lhs, pos = _parse_tokens(tokens, pos)
        rhs, pos = _parse_tokens(tokens, pos)
        assert tokens[pos] == ")"
        return FoEq(lhs, rhs), pos + 1
    if head == "not":
        body, pos = _parse_tokens(tokens, pos)
        assert tokens[pos] == ")"
        return FoNot(body), pos + 1
    if head in ("and", "or"):
        parts = []
        while tokens[pos] != ")":
            part, pos = _parse_tokens(tokens, pos)
            parts.append(part)
        cls = FoAnd if head == "and" else FoOr
        return cls(tuple(parts)), pos + 1
    raise ValueError(f"bad s-expression head {head!r}")


def from_sexpr(text: str) -> Formula:
    f, pos = _parse_tokens(_tokenize(text), 0)
    return f
