"""CNF-to-knowledge-base encoding: TBox, tree-shaped Boolean query, input ABoxes.

For a clause template with N variables and d clauses this builds the TBox
whose canonical model over {A0(a)} grows a full binary tree of variable
valuations (X_i^0 / X_i^1 levels) with clause side chains (Z_{i,j}), and the
query whose homomorphisms pick a valuation branch plus, per clause, either a
satisfied literal's side chain or the clause's deleted-unit escape to the
ABox.  Concept names: A<i>, X<i>_<l>, Z<i>_<j>; one role P; one individual a.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from .circuits import Circuit, CircuitBuilder, normalize_neg_and
from .cnf import CnfTemplate, build_cnf_template
from .dl import (
    ABox,
    Atomic,
    BOT,
    CQ,
    ConceptAssertion,
    ConceptAtom,
    ConceptDisjoint,
    ConceptSub,
    ExistsQualified,
    Exists,
    Role,
    RoleAtom,
    Signature,
    TBox,
    TOP,
    Var,
)
from .parser import parse_cq, parse_tbox, print_cq, print_tbox


@dataclass(frozen=True)
class EncodedInstance:
    tbox: TBox
    query: CQ
    n: int
    N: int
    d: int
    signature: Signature

    def concept_A(self, i: int) -> str:
        return f"A{i}"

    def concept_X(self, i: int, l: int) -> str:
        return f"X{i}_{l}"

    def concept_Z(self, i: int, j: int) -> str:
        return f"Z{i}_{j}"


def build_encoding(t: CnfTemplate) -> EncodedInstance:
    N, d, n = t.n_vars, t.n_clauses, t.n_inputs
    A = lambda i: f"A{i}"
    X = lambda i, l: f"X{i}_{l}"
    Z = lambda i, j: f"Z{i}_{j}"
    P = Role("P")
    Pinv = Role("P", True)

    concepts = {A(i) for i in range(N + 1)}
    concepts |= {X(i, l) for i in range(1, N + 1) for l in (0, 1)}
    concepts |= {Z(i, j) for i in range(N + 1) for j in range(1, d + 1)}
    signature = Signature(frozenset(concepts), frozenset({"P"}), ("a",))

    in_clause = [set(c) for c in t.clauses]
    inclusions = []
    for i in range(1, N + 1):
        for l in (0, 1):
            inclusions.append(ConceptSub(Atomic(A(i - 1)), ExistsQualified(Pinv, Atomic(X(i, l)))))
        for l in (0, 1):
            inclusions.append(ConceptSub(Atomic(X(i, l)), Atomic(A(i))))
        for j in range(1, d + 1):
            if -i in in_clause[j - 1]:
                inclusions.append(ConceptSub(Atomic(X(i, 0)), Atomic(Z(i, j))))
            if i in in_clause[j - 1]:
                inclusions.append(ConceptSub(Atomic(X(i, 1)), Atomic(Z(i, j))))
    for j in range(1, d + 1):
        for i in range(1, N + 1):
            inclusions.append(ConceptSub(Atomic(Z(i, j)), ExistsQualified(P, Atomic(Z(i - 1, j)))))
    for i in range(1, N + 1):
        inclusions.append(ConceptDisjoint(Atomic(A(0)), Atomic(A(i))))
    inclusions.append(ConceptDisjoint(Atomic(A(0)), Exists(P)))
    for i in range(N + 1):
        for j in range(1, d + 1):
            if i == 0 and j <= n:
                continue
            inclusions.append(ConceptDisjoint(Atomic(A(0)), Atomic(Z(i, j))))
    tbox = TBox(tuple(inclusions), signature)

    y = [Var(f"y{i}") for i in range(N + 1)]
    z = {(i, j): Var(f"z{i}_{j}") for j in range(1, d + 1) for i in range(N)}
    atoms = [ConceptAtom(A(0), y[0])]
    for i in range(1, N + 1):
        atoms.append(RoleAtom("P", y[i], y[i - 1]))
    for j in range(1, d + 1):
        atoms.append(RoleAtom("P", y[N], z[(N - 1, j)]))
        for i in range(N - 1, 0, -1):
            atoms.append(RoleAtom("P", z[(i, j)], z[(i - 1, j)]))
        atoms.append(ConceptAtom(Z(0, j), z[(0, j)]))
    query = CQ((), tuple(atoms), signature)
    return EncodedInstance(tbox=tbox, query=query, n=n, N=N, d=d, signature=signature)


def build_abox(inst: EncodedInstance, alpha: list[int]) -> ABox:
    """A_alpha = {A0(a)} plus Z0_j(a) for the positions set in alpha."""
    if len(alpha) != inst.n:
        raise ValueError("input vector length mismatch")
    assertions = [ConceptAssertion("A0", "a")]
    for j, bit in enumerate(alpha, start=1):
        if bit:
            assertions.append(ConceptAssertion(f"Z0_{j}", "a"))
    return ABox(frozenset(assertions), inst.signature)


def encode_circuit(c: Circuit) -> tuple[EncodedInstance, CnfTemplate, Circuit]:
    """Normalize, build the clause template, and encode; returns all three stages."""
    norm = normalize_neg_and(c)
    template = build_cnf_template(norm)
    return build_encoding(template), template, norm


def micro_circuit(name: str) -> Circuit:
    """Small named circuits used across the verification suites.

    and1 is the running example: one input x, one advice y, one AND gate
    (N = 3, d = 5).
    """
    if name == "and1":
        b = CircuitBuilder(1, 1)
        return b.build(b.and2(b.inp(0), b.adv(0)))
    if name == "not1":
        b = CircuitBuilder(1, 0)
        return b.build(b.not1(b.inp(0)))
    if name == "and2":
        b = CircuitBuilder(2, 0)
        return b.build(b.and2(b.inp(0), b.inp(1)))
    if name == "or2":
        b = CircuitBuilder(2, 0)
        return b.build(b.or2(b.inp(0), b.inp(1)))
    if name == "andnot2":
        b = CircuitBuilder(2, 0)
        return b.build(b.and2(b.inp(0), b.not1(b.inp(1))))
    raise ValueError(f"unknown micro circuit {name!r} (and1/not1/and2/or2/andnot2)")


MICRO_CIRCUITS = ("and1", "not1", "and2", "or2", "andnot2")


# -- symbol counting (the size metric used by the lemma inequalities) ------


def concept_symbols(c) -> int:
    if isinstance(c, Exists):
        return 2
    if isinstance(c, ExistsQualified):
        return 3
    return 1


def tbox_symbols(t: TBox) -> int:
    total = 0
    for inc in t.inclusions:
        if isinstance(inc, ConceptSub):
            total += concept_symbols(inc.lhs) + 1 + concept_symbols(inc.rhs)
        elif isinstance(inc, ConceptDisjoint):
            total += concept_symbols(inc.lhs) + concept_symbols(inc.rhs) + 2
        else:
            total += 3
    return total


def cq_symbols(q: CQ) -> int:
    total = len(q.answer_vars)
    for a in q.atoms:
        total += 1 + len(a.terms())
    return total


# -- directory serialization ------------------------------------------------


def save_instance(inst: EncodedInstance, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "tbox.dl").write_text(print_tbox(inst.tbox), encoding="utf-8")
    (d / "query.cq").write_text(print_cq(inst.query), encoding="utf-8")
    meta = "\n".join(
        [
            f"n = {inst.n}",
            f"N = {inst.N}",
            f"d = {inst.d}",
            'clause_order = "inputs, output unit, gate clauses by (gate id, clause shape)"',
            f'created = "{time.strftime("%Y-%m-%d")}"',
        ]
    )
    (d / "meta.toml").write_text(meta + "\n", encoding="utf-8")


def load_instance(directory: str | Path) -> EncodedInstance:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib

    d = Path(directory)
    meta = tomllib.loads((d / "meta.toml").read_text(encoding="utf-8"))
    tbox = parse_tbox((d / "tbox.dl").read_text(encoding="utf-8"))
    tbox = TBox(tbox.inclusions, tbox.signature.with_individuals(("a",)))
    query = parse_cq((d / "query.cq").read_text(encoding="utf-8"), signature=tbox.signature)
    return EncodedInstance(
        tbox=tbox,
        query=query,
        n=meta["n"],
        N=meta["N"],
        d=meta["d"],
        signature=tbox.signature,
    )
