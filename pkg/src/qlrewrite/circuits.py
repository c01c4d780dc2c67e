"""Boolean circuits with advice inputs, the three hardness families, and oracles.

A circuit is a topologically ordered gate list over INPUT/ADVICE sources and
AND/OR/NOT/CONST gates with one designated output.  `nondet_eval` treats the
advice inputs as existentially quantified; the per-family `oracle` computes
the same function by a direct combinatorial algorithm (subset enumeration,
augmenting paths, least fixpoint) so the two routes stay independent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .dl import ResourceCapError

AND, OR, NOT, INPUT, ADVICE, CONST = "and", "or", "not", "in", "adv", "const"

DEFAULT_ADVICE_CAP = 22  # exhaustive advice sweeps up to 2^22 vectors


@dataclass(frozen=True)
class Gate:
    op: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    n_inputs: int
    p_advice: int
    gates: tuple[Gate, ...]
    output: int

    def __post_init__(self) -> None:
        arity = {AND: 2, OR: 2, NOT: 1, INPUT: 1, ADVICE: 1, CONST: 1}
        for gid, g in enumerate(self.gates):
            if g.op not in arity:
                raise ValueError(f"unknown gate op {g.op!r}")
            if len(g.args) != arity[g.op]:
                raise ValueError(f"gate {gid}: {g.op} expects {arity[g.op]} argument(s)")
            if g.op in (AND, OR, NOT):
                if any(a >= gid or a < 0 for a in g.args):
                    raise ValueError(f"gate {gid}: arguments must reference earlier gates")
            elif g.op == INPUT:
                if not 0 <= g.args[0] < self.n_inputs:
                    raise ValueError(f"gate {gid}: input index out of range")
            elif g.op == ADVICE:
                if not 0 <= g.args[0] < self.p_advice:
                    raise ValueError(f"gate {gid}: advice index out of range")
            elif g.op == CONST and g.args[0] not in (0, 1):
                raise ValueError(f"gate {gid}: const must be 0 or 1")
        if not 0 <= self.output < len(self.gates):
            raise ValueError("output gate out of range")

    def size(self) -> int:
        """Number of nodes (sources count)."""
        return len(self.gates)

    def is_monotone(self) -> bool:
        return all(g.op != NOT for g in self.gates)

    def is_neg_and(self) -> bool:
        return all(g.op in (AND, NOT, INPUT, ADVICE) for g in self.gates)


class CircuitBuilder:
    """Incremental construction with structural deduplication."""

    def __init__(self, n_inputs: int, p_advice: int = 0):
        self.n_inputs = n_inputs
        self.p_advice = p_advice
        self.gates: list[Gate] = []
        self._memo: dict[Gate, int] = {}

    def _add(self, op: str, *args: int) -> int:
        g = Gate(op, tuple(args))
        if g in self._memo:
            return self._memo[g]
        self.gates.append(g)
        self._memo[g] = len(self.gates) - 1
        return len(self.gates) - 1

    def inp(self, j: int) -> int:
        return self._add(INPUT, j)

    def adv(self, j: int) -> int:
        return self._add(ADVICE, j)

    def const(self, bit: int) -> int:
        return self._add(CONST, bit)

    def and2(self, a: int, b: int) -> int:
        return self._add(AND, a, b)

    def or2(self, a: int, b: int) -> int:
        return self._add(OR, a, b)

    def not1(self, a: int) -> int:
        return self._add(NOT, a)

    def and_all(self, xs: list[int]) -> int:
        if not xs:
            return self.const(1)
        out = xs[0]
        for x in xs[1:]:
            out = self.and2(out, x)
        return out

    def or_all(self, xs: list[int]) -> int:
        if not xs:
            return self.const(0)
        out = xs[0]
        for x in xs[1:]:
            out = self.or2(out, x)
        return out

    def xor2(self, a: int, b: int) -> int:
        return self.or2(self.and2(a, self.not1(b)), self.and2(self.not1(a), b))

    def build(self, output: int) -> Circuit:
        return Circuit(self.n_inputs, self.p_advice, tuple(self.gates), output)


def eval_circuit(c: Circuit, inputs: list[int], advice: list[int] | None = None) -> int:
    advice = advice or []
    if len(inputs) != c.n_inputs or len(advice) != c.p_advice:
        raise ValueError("input/advice vector length mismatch")
    vals = [0] * len(c.gates)
    for gid, g in enumerate(c.gates):
        if g.op == INPUT:
            vals[gid] = inputs[g.args[0]]
        elif g.op == ADVICE:
            vals[gid] = advice[g.args[0]]
        elif g.op == CONST:
            vals[gid] = g.args[0]
        elif g.op == AND:
            vals[gid] = vals[g.args[0]] & vals[g.args[1]]
        elif g.op == OR:
            vals[gid] = vals[g.args[0]] | vals[g.args[1]]
        else:
            vals[gid] = 1 - vals[g.args[0]]
    return vals[c.output]


def _eval_all_advice_mask(c: Circuit, inputs: list[int]) -> int:
    """Gate values over all 2^p advice vectors at once, packed into a bigint."""
    p = c.p_advice
    width = 1 << p
    full = (1 << width) - 1
    vals = [0] * len(c.gates)
    for gid, g in enumerate(c.gates):
        if g.op == INPUT:
            vals[gid] = full if inputs[g.args[0]] else 0
        elif g.op == ADVICE:
            j = g.args[0]
            block = ((1 << (1 << j)) - 1) << (1 << j)
            mask = 0
            period = 1 << (j + 1)
            for start in range(0, width, period):
                mask |= block << start
            vals[gid] = mask
        elif g.op == CONST:
            vals[gid] = full if g.args[0] else 0
        elif g.op == AND:
            vals[gid] = vals[g.args[0]] & vals[g.args[1]]
        elif g.op == OR:
            vals[gid] = vals[g.args[0]] | vals[g.args[1]]
        else:
            vals[gid] = full & ~vals[g.args[0]]
    return vals[c.output]


def nondet_eval(c: Circuit, inputs: list[int], advice_cap: int = DEFAULT_ADVICE_CAP) -> int:
    """1 iff some advice vector makes the circuit output 1."""
    if len(inputs) != c.n_inputs:
        raise ValueError("input vector length mismatch")
    if c.p_advice > advice_cap:
        raise ResourceCapError(f"advice space 2^{c.p_advice} exceeds cap 2^{advice_cap}")
    return 1 if _eval_all_advice_mask(c, inputs) else 0


def normalize_neg_and(c: Circuit) -> Circuit:
    """Equivalent circuit over NOT/AND only (De Morgan, constants folded).

    Polarity-tracking conversion: each node becomes an (id, negated) literal
    and NOT gates are only materialized where a negative literal feeds an AND
    or the output, which keeps the result within 3x the original size.
    """
    if c.is_neg_and():
        return c
    b = CircuitBuilder(c.n_inputs, c.p_advice)
    TRUE, FALSE = "T", "F"
    lit: list[object] = [None] * len(c.gates)  # (gate id, negated) or TRUE/FALSE

    def neg(x):
        if x == TRUE:
            return FALSE
        if x == FALSE:
            return TRUE
        return (x[0], not x[1])

    def materialize(x) -> int:
        if x == TRUE or x == FALSE:
            raise AssertionError("constants handled before materialize")
        gid, negated = x
        return b.not1(gid) if negated else gid

    def and_lit(x, y):
        if FALSE in (x, y):
            return FALSE
        if x == TRUE:
            return y
        if y == TRUE:
            return x
        if x == neg(y):
            return FALSE
        if x == y:
            return x
        return (b.and2(materialize(x), materialize(y)), False)

    for gid, g in enumerate(c.gates):
        if g.op == INPUT:
            lit[gid] = (b.inp(g.args[0]), False)
        elif g.op == ADVICE:
            lit[gid] = (b.adv(g.args[0]), False)
        elif g.op == CONST:
            lit[gid] = TRUE if g.args[0] else FALSE
        elif g.op == NOT:
            lit[gid] = neg(lit[g.args[0]])
        elif g.op == AND:
            lit[gid] = and_lit(lit[g.args[0]], lit[g.args[1]])
        else:  # OR via De Morgan
            lit[gid] = neg(and_lit(neg(lit[g.args[0]]), neg(lit[g.args[1]])))

    out = lit[c.output]
    if out in (TRUE, FALSE):
        # constant function: n >= 1, so realize it as x1 AND NOT x1 (or its negation)
        x = b.inp(0)
        contradiction = b.and2(x, b.not1(x))
        out_id = b.not1(contradiction) if out == TRUE else contradiction
        return b.build(out_id)
    return b.build(materialize(out))


@dataclass(frozen=True)
class Clique:
    """Does the n-vertex graph given by edge bits e_ij (i<j) contain a k-clique?"""

    n: int
    k: int

    def __post_init__(self) -> None:
        if not 2 <= self.k <= self.n:
            raise ValueError("Clique requires 2 <= k <= n")

    def n_inputs(self) -> int:
        return self.n * (self.n - 1) // 2

    def name(self) -> str:
        return f"clique-{self.n}-{self.k}"


@dataclass(frozen=True)
class Matching:
    """Does the n+n bipartite graph given by edge bits e_ij have a perfect matching?"""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("Matching requires n >= 1")

    def n_inputs(self) -> int:
        return self.n * self.n

    def name(self) -> str:
        return f"matching-{self.n}"


@dataclass(frozen=True)
class Gen:
    """Does 1 generate n under the partial binary operation given by bits x_ijk?"""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("Gen requires n >= 1")

    def n_inputs(self) -> int:
        return self.n ** 3

    def name(self) -> str:
        return f"gen-{self.n}"


FamilySpec = "Clique | Matching | Gen"


def clique_edge_index(n: int, i: int, j: int) -> int:
    """Index of e_ij among pairs (1,2),(1,3),...,(n-1,n); 1-based vertices, i<j."""
    if i > j:
        i, j = j, i
    return (i - 1) * n - (i - 1) * i // 2 + (j - i - 1)


def _exactly_k(b: CircuitBuilder, bits: list[int], k: int, at_least: bool = False) -> int:
    """Binary counter chain compared against the constant k."""
    nbits = max(1, len(bits).bit_length())
    acc = [b.const(0)] * nbits
    for x in bits:
        carry = x
        nxt = []
        for s in acc:
            nxt.append(b.xor2(s, carry))
            carry = b.and2(s, carry)
        acc = nxt
    kbits = [(k >> i) & 1 for i in range(nbits)]
    if not at_least:
        match = [b.not1(b.xor2(s, b.const(kb))) for s, kb in zip(acc, kbits)]
        return b.and_all(match)
    # acc >= k via most-significant-first comparison
    ge = b.const(1)
    gt = b.const(0)
    for s, kb in zip(reversed(acc), reversed(kbits)):
        kc = b.const(kb)
        bit_gt = b.and2(s, b.not1(kc))
        bit_eq = b.not1(b.xor2(s, kc))
        gt = b.or2(gt, b.and2(ge, bit_gt))
        ge = b.and2(ge, bit_eq)
    return b.or2(gt, ge)


def _exactly_one(b: CircuitBuilder, bits: list[int]) -> int:
    """Linear scan: at least one and no two."""
    seen = b.const(0)
    conflict = b.const(0)
    for x in bits:
        conflict = b.or2(conflict, b.and2(seen, x))
        seen = b.or2(seen, x)
    return b.and2(seen, b.not1(conflict))


def family_circuit(spec, at_least_k: bool = False) -> Circuit:
    """Nondeterministic circuit for the family (monotone for Gen)."""
    if isinstance(spec, Clique):
        n, k = spec.n, spec.k
        b = CircuitBuilder(spec.n_inputs(), n)
        count_ok = _exactly_k(b, [b.adv(v) for v in range(n)], k, at_least=at_least_k)
        checks = [count_ok]
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                both = b.and2(b.adv(i - 1), b.adv(j - 1))
                checks.append(b.not1(b.and2(both, b.not1(b.inp(clique_edge_index(n, i, j))))))
        return b.build(b.and_all(checks))
    if isinstance(spec, Matching):
        n = spec.n
        b = CircuitBuilder(spec.n_inputs(), spec.n_inputs())
        cell = lambda i, j: i * n + j
        checks = []
        for i in range(n):
            for j in range(n):
                checks.append(b.not1(b.and2(b.adv(cell(i, j)), b.not1(b.inp(cell(i, j))))))
        for i in range(n):
            checks.append(_exactly_one(b, [b.adv(cell(i, j)) for j in range(n)]))
        for j in range(n):
            checks.append(_exactly_one(b, [b.adv(cell(i, j)) for i in range(n)]))
        return b.build(b.and_all(checks))
    if isinstance(spec, Gen):
        n = spec.n
        b = CircuitBuilder(spec.n_inputs(), 0)
        x = lambda i, j, k: b.inp(((i - 1) * n + (j - 1)) * n + (k - 1))
        gen = [b.const(1) if k == 1 else b.const(0) for k in range(1, n + 1)]
        for _ in range(n):
            nxt = []
            for k in range(1, n + 1):
                terms = [gen[k - 1]]
                for i in range(1, n + 1):
                    for j in range(1, n + 1):
                        terms.append(b.and_all([x(i, j, k), gen[i - 1], gen[j - 1]]))
                nxt.append(b.or_all(terms))
            gen = nxt
        return b.build(gen[n - 1])
    raise TypeError(f"not a family spec: {spec!r}")


def oracle(spec, inputs: list[int]) -> int:
    """Direct algorithm for the family function, independent of any circuit."""
    if len(inputs) != spec.n_inputs():
        raise ValueError("input vector length mismatch")
    if isinstance(spec, Clique):
        n, k = spec.n, spec.k
        edges = {
            (i, j)
            for i in range(1, n + 1)
            for j in range(i + 1, n + 1)
            if inputs[clique_edge_index(n, i, j)]
        }
        for subset in itertools.combinations(range(1, n + 1), k):
            if all((a, c) in edges for a, c in itertools.combinations(subset, 2)):
                return 1
        return 0
    if isinstance(spec, Matching):
        n = spec.n
        adj = [[j for j in range(n) if inputs[i * n + j]] for i in range(n)]
        match_of: list[int | None] = [None] * n

        def augment(i: int, seen: set[int]) -> bool:
            for j in adj[i]:
                if j in seen:
                    continue
                seen.add(j)
                if match_of[j] is None or augment(match_of[j], seen):
                    match_of[j] = i
                    return True
            return False

        return 1 if all(augment(i, set()) for i in range(n)) else 0
    if isinstance(spec, Gen):
        n = spec.n
        generated = {1}
        changed = True
        while changed:
            changed = False
            for k in range(1, n + 1):
                if k in generated:
                    continue
                for i in generated:
                    hit = False
                    for j in generated:
                        if inputs[((i - 1) * n + (j - 1)) * n + (k - 1)]:
                            generated.add(k)
                            changed = True
                            hit = True
                            break
                    if hit:
                        break
        return 1 if spec.n in generated else 0
    raise TypeError(f"not a family spec: {spec!r}")


def parse_family(text: str):
    """Parse 'clique:n,k' / 'matching:n' / 'gen:n'."""
    name, _, rest = text.partition(":")
    args = [int(x) for x in rest.split(",")] if rest else []
    if name == "clique" and len(args) == 2:
        return Clique(*args)
    if name == "matching" and len(args) == 1:
        return Matching(args[0])
    if name == "gen" and len(args) == 1:
        return Gen(args[0])
    raise ValueError(f"bad family spec {text!r} (want clique:n,k / matching:n / gen:n)")


# -- text format ---------------------------------------------------------

_OPS_OUT = {AND: "AND", OR: "OR", NOT: "NOT", INPUT: "INPUT", ADVICE: "ADVICE", CONST: "CONST"}
_OPS_IN = {v: k for k, v in _OPS_OUT.items()}


def circuit_to_text(c: Circuit) -> str:
    lines = [f"inputs {c.n_inputs}", f"advice {c.p_advice}"]
    for gid, g in enumerate(c.gates):
        if g.op in (AND, OR):
            rhs = f"{_OPS_OUT[g.op]} g{g.args[0]} g{g.args[1]}"
        elif g.op == NOT:
            rhs = f"NOT g{g.args[0]}"
        elif g.op in (INPUT, ADVICE):
            rhs = f"{_OPS_OUT[g.op]} {g.args[0] + 1}"
        else:
            rhs = f"CONST {g.args[0]}"
        lines.append(f"g{gid} = {rhs}")
    lines.append(f"output g{c.output}")
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    n_inputs = p_advice = None
    gates: list[Gate] = []
    output = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "inputs":
            n_inputs = int(parts[1])
        elif parts[0] == "advice":
            p_advice = int(parts[1])
        elif parts[0] == "output":
            output = int(parts[1].lstrip("g"))
        else:
            if parts[1] != "=" or not parts[0].startswith("g"):
                raise ValueError(f"bad circuit line {line!r}")
            gid = int(parts[0][1:])
            if gid != len(gates):
                raise ValueError(f"gate ids must be consecutive, got {line!r}")
            op = _OPS_IN.get(parts[2])
            if op is None:
                raise ValueError(f"unknown op in {line!r}")
            if op in (AND, OR):
                gates.append(Gate(op, (int(parts[3].lstrip("g")), int(parts[4].lstrip("g")))))
            elif op == NOT:
                gates.append(Gate(op, (int(parts[3].lstrip("g")),)))
            elif op in (INPUT, ADVICE):
                gates.append(Gate(op, (int(parts[3]) - 1,)))
            else:
                gates.append(Gate(op, (int(parts[3]),)))
    if n_inputs is None or p_advice is None or output is None:
        raise ValueError("circuit text needs inputs/advice headers and an output footer")
    return Circuit(n_inputs, p_advice, tuple(gates), output)
