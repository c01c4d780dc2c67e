"""Circuit-correctness CNF templates, instantiation by input vectors, and DPLL.

The template for a NOT/AND circuit fixes the clause order downstream code
relies on: first one unit clause (not x_j) per input in input order, then the
unit clause for the output variable, then per-gate consistency clauses in
topological gate order.  Variables are numbered inputs, advice, gates.
Instantiating at an input vector deletes exactly the unit input clauses at
the positions where the vector is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import ADVICE, AND, CONST, Circuit, INPUT, NOT


@dataclass(frozen=True)
class Cnf:
    n_vars: int
    clauses: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class CnfTemplate:
    n_inputs: int
    n_vars: int
    var_roles: tuple[tuple[str, int], ...]  # ("input", j) / ("advice", j) / ("gate", gid)
    clauses: tuple[tuple[int, ...], ...]
    output_var: int

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)


def build_cnf_template(c: Circuit) -> CnfTemplate:
    if not c.is_neg_and():
        raise ValueError("circuit must be normalized to NOT/AND form")
    if any(g.op == CONST for g in c.gates):
        raise ValueError("circuit must be normalized to NOT/AND form")
    n, p = c.n_inputs, c.p_advice
    var_roles: list[tuple[str, int]] = [("input", j) for j in range(n)]
    var_roles += [("advice", j) for j in range(p)]
    var_of_gate: dict[int, int] = {}
    for gid, g in enumerate(c.gates):
        if g.op == INPUT:
            var_of_gate[gid] = g.args[0] + 1
        elif g.op == ADVICE:
            var_of_gate[gid] = n + g.args[0] + 1
        else:
            var_roles.append(("gate", gid))
            var_of_gate[gid] = len(var_roles)

    clauses: list[tuple[int, ...]] = [(-(j + 1),) for j in range(n)]
    clauses.append((var_of_gate[c.output],))
    for gid, g in enumerate(c.gates):
        v = var_of_gate[gid]
        if g.op == NOT:
            h = var_of_gate[g.args[0]]
            clauses.append((h, -v))
            clauses.append((-h, v))
        elif g.op == AND:
            h1, h2 = var_of_gate[g.args[0]], var_of_gate[g.args[1]]
            clauses.append((h1, -v))
            clauses.append((h2, -v))
            clauses.append((-h1, -h2, v))
    return CnfTemplate(
        n_inputs=n,
        n_vars=len(var_roles),
        var_roles=tuple(var_roles),
        clauses=tuple(clauses),
        output_var=var_of_gate[c.output],
    )


def instantiate_cnf(t: CnfTemplate, alpha: list[int]) -> Cnf:
    """Delete the unit input clauses (not x_j) at positions with alpha_j = 1."""
    if len(alpha) != t.n_inputs:
        raise ValueError("input vector length mismatch")
    keep = [c for j, c in enumerate(t.clauses[: t.n_inputs]) if not alpha[j]]
    return Cnf(t.n_vars, tuple(keep) + t.clauses[t.n_inputs :])


def sat(f: Cnf) -> bool:
    """DPLL with unit propagation."""
    clauses = [tuple(c) for c in f.clauses]
    if any(len(c) == 0 for c in clauses):
        return False
    watch: dict[int, list[int]] = {}
    for ci, c in enumerate(clauses):
        for lit in c:
            watch.setdefault(lit, []).append(ci)

    assign: dict[int, bool] = {}

    def value(lit: int):
        v = assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def propagate(units: list[int], trail: list[int]) -> bool:
        queue = list(units)
        while queue:
            lit = queue.pop()
            val = value(lit)
            if val is True:
                continue
            if val is False:
                return False
            assign[abs(lit)] = lit > 0
            trail.append(abs(lit))
            for ci in watch.get(-lit, ()):
                clause = clauses[ci]
                unassigned = None
                satisfied = False
                count = 0
                for other in clause:
                    v = value(other)
                    if v is True:
                        satisfied = True
                        break
                    if v is None:
                        unassigned = other
                        count += 1
                if satisfied:
                    continue
                if count == 0:
                    return False
                if count == 1:
                    queue.append(unassigned)
        return True

    def pick() -> int | None:
        best = None
        best_len = None
        for clause in clauses:
            free = []
            satisfied = False
            for lit in clause:
                v = value(lit)
                if v is True:
                    satisfied = True
                    break
                if v is None:
                    free.append(lit)
            if satisfied:
                continue
            if not free:
                return None  # conflict surfaced elsewhere
            if best_len is None or len(free) < best_len:
                best, best_len = free[0], len(free)
                if best_len == 1:
                    break
        return best

    def solve(units: list[int]) -> bool:
        trail: list[int] = []
        if not propagate(units, trail):
            for v in trail:
                del assign[v]
            return False
        lit = pick()
        if lit is None:
            done = all(
                any(value(l) is True for l in clause) for clause in clauses
            )
            if done:
                return True
            for v in trail:
                del assign[v]
            return False
        for choice in (lit, -lit):
            if solve([choice]):
                return True
        for v in trail:
            del assign[v]
        return False

    initial = [c[0] for c in clauses if len(c) == 1]
    return solve(initial)


def brute_force_sat(f: Cnf) -> bool:
    """Exhaustive assignment sweep; test oracle for small formulas."""
    if f.n_vars > 22:
        raise ValueError("brute force capped at 22 variables")
    for bits in range(1 << f.n_vars):
        ok = True
        for clause in f.clauses:
            if not any(
                (bits >> (abs(l) - 1)) & 1 == (1 if l > 0 else 0) for l in clause
            ):
                ok = False
                break
        if ok:
            return True
    return False


def to_dimacs(f: Cnf) -> str:
    lines = [f"p cnf {f.n_vars} {len(f.clauses)}"]
    for clause in f.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


def from_dimacs(text: str) -> Cnf:
    n_vars = None
    clauses = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            n_vars = int(parts[2])
            continue
        lits = [int(x) for x in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        clauses.append(tuple(lits))
    if n_vars is None:
        raise ValueError("missing DIMACS header")
    return Cnf(n_vars, tuple(clauses))
