"""Decision procedure for the query fragment the verifier emits.

Scope: boolean structure over equality with uninterpreted functions, arrays
(reduced to reads over base arrays by read-over-write rewriting), integer
difference arithmetic, and universally quantified allocation axioms handled
by ground instantiation over terms occurring in the query.

`unsat` answers are sound: instantiation only adds consequences, and any
constraint outside the handled fragment is ignored rather than used, which
can only weaken refutations.  `sat` answers carry a model for the ground
part; out-of-fragment constraints are re-evaluated against that model and
the answer degrades to `unknown` on failure.  The engine treats results
accordingly (counterexamples are replayed before being reported).
"""

from __future__ import annotations

import itertools

from solverify.smt.terms import (
    BOOL_S, INT_S, Script, Term, TermBank, is_array_sort,
)

try:
    from sympy.logic.algorithms.dpll2 import SATSolver as _SympySat
except Exception:  # pragma: no cover - sympy is a declared dependency
    _SympySat = None


class SolverUnknown(Exception):
    pass


ATOM_OPS = {"=", "<", "<=", ">", ">="}
CONNECTIVES = {"and", "or", "not", "=>", "ite"}


# ---------------------------------------------------------------------------
# Simplification with read-over-write elimination

class Simplifier:
    def __init__(self, bank: TermBank):
        self.bank = bank
        self.cache: dict[int, Term] = {}
        self._select_cache: dict[tuple[int, int], Term] = {}

    def run(self, t: Term) -> Term:
        hit = self.cache.get(t.tid)
        if hit is not None:
            return hit
        out = self._rw(t)
        self.cache[t.tid] = out
        return out

    def _mk(self, op, args, value=None, sort=None):
        return self.bank.mk(op, tuple(args), value=value, sort=sort)

    def _rw(self, t: Term) -> Term:
        bank = self.bank
        if not t.args:
            return t
        args = [self.run(a) for a in t.args]

        if t.op == "select":
            return self._select(args[0], args[1])
        if t.op == "distinct":
            parts = []
            for a, b in itertools.combinations(args, 2):
                parts.append(self._mk("not", [self._mk("=", [a, b], sort=BOOL_S)],
                                      sort=BOOL_S))
            if not parts:
                return bank.boolval(True)
            out = parts[0] if len(parts) == 1 else self._mk("and", parts, sort=BOOL_S)
            return self.run(out)

        out = self._mk(t.op, args, value=t.value, sort=t.sort)
        return self._fold(out)

    def _select(self, base: Term, key: Term) -> Term:
        memo = self._select_cache.get((base.tid, key.tid))
        if memo is not None:
            return memo
        out = self._select_inner(base, key)
        self._select_cache[(base.tid, key.tid)] = out
        return out

    def _select_inner(self, base: Term, key: Term) -> Term:
        bank = self.bank
        if base.op == "store":
            arr, k, v = base.args
            eq = self._fold(self._mk("=", [k, key], sort=BOOL_S))
            if eq.op == "boolval":
                return v if eq.value else self._select(arr, key)
            return self._fold(self._mk("ite", [eq, v, self._select(arr, key)],
                                       sort=v.sort))
        if base.op == "ite":
            c, a, b = base.args
            return self._fold(self._mk(
                "ite", [c, self._select(a, key), self._select(b, key)],
                sort=self._value_sort(base)))
        return self._mk("select", [base, key], sort=self._value_sort(base))

    @staticmethod
    def _value_sort(arr_term: Term):
        return arr_term.sort[2] if is_array_sort(arr_term.sort) else None

    def _eq_const(self, ite_term: Term, const: Term) -> Term:
        memo = self._select_cache.get((ite_term.tid, ~const.tid))
        if memo is not None:
            return memo
        c, a, b = ite_term.args
        out = self._fold(self._mk("ite", [
            c, self._fold(self._mk("=", [a, const], sort=BOOL_S)),
            self._fold(self._mk("=", [b, const], sort=BOOL_S))], sort=BOOL_S))
        self._select_cache[(ite_term.tid, ~const.tid)] = out
        return out

    def _fold(self, t: Term) -> Term:
        bank = self.bank
        args = t.args
        if t.op == "not":
            a = args[0]
            if a.op == "boolval":
                return bank.boolval(not a.value)
            if a.op == "not":
                return a.args[0]
            return t
        if t.op == "and":
            flat = []
            for a in args:
                if a.op == "boolval":
                    if not a.value:
                        return bank.boolval(False)
                elif a.op == "and":
                    flat.extend(a.args)
                else:
                    flat.append(a)
            if not flat:
                return bank.boolval(True)
            return flat[0] if len(flat) == 1 else self._mk("and", flat, sort=BOOL_S)
        if t.op == "or":
            flat = []
            for a in args:
                if a.op == "boolval":
                    if a.value:
                        return bank.boolval(True)
                elif a.op == "or":
                    flat.extend(a.args)
                else:
                    flat.append(a)
            if not flat:
                return bank.boolval(False)
            return flat[0] if len(flat) == 1 else self._mk("or", flat, sort=BOOL_S)
        if t.op == "=>":
            a, b = args
            if a.op == "boolval":
                return b if a.value else bank.boolval(True)
            if b.op == "boolval":
                return bank.boolval(True) if b.value else \
                    self._fold(self._mk("not", [a], sort=BOOL_S))
            return t
        if t.op == "ite":
            c, a, b = args
            if c.op == "boolval":
                return a if c.value else b
            if a is b:
                return a
            return t
        if t.op == "=":
            a, b = args
            if a is b:
                return bank.boolval(True)
            if a.op == "intval" and b.op == "intval":
                return bank.boolval(a.value == b.value)
            if a.op == "boolval" and b.op == "boolval":
                return bank.boolval(a.value == b.value)
            # Distributing equality-with-constant over ite turns finite-state
            # reads into boolean structure instead of theory atoms.
            if a.op == "ite" and b.op == "intval":
                return self._eq_const(a, b)
            if b.op == "ite" and a.op == "intval":
                return self._eq_const(b, a)
            return t
        if t.op in ("<", "<=", ">", ">="):
            a, b = args
            if a.op == "intval" and b.op == "intval":
                return bank.boolval({"<": a.value < b.value,
                                     "<=": a.value <= b.value,
                                     ">": a.value > b.value,
                                     ">=": a.value >= b.value}[t.op])
            return t
        if t.op in ("+", "-", "*", "neg"):
            lin = linearize(t)
            if lin is not None and not lin[1]:
                return bank.intval(lin[0])
            return t
        return t


# ---------------------------------------------------------------------------
# Linear view of integer terms

def linearize(t: Term):
    """(constant, {opaque term: coefficient}) or None if nonlinear."""
    if t.op == "intval":
        return t.value, {}
    if t.op == "+":
        const, coeffs = 0, {}
        for a in t.args:
            sub = linearize(a)
            if sub is None:
                return None
            const += sub[0]
            for k, v in sub[1].items():
                coeffs[k] = coeffs.get(k, 0) + v
        return const, {k: v for k, v in coeffs.items() if v}
    if t.op == "-":
        sub = linearize(t.args[0])
        if sub is None:
            return None
        const, coeffs = sub[0], dict(sub[1])
        for a in t.args[1:]:
            sub = linearize(a)
            if sub is None:
                return None
            const -= sub[0]
            for k, v in sub[1].items():
                coeffs[k] = coeffs.get(k, 0) - v
        return const, {k: v for k, v in coeffs.items() if v}
    if t.op == "neg":
        sub = linearize(t.args[0])
        if sub is None:
            return None
        return -sub[0], {k: -v for k, v in sub[1].items()}
    if t.op == "*":
        scale = 1
        other = None
        for a in t.args:
            if a.op == "intval":
                scale *= a.value
            elif other is None:
                other = a
            else:
                return None
        if other is None:
            return scale, {}
        sub = linearize(other) if other.op in ("+", "-", "neg", "*", "intval") else (0, {other: 1})
        if sub is None:
            return None
        return sub[0] * scale, {k: v * scale for k, v in sub[1].items()}
    return 0, {t: 1}


# ---------------------------------------------------------------------------
# Congruence closure with explanations (rebuilt per theory check)

class _CCConflict(Exception):
    def __init__(self, lits: set[int]):
        self.lits = lits


class CC:
    def __init__(self, bank: TermBank):
        self.bank = bank
        self.parent: dict[int, int] = {}
        self.terms: dict[int, Term] = {}
        self.proof: dict[int, tuple[int, object] | None] = {}
        self.use: dict[int, list[Term]] = {}
        self.sig: dict[tuple, Term] = {}
        self.members: dict[int, list[int]] = {}
        self.true_t = bank.boolval(True)
        self.false_t = bank.boolval(False)
        self.add(self.true_t)
        self.add(self.false_t)
        self.diseqs: list[tuple[Term, Term, int]] = []

    def add(self, t: Term):
        if t.tid in self.parent:
            return
        self.parent[t.tid] = t.tid
        self.terms[t.tid] = t
        self.proof[t.tid] = None
        self.members[t.tid] = [t.tid]
        for a in t.args:
            self.add(a)
        if t.args:
            for a in t.args:
                self.use.setdefault(self.find(a.tid), []).append(t)
            self._congruence(t)

    def find(self, tid: int) -> int:
        root = tid
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[tid] != root:
            self.parent[tid], tid = root, self.parent[tid]
        return root

    def _signature(self, t: Term):
        return (t.op, t.value, tuple(self.find(a.tid) for a in t.args))

    def _congruence(self, t: Term):
        key = self._signature(t)
        other = self.sig.get(key)
        if other is None:
            self.sig[key] = t
        elif self.find(other.tid) != self.find(t.tid):
            self._union(t, other, ("cong", t, other))

    def merge(self, a: Term, b: Term, lit: int):
        self.add(a)
        self.add(b)
        self._union(a, b, ("lit", lit))

    def _union(self, a: Term, b: Term, reason):
        ra, rb = self.find(a.tid), self.find(b.tid)
        if ra == rb:
            return
        self._reroot(b.tid)
        self.proof[b.tid] = (a.tid, reason)
        self.parent[rb] = ra
        self.members[ra].extend(self.members.pop(rb, []))
        moved = self.use.pop(rb, [])
        self.use.setdefault(ra, []).extend(moved)
        for t in list(moved):
            self._congruence(t)
        # true/false collapse is the canonical boolean conflict
        if self.find(self.true_t.tid) == self.find(self.false_t.tid):
            lits: set[int] = set()
            self.explain(self.true_t, self.false_t, lits)
            raise _CCConflict(lits)

    def _reroot(self, tid: int):
        prev = None
        cur = tid
        while True:
            step = self.proof[cur]
            self.proof[cur] = prev
            if step is None:
                break
            prev = (cur, step[1])
            cur = step[0]

    def same(self, a: Term, b: Term) -> bool:
        self.add(a)
        self.add(b)
        return self.find(a.tid) == self.find(b.tid)

    def explain(self, a: Term, b: Term, out: set[int], _depth: int = 0):
        if _depth > 200:
            raise SolverUnknown("explanation recursion limit")
        path_a = self._path(a.tid)
        path_b = self._path(b.tid)
        nodes_a = {tid: i for i, (tid, _) in enumerate(path_a)}
        meet = None
        for tid, _ in path_b:
            if tid in nodes_a:
                meet = tid
                break
        if meet is None:
            return
        for path in (path_a, path_b):
            for tid, reason in path:
                if tid == meet:
                    break
                if reason is None:
                    continue
                kind = reason[0]
                if kind == "lit":
                    out.add(reason[1])
                elif kind == "cong":
                    for x, y in zip(reason[1].args, reason[2].args):
                        self.explain(x, y, out, _depth + 1)
                elif kind == "dl":
                    out.update(reason[1])

    def _path(self, tid: int):
        out = []
        cur = tid
        while True:
            step = self.proof[cur]
            if step is None:
                out.append((cur, None))
                return out
            out.append((cur, step[1]))
            cur = step[0]


# ---------------------------------------------------------------------------
# Theory solver: EUF + integer difference constraints

class Theory:
    def __init__(self, bank: TermBank, atoms: dict[int, Term]):
        self.bank = bank
        self.atoms = atoms  # sat var -> atom term
        self.model_ints: dict[int, int] = {}
        self.model_classes: dict[int, int] = {}
        self.cc: CC | None = None
        self.unhandled: list[tuple[int, Term, bool]] = []

    # constraint shape: (coeff map over cc-roots, const, lits)
    def check(self, assignment: dict[int, bool]):
        """None when consistent (model stored), else conflict literal list."""
        bank = self.bank
        cc = CC(bank)
        self.cc = cc
        self.unhandled = []
        diseqs: list[tuple[Term, Term, int]] = []
        bounds: list[tuple[dict, int, int]] = []  # (coeffs, const, lit) sum+const <= 0

        def as_lit(var: int) -> int:
            return var if assignment[var] else -var

        try:
            for var, atom in self.atoms.items():
                if var not in assignment:
                    continue
                value = assignment[var]
                lit = as_lit(var)
                if atom.op == "=":
                    a, b = atom.args
                    if value:
                        cc.merge(a, b, lit)
                    else:
                        diseqs.append((a, b, lit))
                    if a.sort == INT_S:
                        la, lb = linearize(a), linearize(b)
                        if la is not None and lb is not None:
                            diff, coeffs = _combine(la, lb)
                            if value:
                                bounds.append((coeffs, diff, lit))
                                bounds.append(({k: -v for k, v in coeffs.items()},
                                               -diff, lit))
                    continue
                if atom.op in ("<", "<=", ">", ">="):
                    a, b = atom.args
                    la, lb = linearize(a), linearize(b)
                    if la is None or lb is None:
                        self.unhandled.append((lit, atom, value))
                        continue
                    op = atom.op if value else {"<": ">=", "<=": ">",
                                                ">": "<=", ">=": "<"}[atom.op]
                    diff, coeffs = _combine(la, lb)
                    # a - b + diff' forms: normalize to sum + const <= 0
                    if op == "<=":
                        bounds.append((coeffs, diff, lit))
                    elif op == "<":
                        bounds.append((coeffs, diff + 1, lit))
                    elif op == ">=":
                        bounds.append(({k: -v for k, v in coeffs.items()}, -diff, lit))
                    else:  # >
                        bounds.append(({k: -v for k, v in coeffs.items()}, -diff + 1, lit))
                    continue
                # boolean-sorted theory atoms (selects, uf applications)
                if atom.op in ("select", "app"):
                    cc.merge(atom, cc.true_t if value else cc.false_t, lit)
                    continue
                # plain boolean symbols carry no theory content
        except _CCConflict as conflict:
            return sorted(conflict.lits)

        # CC-level disequality checks
        try:
            for a, b, lit in diseqs:
                if cc.same(a, b):
                    lits = {lit}
                    cc.explain(a, b, lits)
                    return sorted(lits)
        except _CCConflict as conflict:
            return sorted(conflict.lits)

        # Difference reasoning over CC roots
        conflict = self._difference_check(cc, bounds, diseqs)
        if conflict is not None:
            return sorted(conflict)
        return None

    def _difference_check(self, cc: CC, bounds, diseqs):
        # Nodes are terms; ZERO is the constant origin.  Terms a congruence
        # class proved equal get zero-weight edges whose reasons carry the
        # merge explanation, so conflicts blame every literal involved.
        ZERO = -1
        edges: list[tuple[int, int, int, set[int]]] = []  # x - y <= w
        dl_terms: dict[int, Term] = {}

        def node(t: Term) -> int:
            cc.add(t)
            dl_terms[t.tid] = t
            return t.tid

        skipped = []
        for coeffs, const, lit in bounds:
            items = [(node(t), v) for t, v in coeffs.items()]
            merged: dict[int, int] = {}
            for n, v in items:
                merged[n] = merged.get(n, 0) + v
            merged = {n: v for n, v in merged.items() if v}
            if not merged:
                if const > 0:
                    return {lit}
                continue
            if len(merged) == 1:
                ((n, v),) = merged.items()
                if v == 1:
                    edges.append((n, ZERO, -const, {lit}))
                elif v == -1:
                    edges.append((ZERO, n, -const, {lit}))
                else:
                    skipped.append((coeffs, const, lit))
                continue
            if len(merged) == 2 and sorted(merged.values()) == [-1, 1]:
                pos = next(n for n, v in merged.items() if v == 1)
                neg = next(n for n, v in merged.items() if v == -1)
                edges.append((pos, neg, -const, {lit}))
                continue
            skipped.append((coeffs, const, lit))
        for _, _, lit in skipped:
            self.unhandled.append((lit, None, True))

        # congruence-implied equalities between DL-relevant terms
        by_class: dict[int, list[int]] = {}
        for tid in dl_terms:
            by_class.setdefault(cc.find(tid), []).append(tid)
        for tids in by_class.values():
            if len(tids) < 2:
                continue
            tids.sort()
            for a_tid, b_tid in zip(tids, tids[1:]):
                reasons: set[int] = set()
                cc.explain(dl_terms[a_tid], dl_terms[b_tid], reasons)
                edges.append((a_tid, b_tid, 0, reasons))
                edges.append((b_tid, a_tid, 0, reasons))

        graph: dict[int, list[tuple[int, int, set[int]]]] = {}
        nodes = {ZERO}
        for x, y, w, lits in edges:
            graph.setdefault(y, []).append((x, w, lits))
            nodes.add(x)
            nodes.add(y)

        dist, cycle = _bellman(graph, nodes)
        if cycle is not None:
            return cycle

        # forced equalities against asserted int disequalities
        for a, b, lit in diseqs:
            if a.sort != INT_S:
                continue
            la, lb = linearize(a), linearize(b)
            if la is None or lb is None:
                continue
            diff, coeffs = _combine(la, lb)
            items: dict[int, int] = {}
            for t, v in coeffs.items():
                n = node(t)
                items[n] = items.get(n, 0) + v
            items = {n: v for n, v in items.items() if v}
            if not items:
                if diff == 0:
                    return {lit}
                continue
            if len(items) == 1:
                ((n, v),) = items.items()
                if abs(v) != 1:
                    continue
                # diff + v*n != 0, so n must avoid target = -diff/v
                target = -diff // v
                ub = self._dist(graph, nodes, ZERO, n)   # n - 0 <= ub
                lb = self._dist(graph, nodes, n, ZERO)   # 0 - n <= lb
                if ub is not None and lb is not None \
                        and ub[0] == target and lb[0] == -target:
                    return {lit} | ub[1] | lb[1]
                continue
            if len(items) == 2 and sorted(items.values()) == [-1, 1]:
                pos = next(n for n, v in items.items() if v == 1)
                neg = next(n for n, v in items.items() if v == -1)
                # forced a - b == -diff ?
                d1 = self._dist(graph, nodes, neg, pos)   # pos - neg <= d1
                d2 = self._dist(graph, nodes, pos, neg)   # neg - pos <= d2
                if d1 is not None and d2 is not None and d1[0] == -diff and d2[0] == diff:
                    return {lit} | d1[1] | d2[1]

        # Separate colliding values of asserted disequalities: not forced
        # equal, so a separating constraint is consistent; retry a few times.
        for _ in range(len(diseqs) + 3):
            collision = None
            for a, b, lit in diseqs:
                if a.sort != INT_S:
                    continue
                la, lb = linearize(a), linearize(b)
                if la is None or lb is None:
                    continue
                diff, coeffs = _combine(la, lb)
                total = diff
                ok = True
                items: dict[int, int] = {}
                for t, v in coeffs.items():
                    n = node(t)
                    items[n] = items.get(n, 0) + v
                for n, v in items.items():
                    if n not in dist:
                        ok = False
                        break
                    total += v * dist[n]
                if ok and total == 0 and items:
                    collision = (items, diff)
                    break
            if collision is None:
                break
            items, diff = collision
            separated = False
            for direction in (1, -1):
                # sum(items) + diff <= -1  (or >= 1)
                trial = {n: v * direction for n, v in items.items()}
                trial_const = diff * direction + 1
                extra = _as_edge(trial, trial_const)
                if extra is None:
                    break
                x, y, w = extra
                graph.setdefault(y, []).append((x, w, set()))
                nodes.add(x)
                nodes.add(y)
                new_dist, cycle = _bellman(graph, nodes)
                if cycle is None:
                    dist = new_dist
                    separated = True
                    break
                graph[y].pop()
            if not separated:
                self.unhandled.append((0, None, True))
                break

        self.model_ints = dist
        self._zero = ZERO
        return None

    # hook for the separation loop above
    _zero = -1

    @staticmethod
    def _dist(graph, nodes, src: int, dst: int):
        """Shortest distance src->dst with reasons; None if unreachable."""
        INF = None
        dist = {n: None for n in nodes}
        reasons: dict[int, set[int]] = {src: set()}
        dist[src] = 0
        for _ in range(len(nodes)):
            changed = False
            for y, outs in graph.items():
                if dist.get(y) is None:
                    continue
                for x, w, lits in outs:
                    nd = dist[y] + w
                    if dist.get(x) is None or nd < dist[x]:
                        dist[x] = nd
                        reasons[x] = reasons[y] | lits
                        changed = True
            if not changed:
                break
        if dist.get(dst) is None:
            return None
        return dist[dst], reasons[dst]

    # -- model ----------------------------------------------------------------

    def model_value(self, t: Term, assignment: dict[int, bool], atom_vars: dict[int, int]):
        """Evaluate a term under the theory model."""
        cc = self.cc
        if t.op == "intval":
            return t.value
        if t.op == "boolval":
            return t.value
        lin = linearize(t) if t.sort == INT_S else None
        if lin is not None:
            const, coeffs = lin
            total = const
            for sub, coeff in coeffs.items():
                total += coeff * self._class_int(sub)
            return total
        if t.sort == BOOL_S:
            var = atom_vars.get(t.tid)
            if var is not None and var in assignment:
                return assignment[var]
            if cc is not None and t.tid in cc.parent:
                if cc.find(t.tid) == cc.find(cc.true_t.tid):
                    return True
                if cc.find(t.tid) == cc.find(cc.false_t.tid):
                    return False
            return False
        # uninterpreted sorts: class index
        return self._class_ref(t)

    def _class_int(self, t: Term) -> int:
        cc = self.cc
        if cc is None or t.tid not in cc.parent:
            return 0
        zero_origin = self.model_ints.get(self._zero, 0)
        if t.tid in self.model_ints:
            return self.model_ints[t.tid] - zero_origin
        root = cc.find(t.tid)
        for member in cc.members.get(root, ()):  # class members share a value
            if member in self.model_ints:
                return self.model_ints[member] - zero_origin
        return 1000 + (root % 100003)  # unconstrained: distinct per class

    def _class_ref(self, t: Term) -> int:
        cc = self.cc
        if cc is None:
            return 0
        cc.add(t)
        root = cc.find(t.tid)
        cache = self.model_classes
        if root not in cache:
            cache[root] = len(cache) + 1
        return cache[root]


def _combine(la, lb):
    """linear(a) - linear(b) -> (const, coeffs)."""
    const = la[0] - lb[0]
    coeffs = dict(la[1])
    for k, v in lb[1].items():
        coeffs[k] = coeffs.get(k, 0) - v
    return const, {k: v for k, v in coeffs.items() if v}


def _as_edge(items: dict[int, int], const: int):
    """coeffs + const <= 0 as a difference edge (x, y, w), or None."""
    items = {n: v for n, v in items.items() if v}
    if len(items) == 1:
        ((n, v),) = items.items()
        if v == 1:
            return (n, -1, -const)
        if v == -1:
            return (-1, n, -const)
        return None
    if len(items) == 2 and sorted(items.values()) == [-1, 1]:
        pos = next(n for n, v in items.items() if v == 1)
        neg = next(n for n, v in items.items() if v == -1)
        return (pos, neg, -const)
    return None


def _bellman(graph, nodes):
    """Shortest-path potentials or a negative cycle's reason literals."""
    dist = {n: 0 for n in nodes}
    pred: dict[int, tuple[int, set[int]]] = {}
    for _ in range(len(nodes) + 1):
        changed = False
        for y, outs in graph.items():
            dy = dist[y]
            for x, w, lits in outs:
                if dy + w < dist[x]:
                    dist[x] = dy + w
                    pred[x] = (y, lits)
                    changed = True
        if not changed:
            return dist, None
    for start in nodes:
        cur, seen, order = start, {}, []
        while cur in pred:
            if cur in seen:
                reasons: set[int] = set()
                for n in order[seen[cur]:]:
                    reasons |= pred[n][1]
                return None, reasons
            seen[cur] = len(order)
            order.append(cur)
            cur = pred[cur][0]
    return dist, None


# ---------------------------------------------------------------------------
# CNF conversion

class CNF:
    def __init__(self, bank: TermBank):
        self.bank = bank
        self.var_of: dict[int, int] = {}
        self.atom_terms: dict[int, Term] = {}
        self.clauses: list[list[int]] = []
        self.nvars = 0

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def var_for(self, t: Term) -> int:
        v = self.var_of.get(t.tid)
        if v is None:
            v = self.new_var()
            self.var_of[t.tid] = v
        return v

    def assert_root(self, t: Term):
        lit = self.convert(t)
        self.clauses.append([lit])

    def convert(self, t: Term) -> int:
        if t.op == "boolval":
            v = self.var_for(t)
            self.clauses.append([v] if t.value else [-v])
            return v
        if t.op == "not":
            return -self.convert(t.args[0])
        if t.tid in self.var_of and t.op in CONNECTIVES:
            return self.var_of[t.tid]
        if t.op == "and":
            lits = [self.convert(a) for a in t.args]
            v = self.var_for(t)
            for l in lits:
                self.clauses.append([-v, l])
            self.clauses.append([v] + [-l for l in lits])
            return v
        if t.op == "or":
            lits = [self.convert(a) for a in t.args]
            v = self.var_for(t)
            for l in lits:
                self.clauses.append([-l, v])
            self.clauses.append([-v] + lits)
            return v
        if t.op == "=>":
            a = self.convert(t.args[0])
            b = self.convert(t.args[1])
            v = self.var_for(t)
            # v <-> (-a or b)
            self.clauses.append([-v, -a, b])
            self.clauses.append([a, v])
            self.clauses.append([-b, v])
            return v
        if t.op == "ite":  # boolean ite
            c = self.convert(t.args[0])
            a = self.convert(t.args[1])
            b = self.convert(t.args[2])
            v = self.var_for(t)
            self.clauses.append([-v, -c, a])
            self.clauses.append([-v, c, b])
            self.clauses.append([v, -c, -a])
            self.clauses.append([v, c, -b])
            return v
        if t.op == "=" and t.args[0].sort == BOOL_S:
            a = self.convert(t.args[0])
            b = self.convert(t.args[1])
            v = self.var_for(t)
            self.clauses.append([-v, -a, b])
            self.clauses.append([-v, a, -b])
            self.clauses.append([v, a, b])
            self.clauses.append([v, -a, -b])
            return v
        # theory atom or boolean symbol
        v = self.var_for(t)
        if t.op not in ("sym",):
            self.atom_terms[v] = t
        elif t.sort == BOOL_S:
            self.atom_terms.setdefault(v, t)
        return v


# ---------------------------------------------------------------------------
# SAT wrapper

def _sat_solve(clauses: list[list[int]], nvars: int):
    if not clauses:
        return {}
    for c in clauses:
        if not c:
            return None
    if _SympySat is not None:
        variables = set(range(1, nvars + 1))
        solver = _SympySat([set(c) for c in clauses], variables, set())
        for model in solver._find_model():
            return dict(model)
        return None
    return _dpll(clauses, nvars)


def _dpll(clauses, nvars):  # minimal fallback
    assign: dict[int, bool] = {}

    def value(lit):
        v = assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def propagate():
        changed = True
        while changed:
            changed = False
            for c in clauses:
                vals = [value(l) for l in c]
                if any(v is True for v in vals):
                    continue
                unknown = [l for l, v in zip(c, vals) if v is None]
                if not unknown:
                    return False
                if len(unknown) == 1:
                    assign[abs(unknown[0])] = unknown[0] > 0
                    changed = True
        return True

    def rec():
        if not propagate():
            return False
        for var in range(1, nvars + 1):
            if var not in assign:
                saved = dict(assign)
                assign[var] = True
                if rec():
                    return True
                assign.clear()
                assign.update(saved)
                assign[var] = False
                if rec():
                    return True
                assign.clear()
                assign.update(saved)
                return False
        return True

    return dict(assign) if rec() else None


# ---------------------------------------------------------------------------
# Top level

class GroundSolver:
    def __init__(self, bank: TermBank):
        self.bank = bank
        self.cnf = CNF(bank)
        self.theory: Theory | None = None
        self.assignment: dict[int, bool] | None = None

    def solve(self, assertions: list[Term], max_rounds: int = 4000) -> str:
        for a in assertions:
            if a.op == "boolval":
                if not a.value:
                    return "unsat"
                continue
            self.cnf.assert_root(a)
        self._add_equality_lemmas()
        clauses = self.cnf.clauses
        theory = Theory(self.bank, self.cnf.atom_terms)
        self.theory = theory
        for _ in range(max_rounds):
            model = _sat_solve(clauses, self.cnf.nvars)
            if model is None:
                return "unsat"
            conflict = theory.check(model)
            if conflict is None:
                self.assignment = model
                if theory.unhandled:
                    return "unknown"
                if not self._validate(theory, model):
                    return "unknown"
                return "sat"
            if not conflict:
                return "unsat"
            clauses = clauses + [[-l for l in conflict]]
        raise SolverUnknown("theory loop budget exhausted")

    def _add_equality_lemmas(self):
        """Eager equality reasoning in the boolean layer: transitivity
        triangles over existing equality atoms and exclusion between
        equalities of one term with distinct constants.  The theory check
        remains the backstop; these just keep conflicts out of the loop."""
        eq_var: dict[tuple[int, int], int] = {}
        by_term: dict[int, list[tuple[int, int]]] = {}
        const_eqs: dict[int, list[tuple[int, int]]] = {}
        for var, atom in self.cnf.atom_terms.items():
            if atom.op != "=" or len(atom.args) != 2:
                continue
            a, b = atom.args
            if a.sort == BOOL_S:
                continue
            key = (min(a.tid, b.tid), max(a.tid, b.tid))
            eq_var[key] = var
            by_term.setdefault(a.tid, []).append((b.tid, var))
            by_term.setdefault(b.tid, []).append((a.tid, var))
            if a.op == "intval" and b.op != "intval":
                const_eqs.setdefault(b.tid, []).append((a.value, var))
            elif b.op == "intval" and a.op != "intval":
                const_eqs.setdefault(a.tid, []).append((b.value, var))

        for partners in const_eqs.values():
            for i in range(len(partners)):
                for j in range(i + 1, len(partners)):
                    (c1, v1), (c2, v2) = partners[i], partners[j]
                    if c1 != c2:
                        self.cnf.clauses.append([-v1, -v2])

        budget = 20000
        for b_tid, partners in by_term.items():
            if len(partners) < 2:
                continue
            for i in range(len(partners)):
                for j in range(i + 1, len(partners)):
                    a_tid, v_ab = partners[i]
                    c_tid, v_bc = partners[j]
                    if a_tid == c_tid:
                        continue
                    key = (min(a_tid, c_tid), max(a_tid, c_tid))
                    v_ac = eq_var.get(key)
                    if v_ac is None:
                        continue
                    self.cnf.clauses.append([-v_ab, -v_bc, v_ac])
                    self.cnf.clauses.append([-v_ab, -v_ac, v_bc])
                    self.cnf.clauses.append([-v_bc, -v_ac, v_ab])
                    budget -= 3
                    if budget <= 0:
                        return

    def _validate(self, theory: "Theory", model: dict[int, bool]) -> bool:
        """Evaluate arithmetic/equality atoms under the candidate model; a
        mismatch downgrades the answer rather than shipping a bad model."""
        atom_vars = {term.tid: var for var, term in self.cnf.atom_terms.items()}
        for var, atom in self.cnf.atom_terms.items():
            if var not in model or atom.op not in ("=", "<", "<=", ">", ">="):
                continue
            a = theory.model_value(atom.args[0], model, atom_vars)
            b = theory.model_value(atom.args[1], model, atom_vars)
            got = {"=": a == b, "<": a < b, "<=": a <= b,
                   ">": a > b, ">=": a >= b}[atom.op]
            if got != model[var]:
                return False
        return True

    def value_of(self, t: Term):
        return self.theory.model_value(t, self.assignment or {},
                                       {term.tid: var for var, term
                                        in self.cnf.atom_terms.items()})


def _polarity_extract(bank: TermBank, t: Term, proxies: list, polarity: bool) -> Term:
    """Replace positive-polarity foralls with proxy booleans; a negative
    occurrence is outside the fragment."""
    if t.op == "forall":
        if not polarity:
            raise SolverUnknown("negative quantifier")
        proxy = bank.sym(f"qproxy!{len(proxies)}", BOOL_S)
        proxies.append((proxy, t))
        return proxy
    if t.op == "not":
        return bank.mk("not", (_polarity_extract(bank, t.args[0], proxies,
                                                 not polarity),), sort=BOOL_S)
    if t.op in ("and", "or"):
        return bank.mk(t.op, tuple(_polarity_extract(bank, a, proxies, polarity)
                                   for a in t.args), sort=BOOL_S)
    if t.op == "=>":
        a = _polarity_extract(bank, t.args[0], proxies, not polarity)
        b = _polarity_extract(bank, t.args[1], proxies, polarity)
        return bank.mk("=>", (a, b), sort=BOOL_S)
    if t.op == "ite" and t.sort == BOOL_S:
        c = t.args[0]  # both polarities; quantifier-free conditions only
        if _has_forall(c):
            raise SolverUnknown("quantifier in ite condition")
        a = _polarity_extract(bank, t.args[1], proxies, polarity)
        b = _polarity_extract(bank, t.args[2], proxies, polarity)
        return bank.mk("ite", (c, a, b), sort=BOOL_S)
    if _has_forall(t):
        raise SolverUnknown("quantifier in unsupported position")
    return t


def _has_forall(t: Term) -> bool:
    if t.op == "forall":
        return True
    return any(_has_forall(a) for a in t.args)


def _collect_pools(roots: list[Term]) -> dict:
    pools: dict = {}
    seen: set[int] = set()

    def add(t: Term):
        if is_array_sort(t.sort) or t.sort is None:
            return
        pools.setdefault(t.sort, {})
        pools[t.sort].setdefault(t.tid, t)

    def has_bound(t: Term) -> bool:
        if t.op == "boundvar":
            return True
        return any(has_bound(a) for a in t.args)

    def walk(t: Term):
        if t.tid in seen:
            return
        seen.add(t.tid)
        if not has_bound(t):
            if t.op == "select":
                add(t.args[1])
                add(t)
            elif t.op in ("sym", "intval", "app"):
                add(t)
            elif t.op == "=":
                for a in t.args:
                    if not has_bound(a):
                        add(a)
        for a in t.args:
            walk(a)

    for r in roots:
        walk(r)
    return {sort: [terms[tid] for tid in sorted(terms)]
            for sort, terms in pools.items()}


def _instantiate(bank: TermBank, simp: Simplifier, proxies: list,
                 pools: dict, seen_instances: set) -> list[Term]:
    out = []
    for proxy, forall in proxies:
        bound = []
        body = forall
        while body.op == "forall":
            bound.append(body.value)
            body = body.args[0]
        candidate_pools = []
        for name, sort in bound:
            pool = pools.get(sort, [])
            if not pool and sort == INT_S:
                pool = [bank.intval(0)]
            candidate_pools.append(pool[:40])
        for combo in itertools.product(*candidate_pools):
            key = (proxy.tid, forall.tid, tuple(t.tid for t in combo))
            if key in seen_instances:
                continue
            seen_instances.add(key)
            sub = {name: t for (name, _), t in zip(bound, combo)}
            inst = simp.run(_subst(bank, body, sub))
            if inst.op == "boolval" and inst.value:
                continue
            out.append(bank.mk("=>", (proxy, inst), sort=BOOL_S))
            if len(out) > 20000:
                raise SolverUnknown("instantiation budget exhausted")
    return out


def _subst(bank: TermBank, t: Term, sub: dict[str, Term]) -> Term:
    cache: dict[int, Term] = {}

    def rec(x: Term) -> Term:
        hit = cache.get(x.tid)
        if hit is not None:
            return hit
        if x.op == "boundvar" and x.value in sub:
            out = sub[x.value]
        elif x.args:
            out = bank.mk(x.op, tuple(rec(a) for a in x.args), value=x.value,
                          sort=x.sort)
        else:
            out = x
        cache[x.tid] = out
        return out

    return rec(t)


def lift_ites(bank: TermBank, roots: list[Term]) -> list[Term]:
    """Name non-boolean ite terms with fresh symbols and defining clauses."""
    defs: list[Term] = []
    cache: dict[int, Term] = {}
    counter = itertools.count()

    def rec(t: Term) -> Term:
        hit = cache.get(t.tid)
        if hit is not None:
            return hit
        if t.args:
            out = bank.mk(t.op, tuple(rec(a) for a in t.args), value=t.value,
                          sort=t.sort)
        else:
            out = t
        if out.op == "ite" and out.sort != BOOL_S and not is_array_sort(out.sort):
            c, a, b = out.args
            v = bank.sym(f"ite!{next(counter)}", out.sort)
            defs.append(bank.mk("=>", (c, bank.mk("=", (v, a), sort=BOOL_S)),
                                sort=BOOL_S))
            defs.append(bank.mk("=>", (bank.mk("not", (c,), sort=BOOL_S),
                                       bank.mk("=", (v, b), sort=BOOL_S)),
                                sort=BOOL_S))
            out = v
        cache[t.tid] = out
        return out

    out_roots = [rec(r) for r in roots]
    # definitions can contain further ites
    i = 0
    while i < len(defs):
        defs[i] = rec(defs[i])
        i += 1
    return out_roots + defs


class Solved:
    """Result handle: the answer plus model evaluation for further terms."""

    def __init__(self, answer: str, solver: GroundSolver | None,
                 simp: Simplifier | None):
        self.answer = answer
        self._solver = solver
        self._simp = simp

    def value_of(self, t: Term):
        if self.answer != "sat" or self._solver is None:
            return None
        return self._solver.value_of(self._simp.run(t))


def solve(script: Script) -> Solved:
    bank = script.bank
    simp = Simplifier(bank)
    try:
        roots = [simp.run(a) for a in script.assertions]
        proxies: list = []
        roots = [_polarity_extract(bank, r, proxies, True) for r in roots]
        # Instances attach as proxy => instance; the formula itself forces a
        # proxy true exactly on the paths where its axiom was assumed.

        seen_instances: set = set()
        for _round in range(3):
            pools = _collect_pools(roots + [f for _, f in proxies])
            insts = _instantiate(bank, simp, proxies, pools, seen_instances)
            if not insts:
                break
            roots.extend(insts)

        roots = lift_ites(bank, [simp.run(r) for r in roots])
        solver = GroundSolver(bank)
        answer = solver.solve(roots)
    except SolverUnknown:
        return Solved("unknown", None, None)
    return Solved(answer, solver if answer == "sat" else None, simp)


def solve_script(script: Script):
    """(answer, values) for scripts carrying their own get-value commands."""
    solved = solve(script)
    values = {}
    if solved.answer == "sat":
        for cmd in script.commands:
            if cmd[0] == "get-value":
                for t in cmd[1]:
                    values[t] = solved.value_of(t)
    return solved.answer, values
