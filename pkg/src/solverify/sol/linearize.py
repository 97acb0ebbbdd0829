"""C3 linearization of contract inheritance.

The resolution order puts the contract itself first, respects each `is`
list's declaration order (local precedence), and is consistent with every
base's own linearization.  Member lookup walks the order and takes the first
match.
"""

from __future__ import annotations

from solverify.sol.ast import SolProgram


class InheritanceCycle(Exception):
    pass


class AmbiguousLinearization(Exception):
    pass


def _c3_merge(seqs: list[list[str]], ctx: str) -> list[str]:
    result = []
    seqs = [list(s) for s in seqs if s]
    while seqs:
        for seq in seqs:
            head = seq[0]
            if not any(head in s[1:] for s in seqs):
                break
        else:
            raise AmbiguousLinearization(
                f"no valid C3 linearization for {ctx}")
        result.append(head)
        seqs = [[x for x in s if x != head] for s in seqs]
        seqs = [s for s in seqs if s]
    return result


def linearize(program: SolProgram) -> dict[str, list[str]]:
    """Per-contract resolution order (most-derived first)."""
    by_name = {c.name: c for c in program.contracts}
    order: dict[str, list[str]] = {}
    in_progress: set[str] = set()

    def lin(name: str) -> list[str]:
        if name in order:
            return order[name]
        if name in in_progress:
            raise InheritanceCycle(f"inheritance cycle through {name}")
        if name not in by_name:
            raise AmbiguousLinearization(f"unknown base contract {name}")
        in_progress.add(name)
        contract = by_name[name]
        base_lins = [lin(b) for b in contract.bases]
        merged = _c3_merge(base_lins + [list(contract.bases)], name)
        in_progress.discard(name)
        order[name] = [name] + merged
        return order[name]

    for c in program.contracts:
        lin(c.name)
    return order


def resolve_function(program: SolProgram, order: dict[str, list[str]],
                     contract: str, fn: str):
    """First function named `fn` along `contract`'s linearization, together
    with its defining contract name; None when absent."""
    for cname in order[contract]:
        c = program.contract(cname)
        f = c.function(fn) if c else None
        if f is not None:
            return cname, f
    return None


def resolve_state_var(program: SolProgram, order: dict[str, str],
                      contract: str, name: str):
    for cname in order[contract]:
        c = program.contract(cname)
        if c is None:
            continue
        t = c.state_var(name)
        if t is not None:
            return cname, t
    return None


def resolve_modifier(program: SolProgram, order, contract: str, name: str):
    for cname in order[contract]:
        c = program.contract(cname)
        m = c.modifier(name) if c else None
        if m is not None:
            return cname, m
    return None


def subtypes_of(program: SolProgram, order: dict[str, list[str]],
                contract: str) -> list[str]:
    """All contracts whose linearization contains `contract`, in declaration
    order (the closed-program set of possible dynamic types)."""
    return [c.name for c in program.contracts if contract in order[c.name]]
