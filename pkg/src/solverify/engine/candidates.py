"""Candidate contract-invariant predicates.

The template is e1 op e2 with op equality or disequality, instantiated over
the instance-role variables, the state variable, the null address, and the
policy's state constants, all read at the root instance.  Arbitrary integer
constants are excluded; this pool sufficed for the conformance workloads."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from solverify.policy import Policy
from solverify.smt import terms as T
from solverify.sol.conformance import STATE_VAR
from solverify.sol.linearize import resolve_state_var
from solverify.translate import Translation, state_map_name


@dataclass(frozen=True)
class CandidatePredicate:
    lhs_map: str          # global map name of the left state variable
    op: str               # "==" or "!="
    rhs_kind: str         # "statevar" | "null" | "stateconst"
    rhs: object           # map name | None | int
    text: str             # human-readable form

    def to_term(self, qb, global_env: dict, inst: "T.Term") -> "T.Term":
        bank = qb.bank
        lhs_map = global_env[self.lhs_map]
        lhs = bank.mk("select", (lhs_map, inst), sort=lhs_map.sort[2])
        if self.rhs_kind == "statevar":
            rhs_map = global_env[self.rhs]
            rhs = bank.mk("select", (rhs_map, inst), sort=rhs_map.sort[2])
        elif self.rhs_kind == "null":
            rhs = qb.null
        else:
            rhs = bank.intval(self.rhs)
        eq = bank.mk("=", (lhs, rhs), sort=T.BOOL_S)
        if self.op == "==":
            return eq
        return bank.mk("not", (eq,), sort=T.BOOL_S)


def generate_candidates(tr: Translation, policy: Policy, root: str) -> list[CandidatePredicate]:
    """Deterministic pool: role-variable pairs, null comparisons, and state
    constants, each with both polarities."""
    workflow = policy.workflow(root)
    order = tr.order

    def owner_of(var: str) -> str:
        resolved = resolve_state_var(tr.source, order, root, var)
        if resolved is None:
            raise ValueError(f"{root} lacks state variable {var}")
        return resolved[0]

    role_vars = sorted(workflow.instance_role_names())
    role_maps = {q: state_map_name(q, owner_of(q)) for q in role_vars}
    out: list[CandidatePredicate] = []

    for x, y in itertools.combinations(role_vars, 2):
        for op in ("==", "!="):
            out.append(CandidatePredicate(
                lhs_map=role_maps[x], op=op, rhs_kind="statevar",
                rhs=role_maps[y], text=f"{x} {op} {y}"))
    for x in role_vars:
        for op in ("==", "!="):
            out.append(CandidatePredicate(
                lhs_map=role_maps[x], op=op, rhs_kind="null", rhs=None,
                text=f"{x} {op} 0x0"))

    state_owner = owner_of(STATE_VAR)
    state_map = state_map_name(STATE_VAR, state_owner)
    enum_name = tr.source.contract(state_owner).enum_vars.get(STATE_VAR)
    members: list[str] | None = None
    for cname in order[root]:
        c = tr.source.contract(cname)
        if c and enum_name in c.enums:
            members = c.enums[enum_name]
            break
    for idx, member in enumerate(members or []):
        for op in ("==", "!="):
            out.append(CandidatePredicate(
                lhs_map=state_map, op=op, rhs_kind="stateconst", rhs=idx,
                text=f"{STATE_VAR} {op} {enum_name}.{member}"))

    seen = set()
    unique = []
    for c in out:
        key = (c.lhs_map, c.op, c.rhs_kind, c.rhs)
        if key not in seen:
            seen.add(key)
            unique.append(c)
    return unique
