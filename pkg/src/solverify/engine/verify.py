"""Three-phase verification driver.

Phase 1 infers a contract invariant and, when it also discharges every
assertion, the program is fully verified.  Otherwise phase 2 hunts for a
counterexample by unrolling the harness up to the transaction bound; a model
becomes a replayed trace.  If every bound is exhausted without a hit, the
result records safety up to that bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from solverify.engine.bmc import BmcOutcome, Domains, bounded_check
from solverify.engine.candidates import CandidatePredicate, generate_candidates
from solverify.engine.houdini import HoudiniResult, houdini_infer
from solverify.engine.trace import CounterexampleTrace
from solverify.policy import Policy
from solverify.translate import HarnessInfo, Translation


@dataclass
class Timings:
    invariant_seconds: float = 0.0
    bmc_seconds: float = 0.0
    total_seconds: float = 0.0


@dataclass
class FullyVerified:
    invariant: list[CandidatePredicate]
    houdini: HoudiniResult
    timings: Timings = field(default_factory=Timings)

    verdict = "FullyVerified"


@dataclass
class Refuted:
    trace: CounterexampleTrace
    k: int
    houdini: HoudiniResult | None
    timings: Timings = field(default_factory=Timings)

    verdict = "Refuted"


@dataclass
class PartiallyVerified:
    bound: int
    houdini: HoudiniResult | None
    invariant: list[CandidatePredicate] = field(default_factory=list)
    timings: Timings = field(default_factory=Timings)

    verdict = "PartiallyVerified"


def verify(tr: Translation, hinfo: HarnessInfo, policy: Policy | None = None,
           k_max: int = 6, solver_path: str | None = None,
           timeout: float = 600.0, loop_unroll: int = 8,
           domains: Domains | None = None,
           candidates: list[CandidatePredicate] | None = None,
           skip_invariant: bool = False, dump_dir: str | None = None):
    """FullyVerified, Refuted (with replayed trace), or PartiallyVerified."""
    start = time.monotonic()
    timings = Timings()

    houdini = None
    if not skip_invariant:
        pool = candidates
        if pool is None:
            pool = generate_candidates(tr, policy, hinfo.root) if policy else []
        houdini = houdini_infer(tr, hinfo, pool, solver_path=solver_path,
                                timeout=timeout, loop_unroll=loop_unroll,
                                dump_dir=dump_dir)
        timings.invariant_seconds = houdini.seconds
        if houdini.all_asserts_verified:
            timings.total_seconds = time.monotonic() - start
            return FullyVerified(invariant=houdini.invariant, houdini=houdini,
                                 timings=timings)

    outcome: BmcOutcome = bounded_check(tr, hinfo, k_max,
                                        solver_path=solver_path,
                                        timeout=timeout,
                                        loop_unroll=loop_unroll,
                                        domains=domains, dump_dir=dump_dir)
    timings.bmc_seconds = outcome.seconds
    timings.total_seconds = time.monotonic() - start
    if outcome.trace is not None:
        return Refuted(trace=outcome.trace, k=outcome.k_reached,
                       houdini=houdini, timings=timings)
    # unknown answers end the provable range; claim only what was proven
    return PartiallyVerified(bound=outcome.safe_bound(), houdini=houdini,
                             invariant=houdini.invariant if houdini else [],
                             timings=timings)
