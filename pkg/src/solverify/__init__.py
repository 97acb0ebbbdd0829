"""Conformance verifier for workflow policies over a core Solidity subset.

The pipeline: parse a policy document and contract sources, check syntactic
conformance, instrument the contract with transition assertions, translate to
a small verification IR, and discharge the assertions by contract-invariant
inference followed by transaction-bounded model checking against an SMT
solver process.
"""

__version__ = "0.1.0"
