"""Zero-trust distributed network toolkit.

Policy storage with tamper-evident trace logs, PDP/PEP decision flow, a
deterministic multi-network simulator, a small timed-automata model checker
and a policy-gated agent benchmark.
"""

__version__ = "0.1.0"
