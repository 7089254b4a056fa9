"""CHSH-based entanglement certification toolkit: exact two-qubit algebra,
fidelity-bound analytics, verification protocols, a two-node discrete-event
network simulator, a Monte-Carlo experiment harness, and a service/CLI surface."""

__version__ = "0.1.0"
