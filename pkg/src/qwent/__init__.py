"""Quantum-walk entanglement transfer, accumulation, and retrieval toolkit."""

from . import accumulate, cli, photonic, qstate, qwalk, transfer

__all__ = ["accumulate", "cli", "photonic", "qstate", "qwalk", "transfer"]

__version__ = "0.1.0"
