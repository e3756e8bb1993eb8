"""Parallel hybrid quantum-classical networks on a statevector simulator."""
__version__ = "0.1.0"
