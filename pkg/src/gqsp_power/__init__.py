"""Quantum power methods (power iteration, power Lanczos, inverse iteration,
folded spectrum) realized through generalized quantum signal processing on a
dense statevector simulator."""

__version__ = "0.1.0"
