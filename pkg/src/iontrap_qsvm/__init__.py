"""Quantum-kernel SVM toolkit for trapped-ion native circuits.

State-vector simulation of RPHI/MS gates, embedding circuits for digit
features and weighted graphs, mirror-circuit kernel estimation with optional
Pauli noise, and an SMO solver for the SVM dual.
"""

__version__ = "0.1.0"
