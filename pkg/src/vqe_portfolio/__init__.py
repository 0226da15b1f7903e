"""Mean-variance portfolio selection via QUBO/Ising and a simulated VQE."""

__version__ = "0.1.0"
