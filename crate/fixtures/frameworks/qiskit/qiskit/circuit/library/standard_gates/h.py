class HGate:
    """Single-qubit Hadamard gate."""
