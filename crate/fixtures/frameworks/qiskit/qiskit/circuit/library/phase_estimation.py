class PhaseEstimation:
    """Phase estimation circuit."""


def phase_estimation(num_evaluation_qubits, unitary):
    """Builds a QPE circuit from controlled powers of a unitary and an inverse Fourier step."""
