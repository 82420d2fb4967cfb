__all__ = ["qft", "qft_no_swap"]


def qft(target):
    """Quantum Fourier transform on the target register."""


def qft_no_swap(target):
    """Quantum Fourier transform without the final qubit reversal."""


def qft_debug(target):
    """Prints the transform layers."""


def _qft_core(target):
    """Shared rotation ladder."""
