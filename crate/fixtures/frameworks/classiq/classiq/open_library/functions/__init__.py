from .qft_functions import *
from .grover import grover_operator, grover_diffuser
from .utility_functions import hadamard_transform, apply_to_all, undocumented_helper
from .state_preparation import prepare_bell_state
from classiq.open_library.functions.builders import QuantumProgramBuilder

__all__ = [
    "qft",
    "qft_no_swap",
    "grover_operator",
    "grover_diffuser",
    "hadamard_transform",
    "apply_to_all",
    "undocumented_helper",
    "prepare_bell_state",
    "QuantumProgramBuilder",
    "not_defined_anywhere",
]
