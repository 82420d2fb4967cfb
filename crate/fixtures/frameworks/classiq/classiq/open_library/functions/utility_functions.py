def hadamard_transform(target):
    """Applies H to every qubit of the target."""


def apply_to_all(gate_operand, target):
    """Applies a one-qubit operand to each qubit of the target."""


def undocumented_helper(target):
    pass
