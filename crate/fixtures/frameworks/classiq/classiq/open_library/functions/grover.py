def grover_operator(oracle, space_transform, packed_vars):
    """One Grover iteration: oracle followed by the diffuser."""


def grover_diffuser(space_transform, packed_vars):
    """Reflection about the prepared initial state."""


def grover_search(reps, oracle, space_transform, packed_vars):
    """Repeated Grover iterations after state preparation."""
