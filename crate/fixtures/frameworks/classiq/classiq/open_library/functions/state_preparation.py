def prepare_bell_state(state_num, q):
    """Prepares the selected Bell state on two qubits."""
