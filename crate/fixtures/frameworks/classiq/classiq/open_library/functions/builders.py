class QuantumProgramBuilder:
    """Collects functions into a quantum program."""

    def build(self):
        """Returns the program."""
