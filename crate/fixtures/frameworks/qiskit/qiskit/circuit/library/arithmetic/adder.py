class Adder:
    """Adds two registers in place."""

    class Config:
        """Nested, not module level."""


def _carry(a, b):
    """Carry helper."""


def undocumented(a, b):
    return a + b
