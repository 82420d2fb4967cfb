class IntegerComparator:
    """Compares a register value against a fixed integer."""
