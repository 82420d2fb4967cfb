def broken(:
    """Never parsed."""
