class Broken(:
    """Never parsed."""
