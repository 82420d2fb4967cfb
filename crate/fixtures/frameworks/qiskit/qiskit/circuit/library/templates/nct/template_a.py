def template_a():
    """Template circuit."""
