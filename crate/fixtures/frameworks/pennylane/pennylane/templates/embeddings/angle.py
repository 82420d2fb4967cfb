class AngleEmbedding:
    """Encodes features as rotation angles."""


class _AngleCache:
    """Caches rotation matrices."""
