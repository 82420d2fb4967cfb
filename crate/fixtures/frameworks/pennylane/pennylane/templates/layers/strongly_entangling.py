class StronglyEntanglingLayers:
    """Rotation and entangler layers."""

    class Shape:
        """Weight shape helper."""


class Undocumented:
    pass
