class AmplitudeEmbedding:
    """Encodes a vector into the amplitudes of the wires."""

    def __init__(self, features, wires):
        self.features = features


def amplitude_helper(features):
    """Pads and normalizes features."""
