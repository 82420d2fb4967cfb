def pauli_feature_map(feature_dimension, reps=2):
    """Pauli expansion feature map."""


class PauliFeatureMap:
    """Pauli expansion feature map."""
