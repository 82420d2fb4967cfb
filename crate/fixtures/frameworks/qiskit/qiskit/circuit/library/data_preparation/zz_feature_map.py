def zz_feature_map(feature_dimension, reps=2):
    """Second-order Pauli-Z evolution feature map."""


@deprecated("Use zz_feature_map.")
class ZZFeatureMapV1:
    """Second-order Pauli-Z evolution feature map."""
