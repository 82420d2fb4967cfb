def real_amplitudes(num_qubits, reps=3):
    """Construct the real-amplitudes trial circuit."""


class RealAmplitudes:
    """Construct the real-amplitudes trial circuit."""

    @deprecate_func(since="2.1", additional_msg="Use real_amplitudes.")
    def __init__(self, num_qubits, reps=3):
        pass
