"""Circuit library."""

from .n_local.real_amplitudes import real_amplitudes, RealAmplitudes
