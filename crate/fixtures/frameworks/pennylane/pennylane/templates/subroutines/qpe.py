from typing import TYPE_CHECKING


class QuantumPhaseEstimation:
    """Estimates the phase of an eigenvalue."""


if TYPE_CHECKING:

    class PhaseStub:
        """Typing stub."""


def factory():
    class Built:
        """Built inside a function."""

    return Built
