"""swapguard: timing analysis, Monte Carlo simulation, and operator-algebra
verification for a swap-to-ancilla network defense.

The defense keeps fragile payload states parked in ancilla registers and
brings them online only during short, randomly scheduled cycles.  This
package provides the closed-form timing analysis for that schedule, Monte
Carlo estimators with a compiled hot path, a dense density-matrix engine for
the swap and attack-channel algebra, second-quantized checks of the same
identities, an end-to-end protocol simulator, and threshold secret sharing of
the schedule seed.
"""

from ._backend import BACKEND as kernel_backend_name
from .errors import (
    DimensionCapError,
    FeasibilityError,
    QuorumError,
    RejectionCapError,
)
from .timing import AttackParams, CycleParams, HorizonParams

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the active Monte Carlo kernel backend.

    ``"compiled"`` when the accelerator extension is loaded, ``"python"``
    when the pure fallback is active (no extension available, or the
    ``SWAPGUARD_PURE_PYTHON`` environment variable is set).
    """
    return kernel_backend_name


__all__ = [
    "__version__",
    "kernel_backend",
    "AttackParams",
    "CycleParams",
    "HorizonParams",
    "DimensionCapError",
    "FeasibilityError",
    "QuorumError",
    "RejectionCapError",
]
