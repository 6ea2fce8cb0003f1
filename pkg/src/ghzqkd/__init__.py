"""GHZ-register quantum key distribution simulator."""

from .adversary import EveKind, EveModel
from .errors import GhzQkdError
from .protocol import ProtocolConfig, ResetFallback, ResetStrategy, run_key_exchange
from .report import RunReport, efficiency
from .security import run_chsh_test
from .statevec import QuantumState, QubitId, prepare_ghz

__version__ = "0.1.0"

__all__ = [
    "EveKind",
    "EveModel",
    "GhzQkdError",
    "ProtocolConfig",
    "QuantumState",
    "QubitId",
    "ResetFallback",
    "ResetStrategy",
    "RunReport",
    "efficiency",
    "prepare_ghz",
    "run_chsh_test",
    "run_key_exchange",
]
