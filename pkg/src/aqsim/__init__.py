"""Deterministic desk-scale simulator of an arbitrated quantum signature
protocol, its attacks, and their countermeasures."""

from .adversary import Scenario, ScenarioVariant
from .defense import DefenseConfig
from .protocol import MessageSpec, Verdict, random_message_spec
from .scenarios import RunResult, run_scenario
from .statevector import BellOutcome, PauliBits, PureState

__version__ = "0.1.0"

__all__ = [
    "BellOutcome",
    "DefenseConfig",
    "MessageSpec",
    "PauliBits",
    "PureState",
    "RunResult",
    "Scenario",
    "ScenarioVariant",
    "Verdict",
    "random_message_spec",
    "run_scenario",
    "__version__",
]
