from .manifest import AgentManifest, ManifestRegistry
from .checks import CheckReport, CheckResult, run_checks
from .evaluate import EvalResult, ExampleResult, offline_eval, token_f1
from .rollout import Route, RolloutManager, RolloutState, Stage
from .drift import DriftReport, detect_label_drift, detect_numeric_drift
from .feedback import FeedbackLoop

__all__ = [
    "AgentManifest",
    "ManifestRegistry",
    "CheckReport",
    "CheckResult",
    "run_checks",
    "EvalResult",
    "ExampleResult",
    "offline_eval",
    "token_f1",
    "Route",
    "RolloutManager",
    "RolloutState",
    "Stage",
    "DriftReport",
    "detect_label_drift",
    "detect_numeric_drift",
    "FeedbackLoop",
]
