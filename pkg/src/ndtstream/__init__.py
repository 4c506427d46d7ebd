"""Network-digital-twin driven adaptive bitrate streaming: simulator, twin, controllers, harness."""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .media import BitrateLadder, DeviceProfile, Representation, SessionConfig, default_ladder  # noqa: E402
from .netmodel import LinkTrace, NetworkSample, ScenarioKind, gen_scenario, load_trace  # noqa: E402
from .qoe import QoeWeights, SessionMetrics, qoe_score  # noqa: E402
from .sim import SessionLog, run_session  # noqa: E402

__all__ = [
    "__version__", "BACKEND", "BitrateLadder", "DeviceProfile", "Representation",
    "SessionConfig", "default_ladder", "LinkTrace", "NetworkSample", "ScenarioKind",
    "gen_scenario", "load_trace", "QoeWeights", "SessionMetrics", "qoe_score",
    "SessionLog", "run_session",
]
