"""Model backends: abstract interfaces, synthetic oracles, remote client."""
from trackany.backends.base import (
    BackendBundle,
    PropagateResult,
    Propagator,
    SegmentResult,
    Segmenter,
    create_backend,
    register_backend,
)
from trackany.backends.synthetic import (
    DegradationConfig,
    SyntheticOraclePropagator,
    SyntheticSegmenter,
)
import trackany.backends.remote  # noqa: E402,F401  (registers the remote backend)

__all__ = [
    "BackendBundle",
    "PropagateResult",
    "Propagator",
    "SegmentResult",
    "Segmenter",
    "create_backend",
    "register_backend",
    "DegradationConfig",
    "SyntheticOraclePropagator",
    "SyntheticSegmenter",
]
