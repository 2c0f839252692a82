"""H-infinity-optimal interval observers built on JSS decomposition functions."""

from .decomp import JssDecomposition, WidthBounds, decompose_model, jss_split, tight_decomposition
from .model import Box, CoordinateTransform, SystemModel, TimeType, load_model, validate
from .sdp import Status, bisect_min, solve_feasibility
from .sim import IntervalObserver, containment_check, gain_metrics, run, run_batch
from .synthesis import ObserverGain, SynthesisProblem, build_problem, synthesize, verify_certificate

__version__ = "0.1.0"
