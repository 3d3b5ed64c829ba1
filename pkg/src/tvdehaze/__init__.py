"""Single image dehazing with depth and reflection total variation."""

from .core import BoxBound, DualField, divergence, energy_total, grad, project_ball, project_box, tv
from .dehaze import (
    ChannelResult,
    DehazeResult,
    SolverConfig,
    alternate_minimize,
    atmospheric_light,
    dehaze_channel,
    dehaze_image,
    gamma_correct,
    recover_radiance,
    to_log_domain,
)
from .exceptions import ConfigError, DehazeError, NumericalError, ShapeError
from .fgp import FgpProblem, FgpReport, fgp_solve, subproblem_objective
from .images import ImageIOError, quantize, read_image, write_image
from .synth import SynthSpec, make_depth, mse, structured_scene, synthesize_haze

__version__ = "0.1.0"
