"""Exception hierarchy shared by the solver, pipeline and command line."""


class DehazeError(Exception):
    """Base class for every error raised by tvdehaze."""


class ShapeError(DehazeError, ValueError):
    """Arrays that must agree in shape do not."""


class ConfigError(DehazeError, ValueError):
    """Invalid solver or synthesis parameters."""


class NumericalError(DehazeError, ArithmeticError):
    """A non-finite value appeared during an iteration."""
