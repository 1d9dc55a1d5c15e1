"""Exception hierarchy shared by all quantbeam modules."""


class QuantbeamError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(QuantbeamError, ValueError):
    pass


class InvalidInputError(QuantbeamError, ValueError):
    """Sample data is unusable (NaN, Inf, empty)."""


class InfiniteSinrError(QuantbeamError, ArithmeticError):
    """The requested SINR (or SINR limit) is unbounded."""


class FitError(QuantbeamError, RuntimeError):
    pass


class ProtocolError(QuantbeamError, RuntimeError):
    """A received slot lacks the structure the receiver needs."""


class NoBeamError(QuantbeamError, RuntimeError):
    """Beamforming was requested on a link in outage."""


class ConfigError(QuantbeamError, ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
