"""Exception hierarchy shared by every module of the package."""


class CosimError(Exception):
    """Base class for all co-simulation errors."""


class LengthMismatch(CosimError, ValueError):
    pass


class BadIndex(CosimError, IndexError):
    pass


class GraphError(CosimError):
    """Invalid connection structure."""


class UnconnectedInput(GraphError):
    def __init__(self, input_index):
        self.input_index = input_index
        super().__init__(f"input {input_index} is not connected to any output")


class MultiplyConnectedInput(GraphError):
    def __init__(self, input_index):
        self.input_index = input_index
        super().__init__(f"input {input_index} is connected to several outputs")


class IndexOutOfRange(GraphError, IndexError):
    pass


class EvaluationFailure(CosimError):
    """A residual evaluation could not be completed."""


class IntegrationFailure(EvaluationFailure):
    """The embedded integrator of a slave could not cover the requested step."""


class TimeMismatch(CosimError):
    pass


class DegenerateStep(CosimError, ValueError):
    pass


class NonContiguousStep(CosimError):
    pass


class SlaveFailure(EvaluationFailure):
    def __init__(self, system, cause=None):
        self.system = system
        self.cause = cause
        super().__init__(f"system {system} failed: {cause}")


class ZeroDirection(CosimError, ValueError):
    pass


class NonPositiveParameter(CosimError, ValueError):
    pass


class EmptyTrajectory(CosimError, ValueError):
    pass


class ZeroReferenceNorm(CosimError, ZeroDivisionError):
    pass


class ConfigError(CosimError, ValueError):
    pass
