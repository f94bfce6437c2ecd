"""Exception types shared across the package."""


class GranusimError(Exception):
    """Base class for all granusim errors."""


class EdgeCountOverflow(GranusimError):
    """Requested more edges than distinct non-loop pairs allow."""


class SizeOverflow(GranusimError):
    """Requested disruption size exceeds the node count."""


class UnknownNode(GranusimError):
    """A node index is out of range for the target network."""


class ScheduleError(GranusimError):
    """An event falls outside the simulation horizon."""


class ZeroBaseline(GranusimError):
    """Baseline performance sum is zero; MoP is undefined."""


class RangeTooSmall(GranusimError):
    """Integer range too small for the requested number of strata."""


class CollinearError(GranusimError):
    """Design matrix is rank-deficient."""


class DegenerateModel(GranusimError):
    """Model cannot be fit or queried (single class, zero slope, ...)."""


class ScenarioError(GranusimError):
    """Scenario file is malformed; message names the offending field."""
