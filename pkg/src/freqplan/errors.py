"""Exception hierarchy shared across the package."""


class FreqPlanError(Exception):
    """Base class for all package errors."""


class ConfigError(FreqPlanError, ValueError):
    """Invalid configuration values or inconsistent combinations."""


class InstanceError(FreqPlanError, ValueError):
    """A problem instance cannot support the requested operation."""


class ParseError(FreqPlanError, ValueError):
    """A file could not be parsed; the message names the offending field."""


class ValidationError(FreqPlanError, ValueError):
    """A parsed object breaks a structural invariant."""


class StateError(FreqPlanError, RuntimeError):
    """Operation not allowed in the current episode state."""


class ContractError(FreqPlanError, ValueError):
    """A caller broke an operation's precondition."""


class ShapeError(FreqPlanError, ValueError):
    """Array shapes do not line up."""


class NumericError(FreqPlanError, ArithmeticError):
    """Non-finite values appeared in a loss or gradient."""
