"""Exception hierarchy shared by every bctar module."""


class BCTError(Exception):
    """Base class for all library errors."""

    kind = "error"


class InputError(BCTError, ValueError):
    """Bad data: non-finite samples, short series, unreadable files."""

    kind = "input"


class ConfigurationError(BCTError, ValueError):
    """Invalid hyperparameters or option combinations."""

    kind = "configuration"


class StructuralError(BCTError, ValueError):
    """A context tree that is not proper or exceeds the maximum depth."""

    kind = "structural"


class CapacityError(BCTError):
    """Exhaustive enumeration would exceed the safety guard."""

    kind = "capacity"


class NumericalError(BCTError, ArithmeticError):
    """Linear-algebra failure or an inconsistent residual term."""

    kind = "numerical"


class TuningError(BCTError):
    """No hyperparameter candidate produced a finite evidence."""

    kind = "tuning"
