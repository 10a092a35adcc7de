"""Exception types shared across the package."""


class DelayNormError(Exception):
    """Base class for all errors raised by this package."""


class StructureError(DelayNormError, ValueError):
    """Matrix dimensions or shape matrices do not fit together."""


class AdmissibilityError(DelayNormError, ValueError):
    """An uncertainty value lies outside the admissible set."""


class WellPosednessError(DelayNormError):
    """Operation requires a well-posed characteristic matrix."""


class PoleError(DelayNormError):
    """Transfer-function evaluation hit a pole."""

    def __init__(self, s, message=None):
        self.s = complex(s)
        super().__init__(message or f"resolvent singular at s = {self.s}")


class MultiplicityError(DelayNormError):
    """Leading singular value (or eigenvalue) is not simple."""


class DefectiveEigenvalueError(DelayNormError):
    """Eigenvalue normalization scalar vanished; eigenvalue is defective."""


class BracketError(DelayNormError, ValueError):
    """Root finder was given endpoints without a sign change."""


class DomainError(DelayNormError, ValueError):
    """Parameter lies outside the interval on which the map is defined."""


class ConvergenceError(DelayNormError):
    """A numerical subproblem failed to converge."""


class InstabilityError(DelayNormError):
    """The uncertainty set contains a destabilizing realization.

    Carries the stability report with the destabilizing point and root.
    """

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or "system is not robustly stable")


class SystemFileError(DelayNormError, ValueError):
    """A system description document failed validation.

    ``location`` is a ``/``-separated key path into the document.
    """

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")
