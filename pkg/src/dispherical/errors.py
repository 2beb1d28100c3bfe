"""Exception hierarchy shared by all modules."""


class DisphericalError(Exception):
    """Base class for every error raised by :mod:`dispherical`."""


class DomainError(DisphericalError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(DomainError):
    """Evaluation at a point where the field diverges (a source focus)."""


class DegenerateDirectionError(DomainError):
    """The transverse wavenumber vanishes (``|k_z| == k``)."""


class SingularConstantError(DomainError):
    """The constant of the motion makes the requested time formula singular."""


class ConvergenceError(DisphericalError, RuntimeError):
    """A root finder or a continuation corrector failed to converge.

    Attributes
    ----------
    where : object
        The failing abscissa or the last good sample, whichever the
        raising routine has at hand.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where
