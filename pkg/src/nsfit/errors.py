"""Exception hierarchy shared by all nsfit modules."""


class NsfitError(ValueError):
    """Base class for data errors raised by nsfit."""


class InvalidSpectrum(NsfitError):
    pass


class InvalidMeta(NsfitError):
    pass


class NonPositiveTransmission(NsfitError):
    def __init__(self, wavelength_nm, value):
        self.wavelength_nm = float(wavelength_nm)
        self.value = float(value)
        super().__init__(
            f"transmission {self.value!r} <= 0 at {self.wavelength_nm:g} nm"
        )


class AlreadyAbsorption(NsfitError):
    pass


class NotAbsorption(NsfitError):
    pass


class MissingThickness(NsfitError):
    pass


class GridOutOfRange(NsfitError):
    pass


class EmptyResult(NsfitError):
    pass


class WindowTooNarrow(NsfitError):
    pass


class DegenerateInput(NsfitError):
    pass


class ConventionMismatch(NsfitError):
    pass


class InsufficientPoints(NsfitError):
    pass


class DegenerateX(NsfitError):
    pass


class InvalidLimits(NsfitError):
    pass


class MalformedHeader(NsfitError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotonicWavelength(NsfitError):
    def __init__(self, line, wavelength_nm, previous_nm):
        self.line = line
        super().__init__(
            f"line {line}: wavelength {wavelength_nm:g} nm does not exceed "
            f"previous {previous_nm:g} nm"
        )


class BadNumeric(NsfitError):
    def __init__(self, line, text):
        self.line = line
        super().__init__(f"line {line}: cannot parse numeric row {text!r}")


class DidNotConverge(RuntimeWarning):
    """Issued when the fitter stops at max_iterations; the result is kept."""
