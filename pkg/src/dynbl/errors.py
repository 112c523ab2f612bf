class DblError(Exception):
    """Base class for errors raised by this package."""


class CapExceeded(DblError):
    """A computation would exceed one of the configured size caps."""


class InconsistentContext(DblError, ValueError):
    pass


class ZeroProbability(DblError, ValueError):
    """Conditioning on an event of probability zero."""


class ValidationError(DblError, ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
