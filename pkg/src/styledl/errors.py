"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument broke a documented precondition (shape, domain, axis)."""


class ConfigurationError(ValueError):
    """A configuration value is structurally invalid for the requested build."""


class FormatError(ValueError):
    """A file on disk did not match its expected format."""


class ValidationError(ValueError):
    """Parsed data failed a semantic check (sums, label counts, metric sets)."""


class TrainingError(RuntimeError):
    """Training hit a non-recoverable numeric state.

    Carries the last good checkpoint when one exists so a caller can
    salvage the run.
    """

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint
