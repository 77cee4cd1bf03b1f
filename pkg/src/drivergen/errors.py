"""Exception types shared across the package."""


class DriverGenError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DriverGenError):
    """Input text could not be parsed (corpus file, C source, ...)."""


class SchemaError(DriverGenError):
    """A structurally valid document violates field constraints.

    ``violations`` lists every problem found, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NotFound(DriverGenError):
    """The requested declaration/object does not exist."""


class Ambiguous(DriverGenError):
    """Multiple conflicting matches where exactly one was expected."""


class MissingPlaceholder(DriverGenError):
    """A fix template placeholder was not supplied."""

    def __init__(self, name):
        self.name = name
        super().__init__(name)


class NoCode(DriverGenError):
    """No extractable code in an LLM response."""


class BackendError(DriverGenError):
    """Base for LLM transport failures; carries the raw backend diagnostic."""

    def __init__(self, diagnostic=""):
        self.diagnostic = diagnostic
        super().__init__(diagnostic)


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendError):
    pass


class QuotaExceeded(BackendError):
    pass


class WorkspaceError(DriverGenError):
    """Project workspace could not be prepared (build script failed, ...)."""


class SandboxError(DriverGenError):
    """A sandboxed run could not be launched."""


class HookChannelError(DriverGenError):
    """The hook shim's event report is absent or corrupt."""


class NotAFailure(DriverGenError):
    """Asked to triage a run that actually succeeded."""


class DegenerateBaseline(DriverGenError):
    """Round-gain baseline Rslt(1) is zero."""


class EmptyList(DriverGenError):
    """An operation requiring at least one element got none."""


class ConfigError(DriverGenError):
    """Invalid CLI/manifest configuration."""
