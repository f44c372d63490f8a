"""Exception types shared across the simulator."""


class PcsimError(Exception):
    """Base class for all simulator errors."""


class DimensionMismatch(PcsimError):
    """Vector or matrix sizes inconsistent with the floorplan."""


class StabilityViolation(PcsimError):
    """Constructed thermal model would be numerically unstable."""


class OutOfRange(PcsimError):
    """Setpoint outside the operating-point table bounds."""


class OutOfTrace(PcsimError):
    """Sample time beyond the end of a non-looping workload trace."""


class ChannelBusy(PcsimError):
    """Mailbox channel already holds an unconsumed message."""


class MalformedMessage(PcsimError):
    """Mailbox record could not be decoded."""


class ScenarioInvalid(PcsimError):
    """Scenario failed pre-flight validation."""


class EmptyTelemetry(PcsimError):
    """Metrics requested over an empty telemetry set."""
