"""Exception and warning classes shared by all pilotwave modules."""


class PilotwaveError(Exception):
    """Base class for all pilotwave errors."""


class DegenerateTime(PilotwaveError):
    """Two-point action requested at t <= 0."""


class FocalPoint(PilotwaveError):
    """Harmonic two-point action at a focal time (sin(omega*t) = 0)."""


class Unsupported(PilotwaveError):
    """Operation has no closed form for this potential kind."""


class AllInfinite(PilotwaveError):
    """Action field is +inf everywhere; min-plus operations are undefined."""


class GridMismatch(PilotwaveError):
    """Two fields do not live on the same grid."""


class PacketClipped(PilotwaveError):
    """Initial packet leaves more than the allowed tail mass outside the grid."""


class VelocityUndefined(PilotwaveError):
    """Local density below the floor; guidance velocity is not defined there."""


class TooFewSamples(PilotwaveError):
    """Chi-squared binning left too many bins with expected count < 5."""


class UnresolvedSpots(PilotwaveError):
    """Stern-Gerlach spots are not separated enough to classify impacts."""


class EmptyRecords(PilotwaveError):
    """Correlation statistics requested with no measurement records."""


class GridTooCoarse(PilotwaveError):
    """Grid spacing cannot resolve the shortest wavelength; refusing to alias."""


class ConfigInvalid(PilotwaveError):
    """A config file failed validation.  `field` names the offending key."""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"config field '{field}': {reason}")


class ExperimentFailed(PilotwaveError):
    """An experiment aborted; the message carries the module context."""


class CausticWarning(UserWarning):
    """Characteristics crossed during classical transport (reported, not resolved)."""


class StabilityWarning(UserWarning):
    """Potential phase advance per split step exceeds 0.5 rad."""


class DisconnectedSupportWarning(UserWarning):
    """Phase unwrapping found multiple disconnected support regions."""
