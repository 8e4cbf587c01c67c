"""Exception types shared across the package."""


class EmwatchError(Exception):
    """Base class for all package errors."""


# --- dataset / parsing ---

class MalformedRecord(EmwatchError):
    pass


class UnknownLabel(EmwatchError):
    pass


class MissingManifest(EmwatchError):
    pass


class InconsistentCount(EmwatchError):
    pass


class TooFewVideos(EmwatchError):
    pass


class InvalidMode(EmwatchError):
    pass


# --- tracking / features ---

class OutOfBounds(EmwatchError):
    pass


class NotEnoughKeypoints(EmwatchError):
    pass


# --- classifiers ---

class DegenerateData(EmwatchError):
    pass


class NonFiniteInput(EmwatchError):
    pass


class DimensionMismatch(EmwatchError):
    pass


class ModelFormatError(EmwatchError):
    pass


# --- calibration / stream ---

class SingleClass(EmwatchError):
    pass


class NoEmergencySamples(EmwatchError):
    pass


class NoEmergencyTruth(EmwatchError):
    pass


# --- metrics ---

class NoPositives(EmwatchError):
    pass


class LengthMismatch(EmwatchError):
    pass


class LabelOutOfRange(EmwatchError):
    pass


class EmptySubset(EmwatchError):
    pass


# --- synth / workflows ---

class InvalidSpec(EmwatchError):
    pass


class SplitLeakage(EmwatchError):
    """A calibration or model artifact was produced on the split it is now evaluated against."""
