"""Exception hierarchy shared by all analysis modules."""


class AcaError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(AcaError, ValueError):
    """Invalid argument value or violated precondition."""


class AudioFileError(AcaError):
    """Problem reading an audio file."""


class AudioFileNotFoundError(AudioFileError, FileNotFoundError):
    pass


class MalformedWavError(AudioFileError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedEncodingError(AudioFileError):
    """Well-formed WAVE file with a sample encoding we do not decode."""


class DegenerateInputError(AcaError):
    """Input carries no usable information (silence, constant curve, ...)."""


class DatabaseError(AcaError):
    pass


class DuplicateTrackError(DatabaseError, KeyError):
    pass


class DatabaseFormatError(DatabaseError):
    pass


class ChecksumError(DatabaseFormatError):
    pass


class VersionMismatchError(DatabaseFormatError):
    pass
