"""Audio content analysis: features, tonal and rhythm analysis, structure, fingerprinting, classification."""
from .errors import AcaError
from .signal import AudioBuffer, BlockSpec, Spectrogram, read_wav, stft_magnitude, write_wav

__version__ = "0.1.0"

__all__ = [
    "AcaError",
    "AudioBuffer",
    "BlockSpec",
    "Spectrogram",
    "read_wav",
    "write_wav",
    "stft_magnitude",
    "__version__",
]
