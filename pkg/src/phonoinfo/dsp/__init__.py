from .audio import AudioBuffer, AudioError, pre_emphasize, read_wav, resample, write_wav
from .contour import ContourSample, NormalizationError, lobanov_normalize, sample_contour_nine, zscore_f0
from .formants import FormantTrack, extract_formants, optimize_ceiling
from .lpc import LPCError, burg_lpc, lpc_to_formants
from .pitch import PitchTrack, extract_pitch
from .spectral import SpectralError, spectral_centroid, spectral_tilt

__all__ = [
    "AudioBuffer", "AudioError", "ContourSample", "FormantTrack", "LPCError", "NormalizationError",
    "PitchTrack", "SpectralError", "burg_lpc", "extract_formants", "extract_pitch",
    "lobanov_normalize", "lpc_to_formants", "optimize_ceiling", "pre_emphasize", "read_wav",
    "resample", "sample_contour_nine", "spectral_centroid", "spectral_tilt", "write_wav", "zscore_f0",
]
