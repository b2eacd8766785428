"""One-bit MIMO FMCW radar: scene synthesis, harmonic analysis, pre-detection and GAMP recovery."""

from . import _core
from ._core import (
    BGPrior,
    Combine,
    ConfigError,
    EmptySupport,
    GampControls,
    OsCfarConfig,
    PredetectConfig,
    RadarParams,
    Target,
    WindowKind,
    WindowSpec,
    denoise_input,
    denoise_output,
    experiments,
    freq_map,
    gamma2,
    harmonics,
    jobs,
    load_config,
    os_cfar,
    parse_config,
    predetect,
    quantize,
    recover,
    set_jobs,
    synthesize_cube,
    synthesize_one_bit,
    synthesize_signal,
)

__version__ = "0.1.0"
