"""Wi-Fi CSI water-quality classification toolkit.

Pipeline: parse ESP32-style capture logs (or synthesise channel data),
clean frames, extract per-subcarrier amplitude/phase feature vectors,
and evaluate k-NN / SVM / AdaBoost / LSTM classifiers under stratified
cross-validation.
"""

from .csi import (
    CLASS_ORDER,
    DEFAULT_SUBCARRIERS,
    ClassLabel,
    ComplexSample,
    CsiFrame,
    amplitude,
    frame_amplitudes,
    frame_phases,
    phase,
)
from .features import CsiStats, Dataset, FeatureVector, build_feature_vector, csi_stats
from .ingest import (
    DatasetFormatError,
    FailureKind,
    ParseFailure,
    RawCsiLine,
    load_dataset,
    parse_capture,
    parse_csi_line,
    write_capture,
    write_dataset,
)
from .preprocess import (
    PreprocessConfig,
    filter_by_mac,
    reject_outlier_frames,
    sanitize_phase,
    zscore_apply,
    zscore_fit,
)

__version__ = "0.1.0"
