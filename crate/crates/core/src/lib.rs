//! Through-wall respiration detection on UWB impulse radargrams.
//!
//! The crate covers the full chain: a synthetic through-wall radargram
//! simulator, slow-time preprocessing (DC removal, detrending, background
//! suppression, band-pass, mean filter, normalization), per-range-bin
//! slow-time spectra, the peak-factor metric, and a robust adaptive-threshold
//! detector, plus the binary radargram file format and the TOML run
//! configuration shared with the command-line tool.

pub mod detect;
pub mod error;
pub mod io;
pub mod model;
pub mod preprocess;
pub mod simulator;
pub mod spectral;

pub use detect::{
    adaptive_threshold, detect, distance_sweep, Detection, DetectionReport, ProfileStats,
    SeedPolicy, SweepCell, SweepResult,
};
pub use error::{Error, Result};
pub use io::{load_config, parse_config, read_radargram, write_radargram, RunConfig};
pub use model::{
    Dims, FrequencyBand, PipelineConfig, Radargram, RangeAxis, SPEED_OF_LIGHT,
};
pub use preprocess::{
    bandpass_slow_time, detrend_linear, mean_filter, normalize, remove_dc, run_pipeline,
    suppress_background, PreprocessedRadargram,
};
pub use simulator::{
    echo_components, generate_pulse, simulate, EchoComponent, EchoLabel, PulseModel, SceneConfig,
};
pub use spectral::{
    band_window, peak_factor, profile, slow_time_spectrum, slow_time_spectrum_padded,
    BinPeakFactor, PeakFactor, PeakFactorProfile, SpectrumMatrix,
};
