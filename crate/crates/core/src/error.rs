//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by radargram construction, processing, simulation and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("radargram needs at least 2 {axis} samples, got {got}")]
    DimensionTooSmall { axis: &'static str, got: usize },

    #[error("non-finite sample at range bin {bin}, trace {trace}")]
    NonFiniteSample { bin: usize, trace: usize },

    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveInterval { name: &'static str, value: f64 },

    #[error("range bin {bin} out of range for {bins} bins")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("invalid frequency band {low_hz}..{high_hz} Hz: {reason}")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        reason: &'static str,
    },

    #[error("band {low_hz}..{high_hz} Hz exceeds the slow-time Nyquist frequency {nyquist_hz} Hz")]
    BandBeyondNyquist {
        low_hz: f64,
        high_hz: f64,
        nyquist_hz: f64,
    },

    #[error("band {low_hz}..{high_hz} Hz covers {bins} frequency bin(s); at least 2 are required")]
    BandTooNarrow {
        low_hz: f64,
        high_hz: f64,
        bins: usize,
    },

    #[error("mean filter window must be odd, got {window}")]
    EvenWindow { window: usize },

    #[error("filter window must be at least 1")]
    ZeroWindow,

    #[error("mean filter window {window} exceeds trace count {traces}")]
    WindowExceedsTraces { window: usize, traces: usize },

    #[error("background alpha must lie in [0, 1), got {alpha}")]
    InvalidAlpha { alpha: f64 },

    #[error("bandpass tap count must be odd and positive, got {taps}")]
    InvalidTaps { taps: usize },

    #[error("threshold multiplier k must be positive, got {k}")]
    InvalidThresholdK { k: f64 },

    #[error("invalid {what}: {why}")]
    InvalidConfig { what: &'static str, why: String },

    #[error(
        "pulse support ends at {support_end_s} s, beyond the {window_s} s fast-time window"
    )]
    PulseTruncated { support_end_s: f64, window_s: f64 },

    #[error(
        "{label} echo at delay {delay_s} s does not fit the {window_s} s fast-time window"
    )]
    EchoOutsideWindow {
        label: &'static str,
        delay_s: f64,
        window_s: f64,
    },

    #[error("all-zero spectrum window: no signal in the respiration band")]
    AllZeroWindow,

    #[error("peak factor window has {len} bin(s); at least 2 are required")]
    WindowTooShort { len: usize },

    #[error("no usable spectrum: every range bin is degenerate")]
    NoUsableSpectrum,

    #[error("sweep cell (x={x} m, y={y} m) failed: {source}")]
    SweepCellFailed {
        x: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic {found:?}, expected \"UWBR\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported radargram file version {version}")]
    UnsupportedVersion { version: u32 },

    #[error("radargram file truncated: header promises {expected} bytes, file has {actual}")]
    TruncatedFile { expected: u64, actual: u64 },

    #[error("radargram file has {extra} trailing byte(s) after the sample payload")]
    TrailingData { extra: u64 },

    #[error("radargram file contains a non-finite sample at bin {bin}, trace {trace}")]
    NonFiniteInFile { bin: usize, trace: usize },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
