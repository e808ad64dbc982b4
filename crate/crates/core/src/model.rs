//! Radargram data model and shared configuration types.
//!
//! A radargram is the 2-D record of an impulse radar: rows index fast time
//! (intra-pulse delay, i.e. range) and columns index slow time (trace number,
//! i.e. observation time). All processing in this crate addresses data as
//! `(range_bin, trace_index)`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s. Fixed exactly.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A two-dimensional radar record: `M` fast-time rows by `N` slow-time columns.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Radargram {
    samples: Array2<f64>,
    dt_fast: f64,
    dt_slow: f64,
}

impl Radargram {
    /// Validates and wraps a sample matrix. The matrix is stored unmodified.
    pub fn new(samples: Array2<f64>, dt_fast: f64, dt_slow: f64) -> Result<Self> {
        if samples.nrows() < 2 {
            return Err(Error::DimensionTooSmall {
                axis: "fast-time",
                got: samples.nrows(),
            });
        }
        if samples.ncols() < 2 {
            return Err(Error::DimensionTooSmall {
                axis: "slow-time",
                got: samples.ncols(),
            });
        }
        if !(dt_fast.is_finite() && dt_fast > 0.0) {
            return Err(Error::NonPositiveInterval {
                name: "dt_fast",
                value: dt_fast,
            });
        }
        if !(dt_slow.is_finite() && dt_slow > 0.0) {
            return Err(Error::NonPositiveInterval {
                name: "dt_slow",
                value: dt_slow,
            });
        }
        if let Some(((bin, trace), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteSample { bin, trace });
        }
        Ok(Self {
            samples,
            dt_fast,
            dt_slow,
        })
    }

    /// Number of fast-time samples (range bins), `M`.
    pub fn num_bins(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of slow-time traces, `N`.
    pub fn num_traces(&self) -> usize {
        self.samples.ncols()
    }

    pub fn dt_fast(&self) -> f64 {
        self.dt_fast
    }

    pub fn dt_slow(&self) -> f64 {
        self.dt_slow
    }

    /// Fast-time window duration, `M * dt_fast`, seconds.
    pub fn fast_window(&self) -> f64 {
        self.num_bins() as f64 * self.dt_fast
    }

    /// Slow-time observation duration, `N * dt_slow`, seconds.
    pub fn slow_duration(&self) -> f64 {
        self.num_traces() as f64 * self.dt_slow
    }

    /// Slow-time Nyquist frequency, Hz.
    pub fn slow_nyquist(&self) -> f64 {
        0.5 / self.dt_slow
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    /// One-way range of a bin, meters. Errors on an out-of-range index.
    pub fn range_of_bin(&self, bin: usize) -> Result<f64> {
        self.range_axis().range_of_bin(bin)
    }

    /// Nearest range bin for a one-way range, clamped to the valid bins.
    pub fn bin_of_range(&self, range_m: f64) -> usize {
        self.range_axis().bin_of_range(range_m)
    }

    pub fn range_axis(&self) -> RangeAxis {
        RangeAxis {
            dt_fast: self.dt_fast,
            bins: self.num_bins(),
        }
    }

    /// Rebuilds with a replacement sample matrix of identical shape.
    /// Internal helper for the processing stages.
    pub(crate) fn with_samples(&self, samples: Array2<f64>) -> Self {
        debug_assert_eq!(samples.dim(), self.samples.dim());
        Self {
            samples,
            dt_fast: self.dt_fast,
            dt_slow: self.dt_slow,
        }
    }
}

/// Mapping between range bins and one-way distance, `r(m) = m * dt_fast * c / 2`.
#[derive(Debug, Clone, Copy)]
pub struct RangeAxis {
    dt_fast: f64,
    bins: usize,
}

impl RangeAxis {
    pub fn new(dt_fast: f64, bins: usize) -> Self {
        Self { dt_fast, bins }
    }

    /// Meters per bin (one-way).
    pub fn bin_width(&self) -> f64 {
        self.dt_fast * SPEED_OF_LIGHT / 2.0
    }

    pub fn range_of_bin(&self, bin: usize) -> Result<f64> {
        if bin >= self.bins {
            return Err(Error::BinOutOfRange {
                bin,
                bins: self.bins,
            });
        }
        Ok(bin as f64 * self.bin_width())
    }

    /// Nearest bin to a one-way range, clamped to `0..bins`.
    pub fn bin_of_range(&self, range_m: f64) -> usize {
        let raw = (range_m / self.bin_width()).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.bins - 1)
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }
}

/// A frequency interval in hertz, `low_hz < high_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyBand {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        let band = Self { low_hz, high_hz };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low_hz.is_finite() && self.high_hz.is_finite()) {
            return Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                reason: "bounds must be finite",
            });
        }
        if self.low_hz < 0.0 {
            return Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                reason: "low bound must be non-negative",
            });
        }
        if self.low_hz >= self.high_hz {
            return Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                reason: "low bound must be below high bound",
            });
        }
        Ok(())
    }

    /// Errors unless the whole band sits below `nyquist_hz`.
    pub fn validate_below_nyquist(&self, nyquist_hz: f64) -> Result<()> {
        self.validate()?;
        if self.high_hz >= nyquist_hz {
            return Err(Error::BandBeyondNyquist {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                nyquist_hz,
            });
        }
        Ok(())
    }

    pub fn contains(&self, f_hz: f64) -> bool {
        self.low_hz <= f_hz && f_hz <= self.high_hz
    }

    pub fn contains_band(&self, other: &FrequencyBand) -> bool {
        self.low_hz <= other.low_hz && other.high_hz <= self.high_hz
    }
}

/// Knobs for the preprocessing + detection chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Analysis window for respiration, Hz.
    pub respiration_band: FrequencyBand,
    /// Slow-time band-pass filter passband, Hz. Must contain `respiration_band`.
    pub bandpass_band: FrequencyBand,
    /// FIR tap count for the band-pass filter; odd.
    pub bandpass_taps: usize,
    /// Centered moving-average length along slow time; odd.
    pub mean_filter_window: usize,
    /// Exponential-average coefficient for background suppression, in `[0, 1)`.
    pub background_alpha: f64,
    /// Threshold multiplier for the median + k * MAD detection rule.
    pub threshold_k: f64,
    /// Compute the peak factor on the power spectrum `|Y|^2` instead of `|Y|`.
    pub power_spectrum: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            respiration_band: FrequencyBand {
                low_hz: 0.3,
                high_hz: 0.8,
            },
            bandpass_band: FrequencyBand {
                low_hz: 0.2,
                high_hz: 1.0,
            },
            bandpass_taps: 101,
            mean_filter_window: 5,
            background_alpha: 0.05,
            threshold_k: 3.0,
            power_spectrum: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.respiration_band.validate()?;
        self.bandpass_band.validate()?;
        if !self.bandpass_band.contains_band(&self.respiration_band) {
            return Err(Error::InvalidConfig {
                what: "pipeline config",
                why: format!(
                    "respiration band {}..{} Hz must lie inside the bandpass band {}..{} Hz",
                    self.respiration_band.low_hz,
                    self.respiration_band.high_hz,
                    self.bandpass_band.low_hz,
                    self.bandpass_band.high_hz
                ),
            });
        }
        if self.bandpass_taps == 0 || self.bandpass_taps % 2 == 0 {
            return Err(Error::InvalidTaps {
                taps: self.bandpass_taps,
            });
        }
        if self.mean_filter_window == 0 {
            return Err(Error::ZeroWindow);
        }
        if self.mean_filter_window % 2 == 0 {
            return Err(Error::EvenWindow {
                window: self.mean_filter_window,
            });
        }
        if !(self.background_alpha >= 0.0 && self.background_alpha < 1.0) {
            return Err(Error::InvalidAlpha {
                alpha: self.background_alpha,
            });
        }
        if !(self.threshold_k.is_finite() && self.threshold_k > 0.0) {
            return Err(Error::InvalidThresholdK {
                k: self.threshold_k,
            });
        }
        Ok(())
    }

    /// Validation against a concrete radargram (Nyquist, trace count).
    pub fn validate_for(&self, g: &Radargram) -> Result<()> {
        self.validate()?;
        let nyquist = g.slow_nyquist();
        self.bandpass_band.validate_below_nyquist(nyquist)?;
        self.respiration_band.validate_below_nyquist(nyquist)?;
        if self.mean_filter_window > g.num_traces() {
            return Err(Error::WindowExceedsTraces {
                window: self.mean_filter_window,
                traces: g.num_traces(),
            });
        }
        Ok(())
    }
}

/// Radargram acquisition dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dims {
    /// Fast-time samples per trace.
    pub m: usize,
    /// Number of traces.
    pub n: usize,
    /// Fast-time sampling interval, seconds.
    pub dt_fast: f64,
    /// Slow-time sampling interval (trace spacing), seconds.
    pub dt_slow: f64,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            m: 1024,
            n: 200,
            dt_fast: 1.0 / 39.0e9,
            dt_slow: 0.1,
        }
    }
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::DimensionTooSmall {
                axis: "fast-time",
                got: self.m,
            });
        }
        if self.n < 2 {
            return Err(Error::DimensionTooSmall {
                axis: "slow-time",
                got: self.n,
            });
        }
        if !(self.dt_fast.is_finite() && self.dt_fast > 0.0) {
            return Err(Error::NonPositiveInterval {
                name: "dt_fast",
                value: self.dt_fast,
            });
        }
        if !(self.dt_slow.is_finite() && self.dt_slow > 0.0) {
            return Err(Error::NonPositiveInterval {
                name: "dt_slow",
                value: self.dt_slow,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn small(dt_fast: f64, dt_slow: f64) -> Result<Radargram> {
        Radargram::new(Array2::zeros((2, 2)), dt_fast, dt_slow)
    }

    #[test]
    fn accepts_minimal_zero_matrix() {
        let g = small(1.0, 1.0).unwrap();
        assert_eq!(g.num_bins(), 2);
        assert_eq!(g.num_traces(), 2);
        assert!(g.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn paper_scale_dimensions() {
        let g = Radargram::new(Array2::zeros((1024, 200)), 1.0 / 39.0e9, 0.1).unwrap();
        // 1024 samples at 39 GS/s span about 26.26 ns
        assert!((g.fast_window() - 1024.0 / 39.0e9).abs() < 1e-20);
        assert!((g.fast_window() - 26.26e-9).abs() < 0.01e-9);
        assert!((g.slow_duration() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_row_or_column() {
        let r = Radargram::new(Array2::zeros((1, 5)), 1.0, 1.0);
        assert!(matches!(
            r,
            Err(Error::DimensionTooSmall {
                axis: "fast-time",
                ..
            })
        ));
        let r = Radargram::new(Array2::zeros((5, 1)), 1.0, 1.0);
        assert!(matches!(
            r,
            Err(Error::DimensionTooSmall {
                axis: "slow-time",
                ..
            })
        ));
    }

    #[test]
    fn rejects_nan_sample_with_position() {
        let mut m = Array2::zeros((4, 3));
        m[[2, 1]] = f64::NAN;
        match Radargram::new(m, 1.0, 1.0) {
            Err(Error::NonFiniteSample { bin: 2, trace: 1 }) => {}
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_intervals() {
        assert!(matches!(
            small(0.0, 1.0),
            Err(Error::NonPositiveInterval { name: "dt_fast", .. })
        ));
        assert!(matches!(
            small(1.0, -0.5),
            Err(Error::NonPositiveInterval { name: "dt_slow", .. })
        ));
    }

    #[test]
    fn samples_stored_unmodified() {
        let m = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let g = Radargram::new(m.clone(), 1.0, 1.0).unwrap();
        assert_eq!(g.samples(), &m);
        let h = Radargram::new(m.clone(), 1.0, 1.0).unwrap();
        // construction is pure: identical bits both times
        assert_eq!(g.samples(), h.samples());
    }

    #[test]
    fn range_of_bin_examples() {
        let g = Radargram::new(Array2::zeros((1024, 4)), 1.0 / 39.0e9, 0.1).unwrap();
        assert_eq!(g.range_of_bin(0).unwrap(), 0.0);
        // 260 * (1/39e9) * c / 2
        let r = g.range_of_bin(260).unwrap();
        assert!((r - 0.9993).abs() < 1e-4, "got {r}");
        assert!(matches!(
            g.range_of_bin(1024),
            Err(Error::BinOutOfRange { bin: 1024, bins: 1024 })
        ));
    }

    #[test]
    fn bin_range_round_trip() {
        let g = Radargram::new(Array2::zeros((512, 4)), 1.0 / 39.0e9, 0.1).unwrap();
        for bin in [0usize, 1, 100, 260, 511] {
            let r = g.range_of_bin(bin).unwrap();
            assert_eq!(g.bin_of_range(r), bin);
        }
    }

    #[test]
    fn band_validation() {
        assert!(FrequencyBand::new(0.3, 0.8).is_ok());
        assert!(FrequencyBand::new(0.8, 0.3).is_err());
        assert!(FrequencyBand::new(-0.1, 0.8).is_err());
        assert!(FrequencyBand::new(0.3, f64::NAN).is_err());
        let b = FrequencyBand::new(0.3, 0.8).unwrap();
        assert!(b.validate_below_nyquist(5.0).is_ok());
        assert!(b.validate_below_nyquist(0.5).is_err());
    }

    #[test]
    fn pipeline_config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());

        let mut cfg = PipelineConfig::default();
        cfg.mean_filter_window = 4;
        assert!(matches!(cfg.validate(), Err(Error::EvenWindow { window: 4 })));

        let mut cfg = PipelineConfig::default();
        cfg.respiration_band = FrequencyBand {
            low_hz: 0.1,
            high_hz: 0.8,
        };
        assert!(cfg.validate().is_err(), "respiration band must sit inside bandpass band");

        let mut cfg = PipelineConfig::default();
        cfg.background_alpha = 1.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidAlpha { .. })));
    }
}
