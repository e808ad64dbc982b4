//! Slow-time spectra and the peak-factor metric.
//!
//! Each range bin's slow-time series is taken to the frequency domain with a
//! plain (rectangular-window, unpadded) FFT; the respiration band is cut out
//! of the one-sided magnitude spectrum and summarized by the peak factor
//! `P = Y_max / Y_rms`, the ratio of the strongest windowed bin to the RMS of
//! the windowed spectrum. A concentrated spectral line (periodic breathing)
//! drives `P` toward `sqrt(K)` for a K-bin window; flat noise keeps it near 1.

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{FrequencyBand, PipelineConfig};
use crate::preprocess::PreprocessedRadargram;

/// One-sided spectra for every range bin.
#[derive(Debug, Clone)]
pub struct SpectrumMatrix {
    /// Magnitudes, `num_bins x num_freq_bins`, non-negative.
    pub magnitudes: Array2<f64>,
    /// Frequency of each column, Hz, strictly increasing.
    pub freq_axis: Vec<f64>,
    /// Index of the first column in the parent full spectrum (0 unless windowed).
    pub start_bin: usize,
}

impl SpectrumMatrix {
    pub fn num_range_bins(&self) -> usize {
        self.magnitudes.nrows()
    }

    pub fn num_freq_bins(&self) -> usize {
        self.magnitudes.ncols()
    }
}

fn spectrum_with_padding(g: &PreprocessedRadargram, pad_factor: usize) -> SpectrumMatrix {
    assert!(pad_factor >= 1);
    let traces = g.num_traces();
    let padded = traces * pad_factor;
    let keep = padded / 2 + 1;
    let df = 1.0 / (padded as f64 * g.dt_slow());

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(padded);

    let rows: Vec<Vec<f64>> = (0..g.num_bins())
        .into_par_iter()
        .map(|bin| {
            let mut buf: Vec<Complex<f64>> = g
                .samples()
                .row(bin)
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(padded)
                .collect();
            fft.process(&mut buf);
            buf[..keep].iter().map(|c| c.norm()).collect()
        })
        .collect();

    let magnitudes = Array2::from_shape_fn((g.num_bins(), keep), |(b, j)| rows[b][j]);
    let freq_axis = (0..keep).map(|j| j as f64 * df).collect();
    SpectrumMatrix {
        magnitudes,
        freq_axis,
        start_bin: 0,
    }
}

/// One-sided magnitude spectrum of every bin's slow-time series, bins
/// `0 ..= N/2`, no taper, no padding.
pub fn slow_time_spectrum(g: &PreprocessedRadargram) -> SpectrumMatrix {
    spectrum_with_padding(g, 1)
}

/// Zero-padded variant for display smoothness. Padding interpolates the
/// spectrum; it adds no information and detection always uses the unpadded
/// transform.
pub fn slow_time_spectrum_padded(g: &PreprocessedRadargram, pad_factor: usize) -> SpectrumMatrix {
    spectrum_with_padding(g, pad_factor.max(1))
}

/// Restricts a spectrum to the columns with `low_hz <= f <= high_hz`
/// (inclusive). Errors when fewer than two bins survive: the peak factor of
/// a single bin is identically 1.
pub fn band_window(spec: &SpectrumMatrix, band: &FrequencyBand) -> Result<SpectrumMatrix> {
    band.validate()?;
    let cols: Vec<usize> = spec
        .freq_axis
        .iter()
        .enumerate()
        .filter(|(_, &f)| band.contains(f))
        .map(|(j, _)| j)
        .collect();
    if cols.len() < 2 {
        return Err(Error::BandTooNarrow {
            low_hz: band.low_hz,
            high_hz: band.high_hz,
            bins: cols.len(),
        });
    }
    let first = cols[0];
    let last = *cols.last().unwrap();
    let magnitudes = spec
        .magnitudes
        .slice(ndarray::s![.., first..=last])
        .to_owned();
    let freq_axis = spec.freq_axis[first..=last].to_vec();
    Ok(SpectrumMatrix {
        magnitudes,
        freq_axis,
        start_bin: spec.start_bin + first,
    })
}

/// Peak-factor summary of one windowed spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFactor {
    /// `y_max / y_rms`.
    pub peak_factor: f64,
    pub y_max: f64,
    pub y_rms: f64,
    /// Argmax within the window; lowest index on ties.
    pub peak_index: usize,
}

/// Computes `P = max / rms` over a windowed spectrum.
pub fn peak_factor(windowed: &[f64]) -> Result<PeakFactor> {
    if windowed.len() < 2 {
        return Err(Error::WindowTooShort {
            len: windowed.len(),
        });
    }
    let mut y_max = f64::NEG_INFINITY;
    let mut peak_index = 0;
    let mut sum_sq = 0.0;
    for (i, &v) in windowed.iter().enumerate() {
        if v > y_max {
            y_max = v;
            peak_index = i;
        }
        sum_sq += v * v;
    }
    if sum_sq == 0.0 {
        return Err(Error::AllZeroWindow);
    }
    let y_rms = (sum_sq / windowed.len() as f64).sqrt();
    Ok(PeakFactor {
        peak_factor: y_max / y_rms,
        y_max,
        y_rms,
        peak_index,
    })
}

/// Peak-factor record for one range bin.
#[derive(Debug, Clone, Copy)]
pub struct BinPeakFactor {
    pub peak_factor: f64,
    pub y_max: f64,
    pub y_rms: f64,
    /// Frequency of the windowed argmax, Hz.
    pub peak_freq_hz: f64,
    /// True when the bin's windowed spectrum was identically zero; such bins
    /// carry `P = 1` instead of an error so the profile covers all bins.
    pub degenerate: bool,
}

/// Peak factor of every range bin over a common analysis band.
#[derive(Debug, Clone)]
pub struct PeakFactorProfile {
    pub bins: Vec<BinPeakFactor>,
    pub band_used: FrequencyBand,
}

impl PeakFactorProfile {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bin with the largest peak factor (lowest index on ties).
    pub fn argmax_bin(&self) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (i, b) in self.bins.iter().enumerate() {
            if b.peak_factor > best_p {
                best_p = b.peak_factor;
                best = i;
            }
        }
        best
    }

    pub fn peak_factors(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.peak_factor)
    }
}

/// Full spectral profile: spectrum, band window, peak factor per range bin.
///
/// With `cfg.power_spectrum` set, the peak factor is computed on `|Y|^2`
/// instead of the magnitude spectrum.
pub fn profile(g: &PreprocessedRadargram, cfg: &PipelineConfig) -> Result<PeakFactorProfile> {
    cfg.respiration_band
        .validate_below_nyquist(0.5 / g.dt_slow())?;
    let spec = slow_time_spectrum(g);
    let windowed = band_window(&spec, &cfg.respiration_band)?;
    let bins = (0..windowed.num_range_bins())
        .map(|bin| {
            let mut row: Vec<f64> = windowed.magnitudes.row(bin).to_vec();
            if cfg.power_spectrum {
                for v in row.iter_mut() {
                    *v *= *v;
                }
            }
            match peak_factor(&row) {
                Ok(pf) => BinPeakFactor {
                    peak_factor: pf.peak_factor,
                    y_max: pf.y_max,
                    y_rms: pf.y_rms,
                    peak_freq_hz: windowed.freq_axis[pf.peak_index],
                    degenerate: false,
                },
                Err(Error::AllZeroWindow) => BinPeakFactor {
                    peak_factor: 1.0,
                    y_max: 0.0,
                    y_rms: 0.0,
                    peak_freq_hz: windowed.freq_axis[0],
                    degenerate: true,
                },
                Err(e) => unreachable!("window length fixed by band_window: {e}"),
            }
        })
        .collect();
    Ok(PeakFactorProfile {
        bins,
        band_used: cfg.respiration_band,
    })
}
