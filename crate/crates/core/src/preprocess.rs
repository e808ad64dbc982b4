//! Pre-spectral processing along the slow-time axis.
//!
//! Stage order: DC-shift removal, linear trend subtraction, background
//! suppression, band-pass filtering, mean filtering, global normalization.
//! Every stage maps a radargram to a radargram of identical shape; all of
//! them operate per range bin on that bin's slow-time series, except the
//! final normalization whose divisor is the global maximum.
//!
//! Per-bin work has no cross-bin coupling, so rows are processed in
//! parallel with results identical to serial execution.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FrequencyBand, PipelineConfig, Radargram};

/// A radargram that has passed through (part of) the preprocessing chain,
/// with a record of the applied stages.
#[derive(Debug, Clone)]
pub struct PreprocessedRadargram {
    pub radargram: Radargram,
    /// Stage names in application order. The normalization entry carries a
    /// `(degenerate)` marker when the input was identically zero.
    pub stage_log: Vec<String>,
}

impl PreprocessedRadargram {
    pub fn samples(&self) -> &Array2<f64> {
        self.radargram.samples()
    }

    pub fn num_bins(&self) -> usize {
        self.radargram.num_bins()
    }

    pub fn num_traces(&self) -> usize {
        self.radargram.num_traces()
    }

    pub fn dt_slow(&self) -> f64 {
        self.radargram.dt_slow()
    }

    /// True when normalization hit an all-zero matrix.
    pub fn degenerate_normalization(&self) -> bool {
        self.stage_log.iter().any(|s| s.contains("(degenerate)"))
    }
}

fn map_rows(g: &Radargram, f: impl Fn(ArrayView1<f64>, &mut [f64]) + Sync) -> Radargram {
    let src = g.samples();
    let (bins, traces) = src.dim();
    let mut out = Array2::zeros((bins, traces));
    let rows: Vec<Vec<f64>> = (0..bins)
        .into_par_iter()
        .map(|bin| {
            let mut buf = vec![0.0f64; traces];
            f(src.row(bin), &mut buf);
            buf
        })
        .collect();
    for (bin, row) in rows.into_iter().enumerate() {
        out.row_mut(bin).assign(&ndarray::Array1::from_vec(row));
    }
    g.with_samples(out)
}

/// Subtracts each range bin's slow-time mean.
pub fn remove_dc(g: &Radargram) -> Radargram {
    map_rows(g, |row, out| {
        let mean = row.sum() / row.len() as f64;
        for (o, &v) in out.iter_mut().zip(row.iter()) {
            *o = v - mean;
        }
    })
}

/// Subtracts the least-squares line `a + b*n` from each bin's slow-time series.
pub fn detrend_linear(g: &Radargram) -> Radargram {
    map_rows(g, |row, out| {
        let n = row.len() as f64;
        let t_mean = (n - 1.0) / 2.0;
        let mut denom = 0.0;
        for i in 0..row.len() {
            let d = i as f64 - t_mean;
            denom += d * d;
        }
        let mean = row.sum() / n;
        let mut slope_num = 0.0;
        for (i, &v) in row.iter().enumerate() {
            slope_num += (i as f64 - t_mean) * (v - mean);
        }
        let slope = if denom > 0.0 { slope_num / denom } else { 0.0 };
        for (i, (o, &v)) in out.iter_mut().zip(row.iter()).enumerate() {
            *o = v - (mean + slope * (i as f64 - t_mean));
        }
    })
}

/// Removes slowly varying clutter with an exponential running background.
///
/// The background estimate excludes the current sample: starting from
/// `b = s[0]`, each output is `s[n] - b` and the estimate then updates as
/// `b <- (1 - alpha) * b + alpha * s[n]`.
pub fn suppress_background(g: &Radargram, alpha: f64) -> Result<Radargram> {
    if !(alpha >= 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    Ok(map_rows(g, |row, out| {
        let mut background = row[0];
        for (o, &v) in out.iter_mut().zip(row.iter()) {
            *o = v - background;
            background = (1.0 - alpha) * background + alpha * v;
        }
    }))
}

/// Index into a length-`n` series, reflected without edge repetition
/// (period `2n - 2`), valid for arbitrarily large excursions.
#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n >= 2);
    let period = (2 * n - 2) as isize;
    let mut k = i.rem_euclid(period);
    if k >= n as isize {
        k = period - k;
    }
    k as usize
}

/// Hamming-windowed sinc low-pass with unit DC gain, `fc` in cycles/sample.
fn windowed_sinc_lowpass(fc: f64, taps: usize) -> Vec<f64> {
    let center = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - center;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * x).sin() / (std::f64::consts::PI * x)
            };
            let w = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in h.iter_mut() {
        *v /= sum;
    }
    h
}

/// Linear-phase FIR band-pass taps: difference of two DC-normalized
/// windowed-sinc low-passes at the high and low cutoffs.
pub fn bandpass_taps(band: &FrequencyBand, taps: usize, sample_rate_hz: f64) -> Vec<f64> {
    let high = windowed_sinc_lowpass(band.high_hz / sample_rate_hz, taps);
    let low = windowed_sinc_lowpass(band.low_hz / sample_rate_hz, taps);
    high.iter().zip(low.iter()).map(|(h, l)| h - l).collect()
}

/// One reflect-padded same-length convolution pass.
fn convolve_same_reflect(series: &[f64], taps: &[f64], out: &mut [f64]) {
    let n = series.len();
    let half = taps.len() / 2;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &h) in taps.iter().enumerate() {
            let idx = reflect_index(i as isize - half as isize + j as isize, n);
            acc += h * series[idx];
        }
        *o = acc;
    }
}

/// Zero-phase band-pass along slow time: forward pass, then a second pass
/// over the time-reversed intermediate, each with reflect padding.
pub fn bandpass_slow_time(g: &Radargram, band: &FrequencyBand, taps: usize) -> Result<Radargram> {
    if taps == 0 || taps % 2 == 0 {
        return Err(Error::InvalidTaps { taps });
    }
    band.validate_below_nyquist(g.slow_nyquist())?;
    let fs = 1.0 / g.dt_slow();
    let h = bandpass_taps(band, taps, fs);
    Ok(map_rows(g, |row, out| {
        let series: Vec<f64> = row.to_vec();
        let mut forward = vec![0.0; series.len()];
        convolve_same_reflect(&series, &h, &mut forward);
        forward.reverse();
        convolve_same_reflect(&forward, &h, out);
        out.reverse();
    }))
}

/// Centered moving average along slow time with reflect padding.
pub fn mean_filter(g: &Radargram, window: usize) -> Result<Radargram> {
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    if window % 2 == 0 {
        return Err(Error::EvenWindow { window });
    }
    let kernel = vec![1.0 / window as f64; window];
    Ok(map_rows(g, |row, out| {
        let series: Vec<f64> = row.to_vec();
        convolve_same_reflect(&series, &kernel, out);
    }))
}

/// Divides the whole matrix by its global maximum absolute value.
/// An all-zero input is returned unchanged with the degenerate flag set.
pub fn normalize(g: &Radargram) -> (Radargram, bool) {
    let max = g.samples().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 {
        return (g.clone(), true);
    }
    let scaled = g.samples().mapv(|v| v / max);
    (g.with_samples(scaled), false)
}

/// Runs the full preprocessing chain in order and records each stage.
pub fn run_pipeline(g: &Radargram, cfg: &PipelineConfig) -> Result<PreprocessedRadargram> {
    cfg.validate_for(g)?;
    let mut log = Vec::with_capacity(6);

    let stage = remove_dc(g);
    log.push("remove_dc".to_string());

    let stage = detrend_linear(&stage);
    log.push("detrend_linear".to_string());

    let stage = suppress_background(&stage, cfg.background_alpha)?;
    log.push("suppress_background".to_string());

    let stage = bandpass_slow_time(&stage, &cfg.bandpass_band, cfg.bandpass_taps)?;
    log.push("bandpass_slow_time".to_string());

    let stage = mean_filter(&stage, cfg.mean_filter_window)?;
    log.push("mean_filter".to_string());

    let (stage, degenerate) = normalize(&stage);
    log.push(if degenerate {
        "normalize (degenerate)".to_string()
    } else {
        "normalize".to_string()
    });

    Ok(PreprocessedRadargram {
        radargram: stage,
        stage_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn from_rows(rows: &[Vec<f64>], dt_slow: f64) -> Radargram {
        // pad single-row fixtures with a zero row; the model wants M >= 2
        let mut rows = rows.to_vec();
        if rows.len() == 1 {
            rows.push(vec![0.0; rows[0].len()]);
        }
        let bins = rows.len();
        let traces = rows[0].len();
        let m = Array2::from_shape_fn((bins, traces), |(b, t)| rows[b][t]);
        Radargram::new(m, 1.0, dt_slow).unwrap()
    }

    fn row0(g: &Radargram) -> Vec<f64> {
        g.samples().row(0).to_vec()
    }

    #[test]
    fn remove_dc_examples() {
        let g = from_rows(
            &[
                vec![7.0, 7.0, 7.0, 7.0],
                vec![1.0, -1.0, 1.0, -1.0],
                vec![1.0, 2.0, 3.0, 4.0],
            ],
            1.0,
        );
        let out = remove_dc(&g);
        assert_eq!(out.samples().row(0).to_vec(), vec![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out.samples().row(1).to_vec(), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(out.samples().row(2).to_vec(), vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn remove_dc_idempotent() {
        let g = from_rows(&[vec![3.0, 1.0, 4.0, 1.0, 5.0], vec![0.1, 0.5, 0.2, 0.9, 0.4]], 1.0);
        let once = remove_dc(&g);
        let twice = remove_dc(&once);
        for (a, b) in once.samples().iter().zip(twice.samples().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn detrend_kills_exact_lines() {
        let line: Vec<f64> = (0..10).map(|n| 2.0 + 0.1 * n as f64).collect();
        let constant = vec![5.5; 10];
        let g = from_rows(&[line, constant], 1.0);
        let out = detrend_linear(&g);
        for &v in out.samples().iter() {
            assert!(v.abs() < 1e-12, "residual {v}");
        }
    }

    #[test]
    fn detrend_matches_normal_equations_oracle() {
        // independent closed-form least-squares solve on a fixed pseudo-random series
        let series: Vec<f64> = (0..32)
            .map(|i| ((i * 2654435761u64 as usize) % 997) as f64 / 997.0 - 0.5)
            .collect();
        let g = from_rows(&[series.clone()], 1.0);
        let out = row0(&detrend_linear(&g));

        let n = series.len() as f64;
        let sx: f64 = (0..series.len()).map(|i| i as f64).sum();
        let sxx: f64 = (0..series.len()).map(|i| (i as f64) * (i as f64)).sum();
        let sy: f64 = series.iter().sum();
        let sxy: f64 = series.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
        let det = n * sxx - sx * sx;
        let a = (sxx * sy - sx * sxy) / det;
        let b = (n * sxy - sx * sy) / det;

        let mut residual_mean = 0.0;
        let mut residual_corr = 0.0;
        for (i, (&got, &raw)) in out.iter().zip(series.iter()).enumerate() {
            let expect = raw - (a + b * i as f64);
            assert!((got - expect).abs() < 1e-12);
            residual_mean += got;
            residual_corr += got * i as f64;
        }
        assert!(residual_mean.abs() / n < 1e-9);
        assert!(residual_corr.abs() / n < 1e-9);
    }

    #[test]
    fn background_suppression_examples() {
        let constant = from_rows(&[vec![4.2; 6]], 1.0);
        let out = suppress_background(&constant, 0.3).unwrap();
        assert!(row0(&out).iter().all(|&v| v == 0.0));

        // alpha = 0 freezes the background at s[0]
        let series = vec![2.0, 5.0, -1.0, 0.5];
        let g = from_rows(&[series.clone()], 1.0);
        let out = suppress_background(&g, 0.0).unwrap();
        let expect: Vec<f64> = series.iter().map(|v| v - series[0]).collect();
        assert_eq!(row0(&out), expect);

        // hand-rolled recurrence on a step
        let g = from_rows(&[vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]], 1.0);
        let out = suppress_background(&g, 0.5).unwrap();
        let got = row0(&out);
        let expect = [0.0, 0.0, 0.0, 1.0, 0.5, 0.25];
        for (g_, e) in got.iter().zip(expect.iter()) {
            assert!((g_ - e).abs() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn background_rejects_bad_alpha() {
        let g = from_rows(&[vec![0.0; 4]], 1.0);
        assert!(matches!(
            suppress_background(&g, 1.0),
            Err(Error::InvalidAlpha { .. })
        ));
        assert!(matches!(
            suppress_background(&g, -0.1),
            Err(Error::InvalidAlpha { .. })
        ));
    }

    #[test]
    fn reflect_index_bounces() {
        // n = 5: pattern ... 2 1 | 0 1 2 3 4 | 3 2 1 0 1 ...
        assert_eq!(reflect_index(-1, 5), 1);
        assert_eq!(reflect_index(-2, 5), 2);
        assert_eq!(reflect_index(0, 5), 0);
        assert_eq!(reflect_index(4, 5), 4);
        assert_eq!(reflect_index(5, 5), 3);
        assert_eq!(reflect_index(7, 5), 1);
        assert_eq!(reflect_index(8, 5), 0);
        assert_eq!(reflect_index(9, 5), 1);
    }

    #[test]
    fn bandpass_zero_in_zero_out() {
        let g = from_rows(&[vec![0.0; 64]], 0.1);
        let band = FrequencyBand::new(0.2, 1.0).unwrap();
        let out = bandpass_slow_time(&g, &band, 31).unwrap();
        assert!(row0(&out).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bandpass_rejects_even_taps_and_bad_band() {
        let g = from_rows(&[vec![0.0; 64]], 0.1);
        let band = FrequencyBand::new(0.2, 1.0).unwrap();
        assert!(matches!(
            bandpass_slow_time(&g, &band, 30),
            Err(Error::InvalidTaps { taps: 30 })
        ));
        let wide = FrequencyBand::new(0.2, 6.0).unwrap();
        assert!(matches!(
            bandpass_slow_time(&g, &wide, 31),
            Err(Error::BandBeyondNyquist { .. })
        ));
    }

    #[test]
    fn bandpass_supports_taps_longer_than_series() {
        let series: Vec<f64> = (0..16)
            .map(|n| (2.0 * std::f64::consts::PI * 0.5 * n as f64 * 0.1).sin())
            .collect();
        let g = from_rows(&[series], 0.1);
        let band = FrequencyBand::new(0.2, 1.0).unwrap();
        let out = bandpass_slow_time(&g, &band, 101).unwrap();
        assert_eq!(row0(&out).len(), 16);
        assert!(row0(&out).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn mean_filter_examples() {
        let g = from_rows(&[vec![3.0; 8]], 1.0);
        let out = mean_filter(&g, 5).unwrap();
        for &v in row0(&out).iter() {
            assert!((v - 3.0).abs() < 1e-12);
        }

        // interior unit impulse spreads to 0.2 over five samples
        let mut impulse = vec![0.0; 11];
        impulse[5] = 1.0;
        let g = from_rows(&[impulse], 1.0);
        let out = mean_filter(&g, 5).unwrap();
        let got = row0(&out);
        for (i, &v) in got.iter().enumerate() {
            let expect = if (3..=7).contains(&i) { 0.2 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "index {i}: {v}");
        }

        // affine input unchanged at interior samples
        let ramp: Vec<f64> = (0..16).map(|n| 1.0 + 0.25 * n as f64).collect();
        let g = from_rows(&[ramp.clone()], 1.0);
        let out = mean_filter(&g, 5).unwrap();
        for i in 2..14 {
            assert!((row0(&out)[i] - ramp[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_filter_rejects_even_window() {
        let g = from_rows(&[vec![0.0; 8]], 1.0);
        assert!(matches!(
            mean_filter(&g, 4),
            Err(Error::EvenWindow { window: 4 })
        ));
        assert!(matches!(mean_filter(&g, 0), Err(Error::ZeroWindow)));
    }

    #[test]
    fn normalize_examples() {
        let g = Radargram::new(arr2(&[[2.0, -4.0], [1.0, 0.5]]), 1.0, 1.0).unwrap();
        let (out, degenerate) = normalize(&g);
        assert!(!degenerate);
        let max = out.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((max - 1.0).abs() < 1e-15);
        // ratios and signs preserved
        assert_eq!(out.samples()[[0, 0]], 0.5);
        assert_eq!(out.samples()[[0, 1]], -1.0);

        let zero = Radargram::new(Array2::zeros((2, 2)), 1.0, 1.0).unwrap();
        let (out, degenerate) = normalize(&zero);
        assert!(degenerate);
        assert!(out.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_idempotent() {
        let g = Radargram::new(arr2(&[[2.0, -4.0], [1.0, 0.5]]), 1.0, 1.0).unwrap();
        let (once, _) = normalize(&g);
        let (twice, _) = normalize(&once);
        for (a, b) in once.samples().iter().zip(twice.samples().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pipeline_equals_manual_composition() {
        let series: Vec<f64> = (0..64)
            .map(|n| {
                (2.0 * std::f64::consts::PI * 0.4 * n as f64 * 0.1).sin()
                    + 0.05 * n as f64
                    + ((n * 7919) % 13) as f64 * 0.01
            })
            .collect();
        let g = from_rows(&[series.clone(), series.iter().map(|v| v * 0.3).collect()], 0.1);
        let cfg = PipelineConfig {
            bandpass_taps: 31,
            ..PipelineConfig::default()
        };

        let piped = run_pipeline(&g, &cfg).unwrap();

        let manual = remove_dc(&g);
        let manual = detrend_linear(&manual);
        let manual = suppress_background(&manual, cfg.background_alpha).unwrap();
        let manual = bandpass_slow_time(&manual, &cfg.bandpass_band, cfg.bandpass_taps).unwrap();
        let manual = mean_filter(&manual, cfg.mean_filter_window).unwrap();
        let (manual, _) = normalize(&manual);

        assert_eq!(piped.samples(), manual.samples());
        assert_eq!(
            piped.stage_log,
            vec![
                "remove_dc",
                "detrend_linear",
                "suppress_background",
                "bandpass_slow_time",
                "mean_filter",
                "normalize"
            ]
        );
    }

    #[test]
    fn pipeline_all_zero_input() {
        let g = Radargram::new(Array2::zeros((4, 64)), 1.0, 0.1).unwrap();
        let cfg = PipelineConfig {
            bandpass_taps: 31,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.0));
        assert_eq!(out.stage_log.len(), 6);
        assert!(out.degenerate_normalization());
    }

    #[test]
    fn stages_preserve_shape_and_intervals() {
        let row = vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.0, 1.5, -2.0];
        let g = from_rows(&[row.clone(), row.clone(), row], 0.1);
        let cfg = PipelineConfig {
            bandpass_taps: 5,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert_eq!(out.num_bins(), g.num_bins());
        assert_eq!(out.num_traces(), g.num_traces());
        assert_eq!(out.radargram.dt_fast(), g.dt_fast());
        assert_eq!(out.radargram.dt_slow(), g.dt_slow());
    }
}
