//! Adaptive-threshold detection and the distance-sweep experiment.
//!
//! The detector thresholds the peak-factor profile at
//! `median(P) + k * 1.4826 * MAD(P)` — a robust rule that a single strong
//! body bin cannot inflate, unlike mean + k*sigma — then merges adjacent
//! detected bins into one detection per physical target.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dims, PipelineConfig, Radargram};
use crate::preprocess::run_pipeline;
use crate::simulator::{simulate, PulseModel, SceneConfig};
use crate::spectral::{profile, PeakFactorProfile};

/// Scale factor making the median absolute deviation consistent with the
/// standard deviation under normality.
const MAD_TO_SIGMA: f64 = 1.4826;

/// Detected bins closer than this merge into one detection; the pulse
/// support smears one physical target across adjacent range bins.
const MERGE_RADIUS_BINS: usize = 2;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Robust detection threshold over the non-degenerate profile bins:
/// `median(P) + k * MAD(P) * 1.4826`.
pub fn adaptive_threshold(profile: &PeakFactorProfile, k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidThresholdK { k });
    }
    if profile.len() < 4 {
        return Err(Error::InvalidConfig {
            what: "peak-factor profile",
            why: format!("adaptive threshold needs at least 4 bins, got {}", profile.len()),
        });
    }
    let mut values: Vec<f64> = profile
        .bins
        .iter()
        .filter(|b| !b.degenerate)
        .map(|b| b.peak_factor)
        .collect();
    if values.is_empty() {
        return Err(Error::NoUsableSpectrum);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = median(&values);
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = median(&deviations);
    Ok(med + k * MAD_TO_SIGMA * mad)
}

/// One detected breather.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_bin: usize,
    /// One-way range of the bin, meters (includes the pulse center latency).
    pub range_m: f64,
    pub peak_factor: f64,
    /// Windowed-spectrum argmax of the detected bin, Hz.
    pub respiration_freq_hz: f64,
}

/// Mean / standard deviation / median of the peak factor across all bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileStats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

/// Detection outcome for one radargram.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    /// Detections sorted by descending peak factor.
    pub detections: Vec<Detection>,
    pub threshold_used: f64,
    pub profile_stats: ProfileStats,
}

fn profile_stats(profile: &PeakFactorProfile) -> ProfileStats {
    let n = profile.len() as f64;
    let mean = profile.peak_factors().sum::<f64>() / n;
    let var = profile
        .peak_factors()
        .map(|p| (p - mean) * (p - mean))
        .sum::<f64>()
        / n;
    let mut sorted: Vec<f64> = profile.peak_factors().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ProfileStats {
        mean,
        std: var.sqrt(),
        median: median(&sorted),
    }
}

/// Groups ascending bin indices into clusters with gaps of at most
/// `MERGE_RADIUS_BINS`, keeping each cluster's highest-P bin.
fn merge_clusters(bins: &[usize], profile: &PeakFactorProfile) -> Vec<usize> {
    let mut kept = Vec::new();
    let mut cluster_best: Option<usize> = None;
    let mut last: Option<usize> = None;
    for &bin in bins {
        let start_new = match last {
            Some(prev) => bin - prev > MERGE_RADIUS_BINS,
            None => true,
        };
        if start_new {
            if let Some(best) = cluster_best.take() {
                kept.push(best);
            }
            cluster_best = Some(bin);
        } else {
            let best = cluster_best.unwrap();
            if profile.bins[bin].peak_factor > profile.bins[best].peak_factor {
                cluster_best = Some(bin);
            }
        }
        last = Some(bin);
    }
    if let Some(best) = cluster_best {
        kept.push(best);
    }
    kept
}

/// Full detection chain: preprocessing, spectral profile, adaptive threshold,
/// cluster merge. Empty detections is a valid outcome, not an error.
pub fn detect(g: &Radargram, cfg: &PipelineConfig) -> Result<DetectionReport> {
    let pre = run_pipeline(g, cfg)?;
    let prof = profile(&pre, cfg)?;
    // all-degenerate profiles (an all-zero radargram) fall back to the flat
    // rule: every P is 1, MAD is 0, threshold 1.0, nothing exceeds it
    let threshold = match adaptive_threshold(&prof, cfg.threshold_k) {
        Ok(t) => t,
        Err(Error::NoUsableSpectrum) => 1.0,
        Err(e) => return Err(e),
    };

    let over: Vec<usize> = prof
        .bins
        .iter()
        .enumerate()
        .filter(|(_, b)| b.peak_factor > threshold)
        .map(|(i, _)| i)
        .collect();
    let kept = merge_clusters(&over, &prof);

    let axis = g.range_axis();
    let mut detections: Vec<Detection> = kept
        .into_iter()
        .map(|bin| {
            let b = &prof.bins[bin];
            Ok(Detection {
                range_bin: bin,
                range_m: axis.range_of_bin(bin)?,
                peak_factor: b.peak_factor,
                respiration_freq_hz: b.peak_freq_hz,
            })
        })
        .collect::<Result<_>>()?;
    detections.sort_by(|a, b| {
        b.peak_factor
            .partial_cmp(&a.peak_factor)
            .unwrap()
            .then(a.range_bin.cmp(&b.range_bin))
    });

    Ok(DetectionReport {
        detections,
        threshold_used: threshold,
        profile_stats: profile_stats(&prof),
    })
}

/// Per-cell seed derivation for the distance sweep: cells are independent
/// and reproducible no matter the evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct SeedPolicy {
    pub base: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedPolicy {
    pub fn new(base: u64) -> Self {
        Self { base }
    }

    /// Deterministic seed for the cell at `(x, y)`.
    pub fn cell_seed(&self, x_m: f64, y_m: f64) -> u64 {
        let mixed = splitmix64(self.base ^ splitmix64(x_m.to_bits()));
        splitmix64(mixed ^ y_m.to_bits())
    }
}

/// One row of a sweep result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub body_wall_m: f64,
    pub wall_radar_m: f64,
    /// Peak factor at the profile's best bin.
    pub peak_factor: f64,
    /// Respiration frequency read at that bin, Hz.
    pub detected_freq_hz: f64,
}

/// Distance-sweep outcome over a grid of `(x, y)` cells.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// One row per grid cell, in the order the grid was given.
    pub cells: Vec<SweepCell>,
    /// True when the peak factor strictly increases across the rows in order.
    pub ordering_holds: bool,
}

/// Runs the simulator + detector over every `(x, y)` cell and reports the
/// best-bin peak factor per cell, plus a monotonicity verdict over the grid
/// order. Cells run in parallel; per-cell seeds come from the policy, so the
/// result is independent of scheduling.
pub fn distance_sweep(
    grid: &[(f64, f64)],
    base_cfg: &SceneConfig,
    pulse: &PulseModel,
    dims: &Dims,
    pipeline: &PipelineConfig,
    seeds: SeedPolicy,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig {
            what: "sweep grid",
            why: "no (x, y) cells given".into(),
        });
    }
    dims.validate()?;
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|&(x, y)| {
            let cell = || -> Result<SweepCell> {
                let cfg = SceneConfig {
                    body_wall_m: x,
                    wall_radar_m: y,
                    rng_seed: seeds.cell_seed(x, y),
                    ..base_cfg.clone()
                };
                let g = simulate(&cfg, pulse, dims.m, dims.n, dims.dt_fast, dims.dt_slow)?;
                let pre = run_pipeline(&g, pipeline)?;
                let prof = profile(&pre, pipeline)?;
                let best = prof.argmax_bin();
                Ok(SweepCell {
                    body_wall_m: x,
                    wall_radar_m: y,
                    peak_factor: prof.bins[best].peak_factor,
                    detected_freq_hz: prof.bins[best].peak_freq_hz,
                })
            };
            cell().map_err(|e| Error::SweepCellFailed {
                x,
                y,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let ordering_holds = cells
        .windows(2)
        .all(|w| w[0].peak_factor < w[1].peak_factor);
    Ok(SweepResult {
        cells,
        ordering_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrequencyBand;
    use crate::spectral::BinPeakFactor;

    fn profile_from(ps: &[f64]) -> PeakFactorProfile {
        PeakFactorProfile {
            bins: ps
                .iter()
                .map(|&p| BinPeakFactor {
                    peak_factor: p,
                    y_max: p,
                    y_rms: 1.0,
                    peak_freq_hz: 0.4,
                    degenerate: false,
                })
                .collect(),
            band_used: FrequencyBand::new(0.3, 0.8).unwrap(),
        }
    }

    #[test]
    fn flat_profile_threshold_is_one() {
        let prof = profile_from(&[1.0; 8]);
        let t = adaptive_threshold(&prof, 3.0).unwrap();
        assert_eq!(t, 1.0);
        // strict > comparison: nothing exceeds it
        assert!(prof.peak_factors().all(|p| p <= t));
    }

    #[test]
    fn single_outlier_detected_over_flat_floor() {
        let prof = profile_from(&[1.0, 1.0, 1.0, 1.0, 10.0]);
        let t = adaptive_threshold(&prof, 3.0).unwrap();
        assert_eq!(t, 1.0, "median 1, MAD 0");
        let over: Vec<usize> = prof
            .bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.peak_factor > t)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(over, vec![4]);
    }

    #[test]
    fn threshold_errors() {
        let prof = profile_from(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            adaptive_threshold(&prof, 3.0),
            Err(Error::InvalidConfig { .. })
        ));
        let prof = profile_from(&[1.0; 8]);
        assert!(matches!(
            adaptive_threshold(&prof, 0.0),
            Err(Error::InvalidThresholdK { .. })
        ));

        let mut degenerate = profile_from(&[1.0; 8]);
        for b in degenerate.bins.iter_mut() {
            b.degenerate = true;
        }
        assert!(matches!(
            adaptive_threshold(&degenerate, 3.0),
            Err(Error::NoUsableSpectrum)
        ));
    }

    #[test]
    fn threshold_is_scale_free_in_profile_units() {
        let base = [1.1, 1.3, 1.2, 1.4, 1.25, 3.5, 1.15, 1.3];
        let prof = profile_from(&base);
        let t = adaptive_threshold(&prof, 3.0).unwrap();
        let scaled: Vec<f64> = base.iter().map(|p| p * 2.0).collect();
        let t2 = adaptive_threshold(&profile_from(&scaled), 3.0).unwrap();
        assert!((t2 - 2.0 * t).abs() < 1e-12);
    }

    #[test]
    fn merge_keeps_global_max_and_never_grows() {
        let prof = profile_from(&[1.0, 5.0, 6.0, 5.5, 1.0, 1.0, 1.0, 4.0, 1.0]);
        // bins 1..3 form one cluster (gaps <= 2), bin 7 stands alone
        let kept = merge_clusters(&[1, 2, 3, 7], &prof);
        assert_eq!(kept, vec![2, 7]);

        // gap of exactly MERGE_RADIUS_BINS merges; one more splits
        let kept = merge_clusters(&[1, 3], &prof);
        assert_eq!(kept.len(), 1);
        let kept = merge_clusters(&[1, 4], &prof);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn cell_seeds_differ_and_are_stable() {
        let policy = SeedPolicy::new(7);
        let a = policy.cell_seed(0.4, 0.4);
        let b = policy.cell_seed(0.4, 1.6);
        let c = policy.cell_seed(0.8, 0.4);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
        assert_eq!(a, policy.cell_seed(0.4, 0.4));
    }

    #[test]
    fn empty_grid_rejected() {
        let r = distance_sweep(
            &[],
            &SceneConfig::default(),
            &PulseModel::default(),
            &Dims::default(),
            &PipelineConfig::default(),
            SeedPolicy::new(1),
        );
        assert!(matches!(r, Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn failing_cell_is_identified() {
        // x so large the body echo cannot fit the window
        let r = distance_sweep(
            &[(9.0, 0.4)],
            &SceneConfig::default(),
            &PulseModel::default(),
            &Dims::default(),
            &PipelineConfig::default(),
            SeedPolicy::new(1),
        );
        match r {
            Err(Error::SweepCellFailed { x, y, source }) => {
                assert_eq!((x, y), (9.0, 0.4));
                assert!(matches!(*source, Error::EchoOutsideWindow { .. }));
            }
            other => panic!("expected SweepCellFailed, got {other:?}"),
        }
    }

    #[test]
    fn single_cell_sweep_is_trivially_ordered() {
        let dims = Dims {
            m: 512,
            n: 64,
            ..Dims::default()
        };
        let r = distance_sweep(
            &[(0.4, 0.4)],
            &SceneConfig::default(),
            &PulseModel::default(),
            &dims,
            &PipelineConfig::default(),
            SeedPolicy::new(1),
        )
        .unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.ordering_holds);
    }
}
