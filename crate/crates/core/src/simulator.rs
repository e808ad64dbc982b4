//! Synthetic through-wall radargram generator.
//!
//! Builds radargrams for a single breather behind a homogeneous wall: a
//! first-derivative Gaussian transmit pulse, a static wall front-face echo,
//! a body echo whose delay is modulated by chest displacement, and the
//! instrument/scene perturbations a real capture carries (per-trace baseline
//! and gain wander, body-motion clutter, white receiver noise).
//!
//! Determinism contract: a radargram is a pure function of the configuration
//! and `rng_seed`. Per-trace noise comes from independent ChaCha8 streams
//! (stream = trace index), so parallel and serial generation are bit-identical.
//! The wander and body-clutter sequences model repeatable instrument/scene
//! structure: flat-spectrum pseudo-noise (equal-amplitude tones with keyed
//! random phases) derived from fixed internal keys, not from `rng_seed`, so
//! their in-band level is the same for every acquisition geometry.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Radargram, SPEED_OF_LIGHT};

/// Guard distance for the 1/d^2 amplitude law, meters.
const MIN_RANGE_M: f64 = 1e-3;

/// Pulse support half-width used for window-fit checks, in units of sigma.
const PULSE_SUPPORT_SIGMAS: f64 = 4.0;

/// Reference distance for the body-clutter proximity laws, meters.
const CLUTTER_REF_M: f64 = 0.4;
/// Body-clutter growth exponent in the body-to-wall distance.
const CLUTTER_EXP_BODY_WALL: f64 = 1.5;
/// Body-clutter growth exponent in the wall-to-radar distance.
const CLUTTER_EXP_WALL_RADAR: f64 = 1.25;
/// Relative weight of the body-to-wall reverberation term.
const CLUTTER_WEIGHT_BODY_WALL: f64 = 0.57;
/// Relative weight of the wall-to-radar coupling term.
const CLUTTER_WEIGHT_WALL_RADAR: f64 = 0.43;
/// Width of the clutter gate around the body echo, in units of pulse sigma.
const CLUTTER_ENV_SIGMAS: f64 = 2.0;
/// Breath depth at which `breath_am` and `body_clutter` are specified, meters.
const BREATH_REF_M: f64 = 0.005;

/// Fixed key for the instrument wander / clutter-mode sequence.
const WANDER_SEQ_KEY: u64 = 0x7752_6164_6172_000f;

/// First-derivative Gaussian transmit pulse.
///
/// `eval` returns the normalized waveform
/// `-A * ((t - t0)/sigma) * exp(1/2 - (t - t0)^2 / (2 sigma^2))`,
/// whose continuous-time peak magnitude is exactly `A` (at `t = t0 ± sigma`).
/// The spectral peak sits at `1 / (2 pi sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseModel {
    /// Gaussian width parameter, seconds.
    pub sigma: f64,
    /// Pulse center delay, seconds. Must leave the full support inside the window start.
    pub t0: f64,
    /// Peak amplitude.
    pub amplitude: f64,
}

impl Default for PulseModel {
    fn default() -> Self {
        // sigma puts the spectral peak at ~2.42 GHz, the geometric mean of a
        // 0.9-6.5 GHz occupied band
        Self {
            sigma: 65.8e-12,
            t0: 1.0e-9,
            amplitude: 1.0,
        }
    }
}

impl PulseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig {
                what: "pulse",
                why: format!("sigma must be positive, got {}", self.sigma),
            });
        }
        if !self.t0.is_finite() || self.t0 < PULSE_SUPPORT_SIGMAS * self.sigma {
            return Err(Error::InvalidConfig {
                what: "pulse",
                why: format!(
                    "t0 = {} s must be at least 4 sigma = {} s so the pulse fits the window start",
                    self.t0,
                    PULSE_SUPPORT_SIGMAS * self.sigma
                ),
            });
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig {
                what: "pulse",
                why: "amplitude must be finite".into(),
            });
        }
        Ok(())
    }

    /// Waveform value at time `t` (seconds from the trace start).
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.sigma;
        -self.amplitude * u * (0.5 - 0.5 * u * u).exp()
    }

    /// End of the effective pulse support, seconds.
    pub fn support_end(&self) -> f64 {
        self.t0 + PULSE_SUPPORT_SIGMAS * self.sigma
    }

    /// Spectral peak frequency `1 / (2 pi sigma)`, Hz.
    pub fn spectral_peak_hz(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.sigma)
    }
}

/// Samples the pulse on a uniform grid. Errors when the support spills past
/// the end of the window.
pub fn generate_pulse(pulse: &PulseModel, dt_fast: f64, length: usize) -> Result<Vec<f64>> {
    pulse.validate()?;
    if !(dt_fast.is_finite() && dt_fast > 0.0) {
        return Err(Error::NonPositiveInterval {
            name: "dt_fast",
            value: dt_fast,
        });
    }
    if length == 0 {
        return Err(Error::DimensionTooSmall {
            axis: "fast-time",
            got: 0,
        });
    }
    let window = length as f64 * dt_fast;
    if pulse.support_end() > window {
        return Err(Error::PulseTruncated {
            support_end_s: pulse.support_end(),
            window_s: window,
        });
    }
    Ok((0..length).map(|k| pulse.eval(k as f64 * dt_fast)).collect())
}

/// What produced an echo component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoLabel {
    WallFront,
    WallBack,
    Body,
    Multipath,
}

impl EchoLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EchoLabel::WallFront => "wall_front",
            EchoLabel::WallBack => "wall_back",
            EchoLabel::Body => "body",
            EchoLabel::Multipath => "multipath",
        }
    }
}

/// One point echo: the transmit pulse, delayed and scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoComponent {
    /// Two-way propagation delay, seconds.
    pub delay: f64,
    /// Amplitude applied to the pulse.
    pub amplitude: f64,
    pub label: EchoLabel,
}

/// Scene geometry and perturbation levels for the simulator.
///
/// `body_wall_m` and `wall_radar_m` are the two stand-off distances swept in
/// the experiment (body-to-wall and wall-to-radar). Wall parameters default to
/// a single-layer brick wall. The wander, clutter and modulation levels are
/// instrument/scene texture; their defaults reproduce the qualitative
/// distance trend of a through-wall capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Body-to-wall distance x, meters.
    pub body_wall_m: f64,
    /// Wall-to-radar distance y, meters.
    pub wall_radar_m: f64,
    /// Wall slab thickness, meters.
    pub wall_thickness_m: f64,
    /// Relative permittivity of the wall (brick ~= 4.4).
    pub wall_rel_permittivity: f64,
    /// Amplitude reflection coefficient of the wall face, in (0, 1).
    pub wall_reflection_coeff: f64,
    /// Breathing rate, Hz.
    pub breath_freq_hz: f64,
    /// Chest displacement amplitude, meters.
    pub breath_amplitude_m: f64,
    /// Fractional echo-amplitude modulation per breath cycle, in quadrature
    /// with the displacement; specified at a 5 mm breath depth.
    pub breath_am: f64,
    /// Body scattering amplitude scale.
    pub body_reflectivity: f64,
    /// Body-motion clutter level relative to the body echo amplitude at
    /// x = y = 0.4 m; grows as either stand-off shrinks.
    pub body_clutter: f64,
    /// White receiver noise standard deviation (per sample).
    pub noise_sigma: f64,
    /// Per-trace baseline wander, in units of `noise_sigma`.
    pub dc_wander: f64,
    /// Per-trace receiver gain wander, in units of `noise_sigma`.
    pub gain_wander: f64,
    /// Add a single wall interior second-bounce component.
    pub wall_second_bounce: bool,
    /// Seed for the receiver-noise generator (ChaCha8, one stream per trace).
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            body_wall_m: 0.4,
            wall_radar_m: 0.4,
            wall_thickness_m: 0.10,
            wall_rel_permittivity: 4.4,
            wall_reflection_coeff: 0.41,
            breath_freq_hz: 0.4,
            breath_amplitude_m: 0.005,
            breath_am: 0.5,
            body_reflectivity: 1.0,
            body_clutter: 2.1,
            noise_sigma: 0.01,
            dc_wander: 8.0,
            gain_wander: 0.0,
            wall_second_bounce: false,
            rng_seed: 18,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_wall_m", self.body_wall_m),
            ("wall_radar_m", self.wall_radar_m),
            ("wall_thickness_m", self.wall_thickness_m),
            ("breath_freq_hz", self.breath_freq_hz),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig {
                    what: "scene",
                    why: format!("{name} must be positive, got {value}"),
                });
            }
        }
        let non_negative = [
            ("breath_amplitude_m", self.breath_amplitude_m),
            ("body_reflectivity", self.body_reflectivity),
            ("body_clutter", self.body_clutter),
            ("noise_sigma", self.noise_sigma),
            ("dc_wander", self.dc_wander),
            ("gain_wander", self.gain_wander),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidConfig {
                    what: "scene",
                    why: format!("{name} must be non-negative, got {value}"),
                });
            }
        }
        if self.body_wall_m <= self.breath_amplitude_m {
            return Err(Error::InvalidConfig {
                what: "scene",
                why: format!(
                    "body_wall_m = {} m must exceed breath_amplitude_m = {} m",
                    self.body_wall_m, self.breath_amplitude_m
                ),
            });
        }
        if !(self.wall_rel_permittivity.is_finite() && self.wall_rel_permittivity >= 1.0) {
            return Err(Error::InvalidConfig {
                what: "scene",
                why: format!(
                    "wall_rel_permittivity must be >= 1, got {}",
                    self.wall_rel_permittivity
                ),
            });
        }
        if !(self.wall_reflection_coeff > 0.0 && self.wall_reflection_coeff < 1.0) {
            return Err(Error::InvalidConfig {
                what: "scene",
                why: format!(
                    "wall_reflection_coeff must lie in (0, 1), got {}",
                    self.wall_reflection_coeff
                ),
            });
        }
        if !(self.breath_am >= 0.0 && self.breath_am < 1.0) {
            return Err(Error::InvalidConfig {
                what: "scene",
                why: format!("breath_am must lie in [0, 1), got {}", self.breath_am),
            });
        }
        Ok(())
    }

    /// Validation that needs the slow-time rate (breathing below Nyquist).
    pub fn validate_for(&self, dt_slow: f64) -> Result<()> {
        self.validate()?;
        let nyquist = 0.5 / dt_slow;
        if self.breath_freq_hz >= nyquist {
            return Err(Error::InvalidConfig {
                what: "scene",
                why: format!(
                    "breath_freq_hz = {} Hz is at or above the slow-time Nyquist {} Hz",
                    self.breath_freq_hz, nyquist
                ),
            });
        }
        Ok(())
    }

    /// Extra electrical path added by one slab traversal, meters:
    /// `thickness * (sqrt(eps_r) - 1)`.
    pub fn wall_extra_path(&self) -> f64 {
        self.wall_thickness_m * (self.wall_rel_permittivity.sqrt() - 1.0)
    }

    /// Nominal (mid-breath) one-way electrical path to the body, meters.
    pub fn body_nominal_path(&self) -> f64 {
        self.wall_radar_m + self.wall_extra_path() + self.body_wall_m
    }

    /// Static body echo amplitude (no breath modulation).
    pub fn body_base_amplitude(&self) -> f64 {
        let gamma = self.wall_reflection_coeff;
        let d = (self.body_wall_m + self.wall_radar_m).max(MIN_RANGE_M);
        self.body_reflectivity * (1.0 - gamma * gamma).powi(2) / (d * d)
    }

    /// Effective fractional amplitude modulation at this breath depth.
    fn breath_am_effective(&self) -> f64 {
        self.breath_am * (self.breath_amplitude_m / BREATH_REF_M)
    }

    /// Body-motion clutter amplitude (absolute units). Two reverberation
    /// terms add: one grows as the body approaches the wall, one as the
    /// radar does; both are normalized to the 0.4 m reference stand-off.
    fn clutter_amplitude(&self) -> f64 {
        let proximity = CLUTTER_WEIGHT_BODY_WALL
            * (CLUTTER_REF_M / self.body_wall_m).powf(CLUTTER_EXP_BODY_WALL)
            + CLUTTER_WEIGHT_WALL_RADAR
                * (CLUTTER_REF_M / self.wall_radar_m).powf(CLUTTER_EXP_WALL_RADAR);
        self.body_clutter
            * proximity
            * (self.breath_amplitude_m / BREATH_REF_M)
            * self.body_base_amplitude()
    }
}

/// Echo components of one trace: the static wall face return and the
/// breath-modulated body return (plus an optional interior second bounce).
///
/// The wall component is identical for every trace; the body component's
/// delay follows the chest displacement and its amplitude carries the
/// quadrature breath modulation.
pub fn echo_components(cfg: &SceneConfig, trace_index: usize, dt_slow: f64) -> Vec<EchoComponent> {
    let gamma = cfg.wall_reflection_coeff;
    let y = cfg.wall_radar_m;
    let x = cfg.body_wall_m;
    let phase = 2.0 * std::f64::consts::PI * cfg.breath_freq_hz * trace_index as f64 * dt_slow;

    let mut components = Vec::with_capacity(3);
    components.push(EchoComponent {
        delay: 2.0 * y / SPEED_OF_LIGHT,
        amplitude: gamma / y.max(MIN_RANGE_M).powi(2),
        label: EchoLabel::WallFront,
    });
    if cfg.wall_second_bounce {
        // one interior bounce: through the front face, off the back face, back out
        let path = y + cfg.wall_thickness_m * cfg.wall_rel_permittivity.sqrt();
        components.push(EchoComponent {
            delay: 2.0 * path / SPEED_OF_LIGHT,
            amplitude: gamma * (1.0 - gamma * gamma)
                / (y + cfg.wall_thickness_m).max(MIN_RANGE_M).powi(2),
            label: EchoLabel::WallBack,
        });
    }
    let breath = cfg.breath_amplitude_m * phase.sin();
    let path = y + cfg.wall_extra_path() + x + breath;
    components.push(EchoComponent {
        delay: 2.0 * path / SPEED_OF_LIGHT,
        amplitude: cfg.body_base_amplitude() * (1.0 + cfg.breath_am_effective() * phase.cos()),
        label: EchoLabel::Body,
    });
    components
}

/// Worst-case (full-inhale) delays per component, for window-fit checks.
fn worst_case_delays(cfg: &SceneConfig) -> Vec<(EchoLabel, f64)> {
    let y = cfg.wall_radar_m;
    let mut worst = vec![(EchoLabel::WallFront, 2.0 * y / SPEED_OF_LIGHT)];
    if cfg.wall_second_bounce {
        let path = y + cfg.wall_thickness_m * cfg.wall_rel_permittivity.sqrt();
        worst.push((EchoLabel::WallBack, 2.0 * path / SPEED_OF_LIGHT));
    }
    let body = cfg.body_nominal_path() + cfg.breath_amplitude_m;
    worst.push((EchoLabel::Body, 2.0 * body / SPEED_OF_LIGHT));
    worst
}

/// Unit-variance pseudo-noise sequence with an exactly flat magnitude
/// spectrum: a sum of equal-amplitude tones at every DFT bin (DC and Nyquist
/// excluded) with phases drawn from a keyed stream. Used for the instrument
/// wander and body-clutter signatures so their in-band level does not depend
/// on realization luck.
fn multisine_sequence(key: u64, stream: u64, n: usize) -> Vec<f64> {
    let tones = (n.saturating_sub(1)) / 2;
    if tones == 0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    let phases: Vec<f64> = (0..tones)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    let amp = (2.0 / tones as f64).sqrt();
    (0..n)
        .map(|t| {
            let base = std::f64::consts::TAU * t as f64 / n as f64;
            phases
                .iter()
                .enumerate()
                .map(|(j, &phi)| amp * ((j + 1) as f64 * base + phi).cos())
                .sum()
        })
        .collect()
}

/// Generates a synthetic radargram.
///
/// Each trace is the sum over echo components of `amplitude * pulse(t - delay)`
/// with the delay applied by re-evaluating the analytic pulse at the shifted
/// times (sub-sample accuracy; a 5 mm breath moves the echo by ~1.3 samples at
/// 39 GS/s, so integer shifts would quantize the signature), scaled by the
/// per-trace gain wander, plus the body-motion clutter gated around the body
/// echo, white receiver noise, and the per-trace baseline wander.
pub fn simulate(
    cfg: &SceneConfig,
    pulse: &PulseModel,
    m: usize,
    n: usize,
    dt_fast: f64,
    dt_slow: f64,
) -> Result<Radargram> {
    cfg.validate_for(dt_slow)?;
    pulse.validate()?;
    if m < 2 {
        return Err(Error::DimensionTooSmall {
            axis: "fast-time",
            got: m,
        });
    }
    if n < 2 {
        return Err(Error::DimensionTooSmall {
            axis: "slow-time",
            got: n,
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

    let window = m as f64 * dt_fast;
    for (label, delay) in worst_case_delays(cfg) {
        if delay + pulse.support_end() > window {
            return Err(Error::EchoOutsideWindow {
                label: label.as_str(),
                delay_s: delay,
                window_s: window,
            });
        }
    }

    let clutter_amp = cfg.clutter_amplitude();
    let clutter_center = 2.0 * cfg.body_nominal_path() / SPEED_OF_LIGHT + pulse.t0;
    let clutter_width = CLUTTER_ENV_SIGMAS * pulse.sigma;
    let noise_sigma = cfg.noise_sigma;

    // one low-rank slow-time clutter mode: a flat-spectrum wander waveform
    // couples into every range bin (receiver baseline/gain wander) and is
    // amplified inside the body's range gate by wall-body reverberation
    let wander = multisine_sequence(WANDER_SEQ_KEY, 0, n);
    let coupling: Vec<f64> = (0..m)
        .map(|k| {
            let z = (k as f64 * dt_fast - clutter_center) / clutter_width;
            noise_sigma * cfg.dc_wander + clutter_amp * (-0.5 * z * z).exp()
        })
        .collect();

    let traces: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|trace| {
            let gain = 1.0 + noise_sigma * cfg.gain_wander * wander[trace];

            let mut column = vec![0.0f64; m];
            for c in echo_components(cfg, trace, dt_slow) {
                for (k, sample) in column.iter_mut().enumerate() {
                    *sample += c.amplitude * pulse.eval(k as f64 * dt_fast - c.delay);
                }
            }
            for (k, sample) in column.iter_mut().enumerate() {
                *sample = gain * *sample + coupling[k] * wander[trace];
            }

            if noise_sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                rng.set_stream(trace as u64);
                for sample in column.iter_mut() {
                    let draw: f64 = rng.sample(StandardNormal);
                    *sample += noise_sigma * draw;
                }
            }
            column
        })
        .collect();

    let samples = Array2::from_shape_fn((m, n), |(k, trace)| traces[trace][k]);
    Radargram::new(samples, dt_fast, dt_slow)
}
