//! Command-line front end: simulate, detect, sweep, spectrum.
//!
//! Exit codes are script-friendly:
//! - `0`: success (detect: at least one detection; sweep: ordering holds)
//! - `1`: clean run, negative outcome (no detection / ordering fails)
//! - `2`: bad input (config, file format, arguments)
//! - `3`: simulation failure

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use respiradar_core::{
    detect, distance_sweep, load_config, profile, read_radargram, run_pipeline, simulate,
    slow_time_spectrum, write_radargram, Dims, FrequencyBand, PipelineConfig, Radargram,
    RunConfig, SeedPolicy,
};

const EXIT_HELP: &str = "Exit codes:
  0  success; for `detect`, at least one detection; for `sweep`, the
     peak factor increased strictly across the grid
  1  clean run with a negative outcome (no detection / ordering fails)
  2  invalid input: config, file format, or arguments
  3  simulation failure";

#[derive(Parser)]
#[command(
    name = "respiradar",
    version,
    about = "Through-wall respiration detection on UWB impulse radargrams",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic through-wall radargram file
    Simulate {
        /// TOML run configuration; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output radargram path
        #[arg(long)]
        out: PathBuf,
        /// Override the scene's noise seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the detection chain on a radargram file
    Detect {
        /// Input radargram
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional CSV report path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Respiration analysis band as LOW:HIGH in Hz
        #[arg(long)]
        band: Option<String>,
        /// Detection threshold multiplier k
        #[arg(long)]
        threshold_k: Option<f64>,
        /// Compute the peak factor on the power spectrum |Y|^2
        #[arg(long)]
        power_spectrum: bool,
    },
    /// Simulate a grid of stand-off distances and report the peak-factor trend
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated body-to-wall distances, meters (e.g. 0.4,0.8)
        #[arg(long)]
        x: String,
        /// Comma-separated wall-to-radar distances, meters (e.g. 0.4,1.6)
        #[arg(long)]
        y: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Base seed for the per-cell seed derivation
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold_k: Option<f64>,
        #[arg(long)]
        power_spectrum: bool,
    },
    /// Export one range bin's slow-time spectrum as CSV
    Spectrum {
        /// Input radargram
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Range bin to export (default: the bin with the highest peak factor)
        #[arg(long)]
        bin: Option<usize>,
        #[arg(long)]
        band: Option<String>,
        #[arg(long)]
        power_spectrum: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(config.as_deref(), &out, seed),
        Command::Detect {
            input,
            config,
            out,
            band,
            threshold_k,
            power_spectrum,
        } => cmd_detect(
            &input,
            config.as_deref(),
            out.as_deref(),
            band.as_deref(),
            threshold_k,
            power_spectrum,
        ),
        Command::Sweep {
            config,
            x,
            y,
            out,
            seed,
            threshold_k,
            power_spectrum,
        } => cmd_sweep(
            config.as_deref(),
            &x,
            &y,
            &out,
            seed,
            threshold_k,
            power_spectrum,
        ),
        Command::Spectrum {
            input,
            config,
            out,
            bin,
            band,
            power_spectrum,
        } => cmd_spectrum(
            &input,
            config.as_deref(),
            &out,
            bin,
            band.as_deref(),
            power_spectrum,
        ),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Error with the exit code it maps to.
struct CliError {
    message: anyhow::Error,
    code: u8,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.message)
    }
}

trait ExitWith<T> {
    fn or_exit(self, code: u8) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            message: e.into(),
            code,
        })
    }
}

fn load_or_default(config: Option<&Path>) -> Result<RunConfig, CliError> {
    match config {
        Some(path) => load_config(path).or_exit(2),
        None => Ok(RunConfig::default()),
    }
}

fn parse_band(spec: &str) -> Result<FrequencyBand, CliError> {
    let parse = || -> anyhow::Result<FrequencyBand> {
        let (low, high) = spec
            .split_once(':')
            .ok_or_else(|| anyhow::anyhow!("band must be LOW:HIGH in Hz, got {spec:?}"))?;
        Ok(FrequencyBand::new(low.trim().parse()?, high.trim().parse()?)?)
    };
    parse().or_exit(2)
}

fn apply_pipeline_overrides(
    pipeline: &mut PipelineConfig,
    band: Option<&str>,
    threshold_k: Option<f64>,
    power_spectrum: bool,
) -> Result<(), CliError> {
    if let Some(spec) = band {
        pipeline.respiration_band = parse_band(spec)?;
    }
    if let Some(k) = threshold_k {
        pipeline.threshold_k = k;
    }
    if power_spectrum {
        pipeline.power_spectrum = true;
    }
    pipeline.validate().or_exit(2)?;
    Ok(())
}

/// Atomic text write: temp file in the destination directory, then rename.
fn write_text_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn cmd_simulate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<u8, CliError> {
    let mut cfg = load_or_default(config)?;
    if let Some(seed) = seed {
        cfg.scene.rng_seed = seed;
    }
    cfg.validate().or_exit(2)?;
    let Dims {
        m,
        n,
        dt_fast,
        dt_slow,
    } = cfg.dims;
    let g = simulate(&cfg.scene, &cfg.pulse, m, n, dt_fast, dt_slow).or_exit(3)?;
    write_radargram(out, &g).or_exit(3)?;
    println!(
        "wrote {}: {} x {} samples, x={} m, y={} m, seed={}",
        out.display(),
        m,
        n,
        cfg.scene.body_wall_m,
        cfg.scene.wall_radar_m,
        cfg.scene.rng_seed
    );
    Ok(0)
}

fn read_input(path: &Path) -> Result<Radargram, CliError> {
    read_radargram(path).or_exit(2)
}

fn cmd_detect(
    input: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    band: Option<&str>,
    threshold_k: Option<f64>,
    power_spectrum: bool,
) -> Result<u8, CliError> {
    let cfg = load_or_default(config)?;
    let mut pipeline = cfg.pipeline;
    apply_pipeline_overrides(&mut pipeline, band, threshold_k, power_spectrum)?;
    let g = read_input(input)?;
    let report = detect(&g, &pipeline).or_exit(2)?;

    println!(
        "threshold={} profile: mean={} std={} median={}",
        report.threshold_used,
        report.profile_stats.mean,
        report.profile_stats.std,
        report.profile_stats.median
    );
    println!("{} detection(s)", report.detections.len());
    for d in &report.detections {
        println!(
            "range_m={} freq_hz={} peak_factor={}",
            d.range_m, d.respiration_freq_hz, d.peak_factor
        );
    }

    if let Some(out) = out {
        let mut csv = String::new();
        let _ = writeln!(csv, "# threshold={}", report.threshold_used);
        let _ = writeln!(
            csv,
            "# profile_mean={} profile_std={} profile_median={}",
            report.profile_stats.mean, report.profile_stats.std, report.profile_stats.median
        );
        csv.push_str("range_bin,range_m,freq_hz,peak_factor\n");
        for d in &report.detections {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                d.range_bin, d.range_m, d.respiration_freq_hz, d.peak_factor
            );
        }
        write_text_atomic(out, &csv).or_exit(2)?;
    }
    Ok(if report.detections.is_empty() { 1 } else { 0 })
}

fn parse_grid_axis(spec: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let parse = || -> anyhow::Result<Vec<f64>> {
        let values: Vec<f64> = spec
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad --{name} list {spec:?}: {e}"))?;
        if values.is_empty() {
            anyhow::bail!("--{name} list is empty");
        }
        Ok(values)
    };
    parse().or_exit(2)
}

fn cmd_sweep(
    config: Option<&Path>,
    x_spec: &str,
    y_spec: &str,
    out: &Path,
    seed: Option<u64>,
    threshold_k: Option<f64>,
    power_spectrum: bool,
) -> Result<u8, CliError> {
    let cfg = load_or_default(config)?;
    let mut pipeline = cfg.pipeline;
    apply_pipeline_overrides(&mut pipeline, None, threshold_k, power_spectrum)?;
    let xs = parse_grid_axis(x_spec, "x")?;
    let ys = parse_grid_axis(y_spec, "y")?;
    let grid: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();

    let base = seed.unwrap_or(cfg.scene.rng_seed);
    let result = distance_sweep(
        &grid,
        &cfg.scene,
        &cfg.pulse,
        &cfg.dims,
        &pipeline,
        SeedPolicy::new(base),
    )
    .or_exit(3)?;

    let verdict = if result.ordering_holds { "PASS" } else { "FAIL" };
    let mut csv = String::from("x_m,y_m,peak_factor,detected_freq_hz\n");
    for c in &result.cells {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            c.body_wall_m, c.wall_radar_m, c.peak_factor, c.detected_freq_hz
        );
    }
    let _ = writeln!(csv, "# ordering {verdict}");
    write_text_atomic(out, &csv).or_exit(2)?;

    for c in &result.cells {
        println!(
            "x={} y={} peak_factor={} freq_hz={}",
            c.body_wall_m, c.wall_radar_m, c.peak_factor, c.detected_freq_hz
        );
    }
    println!("ordering {verdict}");
    Ok(if result.ordering_holds { 0 } else { 1 })
}

fn cmd_spectrum(
    input: &Path,
    config: Option<&Path>,
    out: &Path,
    bin: Option<usize>,
    band: Option<&str>,
    power_spectrum: bool,
) -> Result<u8, CliError> {
    let cfg = load_or_default(config)?;
    let mut pipeline = cfg.pipeline;
    apply_pipeline_overrides(&mut pipeline, band, None, power_spectrum)?;
    let g = read_input(input)?;
    let pre = run_pipeline(&g, &pipeline).or_exit(2)?;
    let prof = profile(&pre, &pipeline).or_exit(2)?;

    let selected = match bin {
        Some(b) => {
            if b >= prof.len() {
                return Err(CliError {
                    message: anyhow::anyhow!(
                        "--bin {b} out of range: radargram has {} bins",
                        prof.len()
                    ),
                    code: 2,
                });
            }
            b
        }
        None => prof.argmax_bin(),
    };
    let record = &prof.bins[selected];
    let spec = slow_time_spectrum(&pre);

    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "# bin={} range_m={}",
        selected,
        g.range_of_bin(selected).or_exit(2)?
    );
    let _ = writeln!(
        csv,
        "# peak_factor={} y_max={} y_rms={} peak_freq_hz={}{}",
        record.peak_factor,
        record.y_max,
        record.y_rms,
        record.peak_freq_hz,
        if record.degenerate { " degenerate" } else { "" }
    );
    csv.push_str("freq_hz,magnitude\n");
    for (j, &f) in spec.freq_axis.iter().enumerate() {
        let mut v = spec.magnitudes[[selected, j]];
        if pipeline.power_spectrum {
            v *= v;
        }
        let _ = writeln!(csv, "{f},{v}");
    }
    write_text_atomic(out, &csv).or_exit(2)?;
    println!(
        "wrote {}: bin {} ({} rows), peak_factor={}",
        out.display(),
        selected,
        spec.freq_axis.len(),
        record.peak_factor
    );
    Ok(0)
}
