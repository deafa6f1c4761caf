//! Command-line front end for the `ioncavity` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use ioncavity::chain::kink_warning;
use ioncavity::constants::{angular_to_khz, khz_to_angular};
use ioncavity::coupling::{coupling_report, debye_waller_factors};
use ioncavity::io::{
    dataset_csv, modes_csv, positions_csv, read_fit_input, scan_csv, to_toml, visibility_csv, CurveFitRecord, FitInput,
    GTildeRecord, OptimizeRecord, ScanFitRecord, ScanMetadata,
};
use ioncavity::reproduce::{format_table, g_tilde_for_spacings, reproduce};
use ioncavity::scan::RNG_ALGORITHM;
use ioncavity::{
    average_coupling, fit_scan, fit_visibility_curve, optimise_frequency, simulate_scan, simulate_visibility_dataset,
    solve_chain, visibility, visibility_curve, ConfigFile, CouplingModel, Objective, RunSettings, ScanSettings,
    ScanTrace, TrapConfig,
};

use manifest::RunManifest;

const DEFAULT_RANGE_KHZ: (f64, f64) = (400.0, 620.0);

#[derive(Parser, Debug)]
#[command(name = "ioncavity", version, about = "Ion strings in a standing-wave cavity")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML trap/cavity configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Number of ions (overrides the config).
    #[arg(long, global = true)]
    ions: Option<usize>,
    /// Axial COM frequency, kHz.
    #[arg(long, global = true)]
    freq_khz: Option<f64>,
    /// Frequency range `lo:hi`, kHz.
    #[arg(long, global = true, value_parser = parse_range)]
    freq_range_khz: Option<(f64, f64)>,
    /// Temperature in units of the Doppler limit.
    #[arg(long, global = true)]
    temp_td: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (directory for `reproduce`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "visibility")]
    objective: Objective,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium positions as CSV.
    Positions {
        /// Radial secular frequency, kHz; warns if the string would buckle.
        #[arg(long)]
        radial_freq_khz: Option<f64>,
    },
    /// Normal modes as CSV.
    Modes,
    /// Fringe visibility at one frequency or over a range.
    Visibility {
        /// Grid points across the range.
        #[arg(long, default_value_t = 221)]
        points: usize,
    },
    /// Average coupling g̃ for the solved string or for given spacings.
    GTilde {
        /// Comma-separated ion spacings in units of λ/2.
        #[arg(long, value_delimiter = ',')]
        spacings: Option<Vec<f64>>,
    },
    /// Best trap frequency within the range.
    Optimize,
    /// Synthetic cavity-position scan, or a noisy visibility curve with `--dataset`.
    Simulate {
        /// Simulate a visibility-versus-frequency dataset instead of a scan.
        #[arg(long)]
        dataset: bool,
        /// Scan span, nm (default 2λ).
        #[arg(long)]
        span_nm: Option<f64>,
        /// Scan points, or dataset grid points.
        #[arg(long)]
        points: Option<usize>,
        /// Mean count rate, s⁻¹.
        #[arg(long, default_value_t = 2000.0)]
        rate: f64,
        /// Bin time, ms.
        #[arg(long, default_value_t = 100.0)]
        bin_ms: f64,
        /// Gaussian noise on each dataset visibility.
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        /// Offset added to the true COM frequency, kHz.
        #[arg(long, default_value_t = 0.0)]
        nu0_khz: f64,
    },
    /// Fit a scan (`displacement_nm,counts`) or a curve (`freq_khz,visibility,sigma`).
    Fit { input: PathBuf },
    /// Run the acceptance checks and print a pass/fail table.
    Reproduce,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(format!("need 0 < lo < hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn usage_error(kind: ErrorKind, msg: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, msg).exit()
}

/// Settings after merging the config file with command-line overrides.
struct Resolved {
    config: TrapConfig,
    temperature: f64,
    range: (f64, f64),
}

impl Resolved {
    fn load(common: &Common) -> Result<Resolved> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ConfigFile::default(),
        };
        let RunSettings {
            mut config,
            temperature,
            freq_range,
        } = file.into_settings()?;
        if let Some(n) = common.ions {
            config = config.with_num_ions(n)?;
        }
        let temperature = match common.temp_td {
            Some(x) => x * config.doppler_temperature(),
            None => temperature.unwrap_or(config.doppler_temperature()),
        };
        let range = match common.freq_range_khz {
            Some((lo, hi)) => (khz_to_angular(lo), khz_to_angular(hi)),
            None => freq_range.unwrap_or((khz_to_angular(DEFAULT_RANGE_KHZ.0), khz_to_angular(DEFAULT_RANGE_KHZ.1))),
        };
        Ok(Resolved {
            config,
            temperature,
            range,
        })
    }

    fn temp_td(&self) -> f64 {
        self.temperature / self.config.doppler_temperature()
    }
}

fn require_freq(common: &Common) -> f64 {
    match common.freq_khz {
        Some(f) => khz_to_angular(f),
        None => usage_error(ErrorKind::MissingRequiredArgument, "this command needs --freq-khz"),
    }
}

fn grid(range: (f64, f64), points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                range.1
            } else {
                range.0 + step * i as f64
            }
        })
        .collect()
}

/// Writes `text` to `--out` (plus manifest) or to stdout.
fn emit(common: &Common, text: &str, mut manifest: RunManifest) -> Result<()> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            manifest.output_path = path.clone();
            manifest.write()?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn manifest_for(command: &str, common: &Common, r: &Resolved) -> RunManifest {
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("-"));
    let mut m = RunManifest::new(command, common.config.as_deref(), &out, common.seed);
    m.param("num_ions", r.config.num_ions())
        .param("mass_kg", format!("{:e}", r.config.ion_mass()))
        .param("wavelength_m", format!("{:e}", r.config.wavelength()))
        .param("temperature_k", format!("{:e}", r.temperature))
        .param("temperature_td", r.temp_td());
    if let Some(f) = common.freq_khz {
        m.param("freq_khz", f);
    }
    m
}

fn run(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    if matches!(cli.command, Command::Reproduce) {
        return run_reproduce(common);
    }
    let r = Resolved::load(common)?;
    let c = &r.config;

    match cli.command {
        Command::Positions { radial_freq_khz } => {
            let w = require_freq(common);
            let s = solve_chain(c, w)?;
            if let Some(radial) = radial_freq_khz {
                if kink_warning(&s, khz_to_angular(radial)) {
                    eprintln!("warning: radial frequency {radial} kHz is too weak; the string would not stay linear");
                }
            }
            emit(common, &positions_csv(&s, c), manifest_for("positions", common, &r))?;
        }
        Command::Modes => {
            let s = solve_chain(c, require_freq(common))?;
            emit(common, &modes_csv(&s), manifest_for("modes", common, &r))?;
        }
        Command::Visibility { points } => {
            if points == 0 {
                usage_error(ErrorKind::InvalidValue, "--points must be at least 1");
            }
            let freqs = match common.freq_khz {
                Some(f) => vec![khz_to_angular(f)],
                None => grid(r.range, points),
            };
            let curve = visibility_curve(c, r.temperature, &freqs)?;
            let mut m = manifest_for("visibility", common, &r);
            m.param("points", freqs.len());
            emit(common, &visibility_csv(&curve), m)?;
        }
        Command::GTilde { spacings } => {
            let record = match spacings {
                Some(d) => {
                    if d.is_empty() || d.iter().any(|x| !(*x > 0.0)) {
                        usage_error(ErrorKind::InvalidValue, "--spacings must be positive");
                    }
                    if d.len() + 1 != c.num_ions() && common.ions.is_some() {
                        bail!(
                            "{} spacings describe {} ions, not {}",
                            d.len(),
                            d.len() + 1,
                            c.num_ions()
                        );
                    }
                    let report = g_tilde_for_spacings(&d, r.temp_td())?;
                    let mut z = vec![0.0];
                    for s in &d {
                        z.push(z.last().unwrap() + s);
                    }
                    let centre = 0.5 * (z[0] + z[z.len() - 1]);
                    GTildeRecord {
                        freq_khz: None,
                        g_tilde: report.g_tilde,
                        phase_at_optimum: report.phase_at_optimum,
                        per_ion_couplings: report.per_ion_couplings,
                        positions_half_lambda: z.iter().map(|x| x - centre).collect(),
                        emission_phase: report.emission_phase,
                        g_tilde_at_emission_phase: report.g_tilde_at_emission_phase,
                    }
                }
                None => {
                    let w = require_freq(common);
                    let model = CouplingModel::new(c, w, r.temperature)?;
                    let report = average_coupling(&model);
                    GTildeRecord {
                        freq_khz: Some(angular_to_khz(w)),
                        g_tilde: report.g_tilde,
                        phase_at_optimum: report.phase_at_optimum,
                        per_ion_couplings: report.per_ion_couplings,
                        positions_half_lambda: half_lambda(&model.solution().positions(), c),
                        emission_phase: report.emission_phase,
                        g_tilde_at_emission_phase: report.g_tilde_at_emission_phase,
                    }
                }
            };
            emit(common, &to_toml(&record), manifest_for("g-tilde", common, &r))?;
        }
        Command::Optimize => {
            let best = optimise_frequency(c, r.temperature, r.range, common.objective)?;
            let thermal = ioncavity::thermal_spreads(&best.solution, r.temperature)?;
            let dw = debye_waller_factors(c.wavenumber(), &thermal.ion_spreads);
            let report = coupling_report(&best.solution.positions(), &dw, c.wavenumber());
            let mut m = manifest_for("optimize", common, &r);
            m.param("objective", common.objective).param(
                "freq_range_khz",
                format!("{}:{}", angular_to_khz(r.range.0), angular_to_khz(r.range.1)),
            );
            emit(common, &to_toml(&OptimizeRecord::new(&best, c, &report)), m)?;
        }
        Command::Simulate {
            dataset,
            span_nm,
            points,
            rate,
            bin_ms,
            sigma,
            nu0_khz,
        } => {
            let seed = common.seed.unwrap_or(0);
            let mut m = manifest_for("simulate", common, &r);
            m.param("seed", seed).param("rng", RNG_ALGORITHM);
            if dataset {
                let n = points.unwrap_or(89);
                if n == 0 {
                    usage_error(ErrorKind::InvalidValue, "--points must be at least 1");
                }
                let data = simulate_visibility_dataset(
                    c,
                    r.temperature,
                    khz_to_angular(nu0_khz),
                    &grid(r.range, n),
                    sigma,
                    seed,
                )?;
                m.param("kind", "dataset")
                    .param("points", n)
                    .param("sigma", sigma)
                    .param("nu0_khz", nu0_khz);
                emit(common, &dataset_csv(&data), m)?;
            } else {
                let model = CouplingModel::new(c, require_freq(common), r.temperature)?;
                let mut settings = ScanSettings::for_config(c, rate, seed);
                settings.bin_time = bin_ms * 1e-3;
                if let Some(span) = span_nm {
                    settings.span = span * 1e-9;
                }
                if let Some(n) = points {
                    settings.num_points = n;
                }
                let trace = simulate_scan(&model, &settings)?;
                let meta = ScanMetadata {
                    num_ions: c.num_ions(),
                    freq_khz: angular_to_khz(model.solution().com_frequency()),
                    temperature_uk: r.temperature * 1e6,
                    span_nm: settings.span * 1e9,
                    num_points: settings.num_points,
                    mean_rate: rate,
                    bin_time_s: settings.bin_time,
                    seed,
                    rng: RNG_ALGORITHM.to_string(),
                    model_visibility: visibility(&model),
                };
                m.param("kind", "scan")
                    .param("span_nm", meta.span_nm)
                    .param("points", meta.num_points)
                    .param("rate", rate)
                    .param("bin_s", meta.bin_time_s)
                    .param("model_visibility", meta.model_visibility);
                if let Some(out) = &common.out {
                    let mut name = out.as_os_str().to_owned();
                    name.push(".meta.toml");
                    std::fs::write(PathBuf::from(name), to_toml(&meta))?;
                }
                emit(common, &scan_csv(&trace), m)?;
            }
        }
        Command::Fit { input } => {
            let file = std::fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let text = match read_fit_input(file)? {
                FitInput::Scan { displacements, counts } => {
                    let trace = ScanTrace::new(displacements, counts, 1.0, 1.0, common.seed.unwrap_or(0))?;
                    let fit = fit_scan(&trace, c.wavelength())?;
                    to_toml(&ScanFitRecord::from(&fit))
                }
                FitInput::Curve(data) => {
                    let fit = fit_visibility_curve(&data, c, r.temperature)?;
                    to_toml(&CurveFitRecord::new(&fit, c))
                }
            };
            let mut m = manifest_for("fit", common, &r);
            m.param("input", input.display());
            emit(common, &text, m)?;
        }
        Command::Reproduce => unreachable!(),
    }
    Ok(true)
}

fn half_lambda(z: &[f64], c: &TrapConfig) -> Vec<f64> {
    z.iter().map(|x| x / c.half_wavelength()).collect()
}

fn run_reproduce(common: &Common) -> Result<bool> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("reproduce_out"));
    let outcomes = reproduce(&dir)?;
    print!("{}", format_table(&outcomes));
    let passed = outcomes.iter().filter(|o| o.passed && o.within_runtime()).count();
    println!("{passed}/{} criteria passed; data in {}", outcomes.len(), dir.display());
    let mut m = RunManifest::new("reproduce", common.config.as_deref(), Path::new(&dir), None);
    m.param("criteria", outcomes.len()).param("passed", passed);
    m.write()?;
    Ok(passed == outcomes.len())
}

fn configure_threads() {
    let Ok(value) = std::env::var("IONCAVITY_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => usage_error(
            ErrorKind::InvalidValue,
            format!("IONCAVITY_THREADS must be a positive integer, got `{value}`"),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
