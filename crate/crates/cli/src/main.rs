use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::TransducerKind;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "phonoscope", version, about = "Qubit acoustics toolkit for bulk acoustic resonators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Device configuration (JSON). Defaults to the reference device.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory holding Ex.csv, Ey.csv and Ez.csv; overrides the config field.
    #[arg(long, global = true)]
    pub field_map_dir: Option<PathBuf>,
}

/// `lo,hi` pair.
#[derive(Debug, Clone, Copy)]
pub struct Range(pub f64, pub f64);

fn parse_range(s: &str) -> Result<Range, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(format!("range must satisfy LO < HI, got {lo},{hi}"));
    }
    Ok(Range(lo, hi))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tensors and axis velocities of a material preset (JSON).
    Materials {
        #[arg(long, default_value = "sapphire")]
        preset: String,
    },
    /// Phase velocities against polar angle at fixed azimuth.
    VelocitySurface {
        #[arg(long, default_value = "sapphire")]
        material: String,
        #[arg(long, default_value_t = 0.0)]
        phi_deg: f64,
        #[arg(long, default_value_t = 181)]
        points: usize,
        /// Use the piezoelectrically stiffened tensor when the material has one.
        #[arg(long)]
        stiffened: bool,
    },
    /// Free-space emission rates against qubit frequency.
    EmitRate {
        /// Substrate preset; overrides the config.
        #[arg(long)]
        material: Option<String>,
        #[arg(long, value_enum)]
        geometry: Option<TransducerKind>,
        #[arg(long, value_parser = parse_range, default_value = "4,8")]
        freq_ghz_range: Range,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long)]
        e33: Option<f64>,
    },
    /// Perturbative decay rate against qubit frequency, summed over overtones.
    DecaySpectrum {
        #[arg(long, value_parser = parse_range, default_value = "5.5,6.5")]
        freq_ghz_range: Range,
        #[arg(long, default_value_t = 100001)]
        points: usize,
        /// Single overtone at this frequency instead of the device ladder (needs --g-mhz and --omega-diff-khz).
        #[arg(long)]
        omega_n_ghz: Option<f64>,
        #[arg(long)]
        g_mhz: Option<f64>,
        #[arg(long)]
        omega_diff_khz: Option<f64>,
        #[arg(long)]
        e33: Option<f64>,
    },
    /// Excited-state population of the qubit against time.
    Dynamics {
        #[arg(long)]
        omega0_ghz: Option<f64>,
        #[arg(long)]
        omega_n_ghz: Option<f64>,
        #[arg(long)]
        g_mhz: Option<f64>,
        #[arg(long)]
        omega_diff_khz: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        tmax_us: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long, value_enum, default_value = "fourier-inversion")]
        method: Method,
        #[arg(long)]
        eta_khz: Option<f64>,
        #[arg(long)]
        step_khz: Option<f64>,
        #[arg(long)]
        e33: Option<f64>,
    },
    /// Bound-state frequencies under a dome or cylinder transducer.
    BoundStates {
        #[arg(long, value_enum)]
        geometry: Option<TransducerKind>,
        #[arg(long, value_parser = parse_range, default_value = "4.9,5.1")]
        freq_ghz_range: Range,
        #[arg(long, default_value_t = 0.0)]
        offset_mhz: f64,
        #[arg(long, default_value_t = 60)]
        m_max: u32,
        #[arg(long, default_value_t = 40)]
        l_max: u32,
        /// Azimuthal orders for the cylinder, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        m_list: Vec<u32>,
        /// Keep only bound, qubit-coupled modes.
        #[arg(long)]
        resolvable_only: bool,
    },
    /// Fit a dispersive spectrum (JSON report).
    SpectroFit {
        /// CSV with columns freq_GHz, intensity.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        chi_mhz: f64,
        #[arg(long, default_value_t = 40.0)]
        init_gamma2_khz: f64,
        #[arg(long, default_value_t = 20.0)]
        init_kappa_khz: f64,
        #[arg(long)]
        init_nbar: Option<f64>,
        #[arg(long)]
        init_omega0_ghz: Option<f64>,
    },
    /// Shear-mode splitting against crystal tilt.
    Splitting {
        #[arg(long, default_value = "sapphire")]
        material: String,
        #[arg(long, default_value_t = 5.0)]
        freq_ghz: f64,
        #[arg(long, value_parser = parse_range, default_value = "0,0.3")]
        tilt_deg_range: Range,
        #[arg(long, default_value_t = 31)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        phi_deg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    ClosedForm,
    FourierInversion,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let text = match cli.command {
        Command::Materials { preset } => commands::materials(&preset)?,
        Command::VelocitySurface { material, phi_deg, points, stiffened } => {
            commands::velocity_surface(&material, phi_deg, points, stiffened)?
        }
        Command::EmitRate { material, geometry, freq_ghz_range, points, e33 } => {
            commands::emit_rate(c, material, geometry, freq_ghz_range, points, e33)?
        }
        Command::DecaySpectrum { freq_ghz_range, points, omega_n_ghz, g_mhz, omega_diff_khz, e33 } => {
            commands::decay_spectrum(c, freq_ghz_range, points, omega_n_ghz, g_mhz, omega_diff_khz, e33)?
        }
        Command::Dynamics {
            omega0_ghz,
            omega_n_ghz,
            g_mhz,
            omega_diff_khz,
            tmax_us,
            samples,
            method,
            eta_khz,
            step_khz,
            e33,
        } => commands::dynamics(
            c,
            commands::DynamicsArgs {
                omega0_ghz,
                omega_n_ghz,
                g_mhz,
                omega_diff_khz,
                tmax_us,
                samples,
                method,
                eta_khz,
                step_khz,
                e33,
            },
        )?,
        Command::BoundStates { geometry, freq_ghz_range, offset_mhz, m_max, l_max, m_list, resolvable_only } => {
            commands::bound_states(c, geometry, freq_ghz_range, offset_mhz, m_max, l_max, &m_list, resolvable_only)?
        }
        Command::SpectroFit { input, chi_mhz, init_gamma2_khz, init_kappa_khz, init_nbar, init_omega0_ghz } => {
            commands::spectro_fit(&input, chi_mhz, init_gamma2_khz, init_kappa_khz, init_nbar, init_omega0_ghz)?
        }
        Command::Splitting { material, freq_ghz, tilt_deg_range, points, phi_deg } => {
            commands::splitting(&material, freq_ghz, tilt_deg_range, points, phi_deg)?
        }
    };
    output::emit(c.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.common.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
