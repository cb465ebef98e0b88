use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Quasiclassical dynamics of a quantum test particle: moment charts,
/// Gaussian information measures, the quantum-corrected Finsler metric and
/// trajectories on curved backgrounds.
///
/// Exit status: 0 on success, 1 when validation finds a failing check, 2 on
/// configuration or input errors, 3 on numerical-domain errors. Errors are
/// reported as one JSON object on stderr.
#[derive(Debug, Parser)]
#[command(name = "qfinsler", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map a canonical chart to second-order moments.
    ///
    /// Input: JSON or TOML with s_x, p_sx, s_y, p_sy, alpha, p_alpha, beta,
    /// p_beta, C1, C2, hbar and optional mean_x, mean_p. Prints the moment
    /// state as JSON.
    MapForward {
        /// Chart file, or `-` for JSON on stdin.
        input: PathBuf,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Invert a moment state to its canonical chart.
    ///
    /// Input: the JSON written by map-forward (mean_x, mean_p, delta, hbar).
    /// Prints the chart, whether α is defined, and the relative residual of
    /// mapping the chart forward again.
    MapInverse {
        /// Moment-state file, or `-` for JSON on stdin.
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Symplectic spectrum, Casimirs, entropy, purity and the physicality
    /// report of a moment state.
    Info {
        /// Moment-state file, or `-` for JSON on stdin.
        input: PathBuf,
    },
    /// Hamiltonian split and Finsler fundamental tensor at the on-shell
    /// initial state of a scenario.
    Tensors {
        /// Scenario file (TOML, or JSON by extension).
        scenario: PathBuf,
        /// Index of the state in the scenario's [[state]] list.
        #[arg(long, default_value_t = 0)]
        state: usize,
    },
    /// Integrate a scenario and write the trajectory CSV and JSON summary.
    Simulate {
        scenario: PathBuf,
        /// Output directory; overrides the scenario's [output] dir.
        #[arg(long, env = "QFINSLER_OUTPUT_DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Fluctuation bound from Lorentz-violation limits and the thermal
    /// momentum spread of a particle.
    Dispersion {
        /// Particle mass (MeV/c² in MeV units).
        #[arg(long, required_unless_present = "species", conflicts_with = "species")]
        mass: Option<f64>,
        /// Use a tabulated atomic mass instead of --mass.
        #[arg(long, value_enum)]
        species: Option<Species>,
        /// Temperature (kelvin in MeV units, k_B T in natural units).
        #[arg(long)]
        temperature: Option<f64>,
        /// Upper limit on |ξ₂|, the quadratic Lorentz-violation coefficient;
        /// the default is the cold-atom recoil limit.
        #[arg(long, default_value_t = 1e9)]
        xi2: f64,
        /// `MeV` or `natural`.
        #[arg(long, default_value = "MeV")]
        units: String,
        /// Planck mass; required in natural units, tabulated in MeV units.
        #[arg(long)]
        planck_mass: Option<f64>,
    },
    /// Run the invariant suite on scenarios and print a pass/fail table.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Print the reports as JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Integrate a scenario and write τ against the monitors as CSV.
    PlotData {
        scenario: PathBuf,
        #[arg(long, env = "QFINSLER_OUTPUT_DIR")]
        out_dir: Option<PathBuf>,
        /// Print the CSV to stdout instead of writing a file.
        #[arg(long)]
        stdout: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Species {
    Cesium,
    Hydrogen,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MapForward { input, out } => commands::map_forward(&input, out.as_deref()),
        Command::MapInverse { input, out } => commands::map_inverse(&input, out.as_deref()),
        Command::Info { input } => commands::info(&input),
        Command::Tensors { scenario, state } => commands::tensors(&scenario, state),
        Command::Simulate { scenario, out_dir } => commands::simulate(&scenario, out_dir.as_deref()),
        Command::Dispersion { mass, species, temperature, xi2, units, planck_mass } => {
            let mass = mass.unwrap_or_else(|| match species {
                Some(Species::Cesium) => qfinsler_core::dispersion::constants::cesium_mass_mev(),
                _ => qfinsler_core::dispersion::constants::hydrogen_mass_mev(),
            });
            commands::dispersion(mass, temperature, xi2, &units, planck_mass)
        }
        Command::Validate { scenarios, json } => commands::validate(&scenarios, json),
        Command::PlotData { scenario, out_dir, stdout } => commands::plot_data(&scenario, out_dir.as_deref(), stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
