use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperhall::{Error, ErrorClass};

mod commands;
mod settings;

#[derive(Parser, Debug)]
#[command(name = "hyperhall", version, about = "Magnetic Harper operators on surface-group Cayley graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the property suites and print the effective configuration
    Validate(Flags),
    /// Spectra over a θ grid
    Butterfly(Flags),
    /// Spectrum, density of states, counting function and gaps
    Spectrum(Flags),
    /// Conductance functionals over an energy grid
    Conductance(Flags),
    /// Disorder ensemble at a single Fermi energy
    Average(Flags),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// TOML configuration file; flags override its values
    #[arg(long, short)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub genus: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Comma list, or start:stop:count
    #[arg(long = "theta-grid", allow_hyphen_values = true)]
    pub theta_grid: Option<String>,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long = "index-margin")]
    pub index_margin: Option<usize>,
    /// none | iid | ap
    #[arg(long)]
    pub disorder: Option<String>,
    /// iid disorder strength
    #[arg(long = "W")]
    pub w: Option<f64>,
    /// Almost periodic amplitude
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Comma list of 2g frequencies
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Comma list, or a..b (half open)
    #[arg(long)]
    pub seeds: Option<String>,
    /// Comma list, or start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    pub energies: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 1,
        ErrorClass::Numeric => 2,
        ErrorClass::Invariant => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Validate(f) => settings::load(f).and_then(|c| commands::validate(&c)),
        Command::Butterfly(f) => settings::load(f).and_then(|c| commands::butterfly(&c)),
        Command::Spectrum(f) => settings::load(f).and_then(|c| commands::spectrum(&c)),
        Command::Conductance(f) => settings::load(f).and_then(|c| commands::conductance(&c)),
        Command::Average(f) => settings::load(f).and_then(|c| commands::average(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
