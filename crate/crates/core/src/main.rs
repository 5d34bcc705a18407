use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lattice_pimc::experiment::{
    run_compare, run_exact_free, run_exact_striped, run_pimc, ExperimentConfig, LatticeSpec, Mode,
    Pattern,
};

/// Path-integral Monte Carlo on a 1D lattice with exact oracles.
#[derive(Parser)]
#[command(name = "lattice-pimc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact closed-form observables (CSV)
    Exact {
        #[command(subcommand)]
        which: ExactCommand,
    },
    /// Monte Carlo sampling runs (CSV + run log)
    Pimc(RunArgs),
    /// Analytic-vs-MC comparison table; exits nonzero on tolerance failures
    Compare(RunArgs),
}

#[derive(Subcommand)]
enum ExactCommand {
    /// Free particle: Z/L, energy, fluctuation, G1(n)
    Free(RunArgs),
    /// Striped potential: Bloch-band observables and ground-state constants
    Striped(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (flat key=value or JSON); flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated inverse temperatures
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// On-site potential of occupied sites
    #[arg(long)]
    epsilon: Option<f64>,
    /// Trotter number (walk length)
    #[arg(long)]
    p: Option<usize>,
    /// Hopping energy
    #[arg(long)]
    t: Option<f64>,
    /// Emitted walks per beta
    #[arg(long)]
    walks: Option<usize>,
    /// Master RNG seed; (config, seed) pins the output bytes
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of the chain replaced per Metropolis proposal
    #[arg(long)]
    segment_fraction: Option<f64>,
    /// Number of lattice sites
    #[arg(long)]
    lattice_size: Option<usize>,
    /// Metropolis steps between emitted walks
    #[arg(long)]
    thin: Option<usize>,
    /// Burn-in steps per chain (default 10 p)
    #[arg(long)]
    burn_in: Option<usize>,
    /// Independent chains per beta
    #[arg(long)]
    chains: Option<usize>,
    /// Largest correlation offset tabulated
    #[arg(long)]
    n_max: Option<usize>,
    /// Relative quadrature tolerance for analytic values
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self, mode: Mode, pattern: Pattern) -> Result<(ExperimentConfig, Option<PathBuf>), String> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                ExperimentConfig::from_config_text(&text).map_err(|e| e.to_string())?
            }
            None => ExperimentConfig {
                mode,
                betas: vec![],
                t: 1.0,
                p: 100,
                lattice: LatticeSpec {
                    length: 100,
                    epsilon: 0.0,
                    pattern,
                    occupancy: vec![],
                },
                walks: 100_000,
                burn_in: None,
                thin: 10,
                chains: 4,
                segment_fraction: 0.2,
                seed: 0xBE55E1,
                n_max: 10,
                quad_tol: 1e-10,
            },
        };
        cfg.mode = mode;
        if self.config.is_none() {
            cfg.lattice.pattern = pattern;
        }
        if !self.beta.is_empty() {
            cfg.betas = self.beta;
        }
        if let Some(eps) = self.epsilon {
            cfg.lattice.epsilon = eps;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(w) = self.walks {
            cfg.walks = w;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.segment_fraction {
            cfg.segment_fraction = f;
        }
        if let Some(l) = self.lattice_size {
            cfg.lattice.length = l;
        }
        if let Some(v) = self.thin {
            cfg.thin = v;
        }
        if self.burn_in.is_some() {
            cfg.burn_in = self.burn_in;
        }
        if let Some(c) = self.chains {
            cfg.chains = c;
        }
        if let Some(n) = self.n_max {
            cfg.n_max = n;
        }
        if let Some(q) = self.quad_tol {
            cfg.quad_tol = q;
        }
        if cfg.betas.is_empty() {
            return Err("no beta values given (use --beta or a config file)".into());
        }
        Ok((cfg, self.out))
    }
}

fn write_out(csv: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, csv)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run() -> Result<ExitCode, String> {
    match Cli::parse().command {
        Command::Exact { which } => {
            let (cfg, out) = match which {
                ExactCommand::Free(args) => args.into_config(Mode::ExactFree, Pattern::Free)?,
                ExactCommand::Striped(args) => {
                    args.into_config(Mode::ExactStriped, Pattern::Striped)?
                }
            };
            let csv = match cfg.mode {
                Mode::ExactFree => run_exact_free(&cfg),
                _ => run_exact_striped(&cfg),
            }
            .map_err(|e| e.to_string())?;
            write_out(&csv, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pimc(args) => {
            let (cfg, out) = args.into_config(Mode::Pimc, Pattern::Striped)?;
            let result = run_pimc(&cfg).map_err(|e| e.to_string())?;
            write_out(&result.csv, out.as_ref())?;
            match &out {
                Some(path) => {
                    let log_path = path.with_extension("log");
                    fs::write(&log_path, &result.log)
                        .map_err(|e| format!("cannot write {}: {e}", log_path.display()))?;
                }
                None => eprint!("{}", result.log),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(args) => {
            let (cfg, out) = args.into_config(Mode::Compare, Pattern::Striped)?;
            let result = run_compare(&cfg).map_err(|e| e.to_string())?;
            write_out(&result.csv, out.as_ref())?;
            if result.failures > 0 {
                eprintln!("{} comparison row(s) failed their tolerance", result.failures);
                Ok(ExitCode::FAILURE)
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
