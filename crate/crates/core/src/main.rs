use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dnf_core::cli::{self, parse_config, RunConfig, EXIT_CONFIG};
use dnf_core::Error;

#[derive(Parser)]
#[command(name = "dnf", version, about = "Dendritic neural field simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run with binary snapshots
    Simulate(RunArgs),
    /// Squared distance e(nu) between diffusive and diffusion-less runs, with a linear fit
    Sweep(RunArgs),
    /// x = 0 slices at t = 1 and t = T for nu = 0 and the configured profile nu
    Profiles(RunArgs),
    /// Oracle and property self-checks
    Validate {
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the bound / Lipschitz constant K_F of the nonlocal operator
    Kf {
        config: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory (overrides [output] dir)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Use the 2^12 x 2^10 grid
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf), Error> {
    let mut cfg = parse_config(&args.config)?;
    if args.full_scale {
        cfg.scale = cli::Scale::Full;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Simulate(args) => {
            let (cfg, out) = load(&args)?;
            let (tr, files) = cli::simulate(&cfg, &out)?;
            println!(
                "{} steps, sup_t |v|_L2 = {:.6e}, wrote {} files to {}",
                cfg.time.n_steps(),
                tr.sup_norm(),
                files.len(),
                out.display()
            );
        }
        Command::Sweep(args) => {
            let (cfg, out) = load(&args)?;
            let (res, _) = cli::sweep(&cfg, &out)?;
            println!("nu,e");
            for (nu, e) in &res.pairs {
                println!("{nu},{e:.10e}");
            }
            println!(
                "fit over nu > 0: slope = {:.6e}, intercept = {:.6e}, R^2 = {:.6}{}",
                res.fit.slope,
                res.fit.intercept,
                res.fit.r2,
                if res.fit.degenerate { " (degenerate)" } else { "" }
            );
        }
        Command::Profiles(args) => {
            let (cfg, out) = load(&args)?;
            let (runs, files) = cli::profiles(&cfg, &out)?;
            for r in &runs {
                for s in &r.slices {
                    let (xi, v) = s.peak();
                    println!(
                        "nu = {}, t = {}: peak {v:.6} at xi = {xi:.4}, local maxima {:?}",
                        r.nu,
                        s.time,
                        s.local_maxima()
                    );
                }
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Validate { threads } => {
            let outcomes = cli::validate(threads);
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(EXIT_CONFIG);
            }
        }
        Command::Kf { config } => {
            let cfg = parse_config(&config)?;
            println!("{:.12e}", cli::kf(&cfg)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match execute(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
