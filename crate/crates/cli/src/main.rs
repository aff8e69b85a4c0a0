use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hahn_core::commands::{
    cmd_adapted, cmd_build, cmd_classify, cmd_divide, cmd_selftest, cmd_verify,
};
use hahn_core::config::{ConfigLayer, InstanceConfig};
use hahn_core::Error;

/// Certified surjection from the perfectoid Tate algebra onto a Type III residue field.
#[derive(Parser, Debug)]
#[command(name = "hahn", version)]
struct Cli {
    /// Residue characteristic (odd prime).
    #[arg(long, global = true)]
    p: Option<u32>,
    /// Radius value of the Type III disk, a rational outside Z[1/p].
    #[arg(long = "gamma-x", global = true)]
    gamma_x: Option<String>,
    /// Additive adaptedness constant, in (0, 1).
    #[arg(long = "v-s", global = true)]
    v_s: Option<String>,
    /// Working precision; defaults to 2 (stages + 1).
    #[arg(long, global = true)]
    prec: Option<String>,
    /// Number of plan stages.
    #[arg(long, global = true)]
    stages: Option<usize>,
    /// Seed for randomized runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with defaults for the flags above.
    #[arg(long, global = true, env = "HAHN_CONFIG")]
    config: Option<PathBuf>,
    /// Output file (a directory for `build`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and verify the plan; writes plan.json and alpha.txt.
    Build,
    /// Certificate of a (q, s)-adapted element for exponent q.
    Adapted {
        #[arg(allow_hyphen_values = true)]
        q: String,
    },
    /// Divide a target series file, printing the certified trace.
    Divide {
        beta: PathBuf,
        /// Number of division steps; defaults to the stage count.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Classify the disk around the origin with the given radius values.
    Classify {
        #[arg(required = true, allow_hyphen_values = true)]
        radii: Vec<String>,
    },
    /// Check a plan, certificate, or trace document.
    Verify { file: PathBuf },
    /// Short end-to-end check.
    Selftest,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config(cli: &Cli) -> Result<InstanceConfig, Error> {
    let file = match &cli.config {
        Some(path) => ConfigLayer::from_toml(&read(path)?)?,
        None => ConfigLayer::default(),
    };
    let flags = ConfigLayer {
        p: cli.p,
        gamma_x: cli.gamma_x.clone(),
        v_s: cli.v_s.clone(),
        work_prec: cli.prec.clone(),
        stages: cli.stages,
        seed: cli.seed,
    };
    InstanceConfig::resolve([file, flags])
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Verify { file } => {
            let report = cmd_verify(&read(file)?)?;
            for line in &report.lines {
                println!("{line}");
            }
            println!("PASS {} ({} checks)", report.kind, report.checks);
            return Ok(());
        }
        Command::Classify { radii } => {
            println!("{}", cmd_classify(&config(cli)?, radii)?);
            return Ok(());
        }
        _ => {}
    }
    let cfg = config(cli)?;
    match &cli.command {
        Command::Build => {
            let built = cmd_build(&cfg)?;
            match &cli.out {
                Some(dir) => {
                    fs::create_dir_all(dir)
                        .map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
                    write(&dir.join("plan.json"), &built.transcript)?;
                    write(&dir.join("alpha.txt"), &built.alpha)?;
                    eprintln!("wrote {}", dir.display());
                }
                None => print!("{}", built.transcript),
            }
        }
        Command::Adapted { q } => emit(&cli.out, &cmd_adapted(&cfg, q)?)?,
        Command::Divide { beta, steps } => {
            let out = cmd_divide(&cfg, &read(beta)?, steps.unwrap_or(cfg.stages))?;
            eprintln!(
                "normalized by t^{}; v(f(a_M) - beta) = {}",
                out.shift, out.final_residual_valuation
            );
            emit(&cli.out, &out.trace)?;
        }
        Command::Selftest => {
            for line in cmd_selftest(&cfg)? {
                println!("{line}");
            }
            println!("PASS selftest");
        }
        Command::Verify { .. } | Command::Classify { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if matches!(cli.command, Command::Verify { .. }) {
                println!("FAIL {e}");
            }
            eprintln!("hahn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
