use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mixkin::config::{load_config, ConfigError, Mode, Overrides};

#[derive(Debug, Parser)]
#[command(name = "mixkin", version, about = "Multi-species kinetic and two-phase flow simulator")]
struct Cli {
    /// Run mode; must agree with `mode` in the config file if both are given.
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Ordered reductions for bit-reproducible output.
    #[arg(long)]
    deterministic: bool,
    /// Comma-separated ε values (the whole list in limit-study, one value otherwise).
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let overrides =
        Overrides { mode: Some(cli.mode), output_dir: cli.output_dir, deterministic: cli.deterministic, eps: cli.eps };
    let cfg = match load_config(&cli.config, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e, 2),
    };
    match mixkin::execute(&cfg) {
        Ok(o) if o.failed_checks > 0 => {
            eprintln!("{} check(s) failed; report in {}", o.failed_checks, o.dir.display());
            ExitCode::from(1)
        }
        Ok(o) => {
            log::info!("wrote {}", o.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => fail(&e, 2),
        Err(e) => fail(&e, 3),
    }
}

fn fail(e: &dyn std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(code)
}
