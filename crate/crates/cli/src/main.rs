use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perisolve_cli::commands::{default_max_n, format_table};
use perisolve_cli::{find_suite, run_bench, run_fields, run_qg_profile, run_solve, CliResult, Overrides, ProfileArgs, RunConfig};

#[derive(Parser)]
#[command(name = "perisolve", version, about = "Preconditioned solves of periodic Helmholtz and Schrodinger problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// GMRES relative tolerance [default: 1e-6].
    #[arg(long)]
    tol: Option<f64>,
    /// GMRES restart length [default: 40].
    #[arg(long)]
    restart: Option<usize>,
    /// Largest stencil radius [default: 2].
    #[arg(long = "t-max")]
    t_max: Option<usize>,
    /// Separator spacing of the dissection [default: 8].
    #[arg(long)]
    leaf: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            tol: self.tol,
            restart: self.restart,
            t_max: self.t_max,
            leaf: self.leaf,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark suite over its size ladder.
    Bench {
        /// 2DHi, 2DHii, 3DHi, 3DHii, 2DSi, 2DSii, 3DSi or 3DSii.
        #[arg(long)]
        suite: String,
        /// Largest n to run [default: 256 in 2D, 32 in 3D].
        #[arg(long = "max-n")]
        max_n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Export one row of Q G_s on a 1D grid.
    QgProfile {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        j: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Shift in units of pi^2.
        #[arg(long = "shift-pi2", default_value_t = -62.0, allow_hyphen_values = true)]
        shift_pi2: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Export the potential of a configuration.
    Fields {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(config: &Path, common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    cfg.apply(&common.overrides())?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { config, common } => {
            let cfg = load(&config, &common)?;
            let r = run_solve(&cfg, &common.out)?;
            print!("{}", format_table(std::slice::from_ref(&r)));
            println!("true residual {:.3e}", r.report.true_residual);
        }
        Command::Bench { suite, max_n, common } => {
            let suite = find_suite(&suite)?;
            let max_n = max_n.unwrap_or_else(|| default_max_n(suite.d));
            let (records, path) = run_bench(&suite, max_n, &common.overrides(), &common.out)?;
            print!("{}", format_table(&records));
            println!("wrote {}", path.display());
        }
        Command::QgProfile { n, j, t, shift_pi2, out } => {
            let (_, path) = run_qg_profile(&ProfileArgs { n, j, t, shift_pi2 }, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Fields { config, common } => {
            let cfg = load(&config, &common)?;
            let path = run_fields(&cfg, &common.out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.name());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
