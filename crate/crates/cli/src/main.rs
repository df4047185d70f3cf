use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prophet_cli::config::{DEFAULT_MESH, DEFAULT_SEED, DEFAULT_TOL, DEFAULT_TRIALS};
use prophet_cli::{commands, parse_dist_arg, CliError, Command, FigureKind, Format, PolicyKind, RunConfig};

#[derive(Parser)]
#[command(name = "prophet", version, about = "Competitive ratios, solvers and simulations for i.i.d. prophet inequalities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single-selection ratios l/c_l for l = 1..5.
    Table1(Flags),
    /// Multi-selection guarantees for k, l = 1..5.
    Table2(Flags),
    /// Plot data: cr_lb, static_heatmap, ode_traj or cr_alpha.
    FigureData {
        #[arg(value_enum)]
        which: FigureKind,
        #[command(flatten)]
        flags: Flags,
    },
    /// Solve for c_l at one depth.
    Cr(Flags),
    /// Ratio for the (1 - alpha, alpha) top-two mixture.
    CrMixture(Flags),
    /// Finite-n single-selection partition.
    Bvp(Flags),
    /// Finite-n multi-layer grid.
    Grid(Flags),
    /// Continuous coupling constants.
    Ode(Flags),
    /// Monte Carlo evaluation of a policy.
    Simulate(Flags),
    /// Static-threshold closed forms and the two-point hard instance.
    Static(Flags),
    /// Optimal online ratio on the hard instance for one selection.
    Worstcase(Flags),
    /// Reduce a discrete law to the gap support of its dynamic program.
    Reduce(Flags),
    /// Re-run a configuration, or the config embedded in a JSON output (inline or @file).
    Replay { config: String },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MESH)]
    mesh: usize,
    #[arg(long, value_enum)]
    policy: Option<PolicyKind>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<String>,
    /// Distribution as JSON, or @path to a JSON file.
    #[arg(long)]
    dist: Option<String>,
}

impl Flags {
    fn into_config(self, command: Command, which: Option<FigureKind>) -> Result<RunConfig, CliError> {
        let dist = self.dist.as_deref().map(parse_dist_arg).transpose()?;
        let cfg = RunConfig {
            command,
            which,
            ell: self.ell,
            k: self.k,
            n: self.n,
            q: self.q,
            alpha: self.alpha,
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
            mesh: self.mesh,
            policy: self.policy,
            dist,
            format: self.format,
            out: self.out,
        };
        cfg.check()?;
        Ok(cfg)
    }
}

fn config(cmd: Cmd) -> Result<RunConfig, CliError> {
    let (command, flags) = match cmd {
        Cmd::Replay { config } => {
            let text = match config.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read config {path}: {e}")))?,
                None => config,
            };
            return RunConfig::from_json(&text);
        }
        Cmd::FigureData { which, flags } => return flags.into_config(Command::FigureData, Some(which)),
        Cmd::Table1(f) => (Command::Table1, f),
        Cmd::Table2(f) => (Command::Table2, f),
        Cmd::Cr(f) => (Command::Cr, f),
        Cmd::CrMixture(f) => (Command::CrMixture, f),
        Cmd::Bvp(f) => (Command::Bvp, f),
        Cmd::Grid(f) => (Command::Grid, f),
        Cmd::Ode(f) => (Command::Ode, f),
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Static(f) => (Command::Static, f),
        Cmd::Worstcase(f) => (Command::Worstcase, f),
        Cmd::Reduce(f) => (Command::Reduce, f),
    };
    flags.into_config(command, None)
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    let cfg = config(cmd)?;
    let text = commands::run(&cfg)?.render(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
