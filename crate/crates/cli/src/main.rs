use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mptaylor_cli::{cmd_bench, cmd_cns, cmd_diagram, cmd_integrate, parse_config, parse_kv, CliError, Command};

#[derive(Parser)]
#[command(name = "mptaylor", version, about = "Arbitrary-precision Taylor series integrator for quadratic ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate and write a trajectory TSV (and checkpoints).
    Integrate {
        #[command(flatten)]
        run: RunArgs,
        /// Continue from this checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Base and verification runs; report the critical predictable time.
    Cns {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time a short probe serially and for each worker count.
    Bench {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Critical predictable time over a precision or order sweep.
    Diagram {
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Every flag maps to the config key of the same name with `_` for `-`.
#[derive(Args, Default)]
struct RunArgs {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `lorenz` or a system description file.
    #[arg(long)]
    system: Option<String>,
    /// Comma-separated decimal initial values.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Taylor order N.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    prec_bits: Option<String>,
    #[arg(long)]
    prec_digits: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Reduction chunk count, or `workers` for one chunk per worker.
    #[arg(long)]
    chunks: Option<String>,
    /// Smallest convolution length that is split across workers.
    #[arg(long)]
    threshold: Option<String>,
    /// Output file (`-` or absent for standard output).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<String>,
    #[arg(long)]
    checkpoint_dir: Option<String>,
    /// Significant digits in trajectory files.
    #[arg(long)]
    digits: Option<String>,
    /// Steps between recorded (and compared) samples.
    #[arg(long)]
    stride: Option<String>,
    /// Comma-separated worker counts to benchmark.
    #[arg(long)]
    bench: Option<String>,
    #[arg(long)]
    probe_steps: Option<String>,
    #[arg(long)]
    verify_order: Option<String>,
    #[arg(long)]
    verify_prec_bits: Option<String>,
    #[arg(long)]
    agree_digits: Option<String>,
    /// Allow a verification run identical to the base run.
    #[arg(long)]
    allow_equal_runs: bool,
    /// Key-value report file for `cns`.
    #[arg(long)]
    report: Option<String>,
    /// Agreement series TSV for `cns`.
    #[arg(long)]
    series: Option<String>,
    #[arg(long)]
    sweep_bits: Option<String>,
    #[arg(long)]
    sweep_orders: Option<String>,
    #[arg(long)]
    margin_bits: Option<String>,
    #[arg(long)]
    margin_order: Option<String>,
}

impl RunArgs {
    fn flag_entries(&self) -> Vec<(String, String)> {
        let pairs = [
            ("system", &self.system),
            ("init", &self.init),
            ("tau", &self.tau),
            ("order", &self.order),
            ("prec_bits", &self.prec_bits),
            ("prec_digits", &self.prec_digits),
            ("steps", &self.steps),
            ("t_end", &self.t_end),
            ("workers", &self.workers),
            ("chunks", &self.chunks),
            ("threshold", &self.threshold),
            ("out", &self.out),
            ("checkpoint_every", &self.checkpoint_every),
            ("checkpoint_dir", &self.checkpoint_dir),
            ("digits", &self.digits),
            ("stride", &self.stride),
            ("bench", &self.bench),
            ("probe_steps", &self.probe_steps),
            ("verify_order", &self.verify_order),
            ("verify_prec_bits", &self.verify_prec_bits),
            ("agree_digits", &self.agree_digits),
            ("report", &self.report),
            ("series", &self.series),
            ("sweep_bits", &self.sweep_bits),
            ("sweep_orders", &self.sweep_orders),
            ("margin_bits", &self.margin_bits),
            ("margin_order", &self.margin_order),
        ];
        let mut out: Vec<(String, String)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if self.allow_equal_runs {
            out.push(("allow_equal_runs".into(), "true".into()));
        }
        out
    }

    fn resolve(&self, cmd: Command) -> Result<mptaylor_cli::RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;
                parse_kv(&text)?
            }
            None => Vec::new(),
        };
        parse_config(cmd, &file, &self.flag_entries())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Integrate { run, resume } => {
            let cfg = run.resolve(Command::Integrate)?;
            let done = cmd_integrate(&cfg, resume.as_deref())?;
            eprintln!("integrated steps {}..{}", done.start_step, done.final_step);
        }
        Cmd::Cns { run } => {
            let cfg = run.resolve(Command::Cns)?;
            let report = cmd_cns(&cfg)?;
            eprint!("{}", report.summary());
        }
        Cmd::Bench { run } => {
            cmd_bench(&run.resolve(Command::Bench)?)?;
        }
        Cmd::Diagram { run } => {
            cmd_diagram(&run.resolve(Command::Diagram)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mptaylor: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
