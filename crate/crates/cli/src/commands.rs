use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mptaylor::cns::{cns_run, diagram_tsv, tc_diagram, CnsConfig, DiagramConfig, DiagramRow, SweepAxis, TcReport};
use mptaylor::jet::{integrate, step, RecordPolicy, StepConfig};
use mptaylor::reduce::ReducePlan;
use mptaylor::{MpFloat, PrecisionContext, Reducer, RunSpec, Trajectory};

use crate::checkpoint::{checkpoint_path, Checkpoint};
use crate::config::{RunConfig, SweepKind};
use crate::error::CliError;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn column_header(dim: usize) -> String {
    if dim == 3 {
        "# t x y z".to_string()
    } else {
        let names: Vec<String> = (0..dim).map(|m| format!("x{m}")).collect();
        format!("# t {}", names.join(" "))
    }
}

fn format_row(cfg: &RunConfig, step: u64, state: &[MpFloat]) -> Result<String, CliError> {
    let mut row = cfg.tau_decimal().mul_int(step).to_string();
    for v in state {
        row.push('\t');
        row.push_str(&v.to_decimal(cfg.digits)?);
    }
    row.push('\n');
    Ok(row)
}

fn trajectory_header(cfg: &RunConfig, kind: &str) -> String {
    format!("# mptaylor {kind}\n{}{}\n", cfg.header_block(), column_header(cfg.source.dim()))
}

/// Writes recorded samples as a trajectory TSV.
pub fn write_trajectory(cfg: &RunConfig, traj: &Trajectory, out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = trajectory_header(cfg, "trajectory");
    for s in &traj.samples {
        text.push_str(&format_row(cfg, s.step, &s.state)?);
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("output", e))
}

#[derive(Debug, Clone)]
pub struct IntegrateOutcome {
    pub start_step: u64,
    pub final_step: u64,
    pub final_state: Vec<MpFloat>,
    pub checkpoints: Vec<PathBuf>,
}

fn checkpoint_location(cfg: &RunConfig) -> (PathBuf, String) {
    let out = cfg.out.as_deref().filter(|p| *p != Path::new("-"));
    let dir = cfg
        .checkpoint_dir
        .clone()
        .or_else(|| out.and_then(Path::parent).map(Path::to_path_buf))
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = out
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mptaylor".into());
    (dir, stem)
}

/// Integrates and streams the trajectory TSV, writing checkpoints on the way.
/// With `resume`, continues from a checkpoint taken under the same numerics.
pub fn cmd_integrate(cfg: &RunConfig, resume: Option<&Path>) -> Result<IntegrateOutcome, CliError> {
    let ctx = PrecisionContext::new(cfg.precision_bits)?;
    let system = cfg.source.build::<MpFloat>(&ctx)?;
    let n_total = cfg.steps();
    let (start_step, state0) = match resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if ck.config_hash != cfg.numerics_hash() {
                return Err(CliError::Checkpoint(format!(
                    "{} was written under different settings (system, init, tau, order, prec_bits or chunks)",
                    path.display()
                )));
            }
            if ck.precision_bits != cfg.precision_bits || ck.state.len() != system.dim() {
                return Err(CliError::Checkpoint(format!("{} does not match the configured precision or dimension", path.display())));
            }
            if ck.step > n_total {
                return Err(CliError::Checkpoint(format!(
                    "{} is at step {}, beyond the configured {} steps",
                    path.display(),
                    ck.step,
                    n_total
                )));
            }
            (ck.step, ck.state)
        }
        None => {
            let state = cfg.init.iter().map(|s| MpFloat::parse(s, &ctx)).collect::<mptaylor::Result<Vec<_>>>()?;
            (0, state)
        }
    };
    let step_cfg = StepConfig::new(MpFloat::parse(&cfg.tau, &ctx)?, cfg.order)?;
    let mut reducer = Reducer::new(cfg.plan()?, &ctx)?;

    let mut out = open_output(cfg.out.as_deref())?;
    let mut head = trajectory_header(cfg, "trajectory");
    if start_step > 0 {
        head = head.replacen("# t ", &format!("# resumed_from_step={start_step}\n# t "), 1);
    }
    head.push_str(&format_row(cfg, start_step, &state0)?);
    out.write_all(head.as_bytes()).map_err(|e| CliError::io("output", e))?;

    let (ck_dir, ck_stem) = checkpoint_location(cfg);
    let numerics_hash = cfg.numerics_hash();
    let mut written = Vec::new();
    let policy = RecordPolicy {
        every: cfg.stride,
        start_step,
    };
    let traj = integrate(&system, &state0, &step_cfg, n_total - start_step, &mut reducer, policy, |view| {
        if view.step % cfg.stride == 0 || view.step == n_total {
            out.write_all(format_row(cfg, view.step, view.state)?.as_bytes())?;
        }
        if cfg.checkpoint_every > 0 && (view.step % cfg.checkpoint_every == 0 || view.step == n_total) {
            let ck = Checkpoint {
                config_hash: numerics_hash.clone(),
                step: view.step,
                time: cfg.tau_decimal().mul_int(view.step).to_string(),
                precision_bits: cfg.precision_bits,
                state: view.state.to_vec(),
            };
            let path = checkpoint_path(&ck_dir, &ck_stem, view.step);
            ck.save(&path)?;
            written.push(path);
        }
        Ok(())
    })?;
    out.flush().map_err(|e| CliError::io("output", e))?;
    let last = traj.last();
    Ok(IntegrateOutcome {
        start_step,
        final_step: last.step,
        final_state: last.state.clone(),
        checkpoints: written,
    })
}

/// Paired clean-numerical-simulation runs; writes the base trajectory (if an
/// output path is set), the key-value report and the agreement series.
pub fn cmd_cns(cfg: &RunConfig) -> Result<TcReport, CliError> {
    let cns = CnsConfig {
        base: cfg.base_spec(),
        verify: cfg.verify_spec(),
        tau: cfg.tau.clone(),
        t_end: cfg.t_end(),
        agree_digits: cfg.agree_digits,
        stride: cfg.stride,
        allow_equal_runs: cfg.allow_equal_runs,
    };
    cns.validate().map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let (base, report) = cns_run(&cfg.source, &cfg.init, &cns, cfg.plan()?)?;
    if let Some(path) = cfg.out.as_deref() {
        let mut out = open_output(Some(path))?;
        write_trajectory(cfg, &base, out.as_mut())?;
        out.flush().map_err(|e| CliError::io(path, e))?;
    }
    let mut kv = report.to_key_values();
    let _ = writeln!(kv, "config_hash={}", cfg.config_hash());
    match cfg.report.as_deref() {
        Some(path) => write_text(path, &kv)?,
        None => print!("{kv}"),
    }
    if let Some(path) = cfg.series.as_deref() {
        write_text(path, &report.series_tsv())?;
    }
    Ok(report)
}

/// One row of the scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRecord {
    pub workers: usize,
    pub seconds: f64,
    /// Serial time over this time, rounded to three decimals.
    pub speedup: f64,
    /// `100 * speedup / workers`.
    pub efficiency: f64,
}

impl BenchmarkRecord {
    pub fn new(workers: usize, seconds: f64, serial_seconds: f64) -> Self {
        let speedup = (serial_seconds / seconds * 1000.0).round() / 1000.0;
        BenchmarkRecord {
            workers,
            seconds,
            speedup,
            efficiency: 100.0 * speedup / workers as f64,
        }
    }
}

pub const HARDWARE_NOTE: &str =
    "absolute times depend on the hardware and MPFR build; compare the speedup and efficiency columns, not the times";

pub fn bench_table(cfg: &RunConfig, records: &[BenchmarkRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# mptaylor bench: system={} order={} prec_bits={} probe_steps={} chunks={}",
        cfg.system,
        cfg.order,
        cfg.precision_bits,
        cfg.probe_steps,
        match cfg.chunks {
            crate::config::ChunkMode::Fixed(c) => c.to_string(),
            crate::config::ChunkMode::PerWorker => "workers".into(),
        }
    );
    let _ = writeln!(out, "# {HARDWARE_NOTE}");
    let _ = writeln!(out, "# workers\ttime_s\tspeedup\tefficiency_pct");
    for r in records {
        let _ = writeln!(out, "{}\t{:.3}\t{:.3}\t{:.2}", r.workers, r.seconds, r.speedup, r.efficiency);
    }
    out
}

/// Times `probe_steps` steps from the initial state. Only the stepping loop
/// is timed.
pub fn time_probe(cfg: &RunConfig, plan: ReducePlan) -> Result<(f64, Vec<MpFloat>), CliError> {
    let ctx = PrecisionContext::new(cfg.precision_bits)?;
    let system = cfg.source.build::<MpFloat>(&ctx)?;
    let mut state = cfg.init.iter().map(|s| MpFloat::parse(s, &ctx)).collect::<mptaylor::Result<Vec<_>>>()?;
    let step_cfg = StepConfig::new(MpFloat::parse(&cfg.tau, &ctx)?, cfg.order)?;
    let mut reducer = Reducer::new(plan, &ctx)?;
    let start = Instant::now();
    for _ in 0..cfg.probe_steps {
        state = step(&system, &state, &step_cfg, &mut reducer)?;
    }
    Ok((start.elapsed().as_secs_f64(), state))
}

/// Serial baseline, then one probe per requested worker count (in order).
/// A worker count of 1 is the serial baseline itself.
pub fn cmd_bench(cfg: &RunConfig) -> Result<Vec<BenchmarkRecord>, CliError> {
    let (serial, _) = time_probe(cfg, ReducePlan::serial())?;
    let mut records = Vec::new();
    for &w in &cfg.bench {
        let seconds = if w == 1 { serial } else { time_probe(cfg, cfg.plan_for(w)?)?.0 };
        records.push(BenchmarkRecord::new(w, seconds, serial));
    }
    let table = bench_table(cfg, &records);
    let mut out = open_output(cfg.out.as_deref())?;
    out.write_all(table.as_bytes()).map_err(|e| CliError::io("output", e))?;
    out.flush().map_err(|e| CliError::io("output", e))?;
    Ok(records)
}

/// T_c diagram over a precision or order sweep; TSV to the output.
pub fn cmd_diagram(cfg: &RunConfig) -> Result<Vec<DiagramRow>, CliError> {
    let (kind, values) = cfg.sweep.clone().ok_or_else(|| CliError::Config(vec!["no sweep given".into()]))?;
    let (axis, sweep) = match kind {
        SweepKind::Bits => (
            SweepAxis::Precision,
            values.iter().map(|&b| RunSpec::new(b as u32, cfg.order)).collect(),
        ),
        SweepKind::Orders => (
            SweepAxis::Order,
            values.iter().map(|&n| RunSpec::new(cfg.precision_bits, n as usize)).collect(),
        ),
    };
    let dc = DiagramConfig {
        sweep,
        margin: cfg.margin,
        axis,
        tau: cfg.tau.clone(),
        t_end: cfg.t_end(),
        agree_digits: cfg.agree_digits,
        stride: cfg.stride,
    };
    let rows = tc_diagram(&cfg.source, &cfg.init, &dc, cfg.plan()?)?;
    let mut text = cfg.header_block();
    text.push_str(&diagram_tsv(&rows, Some(&cfg.tau_decimal())));
    let mut out = open_output(cfg.out.as_deref())?;
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("output", e))?;
    out.flush().map_err(|e| CliError::io("output", e))?;
    Ok(rows)
}
