//! Run configuration: a `key=value` file (with `#` comments) overlaid by
//! command-line flags. All problems are collected and reported together.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use mptaylor::apfloat::{bits_for_decimal_digits, decimal_digits, MAX_PRECISION_BITS, MIN_PRECISION_BITS};
use mptaylor::cns::{steps_for, RunSpec, VerifyMargin, DEFAULT_AGREE_DIGITS, DEFAULT_STRIDE};
use mptaylor::reduce::{ReducePlan, DEFAULT_NUM_CHUNKS, DEFAULT_PARALLEL_THRESHOLD};
use mptaylor::{Decimal, SystemDescription, SystemSource};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Every recognized key, in echo order.
pub const KEYS: &[&str] = &[
    "system",
    "init",
    "tau",
    "order",
    "prec_bits",
    "prec_digits",
    "steps",
    "t_end",
    "workers",
    "chunks",
    "threshold",
    "out",
    "checkpoint_every",
    "checkpoint_dir",
    "digits",
    "stride",
    "bench",
    "probe_steps",
    "verify_order",
    "verify_prec_bits",
    "agree_digits",
    "allow_equal_runs",
    "report",
    "series",
    "sweep_bits",
    "sweep_orders",
    "margin_bits",
    "margin_order",
];

/// What the configuration is for; decides which keys are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Integrate,
    Cns,
    Bench,
    Diagram,
}

/// How reduction chunks are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkMode {
    /// A fixed chunk count, independent of the worker count.
    Fixed(usize),
    /// One chunk per worker; results then depend on the worker count.
    PerWorker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Bits,
    Orders,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `lorenz` or a path to a system description, verbatim.
    pub system: String,
    pub source: SystemSource,
    pub init: Vec<String>,
    pub tau: String,
    pub order: usize,
    pub precision_bits: u32,
    /// Number of steps; `None` only for benchmarks, which use `probe_steps`.
    pub n_steps: Option<u64>,
    pub workers: usize,
    pub chunks: ChunkMode,
    pub threshold: usize,
    pub out: Option<PathBuf>,
    /// 0 disables checkpoints.
    pub checkpoint_every: u64,
    pub checkpoint_dir: Option<PathBuf>,
    pub digits: usize,
    pub stride: u64,
    pub bench: Vec<usize>,
    pub probe_steps: u64,
    pub verify_order: Option<usize>,
    pub verify_prec_bits: Option<u32>,
    pub agree_digits: u32,
    pub allow_equal_runs: bool,
    pub report: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub sweep: Option<(SweepKind, Vec<u64>)>,
    /// Verification margin for diagrams.
    pub margin: VerifyMargin,
}

/// Parses the `key=value` format. Later duplicates are an error.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut problems = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((k.trim().to_string(), v.trim().to_string())),
            _ => problems.push(format!("line {}: expected key=value, got {:?}", n + 1, raw.trim())),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Config(problems))
    }
}

/// Merges file entries with flag overrides and validates the result for `cmd`.
pub fn parse_config(cmd: Command, file: &[(String, String)], flags: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut problems = Vec::new();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in file {
        if !KEYS.contains(&k.as_str()) {
            problems.push(format!("unknown key `{k}`"));
        } else if map.insert(k.clone(), v.clone()).is_some() {
            problems.push(format!("key `{k}` given more than once"));
        }
    }
    for (k, v) in flags {
        if !KEYS.contains(&k.as_str()) {
            problems.push(format!("unknown key `{k}`"));
        } else {
            map.insert(k.clone(), v.clone());
        }
    }
    let mut p = Parser { map: &map, problems };
    let cfg = p.build(cmd);
    match cfg {
        Some(cfg) if p.problems.is_empty() => Ok(cfg),
        _ => Err(CliError::Config(p.problems)),
    }
}

struct Parser<'a> {
    map: &'a BTreeMap<String, String>,
    problems: Vec<String>,
}

impl Parser<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn required(&mut self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(String::as_str);
        if v.is_none() {
            self.problems.push(format!("missing required key `{key}`"));
        }
        v
    }

    fn number<T>(&mut self, key: &str, min: T) -> Option<T>
    where
        T: std::str::FromStr + PartialOrd + std::fmt::Display + Copy,
    {
        let text = self.raw(key)?.to_string();
        match text.parse::<T>() {
            Ok(v) if v >= min => Some(v),
            _ => {
                self.problems.push(format!("`{key}` must be an integer ≥ {min}, got {text:?}"));
                None
            }
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<u64>> {
        let text = self.raw(key)?.to_string();
        let parsed: Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse::<u64>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() && v.iter().all(|&x| x > 0) => Some(v),
            _ => {
                self.problems.push(format!("`{key}` must be a comma-separated list of positive integers, got {text:?}"));
                None
            }
        }
    }

    fn decimal(&mut self, key: &str, text: &str) -> Option<Decimal> {
        match Decimal::parse(text) {
            Ok(d) => Some(d),
            Err(e) => {
                self.problems.push(format!("`{key}`: {e}"));
                None
            }
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).filter(|s| !s.is_empty()).map(PathBuf::from)
    }

    fn build(&mut self, cmd: Command) -> Option<RunConfig> {
        let system = self.required("system").map(str::to_string);
        let init_text = self.required("init").map(str::to_string);
        let tau = self.required("tau").map(str::to_string);
        if self.raw("order").is_none() {
            self.problems.push("missing required key `order`".into());
        }
        let order = self.number::<usize>("order", 1);

        let source = system.as_deref().and_then(|s| self.resolve_system(s));

        let init = init_text.map(|text| {
            let values: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
            for v in &values {
                self.decimal("init", v);
            }
            values
        });
        if let (Some(src), Some(init)) = (&source, &init) {
            if src.dim() != init.len() {
                self.problems.push(format!(
                    "`init` has {} values but the system has dimension {}",
                    init.len(),
                    src.dim()
                ));
            }
        }

        let tau_dec = tau.clone().and_then(|t| self.decimal("tau", &t));
        if let Some(t) = &tau_dec {
            if t.is_zero() || t.is_negative() {
                self.problems.push("`tau` must be positive".into());
            }
        }

        let precision_bits = match (self.raw("prec_bits").is_some(), self.raw("prec_digits").is_some()) {
            (true, true) => {
                self.problems.push("`prec_bits` and `prec_digits` are mutually exclusive".into());
                None
            }
            (false, false) => {
                self.problems.push("missing required key `prec_bits` (or `prec_digits`)".into());
                None
            }
            (true, false) => self.number::<u32>("prec_bits", MIN_PRECISION_BITS),
            (false, true) => self.number::<u32>("prec_digits", 1).map(bits_for_decimal_digits),
        };
        if let Some(bits) = precision_bits {
            if bits > MAX_PRECISION_BITS {
                self.problems.push(format!("precision of {bits} bits exceeds the maximum {MAX_PRECISION_BITS}"));
            }
        }

        let needs_steps = cmd != Command::Bench;
        let n_steps = match (self.raw("steps").is_some(), self.raw("t_end").is_some()) {
            (true, true) => {
                self.problems.push("`steps` and `t_end` are mutually exclusive".into());
                None
            }
            (false, false) => {
                if needs_steps {
                    self.problems.push("missing required key `steps` (or `t_end`)".into());
                }
                None
            }
            (true, false) => self.number::<u64>("steps", 0),
            (false, true) => {
                let t_end = self.raw("t_end").unwrap_or_default().to_string();
                match (&tau, self.decimal("t_end", &t_end)) {
                    (Some(tau), Some(_)) if tau_dec.is_some() => match steps_for(tau, &t_end) {
                        Ok(n) => Some(n),
                        Err(e) => {
                            self.problems.push(format!("`t_end`: {e}"));
                            None
                        }
                    },
                    _ => None,
                }
            }
        };

        let workers = if self.raw("workers").is_some() { self.number::<usize>("workers", 1) } else { Some(1) };
        let chunks = match self.raw("chunks") {
            None => Some(ChunkMode::Fixed(DEFAULT_NUM_CHUNKS)),
            Some("workers") => Some(ChunkMode::PerWorker),
            Some(_) => self.number::<usize>("chunks", 1).map(ChunkMode::Fixed),
        };
        let threshold = if self.raw("threshold").is_some() {
            self.number::<usize>("threshold", 1)
        } else {
            Some(DEFAULT_PARALLEL_THRESHOLD)
        };
        let checkpoint_every = if self.raw("checkpoint_every").is_some() { self.number::<u64>("checkpoint_every", 0) } else { Some(0) };
        let digits = match self.raw("digits") {
            Some(_) => self.number::<usize>("digits", 1),
            None => precision_bits.map(|b| (decimal_digits(b) as usize).clamp(1, 50)),
        };
        let stride = if self.raw("stride").is_some() { self.number::<u64>("stride", 1) } else { Some(DEFAULT_STRIDE) };
        let bench = match self.raw("bench") {
            Some(_) => self.list("bench").map(|v| v.into_iter().map(|w| w as usize).collect()),
            None => Some(vec![1, 2, 4]),
        };
        let probe_steps = if self.raw("probe_steps").is_some() { self.number::<u64>("probe_steps", 1) } else { Some(5) };
        let verify_order = self.number::<usize>("verify_order", 1);
        let verify_prec_bits = self.number::<u32>("verify_prec_bits", MIN_PRECISION_BITS);
        let agree_digits = if self.raw("agree_digits").is_some() {
            self.number::<u32>("agree_digits", 1)
        } else {
            Some(DEFAULT_AGREE_DIGITS)
        };
        let allow_equal_runs = match self.raw("allow_equal_runs") {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => {
                self.problems.push(format!("`allow_equal_runs` must be true or false, got {other:?}"));
                false
            }
        };
        let sweep = match (self.raw("sweep_bits").is_some(), self.raw("sweep_orders").is_some()) {
            (true, true) => {
                self.problems.push("`sweep_bits` and `sweep_orders` are mutually exclusive".into());
                None
            }
            (true, false) => self.list("sweep_bits").map(|v| (SweepKind::Bits, v)),
            (false, true) => self.list("sweep_orders").map(|v| (SweepKind::Orders, v)),
            (false, false) => {
                if cmd == Command::Diagram {
                    self.problems.push("missing required key `sweep_bits` (or `sweep_orders`)".into());
                }
                None
            }
        };
        if let Some((SweepKind::Bits, v)) = &sweep {
            if v.iter().any(|&b| b < u64::from(MIN_PRECISION_BITS) || b > u64::from(MAX_PRECISION_BITS)) {
                self.problems.push(format!("`sweep_bits` entries must lie in [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}]"));
            }
        }

        let margin = VerifyMargin {
            extra_bits: self.number::<u32>("margin_bits", 1),
            extra_order: self.number::<usize>("margin_order", 1),
        };

        let cfg = RunConfig {
            system: system?,
            source: source?,
            init: init?,
            tau: tau?,
            order: order?,
            precision_bits: precision_bits?,
            n_steps: if needs_steps { Some(n_steps?) } else { n_steps },
            workers: workers?,
            chunks: chunks?,
            threshold: threshold?,
            out: self.path("out"),
            checkpoint_every: checkpoint_every?,
            checkpoint_dir: self.path("checkpoint_dir"),
            digits: digits?,
            stride: stride?,
            bench: bench?,
            probe_steps: probe_steps?,
            verify_order,
            verify_prec_bits,
            agree_digits: agree_digits?,
            allow_equal_runs,
            report: self.path("report"),
            series: self.path("series"),
            sweep,
            margin,
        };
        if cmd == Command::Cns {
            let verify = cfg.verify_spec();
            let base = cfg.base_spec();
            if !verify.strictly_dominates(&base) && !(cfg.allow_equal_runs && verify == base) {
                self.problems.push(format!(
                    "verification run ({verify}) must exceed the base run ({base}) in both precision and order"
                ));
            }
        }
        Some(cfg)
    }

    fn resolve_system(&mut self, name: &str) -> Option<SystemSource> {
        if name == "lorenz" {
            return Some(SystemSource::Lorenz);
        }
        let text = match std::fs::read_to_string(name) {
            Ok(t) => t,
            Err(e) => {
                self.problems.push(format!("system `{name}`: not a built-in system and not readable: {e}"));
                return None;
            }
        };
        match SystemDescription::parse(&text) {
            Ok(d) => Some(SystemSource::Description(d)),
            Err(e) => {
                self.problems.push(format!("system `{name}`: {e}"));
                None
            }
        }
    }
}

impl RunConfig {
    pub fn chunk_count(&self) -> usize {
        match self.chunks {
            ChunkMode::Fixed(c) => c,
            ChunkMode::PerWorker => self.workers,
        }
    }

    pub fn plan(&self) -> Result<ReducePlan, CliError> {
        self.plan_for(self.workers)
    }

    pub fn plan_for(&self, workers: usize) -> Result<ReducePlan, CliError> {
        let chunks = match self.chunks {
            ChunkMode::Fixed(c) => c,
            ChunkMode::PerWorker => workers,
        };
        Ok(ReducePlan::new(chunks, workers)
            .map_err(|e| CliError::Config(vec![e.to_string()]))?
            .with_parallel_threshold(self.threshold))
    }

    pub fn tau_decimal(&self) -> Decimal {
        Decimal::parse(&self.tau).expect("validated")
    }

    pub fn steps(&self) -> u64 {
        self.n_steps.unwrap_or(0)
    }

    /// End time as an exact decimal.
    pub fn t_end(&self) -> String {
        self.tau_decimal().mul_int(self.steps()).to_string()
    }

    pub fn base_spec(&self) -> RunSpec {
        RunSpec::new(self.precision_bits, self.order)
    }

    /// Explicit verification settings, or the default margin where absent.
    pub fn verify_spec(&self) -> RunSpec {
        let default = VerifyMargin::default().apply(self.base_spec());
        RunSpec::new(
            self.verify_prec_bits.unwrap_or(default.precision_bits),
            self.verify_order.unwrap_or(default.order),
        )
    }

    fn system_text(&self) -> String {
        self.source.canonical_name()
    }

    /// Resolved settings that determine the computed states bit for bit.
    fn numerics_lines(&self) -> Vec<(String, String)> {
        vec![
            ("system".into(), self.system.clone()),
            ("init".into(), self.init.join(",")),
            ("tau".into(), self.tau.clone()),
            ("order".into(), self.order.to_string()),
            ("prec_bits".into(), self.precision_bits.to_string()),
            ("chunks".into(), self.chunk_count().to_string()),
        ]
    }

    /// The resolved configuration echoed at the top of every output file.
    /// Worker count and output paths are left out: they do not change results.
    pub fn echo_lines(&self) -> Vec<(String, String)> {
        let mut lines = self.numerics_lines();
        lines.push(("steps".into(), self.steps().to_string()));
        lines.push(("stride".into(), self.stride.to_string()));
        lines.push(("digits".into(), self.digits.to_string()));
        lines
    }

    /// Hash over the echoed configuration, including the full system text.
    pub fn config_hash(&self) -> String {
        hash_lines(&self.echo_lines(), &self.system_text())
    }

    /// Hash over the settings a checkpoint must agree with to be resumed.
    pub fn numerics_hash(&self) -> String {
        hash_lines(&self.numerics_lines(), &self.system_text())
    }

    /// `# key=value` block followed by the hash line.
    pub fn header_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.echo_lines() {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "# config_hash={}", self.config_hash());
        out
    }
}

fn hash_lines(lines: &[(String, String)], system_text: &str) -> String {
    let mut h = Sha256::new();
    for (k, v) in lines {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.update(b"system_text\n");
    h.update(system_text.as_bytes());
    hex::encode(h.finalize())
}
