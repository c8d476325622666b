//! Clean numerical simulation: integrate twice, the second time with strictly
//! more precision and a strictly higher Taylor order, and trust the first
//! trajectory only as long as both agree to a required number of significant
//! digits. The last time they do is the critical predictable time `t_c`.

use std::fmt::Write as _;

use log::warn;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::apfloat::{decimal_digits, MpFloat, PrecisionContext};
use crate::decimal::{pow10, Decimal};
use crate::error::{Error, Result};
use crate::jet::{integrate, RecordPolicy, StepConfig, Trajectory};
use crate::odesys::SystemSource;
use crate::reduce::{ReducePlan, Reducer};
use crate::scalar::Scalar;

pub const DEFAULT_AGREE_DIGITS: u32 = 10;
pub const DEFAULT_STRIDE: u64 = 100;

/// Number of leading decimal digits two states share, or `Exact` if they are
/// identical. `Exact` orders above every digit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agreement {
    Digits(u32),
    Exact,
}

impl Agreement {
    pub fn at_least(&self, d: u32) -> bool {
        match *self {
            Agreement::Exact => true,
            Agreement::Digits(n) => n >= d,
        }
    }
}

impl std::fmt::Display for Agreement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Agreement::Exact => f.write_str("exact"),
            Agreement::Digits(n) => write!(f, "{n}"),
        }
    }
}

/// `floor(-log10(r))` for a positive rational, clamped at 0.
fn digits_below_one(r: &BigRational) -> u32 {
    if *r >= BigRational::one() {
        return 0;
    }
    let bits = |n: &BigInt| n.bits() as f64;
    let estimate = ((bits(r.denom()) - bits(r.numer())) * std::f64::consts::LOG10_2).floor();
    let mut n = estimate.max(0.0) as i64;
    let fits = |n: i64| r * pow10(n) <= BigRational::one();
    while n > 0 && !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n as u32
}

/// Minimum over components of `floor(-log10(|a - b| / max(|a|, |b|, 1)))`,
/// computed exactly, clamped at 0.
pub fn agreement_digits<S: Scalar>(a: &[S], b: &[S]) -> Result<Agreement> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!("states have {} and {} components", a.len(), b.len())));
    }
    let mut worst = Agreement::Exact;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.to_exact(), y.to_exact());
        let diff = (&x - &y).abs();
        if Zero::is_zero(&diff) {
            continue;
        }
        let scale = x.abs().max(y.abs()).max(BigRational::one());
        let d = Agreement::Digits(digits_below_one(&(diff / scale)));
        worst = worst.min(d);
    }
    Ok(worst)
}

/// Precision and Taylor order of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunSpec {
    pub precision_bits: u32,
    pub order: usize,
}

impl RunSpec {
    pub fn new(precision_bits: u32, order: usize) -> Self {
        RunSpec { precision_bits, order }
    }

    pub fn strictly_dominates(&self, other: &RunSpec) -> bool {
        self.precision_bits > other.precision_bits && self.order > other.order
    }
}

impl std::fmt::Display for RunSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} bits, N = {}", self.precision_bits, self.order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementSample {
    pub step: u64,
    pub time: f64,
    pub agreement: Agreement,
}

#[derive(Debug, Clone)]
pub struct TcReport {
    pub t_c: f64,
    pub t_c_step: u64,
    pub t_end: f64,
    pub t_end_step: u64,
    pub agree_digits: u32,
    pub series: Vec<AgreementSample>,
    /// Base and verification runs, when produced by [`cns_run`].
    pub runs: Option<(RunSpec, RunSpec)>,
    /// Step size, when known, for printing times exactly.
    pub tau: Option<Decimal>,
    pub warnings: Vec<String>,
}

impl TcReport {
    fn time_text(&self, step: u64, time: f64) -> String {
        match &self.tau {
            Some(tau) => tau.mul_int(step).to_string(),
            None => time.to_string(),
        }
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "t_c={}", self.time_text(self.t_c_step, self.t_c));
        let _ = writeln!(out, "t_c_step={}", self.t_c_step);
        let _ = writeln!(out, "t_end={}", self.time_text(self.t_end_step, self.t_end));
        let _ = writeln!(out, "t_end_step={}", self.t_end_step);
        let _ = writeln!(out, "agree_digits={}", self.agree_digits);
        if let Some(tau) = &self.tau {
            let _ = writeln!(out, "tau={tau}");
        }
        if let Some((base, verify)) = &self.runs {
            let _ = writeln!(out, "base_prec_bits={}", base.precision_bits);
            let _ = writeln!(out, "base_order={}", base.order);
            let _ = writeln!(out, "verify_prec_bits={}", verify.precision_bits);
            let _ = writeln!(out, "verify_order={}", verify.order);
        }
        let _ = writeln!(out, "samples={}", self.series.len());
        for w in &self.warnings {
            let _ = writeln!(out, "warning={w}");
        }
        out
    }

    /// Agreement per compared sample, header `# t digits`.
    pub fn series_tsv(&self) -> String {
        let mut out = String::from("# t digits\n");
        for s in &self.series {
            let _ = writeln!(out, "{}\t{}", self.time_text(s.step, s.time), s.agreement);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some((base, verify)) = &self.runs {
            let _ = writeln!(out, "base run:   {base}");
            let _ = writeln!(out, "verify run: {verify}");
        }
        let _ = writeln!(
            out,
            "agreement to {} digits holds up to t_c = {} (of t_end = {})",
            self.agree_digits,
            self.time_text(self.t_c_step, self.t_c),
            self.time_text(self.t_end_step, self.t_end)
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Largest sample time up to which every sample agrees to at least `d` digits.
pub fn estimate_tc<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>, d: u32) -> Result<TcReport> {
    if d == 0 {
        return Err(Error::Invalid("agreement digits must be at least 1".into()));
    }
    if a.samples.is_empty() || a.samples.len() != b.samples.len() || a.samples.iter().zip(&b.samples).any(|(x, y)| x.step != y.step) {
        return Err(Error::Invalid("trajectories are not sampled on the same grid".into()));
    }
    let mut series = Vec::with_capacity(a.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        series.push(AgreementSample {
            step: x.step,
            time: x.time.to_f64(),
            agreement: agreement_digits(&x.state, &y.state)?,
        });
    }
    let first = &series[0];
    let last = series.last().unwrap();
    let mut warnings = Vec::new();
    let carried = a.samples[0]
        .state
        .iter()
        .chain(&b.samples[0].state)
        .filter_map(|v| v.precision_bits())
        .map(decimal_digits)
        .min();
    let (t_c, t_c_step) = match carried {
        Some(carried) if d > carried => {
            let w = format!("{d} agreement digits requested but only {carried} are carried; t_c set to the start");
            warn!("{w}");
            warnings.push(w);
            (first.time, first.step)
        }
        _ => {
            let passing = series.iter().take_while(|s| s.agreement.at_least(d)).last();
            match passing {
                Some(s) => (s.time, s.step),
                None => (first.time, first.step),
            }
        }
    };
    Ok(TcReport {
        t_c,
        t_c_step,
        t_end: last.time,
        t_end_step: last.step,
        agree_digits: d,
        series,
        runs: None,
        tau: None,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct CnsConfig {
    pub base: RunSpec,
    pub verify: RunSpec,
    /// Decimal step size.
    pub tau: String,
    /// Decimal end time, an exact multiple of `tau`.
    pub t_end: String,
    pub agree_digits: u32,
    /// Steps between compared samples.
    pub stride: u64,
    /// Permit `verify == base`; the runs then coincide trivially.
    pub allow_equal_runs: bool,
}

impl CnsConfig {
    pub fn new(base: RunSpec, verify: RunSpec, tau: &str, t_end: &str) -> Self {
        CnsConfig {
            base,
            verify,
            tau: tau.to_string(),
            t_end: t_end.to_string(),
            agree_digits: DEFAULT_AGREE_DIGITS,
            stride: DEFAULT_STRIDE,
            allow_equal_runs: false,
        }
    }

    /// Checks the configuration and returns the number of steps.
    pub fn validate(&self) -> Result<u64> {
        let dominated = self.verify.strictly_dominates(&self.base);
        if !dominated && !(self.allow_equal_runs && self.verify == self.base) {
            return Err(Error::Invalid(format!(
                "verification run ({}) must exceed the base run ({}) in both precision and order",
                self.verify, self.base
            )));
        }
        if self.agree_digits == 0 {
            return Err(Error::Invalid("agreement digits must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Invalid("comparison stride must be positive".into()));
        }
        steps_for(&self.tau, &self.t_end)
    }
}

/// `t_end / tau`, which must be a non-negative integer.
pub fn steps_for(tau: &str, t_end: &str) -> Result<u64> {
    let tau_d = Decimal::parse(tau)?;
    if tau_d.is_zero() || tau_d.is_negative() {
        return Err(Error::Invalid(format!("step size {tau} must be positive")));
    }
    let end = Decimal::parse(t_end)?;
    end.div_exact(&tau_d)
        .ok_or_else(|| Error::Invalid(format!("t_end {t_end} is not a non-negative multiple of tau {tau}")))
}

/// Default verification margin: about a third more bits and order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyMargin {
    /// Extra bits; `None` means `ceil(0.33 * bits)`.
    pub extra_bits: Option<u32>,
    /// Extra order; `None` means `ceil(N / 3)`.
    pub extra_order: Option<usize>,
}

impl VerifyMargin {
    pub fn apply(&self, base: RunSpec) -> RunSpec {
        let extra_bits = self
            .extra_bits
            .unwrap_or_else(|| ((u64::from(base.precision_bits) * 33).div_ceil(100)) as u32);
        let extra_order = self.extra_order.unwrap_or_else(|| base.order.div_ceil(3));
        RunSpec {
            precision_bits: base.precision_bits + extra_bits.max(1),
            order: base.order + extra_order.max(1),
        }
    }
}

/// Integrates `source` from decimal initial data at the precision and order of
/// `spec`, recording every `stride` steps.
pub fn run_at(
    source: &SystemSource,
    init: &[String],
    tau: &str,
    spec: RunSpec,
    n_steps: u64,
    stride: u64,
    plan: ReducePlan,
) -> Result<Trajectory<MpFloat>> {
    let ctx = PrecisionContext::new(spec.precision_bits)?;
    let system = source.build::<MpFloat>(&ctx)?;
    if init.len() != system.dim() {
        return Err(Error::Invalid(format!(
            "{} initial values for a system of dimension {}",
            init.len(),
            system.dim()
        )));
    }
    let state0 = init.iter().map(|s| MpFloat::parse(s, &ctx)).collect::<Result<Vec<_>>>()?;
    let cfg = StepConfig::new(MpFloat::parse(tau, &ctx)?, spec.order)?;
    let mut reducer = Reducer::new(plan, &ctx)?;
    let policy = RecordPolicy {
        every: stride,
        start_step: 0,
    };
    integrate(&system, &state0, &cfg, n_steps, &mut reducer, policy, |_| Ok(()))
}

/// Runs base and verification integrations (concurrently) and compares them.
/// The base trajectory is reliable up to the returned `t_c`.
pub fn cns_run(
    source: &SystemSource,
    init: &[String],
    cfg: &CnsConfig,
    plan: ReducePlan,
) -> Result<(Trajectory<MpFloat>, TcReport)> {
    let n_steps = cfg.validate()?;
    let run = |spec| run_at(source, init, &cfg.tau, spec, n_steps, cfg.stride, plan);
    let (base, verify) = std::thread::scope(|s| {
        let verify = s.spawn(|| run(cfg.verify));
        let base = run(cfg.base);
        (base, verify.join().expect("verification run panicked"))
    });
    let (base, verify) = (base?, verify?);
    let mut report = estimate_tc(&base, &verify, cfg.agree_digits)?;
    report.runs = Some((cfg.base, cfg.verify));
    report.tau = Some(Decimal::parse(&cfg.tau)?);
    Ok((base, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Rows keyed by decimal digits `K` of the base precision.
    Precision,
    /// Rows keyed by the base order `N`.
    Order,
}

#[derive(Debug, Clone)]
pub struct DiagramConfig {
    pub sweep: Vec<RunSpec>,
    pub margin: VerifyMargin,
    pub axis: SweepAxis,
    pub tau: String,
    pub t_end: String,
    pub agree_digits: u32,
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRow {
    pub param: u64,
    pub base: RunSpec,
    pub t_c: f64,
    pub t_c_step: u64,
}

/// One [`cns_run`] per sweep point; raw `t_c` values, no smoothing.
pub fn tc_diagram(source: &SystemSource, init: &[String], cfg: &DiagramConfig, plan: ReducePlan) -> Result<Vec<DiagramRow>> {
    if cfg.sweep.is_empty() {
        return Err(Error::Invalid("empty sweep".into()));
    }
    cfg.sweep
        .iter()
        .map(|&base| {
            let cns = CnsConfig {
                base,
                verify: cfg.margin.apply(base),
                tau: cfg.tau.clone(),
                t_end: cfg.t_end.clone(),
                agree_digits: cfg.agree_digits,
                stride: cfg.stride,
                allow_equal_runs: false,
            };
            let (_, report) = cns_run(source, init, &cns, plan)?;
            let param = match cfg.axis {
                SweepAxis::Precision => u64::from(decimal_digits(base.precision_bits)),
                SweepAxis::Order => base.order as u64,
            };
            Ok(DiagramRow {
                param,
                base,
                t_c: report.t_c,
                t_c_step: report.t_c_step,
            })
        })
        .collect()
}

/// TSV with header `# param t_c`.
pub fn diagram_tsv(rows: &[DiagramRow], tau: Option<&Decimal>) -> String {
    let mut out = String::from("# param t_c\n");
    for r in rows {
        let t = match tau {
            Some(tau) => tau.mul_int(r.t_c_step).to_string(),
            None => r.t_c.to_string(),
        };
        let _ = writeln!(out, "{}\t{}", r.param, t);
    }
    out
}
