//! Exact, versioned text snapshot of a running integration.
//!
//! ```text
//! mptaylor-checkpoint v1
//! config_hash <sha256 hex of the numerics settings>
//! step <n>
//! time <n * tau, exact decimal>
//! prec_bits <p>
//! dim <d>
//! var <m> <+|-> <significand hex> <binary exponent>
//! ...
//! end
//! ```
//!
//! Each value equals `sign * significand * 2^exponent` exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mptaylor::{MpFloat, PrecisionContext, RawParts};

use crate::error::CliError;

pub const MAGIC: &str = "mptaylor-checkpoint v1";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config_hash: String,
    pub step: u64,
    pub time: String,
    pub precision_bits: u32,
    pub state: Vec<MpFloat>,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "config_hash {}", self.config_hash);
        let _ = writeln!(out, "step {}", self.step);
        let _ = writeln!(out, "time {}", self.time);
        let _ = writeln!(out, "prec_bits {}", self.precision_bits);
        let _ = writeln!(out, "dim {}", self.state.len());
        for (m, v) in self.state.iter().enumerate() {
            let raw = v.to_raw_parts();
            let sign = if raw.negative { '-' } else { '+' };
            let _ = writeln!(out, "var {m} {sign} {} {}", raw.significand, raw.exponent);
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Checkpoint(why);
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad(format!("missing `{MAGIC}` header")));
        }
        let mut field = |name: &str| -> Result<String, CliError> {
            let line = lines.next().ok_or_else(|| bad(format!("truncated before `{name}`")))?;
            line.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected `{name}`, found {line:?}")))
        };
        let config_hash = field("config_hash")?;
        let step = field("step")?.parse().map_err(|_| bad("bad step".into()))?;
        let time = field("time")?;
        let precision_bits: u32 = field("prec_bits")?.parse().map_err(|_| bad("bad prec_bits".into()))?;
        let dim: usize = field("dim")?.parse().map_err(|_| bad("bad dim".into()))?;
        let ctx = PrecisionContext::new(precision_bits)?;
        let mut state = Vec::with_capacity(dim);
        for m in 0..dim {
            let line = field("var")?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 4 || parts[0] != m.to_string() {
                return Err(bad(format!("malformed entry for variable {m}: {line:?}")));
            }
            let negative = match parts[1] {
                "+" => false,
                "-" => true,
                s => return Err(bad(format!("bad sign {s:?}"))),
            };
            let exponent = parts[3].parse().map_err(|_| bad(format!("bad exponent {:?}", parts[3])))?;
            let raw = RawParts {
                negative,
                significand: parts[2].to_string(),
                exponent,
            };
            state.push(MpFloat::from_raw_parts(&raw, &ctx)?);
        }
        if field_end(&mut lines).is_none() {
            return Err(bad("missing `end`".into()));
        }
        Ok(Checkpoint {
            config_hash,
            step,
            time,
            precision_bits,
            state,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Checkpoint::parse(&text)
    }

    /// Written to a temporary file, then renamed into place.
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let tmp = path.with_extension("ckpt.tmp");
        std::fs::write(&tmp, self.to_text()).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }
}

fn field_end<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Option<()> {
    (lines.next()? == "end").then_some(())
}

/// `<dir>/<stem>.<step>.ckpt`, step zero-padded so names sort by step.
pub fn checkpoint_path(dir: &Path, stem: &str, step: u64) -> PathBuf {
    dir.join(format!("{stem}.{step:010}.ckpt"))
}
