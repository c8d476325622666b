//! Autonomous ODE systems whose right-hand sides are quadratic polynomials:
//!
//! ```text
//! dx_m/dt = c_m + sum_j L[m][j] x_j + sum_(j<=k) B[m](j,k) x_j x_k
//! ```
//!
//! The Lorenz system is the canonical instance. Systems are assembled with
//! [`SystemBuilder`] and are immutable afterwards.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `coeff * x_j * x_k` with `j <= k`.
#[derive(Debug, Clone)]
pub struct BilinearTerm<S> {
    pub j: usize,
    pub k: usize,
    pub coeff: S,
    /// Index into [`QuadraticSystem::product_pairs`].
    pair: usize,
}

impl<S> BilinearTerm<S> {
    pub fn pair_index(&self) -> usize {
        self.pair
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticSystem<S: Scalar> {
    ctx: S::Context,
    dim: usize,
    constant: Vec<S>,
    /// Row-major `dim x dim`.
    linear: Vec<S>,
    bilinear: Vec<Vec<BilinearTerm<S>>>,
    pairs: Vec<(usize, usize)>,
}

impl<S: Scalar> QuadraticSystem<S> {
    pub fn context(&self) -> &S::Context {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self, m: usize) -> &S {
        &self.constant[m]
    }

    pub fn linear(&self, m: usize, j: usize) -> &S {
        &self.linear[m * self.dim + j]
    }

    pub fn linear_row(&self, m: usize) -> &[S] {
        &self.linear[m * self.dim..(m + 1) * self.dim]
    }

    /// Bilinear terms of equation `m`, in insertion order.
    pub fn bilinear(&self, m: usize) -> &[BilinearTerm<S>] {
        &self.bilinear[m]
    }

    /// Distinct `(j, k)` products appearing anywhere in the system, in order of
    /// first appearance (equation by equation). Each needs one convolution per
    /// Taylor order.
    pub fn product_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `c + L x + sum B x x`, accumulated per component in the order constant,
    /// linear (ascending `j`), bilinear (stored order).
    pub fn rhs_eval(&self, state: &[S]) -> Result<Vec<S>> {
        if state.len() != self.dim {
            return Err(Error::Invalid(format!(
                "state has {} components, system has {}",
                state.len(),
                self.dim
            )));
        }
        let mut term = S::zero(&self.ctx);
        let mut out = Vec::with_capacity(self.dim);
        for m in 0..self.dim {
            let mut acc = self.constant[m].clone();
            for (j, l) in self.linear_row(m).iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                term.set_product(l, &state[j])?;
                acc.add_from(&term)?;
            }
            for t in &self.bilinear[m] {
                term.set_product(&state[t.j], &state[t.k])?;
                term.mul_by(&t.coeff)?;
                acc.add_from(&term)?;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

pub struct SystemBuilder<S: Scalar> {
    ctx: S::Context,
    dim: usize,
    constant: Vec<S>,
    linear: Vec<S>,
    bilinear: Vec<Vec<(usize, usize, S)>>,
}

impl<S: Scalar> SystemBuilder<S> {
    pub fn new(dim: usize, ctx: &S::Context) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("a system needs at least one variable".into()));
        }
        Ok(SystemBuilder {
            ctx: ctx.clone(),
            dim,
            constant: vec![S::zero(ctx); dim],
            linear: vec![S::zero(ctx); dim * dim],
            bilinear: vec![Vec::new(); dim],
        })
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.dim) {
            Some(i) => Err(Error::Invalid(format!("index {i} out of range for dimension {}", self.dim))),
            None => Ok(()),
        }
    }

    pub fn constant(mut self, m: usize, value: S) -> Result<Self> {
        self.check(&[m])?;
        self.constant[m] = value;
        Ok(self)
    }

    pub fn linear(mut self, m: usize, j: usize, value: S) -> Result<Self> {
        self.check(&[m, j])?;
        self.linear[m * self.dim + j] = value;
        Ok(self)
    }

    /// Adds `value * x_j * x_k` to equation `m`. The pair is stored with `j <= k`;
    /// a second term on the same `(m, j, k)` is rejected.
    pub fn bilinear(mut self, m: usize, j: usize, k: usize, value: S) -> Result<Self> {
        self.check(&[m, j, k])?;
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        if self.bilinear[m].iter().any(|t| t.0 == j && t.1 == k) {
            return Err(Error::Invalid(format!("duplicate bilinear term ({m}, {j}, {k})")));
        }
        self.bilinear[m].push((j, k, value));
        Ok(self)
    }

    pub fn build(self) -> QuadraticSystem<S> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let bilinear = self
            .bilinear
            .into_iter()
            .map(|terms| {
                terms
                    .into_iter()
                    .map(|(j, k, coeff)| {
                        let pair = match pairs.iter().position(|&p| p == (j, k)) {
                            Some(p) => p,
                            None => {
                                pairs.push((j, k));
                                pairs.len() - 1
                            }
                        };
                        BilinearTerm { j, k, coeff, pair }
                    })
                    .collect()
            })
            .collect();
        QuadraticSystem {
            ctx: self.ctx,
            dim: self.dim,
            constant: self.constant,
            linear: self.linear,
            bilinear,
            pairs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LorenzParams<S> {
    pub sigma: S,
    pub r: S,
    pub b: S,
}

impl<S: Scalar> LorenzParams<S> {
    /// sigma = 10, R = 28 and b = 8/3 rounded once at the working precision.
    pub fn standard(ctx: &S::Context) -> Result<Self> {
        Ok(LorenzParams {
            sigma: S::from_i64(10, ctx),
            r: S::from_i64(28, ctx),
            b: S::from_ratio(8, 3, ctx)?,
        })
    }
}

/// ```text
/// dx/dt = -sigma x + sigma y
/// dy/dt = R x - y - x z
/// dz/dt = x y - b z
/// ```
pub fn lorenz_system<S: Scalar>(params: &LorenzParams<S>, ctx: &S::Context) -> Result<QuadraticSystem<S>> {
    let neg = |v: &S| {
        let mut v = v.clone();
        v.negate();
        v
    };
    let system = SystemBuilder::new(3, ctx)?
        .linear(0, 0, neg(&params.sigma))?
        .linear(0, 1, params.sigma.clone())?
        .linear(1, 0, params.r.clone())?
        .linear(1, 1, S::from_i64(-1, ctx))?
        .linear(2, 2, neg(&params.b))?
        .bilinear(1, 0, 2, S::from_i64(-1, ctx))?
        .bilinear(2, 0, 1, S::from_i64(1, ctx))?
        .build();
    Ok(system)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EntryKind {
    Const,
    Lin,
    Bilin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    kind: EntryKind,
    index: Vec<usize>,
    value: String,
}

/// Text form of a quadratic system, kept as decimal strings so it can be
/// instantiated at any precision:
///
/// ```text
/// # comment
/// const m value
/// lin m j value
/// bilin m j k value
/// ```
///
/// The dimension is one more than the largest index mentioned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemDescription {
    dim: usize,
    entries: Vec<Entry>,
}

impl SystemDescription {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        let mut dim = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| Error::SystemDescription { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let (kind, arity) = match fields[0] {
                "const" => (EntryKind::Const, 1),
                "lin" => (EntryKind::Lin, 2),
                "bilin" => (EntryKind::Bilin, 3),
                other => return Err(err(format!("unknown entry kind {other:?}"))),
            };
            if fields.len() != arity + 2 {
                return Err(err(format!("`{}` takes {} indices and a value", fields[0], arity)));
            }
            let mut index = fields[1..=arity]
                .iter()
                .map(|f| f.parse::<usize>().map_err(|_| err(format!("bad index {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if kind == EntryKind::Bilin && index[1] > index[2] {
                index.swap(1, 2);
            }
            let value = fields[arity + 1];
            Decimal::parse(value).map_err(|e| err(e.to_string()))?;
            if !seen.insert((fields[0], index.clone())) {
                return Err(err(format!("duplicate entry `{} {:?}`", fields[0], index)));
            }
            dim = dim.max(index.iter().max().unwrap() + 1);
            entries.push(Entry {
                kind,
                index,
                value: value.to_string(),
            });
        }
        if dim == 0 {
            return Err(Error::SystemDescription {
                line: 0,
                message: "no entries".into(),
            });
        }
        Ok(SystemDescription { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn instantiate<S: Scalar>(&self, ctx: &S::Context) -> Result<QuadraticSystem<S>> {
        let mut builder = SystemBuilder::new(self.dim, ctx)?;
        for e in &self.entries {
            let v = S::parse_decimal(&e.value, ctx)?;
            builder = match e.kind {
                EntryKind::Const => builder.constant(e.index[0], v)?,
                EntryKind::Lin => builder.linear(e.index[0], e.index[1], v)?,
                EntryKind::Bilin => builder.bilinear(e.index[0], e.index[1], e.index[2], v)?,
            };
        }
        Ok(builder.build())
    }

    /// Normalized text, one entry per line in file order.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let kind = match e.kind {
                EntryKind::Const => "const",
                EntryKind::Lin => "lin",
                EntryKind::Bilin => "bilin",
            };
            let idx: Vec<String> = e.index.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{kind} {} {}", idx.join(" "), e.value);
        }
        out
    }
}

/// Where a system comes from: the built-in Lorenz system or a description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemSource {
    Lorenz,
    Description(SystemDescription),
}

impl SystemSource {
    pub fn dim(&self) -> usize {
        match self {
            SystemSource::Lorenz => 3,
            SystemSource::Description(d) => d.dim(),
        }
    }

    pub fn build<S: Scalar>(&self, ctx: &S::Context) -> Result<QuadraticSystem<S>> {
        match self {
            SystemSource::Lorenz => lorenz_system(&LorenzParams::standard(ctx)?, ctx),
            SystemSource::Description(d) => d.instantiate(ctx),
        }
    }

    pub fn canonical_name(&self) -> String {
        match self {
            SystemSource::Lorenz => "lorenz".into(),
            SystemSource::Description(d) => d.to_canonical_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::apfloat::{MpFloat, PrecisionContext};

    fn exact(text: &str) -> BigRational {
        Decimal::parse(text).unwrap().to_rational()
    }

    #[test]
    fn lorenz_structure() {
        let sys = lorenz_system(&LorenzParams::<BigRational>::standard(&()).unwrap(), &()).unwrap();
        assert_eq!(sys.dim(), 3);
        let row0: Vec<_> = sys.linear_row(0).to_vec();
        assert_eq!(row0, vec![exact("-10"), exact("10"), exact("0")]);
        assert_eq!(sys.linear_row(1).to_vec(), vec![exact("28"), exact("-1"), exact("0")]);
        assert_eq!(sys.linear(2, 2), &BigRational::new((-8).into(), 3.into()));
        assert!(sys.bilinear(0).is_empty());
        let t = &sys.bilinear(1)[0];
        assert_eq!((t.j, t.k, t.coeff.clone()), (0, 2, exact("-1")));
        let t = &sys.bilinear(2)[0];
        assert_eq!((t.j, t.k, t.coeff.clone()), (0, 1, exact("1")));
        assert_eq!(sys.product_pairs(), &[(0, 2), (0, 1)]);
        for m in 0..3 {
            assert_eq!(sys.constant(m), &exact("0"));
        }
    }

    #[test]
    fn lorenz_with_zero_parameters() {
        let zero = BigRational::from_integer(0.into());
        let p = LorenzParams {
            sigma: zero.clone(),
            r: zero.clone(),
            b: zero,
        };
        let sys = lorenz_system(&p, &()).unwrap();
        let rows: Vec<Vec<BigRational>> = (0..3).map(|m| sys.linear_row(m).to_vec()).collect();
        let i = |v: i64| BigRational::from_integer(v.into());
        assert_eq!(rows, vec![vec![i(0), i(0), i(0)], vec![i(0), i(-1), i(0)], vec![i(0), i(0), i(0)]]);
        assert_eq!(sys.bilinear(1).len(), 1);
        assert_eq!(sys.bilinear(2).len(), 1);
    }

    #[test]
    fn b_is_single_rounded_division() {
        let ctx = PrecisionContext::new(256).unwrap();
        let p = LorenzParams::<MpFloat>::standard(&ctx).unwrap();
        let direct = crate::apfloat::arith(
            crate::apfloat::ArithOp::Div,
            &MpFloat::from_i64(8, &ctx),
            &MpFloat::from_i64(3, &ctx),
            &ctx,
        )
        .unwrap();
        assert!(p.b.bit_eq(&direct));
        assert!(!p.b.bit_eq(&MpFloat::parse("2.6666666666666666", &ctx).unwrap()));
    }

    #[test]
    fn rhs_at_reference_state_exact() {
        let sys = lorenz_system(&LorenzParams::<BigRational>::standard(&()).unwrap(), &()).unwrap();
        let state = [exact("-15.8"), exact("-17.48"), exact("35.64")];
        let f = sys.rhs_eval(&state).unwrap();
        assert_eq!(f, vec![exact("-16.8"), exact("138.192"), exact("181.144")]);
    }

    #[test]
    fn rhs_at_origin_is_zero() {
        let sys = lorenz_system(&LorenzParams::<f64>::standard(&()).unwrap(), &()).unwrap();
        assert_eq!(sys.rhs_eval(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(sys.rhs_eval(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn builder_rejects_duplicates_and_bad_indices() {
        let b = SystemBuilder::<f64>::new(2, &()).unwrap().bilinear(0, 1, 0, 1.0).unwrap();
        assert!(b.bilinear(0, 0, 1, 2.0).is_err());
        assert!(SystemBuilder::<f64>::new(2, &()).unwrap().linear(0, 2, 1.0).is_err());
        assert!(SystemBuilder::<f64>::new(0, &()).is_err());
    }

    #[test]
    fn description_matches_builtin_lorenz() {
        let text = "# Lorenz written out\n\
                    lin 0 0 -10\nlin 0 1 10\n\
                    lin 1 0 28\nlin 1 1 -1\nbilin 1 2 0 -1\n\
                    bilin 2 0 1 1   # x*y\nlin 2 2 -2.6666666666666666666666666666666666666666666667\n";
        let d = SystemDescription::parse(text).unwrap();
        assert_eq!(d.dim(), 3);
        let sys: QuadraticSystem<f64> = d.instantiate(&()).unwrap();
        let builtin = lorenz_system(&LorenzParams::<f64>::standard(&()).unwrap(), &()).unwrap();
        let s = [-15.8, -17.48, 35.64];
        assert_eq!(sys.rhs_eval(&s).unwrap(), builtin.rhs_eval(&s).unwrap());
        assert!(d.to_canonical_string().contains("bilin 1 0 2 -1\n"));
    }

    #[test]
    fn description_errors_carry_line_numbers() {
        for (text, line) in [
            ("lin 0 0 1\nquad 0 0 0 1\n", 2),
            ("lin 0 1\n", 1),
            ("\n\nconst 0 abc\n", 3),
            ("bilin 0 0 1 1\nbilin 0 1 0 2\n", 2),
            ("lin x 0 1\n", 1),
        ] {
            match SystemDescription::parse(text) {
                Err(Error::SystemDescription { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(SystemDescription::parse("# nothing\n").is_err());
    }
}
