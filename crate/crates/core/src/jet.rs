//! Taylor coefficients by automatic differentiation, Horner evaluation, and
//! the fixed-step Taylor series method built on them.
//!
//! For `dx_m/dt = c_m + sum_j L[m][j] x_j + sum B[m](j,k) x_j x_k` the
//! normalized derivatives satisfy
//!
//! ```text
//! x_m[i+1] = ( [i == 0] c_m + sum_j L[m][j] x_j[i] + sum B[m](j,k) (x_j * x_k)[i] ) / (i + 1)
//! ```
//!
//! where `(x_j * x_k)[i] = sum_{k'=0}^{i} x_j[i-k'] x_k[k']` is the Cauchy
//! product, computed by the [`Reducer`].

use crate::error::{BoxError, Error, Result};
use crate::odesys::QuadraticSystem;
use crate::reduce::Reducer;
use crate::scalar::Scalar;

/// Taylor coefficients of every variable at one point, orders `0..=order`.
#[derive(Debug, Clone)]
pub struct Jet<S> {
    order: usize,
    coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> Jet<S> {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The `order + 1` coefficients of variable `m`.
    pub fn row(&self, m: usize) -> &[S] {
        &self.coeffs[m]
    }

    pub fn coeff(&self, m: usize, i: usize) -> &S {
        &self.coeffs[m][i]
    }

    pub fn bit_eq(&self, other: &Jet<S>) -> bool {
        self.order == other.order
            && self.coeffs.len() == other.coeffs.len()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.bit_eq(y)))
    }
}

#[derive(Debug, Clone)]
pub struct StepConfig<S> {
    tau: S,
    order: usize,
}

impl<S: Scalar> StepConfig<S> {
    pub fn new(tau: S, order: usize) -> Result<Self> {
        if tau.is_zero() {
            return Err(Error::Invalid("step size must be nonzero".into()));
        }
        if order == 0 {
            return Err(Error::Invalid("Taylor order must be at least 1".into()));
        }
        Ok(StepConfig { tau, order })
    }

    pub fn tau(&self) -> &S {
        &self.tau
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Same order, step `-tau`.
    pub fn reversed(&self) -> Self {
        let mut tau = self.tau.clone();
        tau.negate();
        StepConfig { tau, order: self.order }
    }
}

/// Computes coefficients of orders `0..=order` at `state`.
///
/// Order `i + 1` only reads orders `0..=i`: the reducer is handed prefix
/// slices of the coefficient rows. Within one order the operations are
/// performed in a fixed sequence (constant, linear terms by ascending `j`,
/// bilinear terms in stored order, then the product with `1/(i+1)`), so the
/// result is reproducible bit for bit.
pub fn compute_jet<S: Scalar>(
    system: &QuadraticSystem<S>,
    state: &[S],
    order: usize,
    reducer: &mut Reducer<S>,
) -> Result<Jet<S>> {
    let dim = system.dim();
    if state.len() != dim {
        return Err(Error::Invalid(format!("state has {} components, system has {dim}", state.len())));
    }
    if order == 0 {
        return Err(Error::Invalid("Taylor order must be at least 1".into()));
    }
    if reducer.context() != system.context() {
        return Err(Error::Invalid("reducer and system use different contexts".into()));
    }
    let ctx = system.context();
    let mut coeffs: Vec<Vec<S>> = state
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(order + 1);
            row.push(x.clone());
            row
        })
        .collect();
    let pairs = system.product_pairs();
    let mut products: Vec<S> = Vec::with_capacity(pairs.len());
    let mut term = S::zero(ctx);
    let mut next: Vec<S> = Vec::with_capacity(dim);

    for i in 0..order {
        {
            let views: Vec<(&[S], &[S])> = pairs
                .iter()
                .map(|&(j, k)| (&coeffs[j][..=i], &coeffs[k][..=i]))
                .collect();
            reducer.convolve_many(&views, i, &mut products)?;
        }
        let inv = S::from_ratio(1, i as i64 + 1, ctx)?;
        next.clear();
        for m in 0..dim {
            let mut acc = if i == 0 { system.constant(m).clone() } else { S::zero(ctx) };
            for (j, l) in system.linear_row(m).iter().enumerate() {
                if l.is_zero() {
                    continue;
                }
                term.set_product(l, &coeffs[j][i])?;
                acc.add_from(&term)?;
            }
            for t in system.bilinear(m) {
                term.set_product(&t.coeff, &products[t.pair_index()])?;
                acc.add_from(&term)?;
            }
            acc.mul_by(&inv)?;
            next.push(acc);
        }
        for (row, c) in coeffs.iter_mut().zip(next.drain(..)) {
            row.push(c);
        }
    }
    Ok(Jet { order, coeffs })
}

/// `a[0] + tau (a[1] + tau (a[2] + ...))`, innermost term the highest order.
pub fn horner_eval<S: Scalar>(row: &[S], tau: &S) -> Result<S> {
    let (last, rest) = row
        .split_last()
        .ok_or_else(|| Error::Invalid("cannot evaluate an empty series".into()))?;
    let mut acc = last.clone();
    for a in rest.iter().rev() {
        acc.mul_by(tau)?;
        acc.add_from(a)?;
    }
    Ok(acc)
}

/// One step of the Taylor method: one jet, then Horner per component.
pub fn step<S: Scalar>(
    system: &QuadraticSystem<S>,
    state: &[S],
    cfg: &StepConfig<S>,
    reducer: &mut Reducer<S>,
) -> Result<Vec<S>> {
    let jet = compute_jet(system, state, cfg.order, reducer)?;
    (0..jet.dim()).map(|m| horner_eval(jet.row(m), &cfg.tau)).collect()
}

#[derive(Debug, Clone)]
pub struct Sample<S> {
    pub step: u64,
    /// `step * tau`, rounded once.
    pub time: S,
    pub state: Vec<S>,
}

impl<S: Scalar> Sample<S> {
    pub fn bit_eq(&self, other: &Sample<S>) -> bool {
        self.step == other.step
            && self.time.bit_eq(&other.time)
            && self.state.len() == other.state.len()
            && self.state.iter().zip(&other.state).all(|(a, b)| a.bit_eq(b))
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub samples: Vec<Sample<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn last(&self) -> &Sample<S> {
        self.samples.last().expect("a trajectory holds at least its initial state")
    }

    pub fn bit_eq(&self, other: &Trajectory<S>) -> bool {
        self.samples.len() == other.samples.len() && self.samples.iter().zip(&other.samples).all(|(a, b)| a.bit_eq(b))
    }
}

/// Which states [`integrate`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordPolicy {
    /// Keep steps whose absolute index is a multiple of this.
    pub every: u64,
    /// Step index of the initial state, nonzero when resuming.
    pub start_step: u64,
}

impl Default for RecordPolicy {
    fn default() -> Self {
        RecordPolicy {
            every: 100,
            start_step: 0,
        }
    }
}

/// Read-only view handed to the observer after every step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a, S> {
    pub step: u64,
    pub time: &'a S,
    pub state: &'a [S],
}

/// Applies [`step`] `n_steps` times. The initial state, every state whose step
/// index is a multiple of `policy.every`, and the final state are recorded.
/// The observer sees every step.
pub fn integrate<S, F>(
    system: &QuadraticSystem<S>,
    state0: &[S],
    cfg: &StepConfig<S>,
    n_steps: u64,
    reducer: &mut Reducer<S>,
    policy: RecordPolicy,
    mut observer: F,
) -> Result<Trajectory<S>>
where
    S: Scalar,
    F: FnMut(StepView<'_, S>) -> Result<(), BoxError>,
{
    if policy.every == 0 {
        return Err(Error::Invalid("record stride must be positive".into()));
    }
    if state0.len() != system.dim() {
        return Err(Error::Invalid(format!(
            "state has {} components, system has {}",
            state0.len(),
            system.dim()
        )));
    }
    let ctx = system.context();
    let time_at = |n: u64| -> Result<S> {
        let n = i64::try_from(n).map_err(|_| Error::Invalid("step index too large".into()))?;
        let mut t = S::from_i64(n, ctx);
        t.mul_by(&cfg.tau)?;
        Ok(t)
    };
    let mut samples = vec![Sample {
        step: policy.start_step,
        time: time_at(policy.start_step)?,
        state: state0.to_vec(),
    }];
    let mut state = state0.to_vec();
    let end = policy.start_step + n_steps;
    for n in policy.start_step + 1..=end {
        state = step(system, &state, cfg, reducer)?;
        let time = time_at(n)?;
        observer(StepView {
            step: n,
            time: &time,
            state: &state,
        })
        .map_err(Error::Observer)?;
        if n % policy.every == 0 || n == end {
            samples.push(Sample {
                step: n,
                time,
                state: state.clone(),
            });
        }
    }
    Ok(Trajectory { samples })
}
