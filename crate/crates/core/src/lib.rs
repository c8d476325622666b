//! Arbitrary-precision Taylor series integration of quadratic ODE systems.
//!
//! The numerical core ([`jet`], [`reduce`], [`odesys`], [`cns`]) is generic
//! over [`Scalar`]: hardware floats, exact rationals and the MPFR-backed
//! [`MpFloat`] all run through the same recurrence. The aliases below fix the
//! scalar to the multiple-precision type used in production runs.

pub mod apfloat;
pub mod cns;
pub mod decimal;
pub mod error;
pub mod jet;
pub mod odesys;
pub mod reduce;
pub mod scalar;

pub use apfloat::{arith, bits_for_decimal_digits, decimal_digits, ArithOp, MpFloat, PrecisionContext, RawParts};
pub use cns::{agreement_digits, cns_run, estimate_tc, tc_diagram, Agreement, CnsConfig, RunSpec, TcReport};
pub use decimal::Decimal;
pub use error::{ArithError, Error, Result};
pub use jet::{compute_jet, horner_eval, integrate, step, RecordPolicy, Sample, StepConfig, StepView};
pub use odesys::{lorenz_system, LorenzParams, SystemBuilder, SystemDescription, SystemSource};
pub use reduce::{partition, ReducePlan};
pub use scalar::Scalar;

pub type Jet = jet::Jet<MpFloat>;
pub type QuadraticSystem = odesys::QuadraticSystem<MpFloat>;
pub type Reducer = reduce::Reducer<MpFloat>;
pub type Trajectory = jet::Trajectory<MpFloat>;

pub type F64Jet = jet::Jet<f64>;
pub type F64System = odesys::QuadraticSystem<f64>;
pub type F64Reducer = reduce::Reducer<f64>;

pub type ExactJet = jet::Jet<num_rational::BigRational>;
pub type ExactSystem = odesys::QuadraticSystem<num_rational::BigRational>;
pub type ExactReducer = reduce::Reducer<num_rational::BigRational>;
