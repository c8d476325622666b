#![allow(dead_code)]

use mptaylor::{MpFloat, PrecisionContext};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

pub fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).unwrap()
}

pub fn exact(text: &str) -> BigRational {
    mptaylor::Decimal::parse(text).unwrap().to_rational()
}

pub fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Unit in the last place of a nonzero value at its own precision.
pub fn ulp(v: &MpFloat) -> BigRational {
    pow2(v.to_raw_parts().exponent)
}

/// |v - x| measured in ulps of v.
pub fn ulps_from(v: &MpFloat, x: &BigRational) -> f64 {
    let d = (v.to_exact() - x).abs();
    if d.is_zero() {
        return 0.0;
    }
    use num_traits::ToPrimitive;
    (d / ulp(v)).to_f64().unwrap()
}

/// Random value with `digits` significant decimal digits and a modest exponent.
pub fn random_decimal(rng: &mut impl Rng, digits: usize, exp_range: i32) -> String {
    let mut s = String::new();
    if rng.gen_bool(0.5) {
        s.push('-');
    }
    s.push(char::from(b'1' + rng.gen_range(0..9)));
    s.push('.');
    for _ in 1..digits {
        s.push(char::from(b'0' + rng.gen_range(0..10)));
    }
    s.push_str(&format!("e{}", rng.gen_range(-exp_range..=exp_range)));
    s
}

pub fn random_mp(rng: &mut impl Rng, ctx: &PrecisionContext) -> MpFloat {
    let digits = (ctx.decimal_digits() as usize + 5).max(2);
    MpFloat::parse(&random_decimal(rng, digits, 8), ctx).unwrap()
}

/// e = sum 1/i! with enough terms that the tail is below 10^-80.
pub fn e_oracle() -> BigRational {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for i in 0..80 {
        sum += &term;
        term /= BigRational::from_integer(BigInt::from(i + 1));
    }
    sum
}

pub fn to_exact_vec<S: mptaylor::Scalar>(v: &[S]) -> Vec<BigRational> {
    v.iter().map(mptaylor::Scalar::to_exact).collect()
}

/// Dormand-Prince 5(4) with step-size control, double precision.
pub fn dopri5(f: impl Fn(&[f64]) -> Vec<f64>, y0: &[f64], t_end: f64, tol: f64) -> Vec<f64> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 1e-3;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let yi: Vec<f64> = (0..n).map(|m| y[m] + h * (0..s).map(|j| A[s][j] * k[j][m]).sum::<f64>()).collect();
            k.push(f(&yi));
        }
        let y5: Vec<f64> = (0..n).map(|m| y[m] + h * (0..7).map(|s| B5[s] * k[s][m]).sum::<f64>()).collect();
        let y4: Vec<f64> = (0..n).map(|m| y[m] + h * (0..7).map(|s| B4[s] * k[s][m]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|m| ((y5[m] - y4[m]) / (tol + tol * y[m].abs().max(y5[m].abs()))).powi(2))
            .sum::<f64>()
            / n as f64;
        let err = err.sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

pub fn lorenz_f64(s: &[f64]) -> Vec<f64> {
    let (x, y, z) = (s[0], s[1], s[2]);
    vec![10.0 * (y - x), 28.0 * x - y - x * z, x * y - 8.0 / 3.0 * z]
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
