//! Independent double-precision reference integrator.

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
