//! Adaptive Runge-Kutta-Fehlberg 4(5) integrator.
//!
//! This is the reference path used to validate closed-form flows: it knows
//! nothing about the analytic solution and integrates the characteristic
//! system directly. Kept deliberately independent of the `flow` module.

/// Integrate y' = f(t, y) from `t0` to `t1` with adaptive step control.
/// Returns the state at `t1`.
pub fn integrate_rkf45<F>(f: F, t0: f64, y0: &[f64], t1: f64, rel_tol: f64, abs_tol: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let total = (t1 - t0).abs();
    if total == 0.0 {
        return y;
    }
    let mut h = (total / 100.0).min(0.1).max(1e-8) * dir;

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];

    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        assert!(steps < 2_000_000, "rkf45 failed to converge");
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        f(t, &y, &mut k1);
        for i in 0..n {
            ytmp[i] = y[i] + h * 0.25 * k1[i];
        }
        f(t + 0.25 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (3.0 / 32.0 * k1[i] + 9.0 / 32.0 * k2[i]);
        }
        f(t + 3.0 / 8.0 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (1932.0 / 2197.0 * k1[i] - 7200.0 / 2197.0 * k2[i]
                    + 7296.0 / 2197.0 * k3[i]);
        }
        f(t + 12.0 / 13.0 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (439.0 / 216.0 * k1[i] - 8.0 * k2[i] + 3680.0 / 513.0 * k3[i]
                    - 845.0 / 4104.0 * k4[i]);
        }
        f(t + h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (-8.0 / 27.0 * k1[i] + 2.0 * k2[i] - 3544.0 / 2565.0 * k3[i]
                    + 1859.0 / 4104.0 * k4[i]
                    - 11.0 / 40.0 * k5[i]);
        }
        f(t + 0.5 * h, &ytmp, &mut k6);

        let mut err_max = 0.0f64;
        for i in 0..n {
            let y5 = y[i]
                + h * (16.0 / 135.0 * k1[i] + 6656.0 / 12825.0 * k3[i]
                    + 28561.0 / 56430.0 * k4[i]
                    - 9.0 / 50.0 * k5[i]
                    + 2.0 / 55.0 * k6[i]);
            let y4 = y[i]
                + h * (25.0 / 216.0 * k1[i] + 1408.0 / 2565.0 * k3[i] + 2197.0 / 4104.0 * k4[i]
                    - 0.2 * k5[i]);
            let scale = abs_tol + rel_tol * y[i].abs().max(y5.abs());
            err_max = err_max.max(((y5 - y4) / scale).abs());
            ytmp[i] = y5;
        }

        if err_max <= 1.0 {
            t += h;
            y.copy_from_slice(&ytmp);
        }
        let factor = if err_max > 0.0 {
            0.9 * err_max.powf(-0.2)
        } else {
            4.0
        };
        h *= factor.clamp(0.2, 4.0);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate_rkf45(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, 1e-12, 1e-14);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn circular_motion_returns_home() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let tau = 2.0 * std::f64::consts::PI;
        let y = integrate_rkf45(f, 0.0, &[1.0, 0.0], tau, 1e-12, 1e-14);
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-9);
    }
}
