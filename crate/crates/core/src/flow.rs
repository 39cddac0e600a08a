//! Closed-form characteristic flow of the first-order part.
//!
//! The characteristic system
//!
//!   X' = xi,    xi' = -(omega0^2 X + 2 gamma xi)
//!
//! is linear, so the flow Phi_t is a 2x2 matrix acting blockwise on each
//! (x_i, xi_i) pair. All three damping regimes collapse into one expression
//! through sigma = omega0^2 - gamma^2 and the pair
//!
//!   C(sigma, t) = cos(w t) | cosh(w t) | 1      (w = sqrt(|sigma|))
//!   S(sigma, t) = sin(w t)/w | sinh(w t)/w | t
//!
//! giving
//!
//!   Phi_t = e^{-gamma t} [[C + gamma S, S], [-omega0^2 S, C - gamma S]].
//!
//! C^2 + sigma S^2 = 1 in every regime, so det Phi_t = e^{-2 gamma t}.
//! The inverse flow is the same matrix at -t.

use crate::error::Result;
use crate::linalg::Mat2;
use crate::params::{ModelParams, PhasePoint};

/// Damping regime classification. `omega` is sqrt(|omega0^2 - gamma^2|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowRegime {
    /// 0 <= gamma < omega0
    Underdamped { omega: f64 },
    /// gamma > omega0 >= 0
    Overdamped { omega: f64 },
    /// gamma = omega0
    Critical,
}

pub fn regime(p: &ModelParams) -> FlowRegime {
    let sigma = p.sigma();
    if sigma > 0.0 {
        FlowRegime::Underdamped { omega: sigma.sqrt() }
    } else if sigma < 0.0 {
        FlowRegime::Overdamped {
            omega: (-sigma).sqrt(),
        }
    } else {
        FlowRegime::Critical
    }
}

/// C(sigma, t) and S(sigma, t); exact at sigma = 0 and continuous across it.
pub(crate) fn flow_cs(sigma: f64, t: f64) -> (f64, f64) {
    if sigma == 0.0 {
        (1.0, t)
    } else if sigma > 0.0 {
        let w = sigma.sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    } else {
        let w = (-sigma).sqrt();
        ((w * t).cosh(), (w * t).sinh() / w)
    }
}

/// The 2x2 block of Phi_t; valid for any real t (negative t inverts).
pub fn flow_matrix(p: &ModelParams, t: f64) -> Mat2 {
    let sigma = p.sigma();
    let (c, s) = flow_cs(sigma, t);
    let damp = (-p.gamma * t).exp();
    let w0sq = p.omega0 * p.omega0;
    Mat2::new(
        damp * (c + p.gamma * s),
        damp * s,
        -damp * w0sq * s,
        damp * (c - p.gamma * s),
    )
}

/// Phi_t applied blockwise to a phase point.
pub fn flow_forward(p: &ModelParams, t: f64, y0: &PhasePoint) -> PhasePoint {
    let m = flow_matrix(p, t);
    apply_blockwise(&m, y0)
}

/// Phi_{-t}; satisfies Phi_{-t} o Phi_t = id.
pub fn flow_inverse(p: &ModelParams, t: f64, y: &PhasePoint) -> PhasePoint {
    let m = flow_matrix(p, -t);
    apply_blockwise(&m, y)
}

fn apply_blockwise(m: &Mat2, y: &PhasePoint) -> PhasePoint {
    let mut x = Vec::with_capacity(y.dim());
    let mut xi = Vec::with_capacity(y.dim());
    for i in 0..y.dim() {
        let (a, b) = m.apply(y.x[i], y.xi[i]);
        x.push(a);
        xi.push(b);
    }
    PhasePoint { x, xi }
}

/// Scalar divergence coefficients of the flow.
///
/// The inverse flow's position row is X_{-t}(x, xi) = alpha(t) x + beta(t) xi
/// and the forward row is X_t(x0, xi0) = alpha_fwd(t) x0 + beta_fwd(t) xi0.
/// They satisfy alpha' = omega0^2 beta and beta' = -alpha + 2 gamma beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
    pub alpha_fwd: f64,
    pub beta_fwd: f64,
}

pub fn flow_coefficients(p: &ModelParams, t: f64) -> FlowCoefficients {
    let sigma = p.sigma();
    let (c, s) = flow_cs(sigma, t);
    let grow = (p.gamma * t).exp();
    let damp = (-p.gamma * t).exp();
    let w0sq = p.omega0 * p.omega0;
    let alpha = grow * (c - p.gamma * s);
    let beta = -grow * s;
    FlowCoefficients {
        alpha,
        beta,
        alpha_dot: w0sq * beta,
        beta_dot: -alpha + 2.0 * p.gamma * beta,
        alpha_fwd: damp * (c + p.gamma * s),
        beta_fwd: damp * s,
    }
}

/// det d(Phi_t)/dy = exp(-2 d gamma t).
pub fn jacobian_determinant(p: &ModelParams, t: f64) -> f64 {
    (-2.0 * p.dim as f64 * p.gamma * t).exp()
}

/// Convenience row for CSV export: one time sample of every coefficient.
#[derive(Debug, Clone, Copy)]
pub struct FlowSample {
    pub t: f64,
    pub coeffs: FlowCoefficients,
    pub jacobian: f64,
}

pub fn flow_series(p: &ModelParams, times: &[f64]) -> Result<Vec<FlowSample>> {
    Ok(times
        .iter()
        .map(|&t| FlowSample {
            t,
            coeffs: flow_coefficients(p, t),
            jacobian: jacobian_determinant(p, t),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odeint::integrate_rkf45;
    use std::f64::consts::{E, FRAC_PI_2};

    fn params(gamma: f64, omega0: f64) -> ModelParams {
        ModelParams::new(gamma, omega0, 1.0, 1.0, 0.0, 1).unwrap()
    }

    /// Reference: integrate the characteristic ODEs directly.
    fn ode_flow(p: &ModelParams, t: f64, x0: f64, v0: f64) -> (f64, f64) {
        let w0sq = p.omega0 * p.omega0;
        let g2 = 2.0 * p.gamma;
        let y = integrate_rkf45(
            move |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -(w0sq * y[0] + g2 * y[1]);
            },
            0.0,
            &[x0, v0],
            t,
            1e-12,
            1e-14,
        );
        (y[0], y[1])
    }

    #[test]
    fn flow_at_time_zero_is_identity() {
        for p in [params(0.5, 1.5), params(2.0, 0.5), params(1.0, 1.0)] {
            let y = PhasePoint::new_1d(0.7, -1.2);
            let out = flow_forward(&p, 0.0, &y);
            assert_eq!((out.x[0], out.xi[0]), (0.7, -1.2));
            let c = flow_coefficients(&p, 0.0);
            assert_eq!((c.alpha, c.beta, c.alpha_fwd, c.beta_fwd), (1.0, 0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn frictionless_quarter_period_rotation() {
        // gamma=0, omega0=1: quarter period maps (1, 0) to (0, -1)
        let p = params(0.0, 1.0);
        let out = flow_forward(&p, FRAC_PI_2, &PhasePoint::new_1d(1.0, 0.0));
        assert!(out.x[0].abs() < 1e-15);
        assert!((out.xi[0] + 1.0).abs() < 1e-15);
        // and the inverse recovers the start
        let back = flow_inverse(&p, FRAC_PI_2, &PhasePoint::new_1d(0.0, -1.0));
        assert!((back.x[0] - 1.0).abs() < 1e-15);
        assert!(back.xi[0].abs() < 1e-15);
    }

    #[test]
    fn critical_damping_closed_form() {
        // gamma=omega0=1, t=1: (1, 0) -> e^{-1} (2, -1)
        let p = params(1.0, 1.0);
        let out = flow_forward(&p, 1.0, &PhasePoint::new_1d(1.0, 0.0));
        assert!((out.x[0] - 2.0 / E).abs() < 1e-14);
        assert!((out.xi[0] + 1.0 / E).abs() < 1e-14);
    }

    #[test]
    fn matches_ode_integration_all_regimes() {
        let cases = [
            params(0.0, 1.0),
            params(0.3, 1.4),
            params(1.0, 1.0),
            params(2.0, 0.7),
            params(1.5, 0.0),
            params(0.0, 0.0),
        ];
        for p in cases {
            for &t in &[0.1, 0.5, 1.0, 3.7, 10.0] {
                let (x0, v0) = (0.8, -0.6);
                let got = flow_forward(&p, t, &PhasePoint::new_1d(x0, v0));
                let (ex, ev) = ode_flow(&p, t, x0, v0);
                let scale = ex.abs().max(ev.abs()).max(1e-3);
                assert!(
                    (got.x[0] - ex).abs() / scale < 1e-9 && (got.xi[0] - ev).abs() / scale < 1e-9,
                    "gamma={} omega0={} t={t}: ({}, {}) vs ({ex}, {ev})",
                    p.gamma,
                    p.omega0,
                    got.x[0],
                    got.xi[0]
                );
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        // The roundtrip condition number is e^{2 gamma t}: moderate damping
        // covers t = 10 at the strict tolerance, strong damping is checked on
        // shorter horizons where the identity is still well-posed in f64.
        for p in [params(0.15, 1.1), params(0.25, 0.1), params(0.2, 0.2)] {
            for &t in &[0.1, 1.0, 10.0] {
                let y = PhasePoint::new_1d(1.3, 0.2);
                let fwd = flow_forward(&p, t, &y);
                let back = flow_inverse(&p, t, &fwd);
                assert!((back.x[0] - y.x[0]).abs() < 1e-12 * y.x[0].abs().max(1.0));
                assert!((back.xi[0] - y.xi[0]).abs() < 1e-12);
            }
        }
        for p in [params(0.4, 1.1), params(1.3, 0.6), params(0.9, 0.9)] {
            for &t in &[0.1, 1.0, 2.0] {
                let y = PhasePoint::new_1d(1.3, 0.2);
                let fwd = flow_forward(&p, t, &y);
                let back = flow_inverse(&p, t, &fwd);
                let cond = (2.0 * p.gamma * t).exp();
                assert!((back.x[0] - y.x[0]).abs() < 1e-12 * cond.max(1.0));
                assert!((back.xi[0] - y.xi[0]).abs() < 1e-12 * cond.max(1.0));
            }
        }
    }

    #[test]
    fn free_streaming_coefficients() {
        // gamma = omega0 = 0: alpha = 1, beta = -t, alpha_fwd = 1, beta_fwd = t
        let p = params(0.0, 0.0);
        let c = flow_coefficients(&p, 2.5);
        assert_eq!(c.alpha, 1.0);
        assert_eq!(c.beta, -2.5);
        assert_eq!(c.alpha_fwd, 1.0);
        assert_eq!(c.beta_fwd, 2.5);
    }

    #[test]
    fn rotation_coefficients() {
        // gamma=0, omega0=1: alpha = cos t, beta = -sin t
        let p = params(0.0, 1.0);
        let c = flow_coefficients(&p, 0.8);
        assert!((c.alpha - 0.8f64.cos()).abs() < 1e-15);
        assert!((c.beta + 0.8f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn coefficients_match_flow_matrix_rows() {
        for p in [params(0.4, 1.1), params(1.3, 0.6), params(1.0, 1.0)] {
            let t = 1.7;
            let c = flow_coefficients(&p, t);
            let fwd = flow_matrix(&p, t);
            let inv = flow_matrix(&p, -t);
            assert!((c.alpha - inv.a11).abs() < 1e-13 * inv.a11.abs().max(1.0));
            assert!((c.beta - inv.a12).abs() < 1e-13 * inv.a12.abs().max(1.0));
            assert!((c.alpha_fwd - fwd.a11).abs() < 1e-15);
            assert!((c.beta_fwd - fwd.a12).abs() < 1e-15);
        }
    }

    #[test]
    fn jacobian_closed_form() {
        // gamma=0 -> 1; gamma=1, d=1, t=1 -> e^{-2}; gamma=1, d=2, t=0.5 -> e^{-2}
        assert_eq!(jacobian_determinant(&params(0.0, 1.0), 5.0), 1.0);
        assert!((jacobian_determinant(&params(1.0, 1.0), 1.0) - (-2.0f64).exp()).abs() < 1e-16);
        let p2 = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 2).unwrap();
        assert!((jacobian_determinant(&p2, 0.5) - (-2.0f64).exp()).abs() < 1e-16);
        // and it matches the matrix determinant per pair
        let p = params(0.8, 1.2);
        let det = flow_matrix(&p, 1.3).det();
        assert!((det - jacobian_determinant(&p, 1.3)).abs() < 1e-14);
    }

    #[test]
    fn regime_continuity_across_critical() {
        // Phi_t at gamma = omega0 (1 +- 1e-6) stays within 1e-4 of critical.
        let omega0 = 1.0;
        let crit = params(omega0, omega0);
        for sign in [-1.0, 1.0] {
            let p = params(omega0 * (1.0 + sign * 1e-6), omega0);
            for &t in &[0.5, 2.0, 10.0] {
                let a = flow_forward(&crit, t, &PhasePoint::new_1d(1.0, 1.0));
                let b = flow_forward(&p, t, &PhasePoint::new_1d(1.0, 1.0));
                assert!((a.x[0] - b.x[0]).abs() < 1e-4);
                assert!((a.xi[0] - b.xi[0]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn forward_spread_coefficient_sign() {
        // beta_fwd >= 0 on t >= 0 for overdamped and critical flows, and for
        // underdamped flows up to the first half period t < pi/omega.
        for p in [params(1.5, 0.5), params(1.0, 1.0), params(2.0, 0.0)] {
            for &t in &[0.0, 0.3, 1.0, 4.0, 20.0] {
                assert!(flow_coefficients(&p, t).beta_fwd >= 0.0);
            }
        }
        let p = params(0.2, 1.3);
        let omega = (p.omega0 * p.omega0 - p.gamma * p.gamma).sqrt();
        let half_period = std::f64::consts::PI / omega;
        for k in 1..20 {
            let t = half_period * k as f64 / 20.0;
            assert!(flow_coefficients(&p, t).beta_fwd >= 0.0);
        }
    }

    #[test]
    fn regime_tags() {
        assert!(matches!(regime(&params(0.3, 1.0)), FlowRegime::Underdamped { .. }));
        assert!(matches!(regime(&params(1.3, 1.0)), FlowRegime::Overdamped { .. }));
        assert!(matches!(regime(&params(1.0, 1.0)), FlowRegime::Critical));
        if let FlowRegime::Underdamped { omega } = regime(&params(0.6, 1.0)) {
            assert!((omega - 0.8f64).abs() < 1e-15);
        }
    }
}
