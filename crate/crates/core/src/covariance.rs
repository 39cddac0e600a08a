//! The covariance functions lambda(t), nu(t), mu(t) of the Gaussian kernel.
//!
//! With alpha, beta the inverse-flow coefficients,
//!
//!   lambda = int_0^t Dqq a^2 + Dpp b^2 + 2 Dpq a b ds,
//!   nu     = int_0^t Dqq a'^2 + Dpp b'^2 + 2 Dpq a' b' ds,
//!   mu     = 2 int_0^t Dqq a a' + Dpp b b' + Dpq (a b)' ds,
//!
//! and the discriminant 4 lambda nu - mu^2 controls the kernel spread. mu has
//! the exact endpoint form Dqq (a^2 - 1) + Dpp b^2 + 2 Dpq a b. lambda and nu
//! reduce to three primitive integrals
//!
//!   A1 = int e^{2 gamma s} S^2,  A2 = int e^{2 gamma s} S C,  A3 = int e^{2 gamma s} C^2,
//!
//! with the regime-unified C, S from the flow module. Near the critical line
//! (|sigma| t^2 small) the trig/hyperbolic antiderivatives lose all their
//! digits to cancellation, so that window is evaluated by a series in
//! x = sigma t^2 instead; both branches overlap accurately at the switch.

use crate::error::{QfpError, Result};
use crate::flow::{flow_coefficients, flow_cs};
use crate::numerics::{exp_integral, integrate, power_exp_integrals};
use crate::params::ModelParams;

/// Switch to the sigma-series once |sigma| t^2 drops below this.
const SERIES_SWITCH: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceTriple {
    pub lambda: f64,
    pub nu: f64,
    pub mu: f64,
}

impl CovarianceTriple {
    /// 4 lambda nu - mu^2 >= 0, strictly positive for t > 0.
    pub fn disc(&self) -> f64 {
        4.0 * self.lambda * self.nu - self.mu * self.mu
    }

    /// mu^2 / (4 lambda nu), the squared correlation of the kernel Gaussian;
    /// disc > 0 iff this is < 1. Stays finite when the product 4 lambda nu
    /// overflows, so large-time positivity checks use it instead of `disc`.
    pub fn cross_ratio(&self) -> f64 {
        let r = self.mu / (2.0 * self.lambda.sqrt() * self.nu.sqrt());
        r * r
    }

    /// ln(4 lambda nu - mu^2), overflow-free.
    pub fn log_disc(&self) -> f64 {
        (4.0f64).ln() + self.lambda.ln() + self.nu.ln() + (-self.cross_ratio()).ln_1p()
    }
}

/// Primitive integrals (A1, A2, A3) over [0, t].
fn a_integrals(gamma: f64, sigma: f64, t: f64) -> (f64, f64, f64) {
    let x = sigma * t * t;
    if x.abs() < SERIES_SWITCH {
        // S^2  = s^2 (1 - x/3 + 2x^2/45 - x^3/315),      x = sigma s^2
        // S C  = s   (1 - 2x/3 + 2x^2/15 - 4x^3/315)
        // C^2  =     (1 - x + x^2/3 - 2x^3/45)
        let k = power_exp_integrals(2.0 * gamma, t, 8);
        let s1 = sigma;
        let s2 = sigma * sigma;
        let s3 = s2 * sigma;
        let a1 = k[2] - s1 * k[4] / 3.0 + 2.0 * s2 * k[6] / 45.0 - s3 * k[8] / 315.0;
        let a2 = k[1] - 2.0 * s1 * k[3] / 3.0 + 2.0 * s2 * k[5] / 15.0 - 4.0 * s3 * k[7] / 315.0;
        let a3 = k[0] - s1 * k[2] + s2 * k[4] / 3.0 - 2.0 * s3 * k[6] / 45.0;
        (a1, a2, a3)
    } else if sigma > 0.0 {
        // trig: int e^{2g s} {1, cos 2ws, sin 2ws} with 4 g^2 + 4 w^2 = 4 omega0^2
        let w = sigma.sqrt();
        let e0 = exp_integral(2.0 * gamma, t);
        let e2gt = (2.0 * gamma * t).exp();
        let denom = 4.0 * (gamma * gamma + sigma);
        let ec = (e2gt * (2.0 * gamma * (2.0 * w * t).cos() + 2.0 * w * (2.0 * w * t).sin())
            - 2.0 * gamma)
            / denom;
        let es = (e2gt * (2.0 * gamma * (2.0 * w * t).sin() - 2.0 * w * (2.0 * w * t).cos())
            + 2.0 * w)
            / denom;
        let a3 = 0.5 * (e0 + ec);
        let a1 = 0.5 * (e0 - ec) / sigma;
        let a2 = 0.5 * es / w;
        (a1, a2, a3)
    } else {
        // hyperbolic: split cosh/sinh into exponentials so the
        // omega0 = 0 case (2 gamma - 2 w = 0) stays exact
        let w = (-sigma).sqrt();
        let e0 = exp_integral(2.0 * gamma, t);
        let ep = exp_integral(2.0 * gamma + 2.0 * w, t);
        let em = exp_integral(2.0 * gamma - 2.0 * w, t);
        let ech = 0.5 * (ep + em);
        let esh = 0.5 * (ep - em);
        let a3 = 0.5 * (e0 + ech);
        let a1 = 0.5 * (ech - e0) / (-sigma);
        let a2 = 0.5 * esh / w;
        (a1, a2, a3)
    }
}

/// Covariance block of the Green's function viewed as a Gaussian in the
/// state argument: Sigma_y(t) = int_0^t Phi_s (2D) Phi_s^T ds, assembled
/// from forward-decaying integrands (the same primitives with gamma
/// negated). Unlike the congruence M Sigma_z M^T, every term here is O(1)
/// against the result, so the entries and the determinant keep full
/// precision at large gamma t. det Sigma_y = e^{-4 gamma t} disc and
/// (Sigma_y)_xx is the density spread rate.
pub fn state_covariance(p: &ModelParams, t: f64) -> Result<crate::linalg::Sym2> {
    if t < 0.0 || !t.is_finite() {
        return Err(QfpError::NegativeParameter { name: "t", value: t });
    }
    let sigma = p.sigma();
    let (a1, a2, a3) = a_integrals(-p.gamma, sigma, t);
    let g = p.gamma;
    let w0sq = p.omega0 * p.omega0;
    // forward rows: e^{-gamma s} (C + gamma S, S) and e^{-gamma s} (-w0^2 S, C - gamma S)
    let xx = 2.0
        * (p.dqq * (a3 + 2.0 * g * a2 + g * g * a1)
            + 2.0 * p.dpq * (a2 + g * a1)
            + p.dpp * a1);
    let xv = 2.0
        * (-w0sq * p.dqq * (a2 + g * a1)
            + p.dpq * (a3 - (g * g + w0sq) * a1)
            + p.dpp * (a2 - g * a1));
    let vv = 2.0
        * (w0sq * w0sq * p.dqq * a1 - 2.0 * w0sq * p.dpq * (a2 - g * a1)
            + p.dpp * (a3 - 2.0 * g * a2 + g * g * a1));
    Ok(crate::linalg::Sym2::new(xx, xv, vv))
}

/// Closed-form covariance triple at time t >= 0.
pub fn covariance(p: &ModelParams, t: f64) -> Result<CovarianceTriple> {
    if t < 0.0 || !t.is_finite() {
        return Err(QfpError::NegativeParameter { name: "t", value: t });
    }
    if t == 0.0 {
        return Ok(CovarianceTriple {
            lambda: 0.0,
            nu: 0.0,
            mu: 0.0,
        });
    }
    let sigma = p.sigma();
    let (a1, a2, a3) = a_integrals(p.gamma, sigma, t);
    let g = p.gamma;
    let w0sq = p.omega0 * p.omega0;
    // alpha = e^{g s}(C - g S), beta = -e^{g s} S,
    // alpha' = omega0^2 beta,   beta' = -e^{g s}(C + g S)
    let lambda = p.dqq * (a3 - 2.0 * g * a2 + g * g * a1) + p.dpp * a1
        + 2.0 * p.dpq * (g * a1 - a2);
    let nu = p.dqq * w0sq * w0sq * a1 + p.dpp * (a3 + 2.0 * g * a2 + g * g * a1)
        + 2.0 * p.dpq * w0sq * (a2 + g * a1);
    // endpoint form of mu
    let (c, s) = flow_cs(sigma, t);
    let grow = (g * t).exp();
    let alpha = grow * (c - g * s);
    let beta = -grow * s;
    let mu = p.dqq * (alpha * alpha - 1.0) + p.dpp * beta * beta + 2.0 * p.dpq * alpha * beta;
    Ok(CovarianceTriple { lambda, nu, mu })
}

/// The same triple by adaptive quadrature of the defining integrands; the
/// cross-check path selectable from the CLI.
pub fn covariance_quadrature(p: &ModelParams, t: f64, rel_tol: f64) -> Result<CovarianceTriple> {
    if t < 0.0 || !t.is_finite() {
        return Err(QfpError::NegativeParameter { name: "t", value: t });
    }
    let lam = integrate(
        |s| {
            let c = flow_coefficients(p, s);
            p.dqq * c.alpha * c.alpha + p.dpp * c.beta * c.beta + 2.0 * p.dpq * c.alpha * c.beta
        },
        0.0,
        t,
        rel_tol,
        1e-300,
    );
    let nu = integrate(
        |s| {
            let c = flow_coefficients(p, s);
            p.dqq * c.alpha_dot * c.alpha_dot
                + p.dpp * c.beta_dot * c.beta_dot
                + 2.0 * p.dpq * c.alpha_dot * c.beta_dot
        },
        0.0,
        t,
        rel_tol,
        1e-300,
    );
    let mu = 2.0
        * integrate(
            |s| {
                let c = flow_coefficients(p, s);
                p.dqq * c.alpha * c.alpha_dot
                    + p.dpp * c.beta * c.beta_dot
                    + p.dpq * (c.alpha * c.beta_dot + c.alpha_dot * c.beta)
            },
            0.0,
            t,
            rel_tol,
            1e-300,
        );
    Ok(CovarianceTriple {
        lambda: lam,
        nu,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(gamma: f64, omega0: f64, dpp: f64, dqq: f64, dpq: f64) -> ModelParams {
        ModelParams::new(gamma, omega0, dpp, dqq, dpq, 1).unwrap()
    }

    #[test]
    fn zero_time_is_zero() {
        let c = covariance(&p(1.0, 1.0, 1.0, 1.0, 0.0), 0.0).unwrap();
        assert_eq!((c.lambda, c.nu, c.mu), (0.0, 0.0, 0.0));
    }

    #[test]
    fn free_streaming_polynomials() {
        // gamma=omega0=0: lambda = Dqq t - Dpq t^2 + Dpp t^3/3,
        // nu = Dpp t, mu = Dpp t^2 - 2 Dpq t
        let m = p(0.0, 0.0, 1.5, 0.8, 0.2);
        for &t in &[0.3, 1.0, 4.0] {
            let c = covariance(&m, t).unwrap();
            let lam = 0.8 * t - 0.2 * t * t + 1.5 * t * t * t / 3.0;
            let nu = 1.5 * t;
            let mu = 1.5 * t * t - 2.0 * 0.2 * t;
            assert!((c.lambda - lam).abs() < 1e-12 * lam.abs().max(1.0));
            assert!((c.nu - nu).abs() < 1e-13 * nu);
            assert!((c.mu - mu).abs() < 1e-12 * mu.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_matches_quadrature_all_regimes() {
        let cases = [
            p(0.0, 1.3, 1.1, 0.7, 0.3),  // underdamped, no friction
            p(0.4, 1.3, 1.1, 0.7, 0.3),  // underdamped
            p(1.0, 1.0, 1.0, 1.0, 0.0),  // critical
            p(1.6, 0.7, 2.0, 0.6, 0.3),  // overdamped
            p(0.8, 0.0, 1.2, 0.5, 0.4),  // overdamped, no potential
            p(0.0, 0.0, 1.5, 0.8, 0.2),  // free streaming
        ];
        for m in cases {
            for &t in &[0.05, 0.3, 1.0, 3.0, 8.0, 20.0] {
                let cf = covariance(&m, t).unwrap();
                let q = covariance_quadrature(&m, t, 1e-13).unwrap();
                let scale = cf.lambda.abs().max(cf.nu.abs()).max(cf.mu.abs()).max(1e-30);
                assert!(
                    (cf.lambda - q.lambda).abs() <= 1e-10 * scale,
                    "lambda gamma={} omega0={} t={t}: {} vs {}",
                    m.gamma,
                    m.omega0,
                    cf.lambda,
                    q.lambda
                );
                assert!((cf.nu - q.nu).abs() <= 1e-10 * scale);
                assert!((cf.mu - q.mu).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn series_and_closed_branches_agree_at_switch() {
        // pick sigma, t straddling the series window
        let m = p(0.9, 1.0, 1.0, 1.0, 0.1); // sigma = 0.19
        let t_low = (0.9 * SERIES_SWITCH / m.sigma().abs()).sqrt();
        let t_high = (1.1 * SERIES_SWITCH / m.sigma().abs()).sqrt();
        let lo = covariance(&m, t_low).unwrap();
        let hi = covariance(&m, t_high).unwrap();
        let q_lo = covariance_quadrature(&m, t_low, 1e-13).unwrap();
        let q_hi = covariance_quadrature(&m, t_high, 1e-13).unwrap();
        assert!((lo.lambda - q_lo.lambda).abs() < 1e-11 * q_lo.lambda.max(1e-12));
        assert!((hi.lambda - q_hi.lambda).abs() < 1e-11 * q_hi.lambda.max(1e-12));
    }

    #[test]
    fn discriminant_positive_on_log_spaced_times() {
        // the ratio form keeps the check meaningful out to t = 100, where
        // the raw product 4 lambda nu overflows for frictional cases
        let cases = [
            p(1.0, 1.0, 1.0, 1.0, 0.0),
            p(0.0, 1.0, 1.0, 1.0, 0.0),
            p(0.0, 0.0, 1.0, 0.0, 0.0),
            p(0.9, 0.0, 1.0, 0.3, 0.2),
        ];
        for m in cases {
            let mut t = 1e-4;
            while t <= 1e2 {
                let c = covariance(&m, t).unwrap();
                // det Sigma_y = e^{-4 gamma t} disc stays well conditioned
                // even where the raw product 4 lambda nu overflows or the
                // correlation rounds to one
                let state = state_covariance(&m, t).unwrap();
                assert!(
                    c.lambda > 0.0 && c.nu > 0.0 && state.det() > 0.0,
                    "disc <= 0 at gamma={} omega0={} t={t}",
                    m.gamma,
                    m.omega0
                );
                if t < 1.0 {
                    // the direct product itself keeps full precision here
                    assert!(c.disc() > 0.0 && c.cross_ratio() < 1.0);
                    assert!((c.log_disc() - c.disc().ln()).abs() < 1e-9 * c.disc().ln().abs().max(1.0));
                }
                t *= 10.0_f64.powf(0.25);
            }
        }
    }

    #[test]
    fn state_covariance_matches_congruence_route() {
        // Sigma_y = M Sigma_z M^T wherever the congruence is well posed
        let cases = [
            p(0.4, 1.3, 1.1, 0.7, 0.3),
            p(1.0, 1.0, 1.0, 1.0, 0.0),
            p(0.8, 0.0, 1.2, 0.5, 0.4),
            p(0.0, 0.0, 1.5, 0.8, 0.2),
        ];
        for m in cases {
            for &t in &[0.1, 0.5, 1.5, 3.0] {
                let c = covariance(&m, t).unwrap();
                let z = crate::linalg::Sym2::new(2.0 * c.lambda, -c.mu, 2.0 * c.nu);
                let fwd = crate::flow::flow_matrix(&m, t);
                let via_congruence = z.congruence(&fwd);
                let direct = state_covariance(&m, t).unwrap();
                let scale = direct.xx.abs().max(direct.vv.abs());
                assert!((via_congruence.xx - direct.xx).abs() < 1e-9 * scale);
                assert!((via_congruence.xy - direct.xy).abs() < 1e-9 * scale);
                assert!((via_congruence.vv - direct.vv).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn state_covariance_approaches_equilibrium() {
        let m = p(1.0, 1.0, 1.0, 1.0, 0.0);
        // stationary covariance for these constants is [[3, -1], [-1, 1]]
        let s = state_covariance(&m, 40.0).unwrap();
        assert!((s.xx - 3.0).abs() < 1e-10);
        assert!((s.xy + 1.0).abs() < 1e-10);
        assert!((s.vv - 1.0).abs() < 1e-10);
    }

    #[test]
    fn near_critical_evaluation_is_smooth() {
        // covariance must be continuous through gamma = omega0
        let omega0 = 1.0;
        let crit = p(1.0, omega0, 1.0, 1.0, 0.0);
        for sign in [-1.0, 1.0] {
            let near = p(1.0 + sign * 1e-6, omega0, 1.0, 1.0, 0.0);
            for &t in &[0.5, 2.0, 10.0] {
                let a = covariance(&crit, t).unwrap();
                let b = covariance(&near, t).unwrap();
                let scale = a.lambda.abs().max(1.0);
                assert!((a.lambda - b.lambda).abs() < 1e-4 * scale);
                assert!((a.nu - b.nu).abs() < 1e-4 * a.nu.abs().max(1.0));
            }
        }
    }
}
