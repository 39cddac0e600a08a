//! Dispersion rates and L^p decay envelopes for the unconfined cases.
//!
//! Without an equilibrium the solution spreads; the spread is governed by
//!
//!   R_w(t) = e^{-4 gamma t} (4 lambda nu - mu^2),
//!   R_n(t) = 2 (lambda af^2 - mu af bf + nu bf^2),
//!
//! where af, bf are the forward-flow divergence coefficients. R_n is exactly
//! the position variance of the Green's function's state Gaussian, so the
//! xi-marginal of G is the normal density with variance R_n centered on the
//! forward flow. The minus sign on the cross term is pinned by that marginal
//! identity (the covariance cross entry is -mu).
//!
//! Each case also has a polynomial/exponential closed form, implemented with
//! cancellation-free primitives. In the friction-dominated case the Dqq term
//! carries the product Dpp*Dqq: the defining identity above forces it, and
//! the tests pin the two routes against each other at 1e-10.

use crate::covariance::{covariance, state_covariance};
use crate::error::{QfpError, Result};
use crate::flow::flow_coefficients;
use crate::numerics::{
    one_minus_exp_neg, overdamped_rn_core, overdamped_rw_core, phi_sq_minus_two_cos_plus_two,
    phi_sq_plus_two_cos_minus_two, x_minus_sin,
};
use crate::params::ModelParams;

/// Which unconfined regime the parameters fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionCase {
    /// omega0 > gamma = 0: conservative oscillator with diffusion.
    OscillatorNoFriction,
    /// gamma > omega0 = 0: friction without restoring force.
    FrictionFree,
    /// gamma = omega0 = 0.
    FreeStreaming,
}

pub fn dispersion_case(p: &ModelParams) -> Result<DispersionCase> {
    match (p.gamma > 0.0, p.omega0 > 0.0) {
        (true, true) => Err(QfpError::ConfinedCase),
        (false, true) => Ok(DispersionCase::OscillatorNoFriction),
        (true, false) => Ok(DispersionCase::FrictionFree),
        (false, false) => Ok(DispersionCase::FreeStreaming),
    }
}

/// Closed-form R_w(t); equals e^{-4 gamma t} disc(t) to rounding.
pub fn rate_rw(p: &ModelParams, t: f64) -> Result<f64> {
    let case = dispersion_case(p)?;
    if t < 0.0 {
        return Err(QfpError::NegativeParameter { name: "t", value: t });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(match case {
        DispersionCase::OscillatorNoFriction => {
            let w0 = p.omega0;
            let phi = 2.0 * t * w0;
            let c = phi.cos();
            0.25 * (p.dqq * p.dqq + p.dpp * p.dpp / w0.powi(4))
                * phi_sq_plus_two_cos_minus_two(phi)
                + 2.0 / (w0 * w0) * p.dpq * p.dpq * (c - 1.0)
                + 0.5 / (w0 * w0) * p.dpp * p.dqq * phi_sq_minus_two_cos_plus_two(phi)
        }
        DispersionCase::FrictionFree => {
            let g = p.gamma;
            let u = 2.0 * g * t;
            let chi_one = one_minus_exp_neg(u); // 1 - chi
            let chi_sq_one = one_minus_exp_neg(2.0 * u); // 1 - chi^2
            // core = t gamma (1 - chi^2) - (1 - chi)^2, cancellation-free
            let core = overdamped_rw_core(u);
            (p.dpp * p.dpp + 4.0 * g * p.dpp * p.dpq) / (4.0 * g.powi(4)) * core
                - p.dpq * p.dpq / (g * g) * chi_one * chi_one
                + t / g * p.dpp * p.dqq * chi_sq_one
        }
        DispersionCase::FreeStreaming => {
            (4.0 * p.dpp * p.dqq - 4.0 * p.dpq * p.dpq) * t * t
                + p.dpp * p.dpp * t.powi(4) / 3.0
        }
    })
}

/// R_w through the defining identity e^{-4 gamma t} (4 lambda nu - mu^2),
/// for cross-checking the closed forms. Evaluated as det Sigma_y, which is
/// the same quantity assembled from forward-decaying integrals and therefore
/// keeps full precision at any gamma t.
pub fn rate_rw_from_covariance(p: &ModelParams, t: f64) -> Result<f64> {
    dispersion_case(p)?;
    Ok(state_covariance(p, t)?.det())
}

/// Closed-form R_n(t).
pub fn rate_rn(p: &ModelParams, t: f64) -> Result<f64> {
    let case = dispersion_case(p)?;
    if t < 0.0 {
        return Err(QfpError::NegativeParameter { name: "t", value: t });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(match case {
        DispersionCase::OscillatorNoFriction => {
            let w0 = p.omega0;
            let phi = 2.0 * t * w0;
            // 2 w0^3 R_n = 2 w0 Dpq (1 - cos phi) + Dpp (phi - sin phi)
            //            + w0^2 Dqq (phi + sin phi)
            let one_minus_cos = {
                let s = (0.5 * phi).sin();
                2.0 * s * s
            };
            (2.0 * w0 * p.dpq * one_minus_cos
                + p.dpp * x_minus_sin(phi)
                + w0 * w0 * p.dqq * (phi + phi.sin()))
                / (2.0 * w0 * w0 * w0)
        }
        DispersionCase::FrictionFree => {
            let g = p.gamma;
            let u = 2.0 * g * t;
            // 8 g^3 R_n = Dpp (4 chi + 4 g t - 3 - chi^2) + 16 g^3 t Dqq
            //           + 8 g Dpq (chi + 2 g t - 1)
            let dpp_core = overdamped_rn_core(u); // = 4chi + 4gt - 3 - chi^2
            let dpq_core = u - one_minus_exp_neg(u); // = chi + 2 g t - 1
            (p.dpp * dpp_core + 8.0 * g * p.dpq * dpq_core) / (8.0 * g * g * g) + 2.0 * t * p.dqq
        }
        DispersionCase::FreeStreaming => {
            2.0 * p.dqq * t + 2.0 * p.dpq * t * t + 2.0 / 3.0 * p.dpp * t * t * t
        }
    })
}

/// R_n through its definition 2(lambda af^2 - mu af bf + nu bf^2), which is
/// the x-entry of the state covariance; evaluated through the stable
/// forward-integral route.
pub fn rate_rn_from_covariance(p: &ModelParams, t: f64) -> Result<f64> {
    dispersion_case(p)?;
    Ok(state_covariance(p, t)?.xx)
}

/// The literal cross-term combination from the kernel triple; agrees with
/// [`rate_rn_from_covariance`] wherever the cancellation is representable.
pub fn rate_rn_from_triple(p: &ModelParams, t: f64) -> Result<f64> {
    dispersion_case(p)?;
    let c = covariance(p, t)?;
    let f = flow_coefficients(p, t);
    Ok(2.0
        * (c.lambda * f.alpha_fwd * f.alpha_fwd - c.mu * f.alpha_fwd * f.beta_fwd
            + c.nu * f.beta_fwd * f.beta_fwd))
}

/// Decay envelope C_p R_w^{-d/(2q)} ||w0||_1 with 1/p + 1/q = 1.
///
/// C_inf = (2 pi)^{-d} is the exact sup bound of the kernel route; C_p
/// interpolates as C_inf^{1/q}, so p = 1 returns ||w0||_1 unchanged.
pub fn lp_decay_envelope(p: &ModelParams, t: f64, p_norm: f64, norm_w0_l1: f64) -> Result<f64> {
    dispersion_case(p)?;
    if !(p_norm >= 1.0) {
        return Err(QfpError::NegativeParameter {
            name: "p_norm",
            value: p_norm,
        });
    }
    if p_norm == 1.0 {
        return Ok(norm_w0_l1);
    }
    let inv_q = 1.0 - 1.0 / p_norm; // 1/q, with 1/inf = 0
    let d = p.dim as f64;
    let rw = rate_rw(p, t)?;
    if rw <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let c_inf = (2.0 * std::f64::consts::PI).powf(-d);
    Ok(c_inf.powf(inv_q) * rw.powf(-0.5 * d * inv_q) * norm_w0_l1)
}

/// Large-time growth orders (order_rw, order_rn) of the rate functions.
pub fn asymptotic_orders(p: &ModelParams) -> Result<(u32, u32)> {
    if !(p.dpp > 0.0) {
        return Err(QfpError::NegativeParameter {
            name: "dpp",
            value: p.dpp,
        });
    }
    Ok(match dispersion_case(p)? {
        DispersionCase::OscillatorNoFriction => (2, 1),
        DispersionCase::FrictionFree => (1, 1),
        DispersionCase::FreeStreaming => (4, 3),
    })
}
