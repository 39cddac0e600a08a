//! The explicit Gaussian fundamental solution.
//!
//! For fixed t > 0 the kernel
//!
//!   F(t, z) = (2 pi)^{-d} disc^{-d/2} exp( -(nu |zx|^2 + lambda |zv|^2 + mu zx.zv) / disc )
//!
//! is the centered Gaussian density whose per-pair covariance block is
//! [[2 lambda, -mu], [-mu, 2 nu]] (disc = 4 lambda nu - mu^2 is its
//! determinant). The Green's function composes F with the inverse flow:
//!
//!   G(t, y, y0) = e^{2 d gamma t} F(t, Phi_{-t}(y) - y0),
//!
//! which is, as a function of the state y, the normalized Gaussian with mean
//! Phi_t(y0) and covariance M Sigma_z M^T (M the forward flow block). The
//! state marginal integrates to one — that is the mass-conservation
//! statement — while the initial-point marginal integrates to
//! e^{2 d gamma t}. In Fourier variables, F_hat = exp(-(lambda |k|^2 +
//! nu |eta|^2 - mu k.eta)); the sign flip on the cross term relative to the
//! real-space exponent is forced by the inversion, not a convention choice.

use crate::covariance::{covariance, state_covariance, CovarianceTriple};
use crate::error::{QfpError, Result};
use crate::flow::flow_matrix;
use crate::grid::PhaseGrid;
use crate::linalg::{Mat2, Sym2};
use crate::params::{ModelParams, PhasePoint};

/// Kernel evaluation refuses times below this; callers wanting t = 0 should
/// use the initial data directly.
pub const T_MIN: f64 = 1e-12;

/// Precomputed kernel state for repeated evaluation over grids.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    t: f64,
    dim: usize,
    cov: CovarianceTriple,
    disc: f64,
    /// Phi_{-t} block.
    inv_flow: Mat2,
    /// Phi_t block.
    fwd_flow: Mat2,
    /// Sigma_y block (state-argument covariance).
    state_cov: Sym2,
    /// log of (2 pi)^{-d} disc^{-d/2}.
    log_prefactor: f64,
    /// 2 d gamma t.
    log_growth: f64,
    /// Exponent coefficients nu/disc, lambda/disc, mu/disc.
    cnu: f64,
    clam: f64,
    cmu: f64,
}

impl GaussianKernel {
    pub fn new(p: &ModelParams, t: f64) -> Result<Self> {
        if !(t > T_MIN) || !t.is_finite() {
            return Err(QfpError::SingularTime { t, min: T_MIN });
        }
        let cov = covariance(p, t)?;
        let disc = cov.disc();
        if disc <= 0.0 {
            return Err(QfpError::DegenerateDiffusion { delta: disc });
        }
        let d = p.dim as f64;
        Ok(GaussianKernel {
            t,
            dim: p.dim,
            cov,
            disc,
            inv_flow: flow_matrix(p, -t),
            fwd_flow: flow_matrix(p, t),
            state_cov: state_covariance(p, t)?,
            log_prefactor: -d * (2.0 * std::f64::consts::PI).ln() - 0.5 * d * disc.ln(),
            log_growth: 2.0 * d * p.gamma * t,
            cnu: cov.nu / disc,
            clam: cov.lambda / disc,
            cmu: cov.mu / disc,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn covariance(&self) -> CovarianceTriple {
        self.cov
    }

    pub fn disc(&self) -> f64 {
        self.disc
    }

    pub fn inverse_flow(&self) -> Mat2 {
        self.inv_flow
    }

    pub fn forward_flow(&self) -> Mat2 {
        self.fwd_flow
    }

    /// Covariance block of F in (zx, zv): [[2 lambda, -mu], [-mu, 2 nu]].
    pub fn base_covariance_block(&self) -> Sym2 {
        Sym2::new(2.0 * self.cov.lambda, -self.cov.mu, 2.0 * self.cov.nu)
    }

    /// Covariance block of G as a Gaussian in the state argument,
    /// Sigma_y = M Sigma_z M^T, computed through the forward-integral route
    /// that stays accurate at large gamma t.
    pub fn state_covariance_block(&self) -> Sym2 {
        self.state_cov
    }

    /// F(t, z) for a phase point z of the model's dimension.
    pub fn eval_f(&self, z: &PhasePoint) -> f64 {
        assert_eq!(z.dim(), self.dim);
        let (xx, vv, xv) = z.quadratic_invariants();
        let expo = -(self.cnu * xx + self.clam * vv + self.cmu * xv);
        (self.log_prefactor + expo).exp()
    }

    /// G(t, y, y0) = e^{2 d gamma t} F(t, Phi_{-t}(y) - y0).
    pub fn eval_g(&self, y: &PhasePoint, y0: &PhasePoint) -> f64 {
        assert_eq!(y.dim(), self.dim);
        assert_eq!(y0.dim(), self.dim);
        let mut xx = 0.0;
        let mut vv = 0.0;
        let mut xv = 0.0;
        for i in 0..self.dim {
            let (bx, bv) = self.inv_flow.apply(y.x[i], y.xi[i]);
            let zx = bx - y0.x[i];
            let zv = bv - y0.xi[i];
            xx += zx * zx;
            vv += zv * zv;
            xv += zx * zv;
        }
        let expo = -(self.cnu * xx + self.clam * vv + self.cmu * xv);
        (self.log_growth + self.log_prefactor + expo).exp()
    }

    /// 1-d fast path used by the grid loops.
    #[inline]
    pub fn eval_g_1d(&self, x: f64, v: f64, x0: f64, v0: f64) -> f64 {
        let zx = self.inv_flow.a11 * x + self.inv_flow.a12 * v - x0;
        let zv = self.inv_flow.a21 * x + self.inv_flow.a22 * v - v0;
        let expo = -(self.cnu * zx * zx + self.clam * zv * zv + self.cmu * zx * zv);
        (self.log_growth + self.log_prefactor + expo).exp()
    }

    /// Same quadratic form with the back-flowed state precomputed.
    #[inline]
    pub fn eval_g_backflowed(&self, bx: f64, bv: f64, x0: f64, v0: f64) -> f64 {
        let zx = bx - x0;
        let zv = bv - v0;
        let expo = -(self.cnu * zx * zx + self.clam * zv * zv + self.cmu * zx * zv);
        (self.log_growth + self.log_prefactor + expo).exp()
    }

    /// Analytic Fourier transform of F at wavevectors (k, eta), using the
    /// non-unitary transform with kernel e^{-i(x.k + xi.eta)}:
    /// exp(-(lambda |k|^2 + nu |eta|^2 - mu k.eta)).
    pub fn eval_f_hat(&self, k: &[f64], eta: &[f64]) -> f64 {
        assert_eq!(k.len(), self.dim);
        assert_eq!(eta.len(), self.dim);
        let kk: f64 = k.iter().map(|a| a * a).sum();
        let ee: f64 = eta.iter().map(|a| a * a).sum();
        let ke: f64 = k.iter().zip(eta).map(|(a, b)| a * b).sum();
        (-(self.cov.lambda * kk + self.cov.nu * ee - self.cov.mu * ke)).exp()
    }
}

/// Pointwise F; see [`GaussianKernel::eval_f`].
pub fn kernel_f(p: &ModelParams, t: f64, z: &PhasePoint) -> Result<f64> {
    Ok(GaussianKernel::new(p, t)?.eval_f(z))
}

/// Pointwise G; see [`GaussianKernel::eval_g`].
pub fn kernel_g(p: &ModelParams, t: f64, y: &PhasePoint, y0: &PhasePoint) -> Result<f64> {
    Ok(GaussianKernel::new(p, t)?.eval_g(y, y0))
}

/// Analytic Fourier transform of F.
pub fn kernel_f_hat(p: &ModelParams, t: f64, k: &[f64], eta: &[f64]) -> Result<f64> {
    Ok(GaussianKernel::new(p, t)?.eval_f_hat(k, eta))
}

/// Max over sampled argument pairs of the semigroup defect
///
///   | int G(t, y, z) G(s, z, y0) dz  -  G(t+s, y, y0) |,
///
/// with the middle integral done by trapezoid on `grid`. s = 0 compares
/// against G(t) directly and returns 0.
pub fn chapman_kolmogorov_residual(
    p: &ModelParams,
    t: f64,
    s: f64,
    grid: &PhaseGrid,
) -> Result<f64> {
    if p.dim != 1 {
        return Err(QfpError::InvalidInput(
            "semigroup residual is implemented for d = 1".into(),
        ));
    }
    if s == 0.0 {
        // int G(t,y,z) delta(z - y0) dz = G(t,y,y0) identically
        GaussianKernel::new(p, t)?;
        return Ok(0.0);
    }
    let kt = GaussianKernel::new(p, t)?;
    let ks = GaussianKernel::new(p, s)?;
    let kts = GaussianKernel::new(p, t + s)?;

    // Sample pairs spread over the inner half of the grid.
    let pick = |frac: f64| -> (f64, f64) { (grid.lx() * frac, grid.lv() * -frac * 0.5) };
    let pairs = [
        (pick(0.0), (0.1, 0.2)),
        (pick(0.25), (-0.3, 0.1)),
        ((0.4, -0.3), (0.5, 0.4)),
        ((-0.6, 0.2), (0.0, 0.0)),
    ];

    let mut worst = 0.0f64;
    for &((yx, yv), (y0x, y0v)) in &pairs {
        let mut acc = 0.0;
        for i in 0..grid.nx() {
            for j in 0..grid.nv() {
                let (zx, zv) = (grid.x(i), grid.v(j));
                acc += kt.eval_g_1d(yx, yv, zx, zv)
                    * ks.eval_g_1d(zx, zv, y0x, y0v)
                    * grid.trap_weight(i, j);
            }
        }
        let direct = kts.eval_g_1d(yx, yv, y0x, y0v);
        worst = worst.max((acc - direct).abs());
    }
    Ok(worst)
}
