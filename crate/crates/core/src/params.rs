//! Model constants and the structures derived from them: the diffusion
//! matrix D, the drift P, and the equilibrium potential A with
//! w_inf = exp(-A).
//!
//! The kinetic equation in divergence form reads
//!
//!   d/dt w = div( D grad w + P(x, xi) w ),
//!
//! with
//!
//!   D = [[Dqq I, Dpq I], [Dpq I, Dpp I]],     P(x, xi) = (-xi, omega0^2 x + 2 gamma xi).
//!
//! Admissible constants satisfy the Lindblad condition
//!
//!   Dpp * Dqq - Dpq^2 >= (hbar * gamma / 2)^2,   Dpp > 0,
//!
//! which is checked in exact rational arithmetic so that boundary-equality
//! parameter sets are accepted deterministically.

use num::rational::BigRational;
use num::traits::FromPrimitive;

use crate::error::{QfpError, Result};
use crate::linalg::{Mat2, Sym2};

/// Default normalization: hbar = m = 1.
pub const NORMALIZED_HBAR: f64 = 1.0;
pub const NORMALIZED_MASS: f64 = 1.0;

/// Physical and model constants of the harmonically confined equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Friction rate, >= 0.
    pub gamma: f64,
    /// Oscillator frequency, >= 0.
    pub omega0: f64,
    /// Momentum diffusion, > 0.
    pub dpp: f64,
    /// Position diffusion, >= 0.
    pub dqq: f64,
    /// Cross diffusion, >= 0.
    pub dpq: f64,
    /// Spatial dimension d >= 1.
    pub dim: usize,
    /// Reduced Planck constant; 1 in the normalized frame.
    pub hbar: f64,
    /// Particle mass; 1 in the normalized frame.
    pub mass: f64,
}

/// Heat-bath description in physical units. `lambda` is the coupling
/// constant, `kb_t` the bath temperature times Boltzmann's constant and
/// `omega_cutoff` the reservoir cutoff frequency. The mapping to diffusion
/// constants is
///
///   gamma = lambda / (2 m),        Dpp = lambda kB T,
///   Dqq = lambda hbar^2 / (12 m^2 kB T),
///   Dpq = lambda Omega hbar^2 / (12 pi m kB T),
///
/// after which the constants are rescaled to the normalized frame in which
/// the scattering operator carries plain Dpp and Dpq coefficients
/// (Dpp <- Dpp/m^2, Dpq <- Dpq/m, hbar <- hbar/m, m <- 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalUnits {
    pub lambda: f64,
    pub kb_t: f64,
    pub omega_cutoff: f64,
    pub mass: f64,
    pub hbar: f64,
    pub omega0: f64,
    pub dim: usize,
}

impl ModelParams {
    /// Normalized-frame constructor (hbar = m = 1); validates on entry.
    pub fn new(gamma: f64, omega0: f64, dpp: f64, dqq: f64, dpq: f64, dim: usize) -> Result<Self> {
        Self::with_constants(gamma, omega0, dpp, dqq, dpq, dim, NORMALIZED_HBAR, NORMALIZED_MASS)
    }

    /// Constructor with explicit constants; `hbar = 0` selects the classical
    /// limit, where the Lindblad gate degenerates to Dpp Dqq >= Dpq^2.
    #[allow(clippy::too_many_arguments)]
    pub fn with_constants(
        gamma: f64,
        omega0: f64,
        dpp: f64,
        dqq: f64,
        dpq: f64,
        dim: usize,
        hbar: f64,
        mass: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            gamma,
            omega0,
            dpp,
            dqq,
            dpq,
            dim,
            hbar,
            mass,
        };
        p.validate()?;
        Ok(p)
    }

    /// Classical-limit parameters: Dqq = Dpq = 0 with hbar = 0, recovering
    /// the kinetic Fokker-Planck scattering operator.
    pub fn classical_limit(gamma: f64, omega0: f64, dpp: f64, dim: usize) -> Result<Self> {
        Self::with_constants(gamma, omega0, dpp, 0.0, 0.0, dim, 0.0, NORMALIZED_MASS)
    }

    /// Constructor from physical heat-bath data; see [`PhysicalUnits`].
    pub fn from_physical(u: PhysicalUnits) -> Result<Self> {
        for (name, value) in [
            ("lambda", u.lambda),
            ("kb_t", u.kb_t),
            ("mass", u.mass),
            ("hbar", u.hbar),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(QfpError::NegativeParameter { name, value });
            }
        }
        if u.omega_cutoff < 0.0 || !u.omega_cutoff.is_finite() {
            return Err(QfpError::NegativeParameter {
                name: "omega_cutoff",
                value: u.omega_cutoff,
            });
        }
        let gamma = u.lambda / (2.0 * u.mass);
        let dpp_phys = u.lambda * u.kb_t;
        let dqq = u.lambda * u.hbar * u.hbar / (12.0 * u.mass * u.mass * u.kb_t);
        let dpq_phys =
            u.lambda * u.omega_cutoff * u.hbar * u.hbar / (12.0 * std::f64::consts::PI * u.mass * u.kb_t);
        let p = ModelParams {
            gamma,
            omega0: u.omega0,
            dpp: dpp_phys / (u.mass * u.mass),
            dqq,
            dpq: dpq_phys / u.mass,
            dim: u.dim,
            hbar: u.hbar / u.mass,
            mass: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sign constraints plus the Lindblad gate, the latter in exact rational
    /// arithmetic (equality on the boundary is accepted).
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("gamma", self.gamma),
            ("omega0", self.omega0),
            ("dqq", self.dqq),
            ("dpq", self.dpq),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(QfpError::NegativeParameter { name, value });
            }
        }
        if !(self.dpp > 0.0) || !self.dpp.is_finite() {
            return Err(QfpError::NegativeParameter {
                name: "dpp",
                value: self.dpp,
            });
        }
        if self.hbar < 0.0 || !self.hbar.is_finite() {
            return Err(QfpError::NegativeParameter {
                name: "hbar",
                value: self.hbar,
            });
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(QfpError::NegativeParameter {
                name: "mass",
                value: self.mass,
            });
        }
        if self.dim < 1 {
            return Err(QfpError::NegativeParameter {
                name: "dim",
                value: self.dim as f64,
            });
        }

        // Exact comparison: every finite f64 is rational, so products and the
        // quarter are formed without rounding.
        let r = |x: f64| BigRational::from_f64(x).expect("finite by the checks above");
        let lhs = r(self.dpp) * r(self.dqq) - r(self.dpq) * r(self.dpq);
        let rhs =
            r(self.hbar) * r(self.hbar) * r(self.gamma) * r(self.gamma) / BigRational::from_integer(4.into());
        if lhs < rhs {
            return Err(QfpError::LindbladViolation {
                lhs: self.dpp * self.dqq - self.dpq * self.dpq,
                rhs: 0.25 * self.hbar * self.hbar * self.gamma * self.gamma,
            });
        }
        Ok(())
    }

    /// Both friction and confinement present: an equilibrium state exists.
    pub fn is_confined(&self) -> bool {
        self.gamma > 0.0 && self.omega0 > 0.0
    }

    pub(crate) fn require_confined(&self) -> Result<()> {
        if self.is_confined() {
            Ok(())
        } else {
            Err(QfpError::NoEquilibrium {
                gamma: self.gamma,
                omega0: self.omega0,
            })
        }
    }

    /// omega0^2 - gamma^2; positive underdamped, negative overdamped.
    pub(crate) fn sigma(&self) -> f64 {
        self.omega0 * self.omega0 - self.gamma * self.gamma
    }

    /// Diffusion block [[Dqq, Dpq], [Dpq, Dpp]] acting on one (x, xi) pair.
    pub fn diffusion_block(&self) -> Sym2 {
        Sym2::new(self.dqq, self.dpq, self.dpp)
    }

    /// Drift generator block B with P(y) = B y, i.e. [[0, -1], [omega0^2, 2 gamma]].
    pub fn drift_block(&self) -> Mat2 {
        Mat2::new(0.0, -1.0, self.omega0 * self.omega0, 2.0 * self.gamma)
    }
}

/// Returns the parameters unchanged when they form a valid model.
pub fn validate_params(p: ModelParams) -> Result<ModelParams> {
    p.validate()?;
    Ok(p)
}

/// A point (x, xi) in phase space, d components each.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        assert_eq!(x.len(), xi.len(), "position and velocity dimensions differ");
        PhasePoint { x, xi }
    }

    pub fn new_1d(x: f64, xi: f64) -> Self {
        PhasePoint {
            x: vec![x],
            xi: vec![xi],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// |x|^2, |xi|^2 and x . xi; the only combinations the kernels need.
    pub fn quadratic_invariants(&self) -> (f64, f64, f64) {
        let xx: f64 = self.x.iter().map(|a| a * a).sum();
        let vv: f64 = self.xi.iter().map(|a| a * a).sum();
        let xv: f64 = self.x.iter().zip(&self.xi).map(|(a, b)| a * b).sum();
        (xx, vv, xv)
    }
}

/// The diffusion matrix and drift of the divergence-form equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusion {
    diffusion: Sym2,
    gamma: f64,
    omega0: f64,
}

impl DriftDiffusion {
    pub fn diffusion_block(&self) -> Sym2 {
        self.diffusion
    }

    /// P(x, xi) = (-xi, omega0^2 x + 2 gamma xi), applied componentwise.
    pub fn drift(&self, y: &PhasePoint) -> PhasePoint {
        let mut px = Vec::with_capacity(y.dim());
        let mut pv = Vec::with_capacity(y.dim());
        for i in 0..y.dim() {
            px.push(-y.xi[i]);
            pv.push(self.omega0 * self.omega0 * y.x[i] + 2.0 * self.gamma * y.xi[i]);
        }
        PhasePoint { x: px, xi: pv }
    }
}

pub fn drift_diffusion(p: &ModelParams) -> DriftDiffusion {
    DriftDiffusion {
        diffusion: p.diffusion_block(),
        gamma: p.gamma,
        omega0: p.omega0,
    }
}

/// Smallest eigenvalue of D:
/// delta = (Dpp + Dqq - sqrt((Dpp - Dqq)^2 + 4 Dpq^2)) / 2.
pub fn smallest_diffusion_eigenvalue(p: &ModelParams) -> Result<f64> {
    let (delta, _) = p.diffusion_block().eigenvalues();
    if delta <= 0.0 {
        return Err(QfpError::DegenerateDiffusion { delta });
    }
    Ok(delta)
}

/// Largest eigenvalue of D (the companion bound delta I <= D <= Delta I).
pub fn largest_diffusion_eigenvalue(p: &ModelParams) -> f64 {
    p.diffusion_block().eigenvalues().1
}

/// The uniformly convex potential A with w_inf = exp(-A).
///
/// A(y) = 1/2 y^T H y + c0 per (x_i, xi_i) pair, where H is the inverse of
/// the stationary covariance solving B Sigma + Sigma B^T = 2 D. That Lyapunov
/// equation has the closed-form solution
///
///   Sigma = [[ (2 Dpq + 2 gamma Dqq + Q11 / (2 gamma)) / omega0^2 , -Dqq ],
///            [ -Dqq , Q11 / (2 gamma) ]],        Q11 = Dpp + omega0^2 Dqq.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPotential {
    hess: Sym2,
    covariance: Sym2,
    kappa1: f64,
    log_norm_per_dim: f64,
    dim: usize,
}

impl EquilibriumPotential {
    /// Hessian block of A (constant in phase space).
    pub fn hessian_block(&self) -> Sym2 {
        self.hess
    }

    /// Stationary covariance block (inverse of the Hessian).
    pub fn covariance_block(&self) -> Sym2 {
        self.covariance
    }

    /// Smallest eigenvalue of the Hessian; positive in the confined case.
    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    /// A(y), including the constant that normalizes exp(-A) to unit mass.
    pub fn eval(&self, y: &PhasePoint) -> f64 {
        assert_eq!(y.dim(), self.dim);
        let mut quad = 0.0;
        for i in 0..self.dim {
            quad += self.hess.quad_form(y.x[i], y.xi[i]);
        }
        0.5 * quad + self.dim as f64 * self.log_norm_per_dim
    }

    pub fn eval_1d(&self, x: f64, xi: f64) -> f64 {
        0.5 * self.hess.quad_form(x, xi) + self.dim as f64 * self.log_norm_per_dim
    }

    /// grad A(y) = H y, per pair.
    pub fn gradient(&self, y: &PhasePoint) -> PhasePoint {
        let mut gx = Vec::with_capacity(y.dim());
        let mut gv = Vec::with_capacity(y.dim());
        for i in 0..y.dim() {
            let (a, b) = self.hess.apply(y.x[i], y.xi[i]);
            gx.push(a);
            gv.push(b);
        }
        PhasePoint { x: gx, xi: gv }
    }

    /// exp(-A(y)); equals the steady state by construction.
    pub fn density(&self, y: &PhasePoint) -> f64 {
        (-self.eval(y)).exp()
    }

    pub fn density_1d(&self, x: f64, xi: f64) -> f64 {
        (-self.eval_1d(x, xi)).exp()
    }
}

pub fn equilibrium_potential(p: &ModelParams) -> Result<EquilibriumPotential> {
    p.require_confined()?;
    let q11 = p.dpp + p.omega0 * p.omega0 * p.dqq;
    let s22 = q11 / (2.0 * p.gamma);
    let s12 = -p.dqq;
    let s11 = (2.0 * p.dpq + 2.0 * p.gamma * p.dqq + s22) / (p.omega0 * p.omega0);
    let covariance = Sym2::new(s11, s12, s22);
    let hess = covariance
        .inverse()
        .ok_or(QfpError::DegenerateDiffusion { delta: 0.0 })?;
    let (kappa1, _) = hess.eigenvalues();
    // Unit mass per pair: normalization (2 pi)^{-1} det(Sigma)^{-1/2}, folded
    // into A as + log(2 pi sqrt(det Sigma)).
    let log_norm_per_dim = (2.0 * std::f64::consts::PI).ln() + 0.5 * covariance.det().ln();
    Ok(EquilibriumPotential {
        hess,
        covariance,
        kappa1,
        log_norm_per_dim,
        dim: p.dim,
    })
}

/// The drift rewrite F = D^{-1} P - grad A, evaluated per pair.
pub fn drift_field(p: &ModelParams, y: &PhasePoint) -> Result<PhasePoint> {
    let pot = equilibrium_potential(p)?;
    let dinv = p
        .diffusion_block()
        .inverse()
        .ok_or(QfpError::DegenerateDiffusion { delta: 0.0 })?;
    let drift = drift_diffusion(p).drift(y);
    let grad = pot.gradient(y);
    let mut fx = Vec::with_capacity(y.dim());
    let mut fv = Vec::with_capacity(y.dim());
    for i in 0..y.dim() {
        let (ax, av) = dinv.apply(drift.x[i], drift.xi[i]);
        fx.push(ax - grad.x[i]);
        fv.push(av - grad.xi[i]);
    }
    Ok(PhasePoint { x: fx, xi: fv })
}

/// Max over the grid of |div(D F w_inf)|, evaluated through the analytic
/// quadratic forms:
///
///   div(D F w_inf) / w_inf = [tr B - tr(D H)] + y^T (H D H - sym(B^T H)) y,
///
/// which vanishes identically because H^{-1} solves the Lyapunov equation.
/// The returned number is therefore a measure of floating-point consistency
/// between the two assembly routes.
pub fn drift_decomposition_residual(p: &ModelParams, grid: &crate::grid::PhaseGrid) -> Result<f64> {
    p.require_confined()?;
    let pot = equilibrium_potential(p)?;
    let h = pot.hessian_block();
    let d = p.diffusion_block();
    let b = p.drift_block();

    let hd = Mat2::new(
        h.xx * d.xx + h.xy * d.xy,
        h.xx * d.xy + h.xy * d.vv,
        h.xy * d.xx + h.vv * d.xy,
        h.xy * d.xy + h.vv * d.vv,
    );
    let hdh = hd.mul_sym(&h);
    let bth = Mat2::new(
        b.a11 * h.xx + b.a21 * h.xy,
        b.a11 * h.xy + b.a21 * h.vv,
        b.a12 * h.xx + b.a22 * h.xy,
        b.a12 * h.xy + b.a22 * h.vv,
    );
    // Quadratic-form matrix E = HDH - (B^T H + H B)/2, symmetrized.
    let e = Sym2::new(
        hdh.a11 - bth.a11,
        0.5 * (hdh.a12 + hdh.a21) - 0.5 * (bth.a12 + bth.a21),
        hdh.a22 - bth.a22,
    );
    let trace_term = b.trace() - (d.xx * h.xx + 2.0 * d.xy * h.xy + d.vv * h.vv);

    let mut max_resid = 0.0f64;
    for i in 0..grid.nx() {
        for j in 0..grid.nv() {
            let (x, v) = (grid.x(i), grid.v(j));
            let w = pot.density_1d(x, v);
            let r = (trace_term + e.quad_form(x, v)).abs() * w;
            max_resid = max_resid.max(r);
        }
    }
    Ok(max_resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseGrid;

    fn base() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 1).unwrap()
    }

    #[test]
    fn lindblad_accepts_standard_params() {
        // 1*1 - 0 = 1 >= 1/4
        assert!(validate_params(base()).is_ok());
    }

    #[test]
    fn lindblad_rejects_insufficient_position_diffusion() {
        // 1*0 - 0 = 0 < 1/4
        let err = ModelParams::new(1.0, 1.0, 1.0, 0.0, 0.0, 1).unwrap_err();
        assert!(matches!(err, QfpError::LindbladViolation { .. }));
    }

    #[test]
    fn lindblad_frictionless_branch_allows_zero_dqq() {
        // gamma = 0 needs only Dpp > 0
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.0, 0.0, 1).is_ok());
    }

    #[test]
    fn lindblad_boundary_equality_accepted_exactly() {
        // Dpp*Dqq = 1 * 0.25 = 0.25 = (1*1/2)^2 exactly in binary.
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.25, 0.0, 1).is_ok());
        // A hair below must fail even though floating arithmetic is close.
        let below = 0.25 - f64::EPSILON / 4.0;
        assert!(ModelParams::new(1.0, 1.0, 1.0, below, 0.0, 1).is_err());
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(matches!(
            ModelParams::new(-0.1, 1.0, 1.0, 1.0, 0.0, 1).unwrap_err(),
            QfpError::NegativeParameter { name: "gamma", .. }
        ));
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn diffusion_block_assembly() {
        // d=1, Dpp=2, Dqq=1, Dpq=0 -> D = [[1, 0], [0, 2]]
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 0.0, 1).unwrap();
        let d = drift_diffusion(&p).diffusion_block();
        assert_eq!((d.xx, d.xy, d.vv), (1.0, 0.0, 2.0));
    }

    #[test]
    fn drift_values() {
        // P(1, 0) with omega0 = 2, gamma = 1 -> (0, 4); P(0,0) = (0,0)
        let p = ModelParams::new(1.0, 2.0, 2.0, 1.0, 0.0, 1).unwrap();
        let dd = drift_diffusion(&p);
        let out = dd.drift(&PhasePoint::new_1d(1.0, 0.0));
        assert_eq!((out.x[0], out.xi[0]), (0.0, 4.0));
        let zero = dd.drift(&PhasePoint::new_1d(0.0, 0.0));
        assert_eq!((zero.x[0], zero.xi[0]), (0.0, 0.0));
    }

    #[test]
    fn smallest_eigenvalue_examples() {
        // Dpp=2, Dqq=1, Dpq=0: eigenvalues {1, 2} -> delta = 1
        let p = ModelParams::new(1.0, 1.0, 2.0, 1.0, 0.0, 1).unwrap();
        assert!((smallest_diffusion_eigenvalue(&p).unwrap() - 1.0).abs() < 1e-15);
        // Dpp=Dqq=1, Dpq=0: D = I -> delta = 1
        assert!((smallest_diffusion_eigenvalue(&base()).unwrap() - 1.0).abs() < 1e-15);
        // Dpp=Dqq=2, Dpq=1: [[2,1],[1,2]] has eigenvalues {1, 3} -> delta = 1
        let p = ModelParams::new(1.0, 1.0, 2.0, 2.0, 1.0, 1).unwrap();
        assert!((smallest_diffusion_eigenvalue(&p).unwrap() - 1.0).abs() < 1e-15);
        assert!((largest_diffusion_eigenvalue(&p) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn diffusion_sandwich_on_random_unit_vectors() {
        use rand::{Rng, SeedableRng};
        let p = ModelParams::new(1.0, 1.0, 2.0, 2.0, 1.0, 1).unwrap();
        let d = p.diffusion_block();
        let delta = smallest_diffusion_eigenvalue(&p).unwrap();
        let big = largest_diffusion_eigenvalue(&p);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let norm = a.hypot(b);
            if norm < 1e-6 {
                continue;
            }
            let (ua, ub) = (a / norm, b / norm);
            let q = d.quad_form(ua, ub);
            assert!(q >= delta - 1e-12 && q <= big + 1e-12);
        }
    }

    #[test]
    fn potential_is_uniformly_convex_and_normalized() {
        let pot = equilibrium_potential(&base()).unwrap();
        let h = pot.hessian_block();
        // symmetric by construction; kappa1 > 0
        assert!(pot.kappa1() > 0.0);
        assert!((h.xy - h.xy).abs() == 0.0);
        // For (1,1,1,1,0): Sigma = [[3, -1], [-1, 1]], H = [[1/2, 1/2], [1/2, 3/2]]
        assert!((h.xx - 0.5).abs() < 1e-14);
        assert!((h.xy - 0.5).abs() < 1e-14);
        assert!((h.vv - 1.5).abs() < 1e-14);
        // exp(-A) integrates to one (trapezoid over a generous box)
        let grid = PhaseGrid::new(257, 257, 12.0, 8.0).unwrap();
        let mut mass = 0.0;
        for i in 0..grid.nx() {
            for j in 0..grid.nv() {
                mass += pot.density_1d(grid.x(i), grid.v(j)) * grid.trap_weight(i, j);
            }
        }
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }

    #[test]
    fn classical_limit_potential_matches_known_form() {
        // Dqq = Dpq = 0: A = (gamma/Dpp)(|xi|^2 + omega0^2 |x|^2) + const
        let p = ModelParams::classical_limit(0.7, 1.3, 0.9, 1).unwrap();
        let pot = equilibrium_potential(&p).unwrap();
        let g_over_dpp = p.gamma / p.dpp;
        for (x, v) in [(0.3, -0.8), (1.1, 0.4), (-0.6, -0.2)] {
            let expect = g_over_dpp * (v * v + p.omega0 * p.omega0 * x * x);
            let got = pot.eval_1d(x, v) - pot.eval_1d(0.0, 0.0);
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn no_equilibrium_without_friction() {
        let p = ModelParams::new(0.0, 1.0, 1.0, 1.0, 0.0, 1).unwrap();
        assert!(matches!(
            equilibrium_potential(&p).unwrap_err(),
            QfpError::NoEquilibrium { .. }
        ));
        let p = ModelParams::new(1.0, 0.0, 1.0, 1.0, 0.0, 1).unwrap();
        assert!(equilibrium_potential(&p).is_err());
    }

    #[test]
    fn drift_field_satisfies_matrix_identity() {
        // D F = P - D grad A pointwise
        let p = ModelParams::new(0.8, 1.2, 1.5, 0.7, 0.3, 1).unwrap();
        let pot = equilibrium_potential(&p).unwrap();
        let d = p.diffusion_block();
        let dd = drift_diffusion(&p);
        for (x, v) in [(0.2, 0.9), (-1.4, 0.3), (2.0, -2.0)] {
            let y = PhasePoint::new_1d(x, v);
            let f = drift_field(&p, &y).unwrap();
            let (dfx, dfv) = d.apply(f.x[0], f.xi[0]);
            let drift = dd.drift(&y);
            let grad = pot.gradient(&y);
            let (dax, dav) = d.apply(grad.x[0], grad.xi[0]);
            assert!((dfx - (drift.x[0] - dax)).abs() < 1e-12);
            assert!((dfv - (drift.xi[0] - dav)).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_decomposition_residual_is_tiny() {
        let grid = PhaseGrid::new(33, 33, 8.0, 8.0).unwrap();
        for p in [
            base(),
            ModelParams::new(0.8, 1.2, 1.5, 0.7, 0.3, 1).unwrap(),
            // classical limit
            ModelParams::classical_limit(0.7, 1.3, 0.9, 1).unwrap(),
        ] {
            let r = drift_decomposition_residual(&p, &grid).unwrap();
            let pot = equilibrium_potential(&p).unwrap();
            let peak = pot.density_1d(0.0, 0.0);
            assert!(r <= 1e-10 * peak, "residual {r} vs scale {peak}");
        }
    }

    #[test]
    fn physical_units_map_and_validate() {
        let p = ModelParams::from_physical(PhysicalUnits {
            lambda: 0.5,
            kb_t: 2.0,
            omega_cutoff: 1.0,
            mass: 1.0,
            hbar: 1.0,
            omega0: 1.0,
            dim: 1,
        })
        .unwrap();
        assert!((p.gamma - 0.25).abs() < 1e-15);
        assert!((p.dpp - 1.0).abs() < 1e-15);
        assert!((p.dqq - 0.5 / 24.0).abs() < 1e-15);
        // cutoff far above kB T / hbar violates the gate
        let hot = PhysicalUnits {
            omega_cutoff: 50.0,
            ..PhysicalUnits {
                lambda: 0.5,
                kb_t: 2.0,
                omega_cutoff: 0.0,
                mass: 1.0,
                hbar: 1.0,
                omega0: 1.0,
                dim: 1,
            }
        };
        assert!(ModelParams::from_physical(hot).is_err());
    }
}
