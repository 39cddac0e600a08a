//! Phase-space simulation and verification of a dissipative quantum kinetic
//! model: the quantum Fokker-Planck equation with harmonic confinement.
//!
//! The equation propagated here, in divergence form, is
//!
//!   d/dt w = div_(x,xi) ( D grad w + P(x, xi) w ),
//!
//! for the Wigner quasiprobability w(t, x, xi). Because the drift is linear
//! and the diffusion constant, the fundamental solution is an explicit
//! Gaussian built from the damped-oscillator characteristic flow. The crate
//! provides:
//!
//! * the closed-form flow, covariance functions and Green's function
//!   ([`flow`], [`covariance`], [`kernel`]);
//! * exact-kernel propagation of gridded Wigner data with macroscopic
//!   moments ([`propagator`]);
//! * the explicit steady state, its density matrix, and non-existence
//!   certificates for unconfined parameter ranges ([`equilibrium`]);
//! * relative-entropy decay verification with the product and transformed
//!   decay rates ([`entropy`]);
//! * closed-form dispersion rates and L^p decay envelopes for the
//!   unconfined cases ([`dispersion`]);
//! * an independent finite-difference reference solver ([`fd_oracle`]) and
//!   a runtime invariant battery ([`verify`]).
//!
//! Gridded operations target d = 1 (the 2-D phase plane); the analytic
//! modules accept any spatial dimension. With the default `parallel` feature
//! the grid loops run on rayon; disabling it gives a sequential build with
//! identical output bytes.

pub mod covariance;
pub mod dispersion;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod fd_oracle;
pub mod flow;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod numerics;
pub mod odeint;
pub mod params;
pub mod propagator;
pub mod verify;

pub use error::{QfpError, Result};
pub use params::{ModelParams, PhasePoint};
