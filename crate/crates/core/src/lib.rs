//! Numerical reduction of fully nonlinear first-order PDEs of the form
//! `F(x, u, <grad u, grad u>_g) = 0` on semi-Riemannian manifolds.
//!
//! The crate reduces such equations along transnormal functions — either to a
//! one-dimensional ODE (solved by adaptive Runge-Kutta or quadrature) or, on
//! warped products `L x_alpha N`, to a two-dimensional first-order PDE on a
//! rectangle (solved by the method of characteristics) — lifts the reduced
//! solutions back to the manifold, and verifies the original PDE residual
//! numerically.
//!
//! Module map:
//! - [`expr`]: expression language with forward-mode automatic differentiation
//! - [`geometry`]: manifold models, metrics, gradients, level-set sampling
//! - [`transnormal`]: catalog of transnormal functions and their profiles
//! - [`reduce1d`]: reduction to an ODE, implicit-branch tracking, integration
//! - [`reduce2d`]: reduction to a 2-D PDE, characteristic strips
//! - [`verify`]: independent residual and invariance checks

pub mod error;
pub mod expr;
pub mod geometry;
pub mod interval;
pub mod numerics;
pub mod reduce1d;
pub mod reduce2d;
pub mod transnormal;
pub mod verify;

pub use error::{Error, Result};
pub use interval::Interval;

// Re-exported so downstream crates name matrix types from one place.
pub use nalgebra;
