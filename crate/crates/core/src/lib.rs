//! Collocation Runge-Kutta toolkit.
//!
//! Builds Clenshaw-Curtis, Gauss-Legendre and Newton-Cotes collocation
//! tableaus, integrates initial value problems with them, certifies the
//! A₀/A-stability of the Clenshaw-Curtis family through its stability
//! polynomials, and measures accuracy orders.
//!
//! ```
//! use colloc::tableau::cc_tableau;
//! use colloc::solver::{integrate, IvProblem, SolverConfig};
//!
//! let tableau = cc_tableau(3).unwrap();
//! let problem = IvProblem::new("growth", |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0], 0.0, vec![1.0], 1.0);
//! let out = integrate(&problem, &tableau, 8, &SolverConfig::default()).unwrap();
//! assert!((out.y_final[0] - std::f64::consts::E).abs() < 1e-5);
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod error;
pub mod experiments;
pub mod mp;
pub mod roots;
pub mod solver;
pub mod stability;
pub mod tableau;

pub use error::{Error, Result};
