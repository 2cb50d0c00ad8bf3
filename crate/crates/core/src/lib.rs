//! Rectified flow and c-rectified flow for empirical optimal transport.
//!
//! Given samples from a source and a target law, c-reflow repeatedly fits a
//! time-dependent potential `f(x, t)` on the linear interpolation of the
//! current coupling and transports the source along `∇c*(∇f)`. Each step
//! never increases the transport cost for the convex cost `c`, and the fitted
//! matching loss `ℓ*` certifies how far the coupling is from optimal.
//!
//! Modules:
//!
//! - [`costs`]: convex costs, Legendre conjugates, Bregman and matching losses.
//! - [`synthdata`]: seeded sampling, couplings and interpolation.
//! - [`fields`]: random Fourier features, potentials and free vector fields.
//! - [`training`]: ridge and full-batch descent fits.
//! - [`flow`]: ODE integration, rectify, c-rectify and the reflow loop.
//! - [`diagnostics`]: costs, straightness, marginal and Hamilton-Jacobi checks,
//!   and exact transport oracles.
//! - [`config`], [`cli`], [`selftest`]: the batch runner behind `riftort`.
//!
//! Runnable examples live in `examples/`: `costs_and_conjugates`,
//! `sampling_and_couplings`, `fit_velocity_field`, `gaussian_reflow`,
//! `power_cost_1d`, `rotation_counterexample`, `oracle_comparison`,
//! `hj_diagnostics`, `marginal_preservation`, `stored_fields`, `custom_cost`
//! and `config_run`.
//!
//! ```
//! use riftort::costs::CostFunction;
//! use riftort::diagnostics::transport_cost;
//! use riftort::flow::{c_rectify, FeatureSpec, IntegratorConfig};
//! use riftort::synthdata::{independent_coupling, sample, DistributionSpec};
//! use riftort::training::FitConfig;
//!
//! let q = CostFunction::Quadratic;
//! let a = sample(&DistributionSpec::standard_normal(1), 200, 1).unwrap();
//! let b = sample(&"gaussian:mean=2;cov=1".parse().unwrap(), 200, 2).unwrap();
//! let cpl = independent_coupling(&a, &b, 3).unwrap();
//! let fit = FitConfig::default();
//! let fm = FeatureSpec { num_features: 32, ..FeatureSpec::default() }
//!     .build(&cpl, fit.time_points, 4)
//!     .unwrap();
//! let out = c_rectify(&cpl, &q, &fm, &fit, &IntegratorConfig::default()).unwrap();
//! assert!(transport_cost(&out.coupling, &q) < transport_cost(&cpl, &q));
//! ```

pub mod cli;
pub mod config;
pub mod costs;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flow;
pub mod linalg;
pub mod selftest;
pub mod synthdata;
pub mod training;
