//! Marginal multivariate Value-at-Risk for portfolios whose dependence is an
//! Archimedean copula (Clayton, Frank, Gumbel-Hougaard, Joe, Ali-Mikhail-Haq).
//!
//! * [`copula`]: generators, inverse generators, copula values, level-set kernel.
//! * [`calibration`]: Kendall's tau and its inverse.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration.
//! * [`var`]: analytical VaR components by quadrature.
//! * [`rng`], [`sampler`]: seeded frailty sampling of copula observations.
//! * [`mc`]: level-set Monte Carlo estimator and replication studies.

pub mod calibration;
pub mod copula;
pub mod error;
mod frailty;
pub mod mc;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod var;

pub use calibration::{kendall_tau, theta_from_tau};
pub use copula::{CopulaSpec, FamilyId};
pub use error::{Error, ErrorKind, Result};
pub use mc::{estimate_var_once, run_study, McConfig, McStats};
pub use quadrature::{QuadConfig, QuadResult};
pub use rng::Seed;
pub use sampler::{sample_copula, Sample};
pub use var::{QuantileFn, VarResult};
