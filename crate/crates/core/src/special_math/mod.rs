//! Special functions and quadrature kernels for Gamma-distribution
//! expectations.

mod functions;
mod oracle;
mod quadrature;

pub use functions::{
    digamma, hurwitz_zeta2, hurwitz_zeta2_remainder, log_gamma, normal_cdf, normal_sf, normal_upper_quantile, EULER_GAMMA,
};
pub use oracle::{mc_gamma_oracle, GammaFunctional};
pub use quadrature::{
    gamma_expectation, gamma_expectation_kinked, gamma_expectation_shape, gamma_joint_expectation,
    gamma_lag_product, gamma_lag_product_kinked, gauss_laguerre, gauss_legendre, log_trapezoid, EstimateMethod,
    EstimateWithError, GaussRule, QuadratureKind, QuadratureSpec, DEFAULT_NODES, MAX_NODES,
};
