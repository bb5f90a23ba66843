//! Asymptotic moments, efficacies, critical points, predicted powers and
//! Pitman efficiencies of the spacings statistics.
//!
//! Under H₀, n·D_{k,m} behaves like a Gamma(m) variable Z, and overlapping
//! block sums Z₀,ₘ and Z_{j,m} share m − j exponentials. All null moments
//! are expectations over these Gamma variables.
//!
//! μ is normalized by √(2m(m+1)), the standard deviation of
//! (Z − m)² − 2(Z − m) − m. This is the part of (Z − m)² orthogonal to Z,
//! and it is all that φ can correlate with since cov(φ(Z), Z) = 0. The
//! variance of (Z − m)² itself is 2m(m+3).

mod are;
mod clt;
mod efficacy;
mod moments;

pub use are::{pitman_are, AreQuery, AreValue, GrowthRegime, TestSpec};
pub use clt::{clt_condition_ratio, CltConditionRatio};
pub use efficacy::{
    critical_point, effective_tuning, efficacy, efficacy_from_moments, null_mean, null_standardization,
    predicted_power, shifted_mean, EfficacyResult, NullStandardization,
};
pub use moments::{closed_form_moments, moments, quadrature_moments, relative_gap, MomentSet, MomentSource};

#[cfg(test)]
mod tests;
