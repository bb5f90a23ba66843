use serde::Serialize;

use super::moments::{moments, MomentSet, Rule};
use crate::error::{domain, Error, Result};
use crate::json::float17;
use crate::spacings::{Mode, SpacingsPlan};
use crate::special_math::{normal_cdf, normal_upper_quantile, QuadratureSpec};
use crate::tuning::TuningFunction;

/// E h(Z₀,ₘ), the per-term null mean A₀.
pub fn null_mean(h: &TuningFunction, m: u32) -> Result<f64> {
    Ok(moments(h, m)?.mean_h)
}

/// A₁ = A₀ + σ*·√(m+1)·μ·‖l‖₂²/√(2n), the per-term mean under the
/// contamination alternative.
pub fn shifted_mean(h: &TuningFunction, m: u32, n: usize, l2norm2: f64) -> Result<f64> {
    if n <= m as usize {
        return domain(format!("shifted mean needs n > m, got n = {n}, m = {m}"));
    }
    let s = moments(h, m)?;
    Ok(s.mean_h + s.sigma_star2.sqrt() * (m as f64 + 1.0).sqrt() * s.mu * l2norm2 / (2.0 * n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficacyResult {
    pub h: String,
    pub m: u32,
    pub mode: Mode,
    #[serde(serialize_with = "float17")]
    pub e2: f64,
    #[serde(serialize_with = "float17")]
    pub mu2: f64,
    #[serde(serialize_with = "float17")]
    pub sigma2: f64,
    #[serde(serialize_with = "float17")]
    pub sigma_star2: f64,
    /// The same efficacy from cov²(h(Z), (Z − m − 1)²).
    #[serde(serialize_with = "float17")]
    pub e2_covariance_form: f64,
    /// h lacks the continuous derivative the limit theorems assume (Rao).
    pub outside_smooth_theory: bool,
}

/// Efficacy from a moment set alone:
/// overlapping e² = (m+1)σ*²μ²/(2σ²), disjoint e*² = (m+1)μ²/(2m).
pub fn efficacy_from_moments(s: &MomentSet, mode: Mode) -> f64 {
    let m = s.m as f64;
    match mode {
        Mode::Overlapping => (m + 1.0) * s.sigma_star2 * s.mu * s.mu / (2.0 * s.sigma2),
        Mode::Disjoint => (m + 1.0) * s.mu * s.mu / (2.0 * m),
    }
}

/// cov(h(Z), (Z − m − 1)²) by quadrature.
fn shift_covariance(h: &TuningFunction, m: u32) -> Result<f64> {
    let rule = Rule::for_regularity(h.regularity());
    let spec = QuadratureSpec::default();
    let g = |u: f64| h.centered(u);
    let mean = rule.expect(g, m, &spec)?;
    let mf = m as f64;
    // the scale only sets the tolerance, so a rough value is enough
    let rough = QuadratureSpec { rel_tol: 1e-6, ..spec };
    let scale = rule.expect(|u| (g(u) - mean).powi(2), m, &rough)?.sqrt() * (2.0 * mf * (mf + 3.0)).sqrt();
    let spec = QuadratureSpec { abs_tol: 1e-12 * scale, ..spec };
    // the linear part of a centered power divergence is uncorrelated with (Z − m − 1)²
    rule.expect(|u| (g(u) - mean) * ((u - mf - 1.0).powi(2) - (mf + 1.0)), m, &spec)
}

/// Efficacy of the test based on h at order m, cross-checked against the
/// covariance form (overlapping: cov²/(4mσ²); disjoint: cov²/(4m²σ*²)).
pub fn efficacy(h: &TuningFunction, m: u32, mode: Mode) -> Result<EfficacyResult> {
    let s = moments(h, m)?;
    let denominator = match mode {
        Mode::Overlapping => s.sigma2,
        Mode::Disjoint => s.sigma_star2,
    };
    if !(denominator > 0.0) {
        return domain(format!("{} has zero variance at m = {m}", h.name()));
    }
    let e2 = efficacy_from_moments(&s, mode);
    let cov = shift_covariance(h, m)?;
    let mf = m as f64;
    let e2_cov = match mode {
        Mode::Overlapping => cov * cov / (4.0 * mf * s.sigma2),
        Mode::Disjoint => cov * cov / (4.0 * mf * mf * s.sigma_star2),
    };
    let gap = (e2 - e2_cov).abs() / e2.abs().max(e2_cov.abs()).max(f64::MIN_POSITIVE);
    // both vanish when h is uncorrelated with the Greenwood direction
    if gap > 1e-8 && e2.max(e2_cov) > 1e-300 {
        return Err(Error::InternalConsistency(format!(
            "efficacy forms disagree for {} at m = {m}: {e2} vs {e2_cov}",
            h.name()
        )));
    }
    Ok(EfficacyResult {
        h: h.name().to_string(),
        m,
        mode,
        e2,
        mu2: s.mu * s.mu,
        sigma2: s.sigma2,
        sigma_star2: s.sigma_star2,
        e2_covariance_form: e2_cov,
        outside_smooth_theory: h.outside_smooth_theory(),
    })
}

/// Centering and scale of the statistic under H₀:
/// overlapping (n·A₀, σ√n), disjoint (N·A₀, σ*√N) with N = n/m, using the
/// moments of h at the plan's scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NullStandardization {
    #[serde(serialize_with = "float17")]
    pub center: f64,
    #[serde(serialize_with = "float17")]
    pub scale: f64,
}

impl NullStandardization {
    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.center) / self.scale
    }
}

/// h as seen by the moment engine under the plan's scaling.
pub fn effective_tuning(h: &TuningFunction, plan: &SpacingsPlan) -> Result<TuningFunction> {
    h.rescaled(plan.moment_scale())
}

pub fn null_standardization(h: &TuningFunction, plan: &SpacingsPlan) -> Result<NullStandardization> {
    let m = u32::try_from(plan.m).map_err(|_| Error::InvalidPlan(format!("m = {} is too large", plan.m)))?;
    let s = moments(&effective_tuning(h, plan)?, m)?;
    let terms = plan.terms() as f64;
    let variance = match plan.mode {
        Mode::Overlapping => s.sigma2,
        Mode::Disjoint => s.sigma_star2,
    };
    if !(variance > 0.0) {
        return domain(format!("{} has zero null variance at m = {m}", h.name()));
    }
    Ok(NullStandardization { center: terms * s.mean_h, scale: (variance * terms).sqrt() })
}

/// Size-α critical value: c = u_α·σ√n + n·A₀ (overlapping) or
/// u_α·σ*√N + N·A₀ (disjoint).
pub fn critical_point(h: &TuningFunction, plan: &SpacingsPlan, alpha: f64) -> Result<f64> {
    let u = normal_upper_quantile(alpha)?;
    let st = null_standardization(h, plan)?;
    Ok(st.center + u * st.scale)
}

/// Asymptotic power Φ(√e²·‖l‖₂² − u_α).
pub fn predicted_power(e2: f64, l2norm2: f64, alpha: f64) -> Result<f64> {
    if !(e2 >= 0.0) {
        return domain(format!("efficacy must be non-negative, got {e2}"));
    }
    Ok(normal_cdf(e2.sqrt() * l2norm2 - normal_upper_quantile(alpha)?))
}
