use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::json::float17;
use crate::special_math::{
    digamma, gamma_expectation, gamma_expectation_kinked, gamma_lag_product, gamma_lag_product_kinked,
    hurwitz_zeta2_remainder, QuadratureKind, QuadratureSpec,
};
use crate::tuning::{Family, Regularity, TuningFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    ClosedForm,
    Quadrature,
    Mc,
}

/// Null moments of h(Z) for Z ~ Gamma(m):
/// mean E h(Z), τ = cov(h(Z), Z)/m, σ*² = var φ(Z),
/// σ² = var h + 2Σ_{j<m} cov(h(Z₀), h(Z_j)) − m²τ², and
/// μ = cov(φ(Z), (Z − m)²)/(σ*·√(2m(m+1))), where
/// φ(u) = h(u) − E h − τ(u − m).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSet {
    pub m: u32,
    pub h: String,
    #[serde(serialize_with = "float17")]
    pub mean_h: f64,
    #[serde(serialize_with = "float17")]
    pub tau: f64,
    #[serde(serialize_with = "float17")]
    pub sigma2: f64,
    #[serde(serialize_with = "float17")]
    pub sigma_star2: f64,
    #[serde(serialize_with = "float17")]
    pub mu: f64,
    pub source: MomentSource,
}

impl MomentSet {
    /// Moments of a·h(u) + b·u + c.
    pub fn affine(&self, a: f64, b: f64, c: f64, name: impl Into<String>) -> MomentSet {
        MomentSet {
            m: self.m,
            h: name.into(),
            mean_h: a * self.mean_h + b * self.m as f64 + c,
            tau: a * self.tau + b,
            sigma2: a * a * self.sigma2,
            sigma_star2: a * a * self.sigma_star2,
            mu: a.signum() * self.mu,
            source: self.source,
        }
    }

    /// Overlapping over disjoint efficiency at equal m, m·σ*²/σ².
    pub fn overlap_gain(&self) -> f64 {
        self.m as f64 * self.sigma_star2 / self.sigma2
    }

    pub(crate) fn check(&self) -> Result<()> {
        let finite = [self.mean_h, self.tau, self.sigma2, self.sigma_star2, self.mu].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InternalConsistency(format!("non-finite moments for {} at m = {}", self.h, self.m)));
        }
        if self.sigma_star2 < 0.0 || self.sigma2 < 0.0 {
            return Err(Error::InternalConsistency(format!(
                "negative variance for {} at m = {}: sigma2 = {}, sigma_star2 = {}",
                self.h, self.m, self.sigma2, self.sigma_star2
            )));
        }
        if self.mu.abs() > 1.0 + 1e-9 {
            return Err(Error::InternalConsistency(format!("|mu| = {} exceeds 1 for {}", self.mu.abs(), self.h)));
        }
        Ok(())
    }
}

/// Quadrature rule matched to the smoothness of h.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Rule {
    Laguerre,
    LogTrapezoid,
    Kinked(f64),
}

impl Rule {
    pub(crate) fn for_regularity(r: Regularity) -> Rule {
        match r {
            Regularity::Polynomial => Rule::Laguerre,
            Regularity::SingularAtOrigin => Rule::LogTrapezoid,
            Regularity::Kink(k) => Rule::Kinked(k),
        }
    }

    fn spec(self, base: &QuadratureSpec) -> QuadratureSpec {
        match self {
            Rule::LogTrapezoid => base.with_kind(QuadratureKind::LogTrapezoid),
            _ => base.with_kind(QuadratureKind::GeneralizedGaussLaguerre),
        }
    }

    pub(crate) fn expect(self, f: impl Fn(f64) -> f64, m: u32, spec: &QuadratureSpec) -> Result<f64> {
        let spec = self.spec(spec);
        Ok(match self {
            Rule::Kinked(k) => gamma_expectation_kinked(f, m as f64, k, &spec)?.value,
            _ => gamma_expectation(f, m, &spec)?.value,
        })
    }

    fn lag_product(self, f: impl Fn(f64) -> f64, m: u32, j: u32, spec: &QuadratureSpec) -> Result<f64> {
        let spec = self.spec(spec);
        let value = match self {
            Rule::Kinked(k) => gamma_lag_product_kinked(f, m, j, k, &spec),
            _ => gamma_lag_product(f, m, j, &spec),
        };
        value.map(|e| e.value).map_err(|e| Error::LagFailure { lag: j, source: Box::new(e) })
    }
}

fn tolerance(spec: &QuadratureSpec, abs: f64) -> QuadratureSpec {
    QuadratureSpec { abs_tol: abs.max(spec.abs_tol * 1e-3), ..*spec }
}

/// Moments of u ↦ g(u) by quadrature, without closed forms.
fn integrate_moments(g: &dyn Fn(f64) -> f64, m: u32, rule: Rule, spec: &QuadratureSpec) -> Result<[f64; 5]> {
    let mf = m as f64;
    let mean = rule.expect(g, m, spec)?;
    let var_h = rule.expect(|u| (g(u) - mean).powi(2), m, spec)?;
    let scale = var_h.sqrt();
    let tau = rule.expect(|u| (g(u) - mean) * (u - mf), m, &tolerance(spec, 1e-14 * scale * mf.sqrt()))? / mf;
    let phi = |u: f64| g(u) - mean - tau * (u - mf);
    let sigma_star2 = rule.expect(|u| phi(u).powi(2), m, spec)?;
    let sigma_star = sigma_star2.sqrt();
    let norm = (2.0 * mf * (mf + 1.0)).sqrt();
    let cov = rule.expect(|u| phi(u) * (u - mf).powi(2), m, &tolerance(spec, 1e-14 * sigma_star * norm))?;
    let mu = if sigma_star2 > 0.0 { cov / (sigma_star * norm) } else { f64::NAN };
    let lag_spec = tolerance(spec, 1e-13 * sigma_star2);
    let mut lags = 0.0;
    for j in 1..m {
        lags += rule.lag_product(phi, m, j, &lag_spec)?;
    }
    let sigma2 = sigma_star2 + 2.0 * lags;
    Ok([mean, tau, clip(sigma2, sigma_star2)?, sigma_star2, mu])
}

// Rounding can push a vanishing variance slightly below zero.
fn clip(v: f64, scale: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -1e-9 * scale.max(f64::MIN_POSITIVE) {
        Ok(0.0)
    } else {
        Err(Error::InternalConsistency(format!("variance {v} is negative beyond rounding")))
    }
}

/// Moments of h by quadrature alone.
///
/// Power-divergence functions are integrated in their centered form
/// ψ_d(u) − ψ_d′(1)(u − 1), and the affine part is added back.
pub fn quadrature_moments(h: &TuningFunction, m: u32, spec: &QuadratureSpec) -> Result<MomentSet> {
    if m == 0 {
        return domain("order m must be positive");
    }
    let rule = Rule::for_regularity(h.regularity());
    let slope = h.centering_slope();
    let g = |u: f64| h.centered(u);
    let [mean, tau, sigma2, sigma_star2, mu] = integrate_moments(&g, m, rule, spec)?;
    let set = MomentSet {
        m,
        h: h.name().to_string(),
        mean_h: mean + slope * (m as f64 - 1.0),
        tau: tau + slope,
        sigma2,
        sigma_star2,
        mu,
        source: MomentSource::Quadrature,
    };
    set.check()?;
    Ok(set)
}

/// Closed-form moments of Greenwood, Moran and entropy.
///
/// The variances of the logarithmic statistics are written through
/// r(a) = ζ(2, a) − 1/a − 1/(2a²) so they stay accurate for large m:
///
/// * Moran: σ*² = ζ(2,m) − 1/m, σ² = (2m² − 2m + 1)ζ(2,m) − 2m + 1.
/// * entropy: σ*² = m(m+1)ζ(2,m+1) − m,
///   σ² = (m(m+1))²ζ(2,m+2)/2 − m(m+1)(2m−1)/4.
///
/// For entropy with m ≤ 64 the closed form is checked against quadrature;
/// on a mismatch beyond 1e-6 relative the quadrature values are returned.
pub fn closed_form_moments(family: Family, m: u32) -> Result<MomentSet> {
    if m == 0 {
        return domain("order m must be positive");
    }
    let set = raw_closed_form(family, m)?;
    if family == Family::Entropy && m <= 64 {
        let quad = quadrature_moments(&TuningFunction::entropy(), m, &QuadratureSpec::default())?;
        if relative_gap(&set, &quad) > 1e-6 {
            return Ok(quad);
        }
    }
    Ok(set)
}

pub(crate) fn raw_closed_form(family: Family, m: u32) -> Result<MomentSet> {
    let mf = m as f64;
    let norm = (2.0 * mf * (mf + 1.0)).sqrt();
    let (name, mean, tau, sigma_star2, sigma2, mu) = match family {
        Family::Greenwood => {
            let s = 2.0 * mf * (mf + 1.0);
            ("greenwood", mf * (mf + 1.0), 2.0 * (mf + 1.0), s, s * (2.0 * mf + 1.0) / 3.0, 1.0)
        }
        Family::Moran => {
            let r = hurwitz_zeta2_remainder(mf)?;
            let base = 0.5 / (mf * mf);
            let ss = base + r;
            let s2 = base + (2.0 * mf * mf - 2.0 * mf + 1.0) * r;
            ("moran", -digamma(mf)?, -1.0 / mf, ss, s2, 1.0 / (ss.sqrt() * norm))
        }
        Family::Entropy => {
            let k = mf * (mf + 1.0);
            let ss = mf / (2.0 * (mf + 1.0)) + k * hurwitz_zeta2_remainder(mf + 1.0)?;
            let s2 = k * (mf + 4.0) / (4.0 * (mf + 2.0).powi(2)) + 0.5 * k * k * hurwitz_zeta2_remainder(mf + 2.0)?;
            let psi = digamma(mf + 1.0)?;
            ("entropy", mf * psi, psi + 1.0, ss, s2, mf / (ss.sqrt() * norm))
        }
        other => return domain(format!("no closed form for {other:?}")),
    };
    Ok(MomentSet { m, h: name.into(), mean_h: mean, tau, sigma2, sigma_star2, mu, source: MomentSource::ClosedForm })
}

/// Largest relative difference between the five moment fields.
pub fn relative_gap(a: &MomentSet, b: &MomentSet) -> f64 {
    let pairs = [(a.mean_h, b.mean_h), (a.tau, b.tau), (a.sigma2, b.sigma2), (a.sigma_star2, b.sigma_star2), (a.mu, b.mu)];
    pairs
        .iter()
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn cache() -> &'static RwLock<HashMap<(String, u32), MomentSet>> {
    static CACHE: OnceLock<RwLock<HashMap<(String, u32), MomentSet>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Moments of h at order m: closed forms where available, quadrature
/// otherwise, with affine images and rescaled arguments reduced to the
/// underlying built-in. Results are memoized per (h, m).
pub fn moments(h: &TuningFunction, m: u32) -> Result<MomentSet> {
    let key = h.cache_key().map(|k| (k, m));
    if let Some(key) = &key {
        if let Some(hit) = cache().read().unwrap().get(key) {
            return Ok(hit.clone());
        }
    }
    let set = compute_moments(h, m)?;
    if let Some(key) = key {
        cache().write().unwrap().entry(key).or_insert_with(|| set.clone());
    }
    Ok(set)
}

fn compute_moments(h: &TuningFunction, m: u32) -> Result<MomentSet> {
    let (root, a, b, c, factor) = h.affine_parts();
    if !root.in_power_divergence_family() {
        return quadrature_moments(h, m, &QuadratureSpec::default());
    }
    let base = match (root.family(), root.d()) {
        (Family::Greenwood | Family::Moran | Family::Entropy, _) => closed_form_moments(root.family(), m)?,
        (_, Some(d)) if d == 1.0 => closed_form_moments(Family::Greenwood, m)?.affine(0.5, 0.0, -0.5, root.name()),
        (_, Some(d)) if d == 0.0 => closed_form_moments(Family::Entropy, m)?.affine(1.0, 0.0, 0.0, root.name()),
        (_, Some(d)) if d == -1.0 => closed_form_moments(Family::Moran, m)?.affine(1.0, 0.0, 0.0, root.name()),
        _ => quadrature_moments(root, m, &QuadratureSpec::default())?,
    };
    // root(f·u) as an affine image of root(u)
    let (sa, sb, sc) = scale_as_affine(root, factor);
    let scaled = base.affine(sa, sb, sc, root.name());
    let set = scaled.affine(a, b, c, h.name());
    set.check()?;
    Ok(set)
}

/// (a, b, c) with root(f·u) = a·root(u) + b·u + c.
fn scale_as_affine(root: &TuningFunction, f: f64) -> (f64, f64, f64) {
    if f == 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let d = match root.family() {
        Family::Greenwood => return (f * f, 0.0, 0.0),
        Family::Moran => -1.0,
        Family::Entropy => 0.0,
        _ => root.d().expect("power-divergence root has an index"),
    };
    if d == -1.0 {
        (1.0, 0.0, -f.ln())
    } else if d == 0.0 {
        (f, f * f.ln(), 0.0)
    } else {
        let p = f.powf(d + 1.0);
        (p, 0.0, (p - 1.0) / (d * (d + 1.0)))
    }
}
