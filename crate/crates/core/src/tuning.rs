//! Tuning functions h applied to each scaled spacing.
//!
//! Built-ins are Greenwood (x²), Moran (−ln x), entropy (x ln x), Rao
//! (|x − m|) and the power-divergence family
//! ψ_d(x) = (x^{d+1} − 1)/(d(d+1)) with ψ₀ = x ln x and ψ₋₁ = −ln x.
//!
//! The literal family is not continuous at d = 0: ψ_d(x) grows like
//! (x − 1)/d. Only the affine part diverges, and every test quantity is
//! invariant under affine changes of h, so [`TuningFunction::centered`]
//! exposes ψ_d(x) − ψ_d′(1)(x − 1), which is continuous in d.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Greenwood,
    Moran,
    Entropy,
    Rao,
    PowerDivergence,
    Custom,
}

/// Behaviour of h relevant to choosing a quadrature rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularity {
    /// Polynomial; Gauss–Laguerre is exact.
    Polynomial,
    /// Smooth on (0, ∞) with a log or fractional-power singularity at 0.
    SingularAtOrigin,
    /// Continuous with a derivative jump at the given point.
    Kink(f64),
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Greenwood,
    Moran,
    Entropy,
    Rao { m: f64 },
    PowerDivergence { d: f64 },
    Affine { base: Arc<TuningFunction>, a: f64, b: f64, c: f64 },
    Scaled { base: Arc<TuningFunction>, factor: f64 },
    Custom { f: RealFn, df: Option<RealFn>, regularity: Regularity },
}

/// An immutable tuning function.
#[derive(Clone)]
pub struct TuningFunction {
    name: String,
    family: Family,
    kind: Kind,
}

impl fmt::Debug for TuningFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TuningFunction").field("name", &self.name).field("family", &self.family).finish()
    }
}

impl fmt::Display for TuningFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

// |d| or |d + 1| below this uses the series forms
const NEAR_LIMIT: f64 = 1e-6;

/// ψ_d(x) for x > 0.
fn power_divergence(d: f64, x: f64) -> f64 {
    if d == 0.0 {
        return x * x.ln();
    }
    if d == -1.0 {
        return -x.ln();
    }
    let l = x.ln();
    let e = d + 1.0;
    if e.abs() < NEAR_LIMIT {
        // (x^ε − 1)/(ε(ε − 1)) = −ln x·(1 + ε ln x/2 + ε² ln²x/6)/(1 − ε)
        return -l * (1.0 + e * l / 2.0 + e * e * l * l / 6.0) / (1.0 - e);
    }
    let t = e * l;
    let num = if t.abs() < 0.5 {
        t.exp_m1()
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32) - 1.0
    } else {
        x.powf(e) - 1.0
    };
    num / (d * e)
}

/// ψ_d(x) − (x − 1)/d, the form that tends to x ln x − x + 1 as d → 0.
fn power_divergence_centered(d: f64, x: f64) -> f64 {
    if d == 0.0 {
        return x * x.ln() - x + 1.0;
    }
    if d == -1.0 {
        return -x.ln() + x - 1.0;
    }
    let l = x.ln();
    let e = d + 1.0;
    if d.abs() < NEAR_LIMIT {
        // [x(e^{dL} − 1)/d − (x − 1)]/(d + 1) with e^{dL} expanded to third order
        let t = l * (1.0 + d * l / 2.0 + d * d * l * l / 6.0);
        return (x * t - (x - 1.0)) / e;
    }
    power_divergence(d, x) - (x - 1.0) / d
}

fn power_divergence_derivative(d: f64, x: f64) -> f64 {
    if d == 0.0 {
        return x.ln() + 1.0;
    }
    x.powf(d) / d
}

impl TuningFunction {
    pub fn greenwood() -> Self {
        TuningFunction { name: "greenwood".into(), family: Family::Greenwood, kind: Kind::Greenwood }
    }

    pub fn moran() -> Self {
        TuningFunction { name: "moran".into(), family: Family::Moran, kind: Kind::Moran }
    }

    pub fn entropy() -> Self {
        TuningFunction { name: "entropy".into(), family: Family::Entropy, kind: Kind::Entropy }
    }

    /// h(x) = |x − m|. Registered, but outside the smooth theory: the
    /// derivative jumps at x = m.
    pub fn rao(m: u32) -> Result<Self> {
        if m == 0 {
            return domain("rao requires a positive order m");
        }
        Ok(TuningFunction { name: "rao".into(), family: Family::Rao, kind: Kind::Rao { m: m as f64 } })
    }

    /// Wraps a compiled function. Affine functions are rejected.
    pub fn custom(name: impl Into<String>, f: RealFn, df: Option<RealFn>, regularity: Regularity) -> Result<Self> {
        let h = TuningFunction {
            name: name.into(),
            family: Family::Custom,
            kind: Kind::Custom { f, df, regularity },
        };
        h.check_nonlinear()?;
        Ok(h)
    }

    /// Numerical check that h(1) + h(3) ≠ 2h(2).
    fn check_nonlinear(&self) -> Result<()> {
        let (a, b, c) = (self.value(1.0), self.value(2.0), self.value(3.0));
        let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return domain(format!("{} is not finite on {{1, 2, 3}}", self.name));
        }
        if (a + c - 2.0 * b).abs() <= 1e-12 * scale {
            return Err(Error::AffineTuning(self.name.clone()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Power-divergence index, for ψ_d and its affine images.
    pub fn d(&self) -> Option<f64> {
        match &self.kind {
            Kind::PowerDivergence { d } => Some(*d),
            Kind::Affine { base, .. } | Kind::Scaled { base, .. } => base.d(),
            _ => None,
        }
    }

    /// True only for Rao, whose shape depends on the spacing order.
    pub fn depends_on_m(&self) -> bool {
        self.family == Family::Rao
    }

    /// The Rao function has no derivative at x = m, so the smooth-h CLT
    /// conditions do not hold for it.
    pub fn outside_smooth_theory(&self) -> bool {
        matches!(self.regularity(), Regularity::Kink(_))
    }

    /// Whether h is, up to a positive affine map and a rescaled argument,
    /// a member of the power-divergence family.
    pub fn in_power_divergence_family(&self) -> bool {
        match &self.kind {
            Kind::Greenwood | Kind::Moran | Kind::Entropy | Kind::PowerDivergence { .. } => true,
            Kind::Affine { base, a, .. } => *a > 0.0 && base.in_power_divergence_family(),
            Kind::Scaled { base, .. } => base.in_power_divergence_family(),
            Kind::Rao { .. } | Kind::Custom { .. } => false,
        }
    }

    pub fn regularity(&self) -> Regularity {
        match &self.kind {
            Kind::Greenwood => Regularity::Polynomial,
            Kind::Moran | Kind::Entropy => Regularity::SingularAtOrigin,
            Kind::Rao { m } => Regularity::Kink(*m),
            Kind::PowerDivergence { d } => {
                if *d >= 1.0 && d.fract() == 0.0 {
                    Regularity::Polynomial
                } else {
                    Regularity::SingularAtOrigin
                }
            }
            Kind::Affine { base, .. } => base.regularity(),
            Kind::Scaled { base, factor } => match base.regularity() {
                Regularity::Kink(k) => Regularity::Kink(k / factor),
                other => other,
            },
            Kind::Custom { regularity, .. } => *regularity,
        }
    }

    /// h(x) without the domain check. Used on hot paths where x > 0 is
    /// already established.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Greenwood => x * x,
            Kind::Moran => -x.ln(),
            Kind::Entropy => x * x.ln(),
            Kind::Rao { m } => (x - m).abs(),
            Kind::PowerDivergence { d } => power_divergence(*d, x),
            Kind::Affine { base, a, b, c } => a * base.value(x) + b * x + c,
            Kind::Scaled { base, factor } => base.value(factor * x),
            Kind::Custom { f, .. } => f(x),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return domain(format!("{} is evaluated only at x > 0, got {x}", self.name));
        }
        Ok(self.value(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return domain(format!("{} is evaluated only at x > 0, got {x}", self.name));
        }
        let undefined = || Error::DerivativeUndefined { name: self.name.clone(), x };
        Ok(match &self.kind {
            Kind::Greenwood => 2.0 * x,
            Kind::Moran => -1.0 / x,
            Kind::Entropy => x.ln() + 1.0,
            Kind::Rao { m } => {
                if x == *m {
                    return Err(undefined());
                }
                (x - m).signum()
            }
            Kind::PowerDivergence { d } => power_divergence_derivative(*d, x),
            Kind::Affine { base, a, b, .. } => a * base.derivative(x)? + b,
            Kind::Scaled { base, factor } => factor * base.derivative(factor * x)?,
            Kind::Custom { df, .. } => match df {
                Some(df) => df(x),
                None => return Err(undefined()),
            },
        })
    }

    /// ψ_d(x) − ψ_d′(1)(x − 1) for the power-divergence family, the Cressie–Read
    /// normalization that is continuous in d; h itself for other functions.
    pub fn centered(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PowerDivergence { d } => power_divergence_centered(*d, x),
            _ => self.value(x),
        }
    }

    /// Slope of the affine part removed by [`centered`](Self::centered).
    pub fn centering_slope(&self) -> f64 {
        match &self.kind {
            Kind::PowerDivergence { d } if *d == 0.0 => 1.0,
            Kind::PowerDivergence { d } => 1.0 / d,
            _ => 0.0,
        }
    }

    /// a·h(u) + b·u + c, for a ≠ 0.
    pub fn affine_transform(&self, a: f64, b: f64, c: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() || !c.is_finite() {
            return domain(format!("affine transform needs finite a ≠ 0, got ({a}, {b}, {c})"));
        }
        Ok(TuningFunction {
            name: format!("{a}*{}{:+}*u{:+}", self.name, b, c),
            family: self.family,
            kind: Kind::Affine { base: Arc::new(self.clone()), a, b, c },
        })
    }

    /// u ↦ h(factor·u), used for the n/m scaling of the statistic.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return domain(format!("rescaling factor must be positive, got {factor}"));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        Ok(TuningFunction {
            name: format!("{}(u*{factor})", self.name),
            family: self.family,
            kind: Kind::Scaled { base: Arc::new(self.clone()), factor },
        })
    }

    /// Identifies the function in the moment cache; `None` for custom
    /// functions, whose closures cannot be compared.
    pub(crate) fn cache_key(&self) -> Option<String> {
        match &self.kind {
            Kind::Rao { m } => Some(format!("rao[{m}]")),
            Kind::Custom { .. } => None,
            Kind::Affine { base, a, b, c } => base.cache_key().map(|k| format!("{a}*{k}{b:+}*u{c:+}")),
            Kind::Scaled { base, factor } => base.cache_key().map(|k| format!("{k}(u*{factor})")),
            _ => Some(self.name.clone()),
        }
    }

    /// Decomposes the function into (base, a, b, c, factor) with
    /// h(u) = a·base(factor·u) + b·u + c, where base is a built-in.
    pub(crate) fn affine_parts(&self) -> (&TuningFunction, f64, f64, f64, f64) {
        match &self.kind {
            Kind::Affine { base, a, b, c } => {
                let (root, a0, b0, c0, f0) = base.affine_parts();
                (root, a * a0, a * b0 + b, a * c0 + c, f0)
            }
            Kind::Scaled { base, factor } => {
                let (root, a0, b0, c0, f0) = base.affine_parts();
                // a0·root(f0·factor·u) + b0·factor·u + c0
                (root, a0, b0 * factor, c0, f0 * factor)
            }
            _ => (self, 1.0, 0.0, 0.0, 1.0),
        }
    }
}

/// ψ_d for d ≥ −1.
pub fn make_power_divergence(d: f64) -> Result<TuningFunction> {
    if !(d >= -1.0) || !d.is_finite() {
        return domain(format!("power-divergence index must satisfy d >= -1, got {d}"));
    }
    Ok(TuningFunction { name: format!("pd:{d}"), family: Family::PowerDivergence, kind: Kind::PowerDivergence { d } })
}

/// ψ_d″(1), equal to 1 for every d.
pub fn power_divergence_curvature_at_one(d: f64) -> f64 {
    // ψ_d″(x) = x^{d−1}
    1f64.powf(d - 1.0)
}

/// A built-in by name; `m` is required for `rao` and ignored otherwise.
pub fn builtin(name: &str, m: Option<u32>) -> Result<TuningFunction> {
    match name {
        "greenwood" => Ok(TuningFunction::greenwood()),
        "moran" => Ok(TuningFunction::moran()),
        "entropy" => Ok(TuningFunction::entropy()),
        "rao" => match m {
            Some(m) => TuningFunction::rao(m),
            None => domain("rao needs the spacing order m"),
        },
        _ => Err(Error::UnknownTuning(name.to_string())),
    }
}

/// Parses `greenwood | moran | entropy | rao | pd:<d>`.
pub fn parse_tuning(spec: &str, m: Option<u32>) -> Result<TuningFunction> {
    let spec = spec.trim();
    if let Some(d) = spec.strip_prefix("pd:") {
        let d: f64 = d.parse().map_err(|_| Error::UnknownTuning(spec.to_string()))?;
        return make_power_divergence(d);
    }
    builtin(spec, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let g = builtin("greenwood", None).unwrap();
        assert_eq!(g.evaluate(2.0).unwrap(), 4.0);
        assert_eq!(g.derivative(3.0).unwrap(), 6.0);
        let mo = builtin("moran", None).unwrap();
        assert_eq!(mo.evaluate(1.0).unwrap(), 0.0);
        assert_eq!(mo.derivative(2.0).unwrap(), -0.5);
        let en = builtin("entropy", None).unwrap();
        assert_eq!(en.derivative(1.0).unwrap(), 1.0);
        let rao = builtin("rao", Some(3)).unwrap();
        assert_eq!(rao.evaluate(5.0).unwrap(), 2.0);
        assert!(rao.depends_on_m());
        assert!(rao.outside_smooth_theory());
        assert!(matches!(rao.derivative(3.0), Err(Error::DerivativeUndefined { .. })));
        assert!(builtin("rao", None).is_err());
        assert!(matches!(builtin("bogus", None), Err(Error::UnknownTuning(_))));
        assert!(g.evaluate(0.0).is_err());
    }

    #[test]
    fn power_divergence_values() {
        let p1 = make_power_divergence(1.0).unwrap();
        assert_eq!(p1.evaluate(3.0).unwrap(), 4.0);
        let p0 = make_power_divergence(0.0).unwrap();
        assert!((p0.evaluate(std::f64::consts::E).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let pm = make_power_divergence(-1.0).unwrap();
        assert_eq!(pm.evaluate(2.0).unwrap(), -(2f64.ln()));
        assert!(make_power_divergence(-1.5).is_err());
        assert_eq!(power_divergence_curvature_at_one(0.5), 1.0);
    }

    #[test]
    fn power_divergence_vanishes_at_one_and_is_convex() {
        for &d in &[-1.0, -0.999_999_9, -0.5, 0.0, 1e-8, 0.5, 1.0, 2.0, 3.7] {
            let p = make_power_divergence(d).unwrap();
            assert!(p.value(1.0).abs() < 1e-15, "d = {d}");
            for i in 1..200 {
                let x = 0.05 * i as f64;
                let h = 1e-2 * x;
                let second = (p.centered(x + h) - 2.0 * p.centered(x) + p.centered(x - h)) / (h * h);
                // ψ_d″(x) = x^{d−1}
                assert!(second > 0.0 && (second / x.powf(d - 1.0) - 1.0).abs() < 1e-2, "d = {d}, x = {x}");
            }
        }
    }

    #[test]
    fn near_minus_one_is_continuous() {
        for &e in &[1e-7, 1e-9, 1e-12] {
            let p = make_power_divergence(-1.0 + e).unwrap();
            for &x in &[0.1, 0.5, 2.0, 10.0] {
                assert!((p.value(x) + x.ln()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn centered_form_is_continuous_at_zero() {
        let p0 = make_power_divergence(0.0).unwrap();
        for &d in &[1e-4, 1e-6, 1e-9] {
            let p = make_power_divergence(d).unwrap();
            let sup = (0..=99)
                .map(|i| 0.1 + 9.9 * i as f64 / 99.0)
                .map(|x| (p.centered(x) - p0.centered(x)).abs())
                .fold(0.0, f64::max);
            assert!(sup < 30.0 * d, "d = {d}: {sup}");
        }
        // series oracle: x(e^{dL} − 1) − d(x − 1) over d(d + 1)
        let (d, x) = (1e-9f64, 2.0f64);
        let l = x.ln();
        let lim = (x * l - x + 1.0 + d * x * l * l / 2.0) / (1.0 + d);
        let p = make_power_divergence(d).unwrap();
        assert!((p.centered(x) - lim).abs() < 1e-6);
        assert!((p.centered(x) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-6);
        // the literal value carries the (x − 1)/d term
        assert!((p.value(x) - (p.centered(x) + (x - 1.0) / d)).abs() / p.value(x) < 1e-12);
    }

    #[test]
    fn affine_and_scaled_compose() {
        let h = TuningFunction::entropy().affine_transform(2.0, -3.0, 7.0).unwrap().rescaled(0.5).unwrap();
        for &x in &[0.3f64, 1.0, 4.0] {
            let direct = 2.0 * (0.5 * x) * (0.5 * x).ln() - 3.0 * 0.5 * x + 7.0;
            assert!((h.value(x) - direct).abs() < 1e-13);
            let (root, a, b, c, f) = h.affine_parts();
            assert!((a * root.value(f * x) + b * x + c - direct).abs() < 1e-13);
        }
        assert!(TuningFunction::moran().affine_transform(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn affine_custom_rejected() {
        let lin: RealFn = Arc::new(|x| 3.0 * x - 1.0);
        assert!(matches!(
            TuningFunction::custom("lin", lin, None, Regularity::Polynomial),
            Err(Error::AffineTuning(_))
        ));
        let cube: RealFn = Arc::new(|x| x * x * x);
        assert!(TuningFunction::custom("cube", cube, None, Regularity::Polynomial).is_ok());
    }

    #[test]
    fn parses_cli_names() {
        assert_eq!(parse_tuning("pd:0.5", None).unwrap().d(), Some(0.5));
        assert_eq!(parse_tuning("rao", Some(4)).unwrap().value(1.0), 3.0);
        assert!(parse_tuning("pd:x", None).is_err());
        assert!(parse_tuning("pd:-2", None).is_err());
    }
}
