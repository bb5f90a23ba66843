use serde::{Serialize, Serializer};

use super::efficacy::efficacy;
use crate::error::{domain, Error, Result};
use crate::json::float17;
use crate::spacings::Mode;
use crate::tuning::TuningFunction;

#[derive(Clone, Debug)]
pub struct TestSpec {
    pub h: TuningFunction,
    pub m: u32,
    pub mode: Mode,
}

impl TestSpec {
    pub fn new(h: TuningFunction, m: u32, mode: Mode) -> Self {
        TestSpec { h, m, mode }
    }
}

/// m = c·n^p with c > 0 and 0 < p < 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthRegime {
    pub c: f64,
    pub p: f64,
}

impl GrowthRegime {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(p > 0.0 && p < 1.0) {
            return domain(format!("growth regime needs c > 0 and 0 < p < 1, got c = {c}, p = {p}"));
        }
        Ok(GrowthRegime { c, p })
    }
}

#[derive(Clone, Debug)]
pub struct AreQuery {
    pub first: TestSpec,
    pub second: TestSpec,
    pub regimes: Option<(GrowthRegime, GrowthRegime)>,
}

/// A Pitman efficiency, possibly a degenerate limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreValue {
    Finite(f64),
    Zero,
    Infinite,
}

impl AreValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            AreValue::Finite(x) => *x,
            AreValue::Zero => 0.0,
            AreValue::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for AreValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AreValue::Finite(x) => float17(x, s),
            AreValue::Zero => s.serialize_str("0"),
            AreValue::Infinite => s.serialize_str("infinity"),
        }
    }
}

/// Pitman ARE of the first test with respect to the second.
///
/// At fixed orders this is m₁e₁²/(m₂e₂²). With growth regimes
/// m_i = c_i·n^{p_i} and both functions in the power-divergence family
/// the limit is 0 if p₁ < p₂, ∞ if p₁ > p₂, and (c₁/c₂)·R otherwise, with
/// R = 3/2 for overlapping against disjoint, 2/3 for the reverse and 1
/// for equal modes.
pub fn pitman_are(q: &AreQuery) -> Result<AreValue> {
    match q.regimes {
        None => {
            let e1 = efficacy(&q.first.h, q.first.m, q.first.mode)?.e2;
            let e2 = efficacy(&q.second.h, q.second.m, q.second.mode)?.e2;
            let num = q.first.m as f64 * e1;
            let den = q.second.m as f64 * e2;
            if den == 0.0 {
                return domain("second test has zero efficacy");
            }
            Ok(AreValue::Finite(num / den))
        }
        Some((r1, r2)) => {
            for spec in [&q.first, &q.second] {
                if !spec.h.in_power_divergence_family() {
                    return Err(Error::UnsupportedLimit(format!(
                        "growth-regime limits are known only for the power-divergence family, not {}",
                        spec.h.name()
                    )));
                }
            }
            if r1.p < r2.p {
                return Ok(AreValue::Zero);
            }
            if r1.p > r2.p {
                return Ok(AreValue::Infinite);
            }
            let mode_ratio = match (q.first.mode, q.second.mode) {
                (Mode::Overlapping, Mode::Disjoint) => 1.5,
                (Mode::Disjoint, Mode::Overlapping) => 2.0 / 3.0,
                _ => 1.0,
            };
            Ok(AreValue::Finite(r1.c / r2.c * mode_ratio))
        }
    }
}
