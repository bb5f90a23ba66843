//! Circular overlapping and disjoint m-spacings and the statistics built
//! on them.
//!
//! With X₀ = 0, Xₙ = 1 and X_k = 1 + X_{k−n} for k > n, the overlapping
//! spacings are D_{k,m} = X_{k+m} − X_k for k = 0, …, n−1 and the disjoint
//! ones are D_{km,m} for k = 0, …, n/m − 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tuning::TuningFunction;

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// Order statistics X₁ ≤ … ≤ X_{n−1} in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
    ties: usize,
}

impl SortedSample {
    /// Wraps values already known to be sorted and inside (0, 1), as
    /// produced by the samplers.
    pub(crate) fn from_sorted(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let ties = count_ties(&values);
        SortedSample { values, ties }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The sample parameter n, one more than the number of observations.
    pub fn n(&self) -> usize {
        self.values.len() + 1
    }

    /// Number of zero-length gaps, counting coincidences with 0 or 1.
    pub fn ties(&self) -> usize {
        self.ties
    }

    pub fn has_ties(&self) -> bool {
        self.ties > 0
    }

    /// X_k under the circular convention, for 0 ≤ k < 2n.
    #[inline]
    fn point(&self, k: usize) -> f64 {
        let n = self.n();
        if k == 0 {
            0.0
        } else if k < n {
            self.values[k - 1]
        } else if k == n {
            1.0
        } else {
            1.0 + self.values[k - n - 1]
        }
    }
}

fn count_ties(values: &[f64]) -> usize {
    let inner = values.windows(2).filter(|w| w[0] == w[1]).count();
    let edges = values.first().is_some_and(|&x| x == 0.0) as usize + values.last().is_some_and(|&x| x == 1.0) as usize;
    inner + edges
}

/// Checks range, sorts if needed and counts ties.
pub fn validate_sample(raw: &[f64]) -> Result<SortedSample> {
    if raw.is_empty() {
        return Err(Error::InvalidSample("need at least one observation".into()));
    }
    if let Some((i, x)) = raw.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidSample(format!("value {x} at position {} is outside [0, 1]", i + 1)));
    }
    let mut values = raw.to_vec();
    if !values.windows(2).all(|w| w[0] <= w[1]) {
        values.sort_by(f64::total_cmp);
    }
    Ok(SortedSample::from_sorted(values))
}

/// Parses a sample file: one real per line, blank lines and `#` comments
/// ignored, with an optional `# n=<int>` header asserting the intended n.
pub fn parse_sample(text: &str) -> Result<SortedSample> {
    let mut values = Vec::new();
    let mut declared: Option<(usize, usize)> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("n=") {
                let n = n.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad header '{line}'"),
                })?;
                declared = Some((n, line_no));
            }
            continue;
        }
        let x: f64 = line.parse().map_err(|_| Error::Parse { line: line_no, message: format!("not a number: '{line}'") })?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Parse { line: line_no, message: format!("value {x} is outside [0, 1]") });
        }
        values.push(x);
    }
    if let Some((n, line)) = declared {
        if n != values.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("header declares n = {n} but the file has {} values (n = {})", values.len(), values.len() + 1),
            });
        }
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 0, message: "no observations".into() });
    }
    validate_sample(&values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Overlapping,
    Disjoint,
}

/// Multiplier applied to each spacing before h.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// n·D
    ByN,
    /// (n/m)·D
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpacingsPlan {
    pub n: usize,
    pub m: usize,
    pub mode: Mode,
    pub scaling: Scaling,
}

impl SpacingsPlan {
    pub fn new(n: usize, m: usize, mode: Mode, scaling: Scaling) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPlan(format!("n must be at least 2, got {n}")));
        }
        if m == 0 {
            return Err(Error::InvalidPlan("m must be positive".into()));
        }
        match mode {
            Mode::Overlapping if m >= n => {
                return Err(Error::InvalidPlan(format!("overlapping spacings need m < n, got m = {m}, n = {n}")));
            }
            Mode::Disjoint if n % m != 0 || m > n => {
                return Err(Error::InvalidPlan(format!("disjoint spacings need m | n, got m = {m}, n = {n}")));
            }
            _ => {}
        }
        if scaling == Scaling::Normalized && n % m != 0 {
            return Err(Error::InvalidPlan(format!("normalized scaling needs m | n, got m = {m}, n = {n}")));
        }
        Ok(SpacingsPlan { n, m, mode, scaling })
    }

    /// The multiplier c in h(c·D).
    pub fn factor(&self) -> f64 {
        match self.scaling {
            Scaling::ByN => self.n as f64,
            Scaling::Normalized => (self.n / self.m) as f64,
        }
    }

    /// Number of summands: n overlapping or n/m disjoint.
    pub fn terms(&self) -> usize {
        match self.mode {
            Mode::Overlapping => self.n,
            Mode::Disjoint => self.n / self.m,
        }
    }

    /// Moments are computed for u ↦ h(u·factor/n), since n·D behaves like a
    /// Gamma(m) variable.
    pub fn moment_scale(&self) -> f64 {
        match self.scaling {
            Scaling::ByN => 1.0,
            Scaling::Normalized => 1.0 / self.m as f64,
        }
    }

    /// Same plan at another sample size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        SpacingsPlan::new(n, self.m, self.mode, self.scaling)
    }
}

/// Unscaled spacings.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingsVector {
    pub values: Vec<f64>,
    pub mode: Mode,
    pub m: usize,
    pub n: usize,
}

impl SpacingsVector {
    pub fn total(&self) -> f64 {
        self.values.iter().copied().collect::<CompensatedSum>().value()
    }
}

pub fn overlapping_spacings(s: &SortedSample, m: usize) -> Result<SpacingsVector> {
    let n = s.n();
    if m == 0 || m >= n {
        return Err(Error::InvalidPlan(format!("overlapping spacings need 1 <= m < n, got m = {m}, n = {n}")));
    }
    let values = (0..n).map(|k| s.point(k + m) - s.point(k)).collect();
    Ok(SpacingsVector { values, mode: Mode::Overlapping, m, n })
}

pub fn disjoint_spacings(s: &SortedSample, m: usize) -> Result<SpacingsVector> {
    let n = s.n();
    if m == 0 || m > n || n % m != 0 {
        return Err(Error::InvalidPlan(format!("disjoint spacings need m | n, got m = {m}, n = {n}")));
    }
    let values = (0..n / m).map(|k| s.point((k + 1) * m) - s.point(k * m)).collect();
    Ok(SpacingsVector { values, mode: Mode::Disjoint, m, n })
}

/// Σ h(c·D) over the plan's spacings.
///
/// A zero spacing where h is not finite (ties under a log-type h) is an
/// error naming the spacing index.
pub fn statistic(s: &SortedSample, plan: &SpacingsPlan, h: &TuningFunction) -> Result<f64> {
    if s.n() != plan.n {
        return Err(Error::InvalidPlan(format!("plan is for n = {} but the sample has n = {}", plan.n, s.n())));
    }
    let c = plan.factor();
    let step = match plan.mode {
        Mode::Overlapping => 1,
        Mode::Disjoint => plan.m,
    };
    let mut acc = CompensatedSum::default();
    for i in 0..plan.terms() {
        let k = i * step;
        let x = c * (s.point(k + plan.m) - s.point(k));
        let v = h.value(x);
        if !v.is_finite() || x < 0.0 {
            return Err(Error::DegenerateSpacing { index: k, value: x });
        }
        acc.add(v);
    }
    Ok(acc.value())
}
