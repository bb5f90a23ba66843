//! Contamination alternatives with density f(x) = 1 + δ·l(x) on [0, 1],
//! where l has zero mean and δ = (nm)^{-1/4}, with their CDFs, inverse CDFs
//! and exact samplers.

use std::path::Path as FsPath;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::json::float17;
use crate::rng::seeded;
use crate::spacings::SortedSample;
use crate::special_math::gauss_legendre;

/// Composite Gauss–Legendre on [a, b].
fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = gauss_legendre(16);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        total += 0.5 * width * rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(mid + 0.5 * width * x)).sum::<f64>();
    }
    total
}

/// A smooth bump exp(−1/(1 − t²)), t = (x − c)/w, with its running
/// integral tabulated on a grid.
#[derive(Clone, Debug)]
struct Bump {
    center: f64,
    width: f64,
    lo: f64,
    hi: f64,
    step: f64,
    cumulative: Vec<f64>,
}

impl Bump {
    const CELLS: usize = 512;

    fn new(center: f64, width: f64) -> Self {
        let lo = (center - width).max(0.0);
        let hi = (center + width).min(1.0);
        let step = (hi - lo) / Self::CELLS as f64;
        let mut cumulative = Vec::with_capacity(Self::CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        let mut bump = Bump { center, width, lo, hi, step, cumulative: Vec::new() };
        for i in 0..Self::CELLS {
            let a = lo + i as f64 * step;
            acc += integrate(a, a + step, 1, |x| bump.value(x));
            cumulative.push(acc);
        }
        bump.cumulative = cumulative;
        bump
    }

    fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    }

    /// ∫₀ˣ bump.
    fn integral(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return *self.cumulative.last().unwrap();
        }
        let cell = (((x - self.lo) / self.step) as usize).min(Self::CELLS - 1);
        let a = self.lo + cell as f64 * self.step;
        self.cumulative[cell] + integrate(a, x, 1, |y| self.value(y))
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }
}

/// Natural cubic spline through (x_i, y_i) on [0, 1].
#[derive(Clone, Debug)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
    // ∫₀^{x_i} S
    cumulative: Vec<f64>,
}

impl Spline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return domain("a table path needs at least three rows");
        }
        if x[0] != 0.0 || x[n - 1] != 1.0 {
            return domain("a table path must start at x = 0 and end at x = 1");
        }
        if !x.windows(2).all(|w| w[0] < w[1]) {
            return domain("table x values must be strictly increasing");
        }
        // tridiagonal system for interior second derivatives
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        let mut s = Spline { x, y, m, cumulative: vec![0.0; n] };
        for i in 1..n {
            s.cumulative[i] = s.cumulative[i - 1] + s.segment_integral(i - 1, s.x[i]);
        }
        Ok(s)
    }

    fn segment(&self, x: f64) -> usize {
        match self.x.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// ∫_{x_i}^{x} S for x in segment i.
    fn segment_integral(&self, i: usize, x: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let b = (x - self.x[i]) / h;
        // a = 1 − b; integrate in b over [0, b]
        let int_a = b - b * b / 2.0;
        let int_b = b * b / 2.0;
        let int_a3_a = (1.0 - (1.0 - b).powi(4)) / 4.0 - int_a;
        let int_b3_b = b.powi(4) / 4.0 - int_b;
        h * (self.y[i] * int_a + self.y[i + 1] * int_b + (int_a3_a * self.m[i] + int_b3_b * self.m[i + 1]) * h * h / 6.0)
    }

    fn integral(&self, x: f64) -> f64 {
        let i = self.segment(x);
        self.cumulative[i] + self.segment_integral(i, x)
    }

    fn knots(&self) -> &[f64] {
        &self.x
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Cosine { k: u32 },
    Bump(Arc<Bump>),
    Table(Arc<Spline>),
}

/// A zero-mean path l on [0, 1].
#[derive(Clone, Debug)]
pub struct PathFunction {
    label: String,
    shape: Shape,
    theta: f64,
    // subtracted from the raw shape to give zero mean
    offset: f64,
}

impl PathFunction {
    /// l(x) = θ·cos(2πkx).
    pub fn cosine(k: u32, theta: f64) -> Result<Self> {
        if k == 0 || !theta.is_finite() {
            return domain(format!("cosine path needs k >= 1 and finite theta, got k = {k}, theta = {theta}"));
        }
        Ok(PathFunction { label: format!("cos:{k}:{theta}"), shape: Shape::Cosine { k }, theta, offset: 0.0 })
    }

    /// l(x) = θ·(b(x) − ∫b) with b a C^∞ bump of half-width w at c.
    pub fn bump(center: f64, width: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&center) || !(width > 0.0) || !theta.is_finite() {
            return domain(format!("bump needs center in [0,1] and width > 0, got {center}, {width}"));
        }
        let b = Bump::new(center, width);
        let offset = b.total();
        Ok(PathFunction {
            label: format!("bump:{center}:{width}:{theta}"),
            shape: Shape::Bump(Arc::new(b)),
            theta,
            offset,
        })
    }

    /// Natural cubic spline through the rows, minus its mean.
    pub fn table(x: Vec<f64>, y: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let spline = Spline::new(x, y)?;
        let offset = spline.integral(1.0);
        Ok(PathFunction { label: label.into(), shape: Shape::Table(Arc::new(spline)), theta: 1.0, offset })
    }

    /// Reads two whitespace- or comma-separated columns (x, value).
    pub fn from_table_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse { line: idx + 1, message: format!("not a number: '{s}'") })
            };
            if cols.len() != 2 {
                return Err(Error::Parse { line: idx + 1, message: "expected two columns".into() });
            }
            xs.push(parse(cols[0])?);
            ys.push(parse(cols[1])?);
        }
        PathFunction::table(xs, ys, format!("table:{}", path.display()))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The same shape with θ multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() {
            return domain(format!("scale factor must be finite, got {factor}"));
        }
        let theta = self.theta * factor;
        let label = match &self.shape {
            Shape::Cosine { k } => format!("cos:{k}:{theta}"),
            Shape::Bump(b) => format!("bump:{}:{}:{theta}", b.center, b.width),
            Shape::Table(_) => format!("{}*{theta}", self.label.split('*').next().unwrap_or_default()),
        };
        Ok(PathFunction { label, theta, ..self.clone() })
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Cosine { k } => self.theta * (2.0 * std::f64::consts::PI * *k as f64 * x).cos(),
            Shape::Bump(b) => self.theta * (b.value(x) - self.offset),
            Shape::Table(s) => self.theta * (s.value(x) - self.offset),
        }
    }

    /// ∫₀ˣ l.
    pub fn integral(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Cosine { k } => {
                let w = 2.0 * std::f64::consts::PI * *k as f64;
                self.theta * (w * x).sin() / w
            }
            Shape::Bump(b) => self.theta * (b.integral(x) - self.offset * x),
            Shape::Table(s) => self.theta * (s.integral(x) - self.offset * x),
        }
    }

    // integration breakpoints where l is not smooth
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0, 1.0];
        match &self.shape {
            Shape::Cosine { .. } => {}
            Shape::Bump(b) => pts.extend([b.lo, b.hi]),
            Shape::Table(s) => pts.extend_from_slice(s.knots()),
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// ∫₀¹ g(l(x)) dx, piecewise between breakpoints.
    pub fn integrate_of(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.breakpoints().windows(2).map(|w| integrate(w[0], w[1], 64, |x| g(self.value(x)))).sum()
    }

    /// (‖l‖₂², ‖l‖₃³).
    pub fn norms(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Cosine { .. } => (self.theta * self.theta / 2.0, 0.0),
            _ => (self.integrate_of(|v| v * v), self.integrate_of(|v| v * v * v)),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match &self.shape {
            Shape::Cosine { .. } => self.theta.abs(),
            Shape::Bump(b) => {
                let peak = b.value(b.center);
                self.theta.abs() * (peak - self.offset).max(self.offset)
            }
            Shape::Table(_) => {
                // a spline between knots is bounded by a fine grid plus a small margin
                let grid = 20_000;
                (0..=grid).map(|i| self.value(i as f64 / grid as f64).abs()).fold(0.0, f64::max) * (1.0 + 1e-6)
            }
        }
    }
}

/// Parses `cos:<k>:<theta> | bump:<center>:<width>:<theta> | table:<file>`.
pub fn parse_path(spec: &str) -> Result<PathFunction> {
    let bad = || Error::Domain(format!("cannot parse path '{spec}'"));
    if let Some(file) = spec.strip_prefix("table:") {
        return PathFunction::from_table_file(FsPath::new(file));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["cos", k, theta] => PathFunction::cosine(k.parse().map_err(|_| bad())?, num(theta)?),
        ["bump", c, w, theta] => PathFunction::bump(num(c)?, num(w)?, num(theta)?),
        _ => Err(bad()),
    }
}

/// Density 1 + δ·l on [0, 1].
#[derive(Clone, Debug, Serialize)]
pub struct AlternativeModel {
    #[serde(skip)]
    path: PathFunction,
    pub label: String,
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "float17")]
    pub delta: f64,
    #[serde(serialize_with = "float17")]
    pub l2norm2: f64,
    #[serde(serialize_with = "float17")]
    pub l3norm3: f64,
    /// Set when δ was supplied by hand instead of (nm)^{-1/4}; power
    /// predictions do not apply.
    pub off_theory: bool,
}

/// The alternative at δ = (nm)^{-1/4}.
pub fn make_alternative(path: PathFunction, n: usize, m: usize) -> Result<AlternativeModel> {
    if n < 2 || m == 0 {
        return domain(format!("need n >= 2 and m >= 1, got n = {n}, m = {m}"));
    }
    let delta = ((n * m) as f64).powf(-0.25);
    build(path, n, m, delta, false)
}

/// Exploratory escape hatch: an arbitrary δ, marked off-theory.
pub fn make_alternative_with_delta(path: PathFunction, n: usize, m: usize, delta: f64) -> Result<AlternativeModel> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return domain(format!("delta must be finite and non-negative, got {delta}"));
    }
    build(path, n, m, delta, true)
}

fn build(path: PathFunction, n: usize, m: usize, delta: f64, off_theory: bool) -> Result<AlternativeModel> {
    let excess = delta * path.sup_abs();
    if excess >= 1.0 {
        return Err(Error::DensityNotPositive(excess));
    }
    let mean = path.integrate_of(|v| v);
    if mean.abs() > 1e-10 {
        return domain(format!("path {} has mean {mean}, not 0", path.label()));
    }
    let (l2norm2, l3norm3) = path.norms();
    Ok(AlternativeModel { label: path.label().to_string(), path, n, m, delta, l2norm2, l3norm3, off_theory })
}

impl AlternativeModel {
    pub fn path(&self) -> &PathFunction {
        &self.path
    }

    pub fn density(&self, x: f64) -> f64 {
        1.0 + self.delta * self.path.value(x)
    }

    /// F(x) = x + δ·∫₀ˣ l, with F(0) = 0 and F(1) = 1 exactly.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            (x + self.delta * self.path.integral(x)).clamp(0.0, 1.0)
        }
    }

    /// F⁻¹(u) by Newton steps safeguarded by bisection.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        if self.delta == 0.0 {
            return u;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut y = (u - self.delta * self.path.integral(u)).clamp(0.0, 1.0);
        for _ in 0..200 {
            let r = self.cdf(y) - u;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let next = y - r / self.density(y);
            y = if next >= lo && next <= hi { next } else { 0.5 * (lo + hi) };
            // the step taken after reaching tolerance brings y to rounding level
            if r.abs() <= 1e-12 || hi - lo <= f64::EPSILON {
                break;
            }
        }
        y
    }
}

/// n − 1 sorted draws from the alternative, or from U(0, 1) when `model`
/// is `None`.
///
/// Null draws are U_k = (Y₀ + … + Y_{k−1})/(Y₀ + … + Y_{n−1}) for standard
/// exponentials Y, which arrive sorted. Alternative draws apply F⁻¹.
pub fn sample_sorted<R: Rng + ?Sized>(model: Option<&AlternativeModel>, n: usize, rng: &mut R) -> SortedSample {
    assert!(n >= 2, "sample size parameter n must be at least 2");
    let mut partial = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for _ in 0..n - 1 {
        acc += rng.sample::<f64, _>(Exp1);
        partial.push(acc);
    }
    let total = acc + rng.sample::<f64, _>(Exp1);
    for v in partial.iter_mut() {
        *v /= total;
    }
    if let Some(model) = model {
        let mut prev = 0.0f64;
        for v in partial.iter_mut() {
            // F⁻¹ is monotone; the max guards the last-ulp rounding
            let y = model.inverse_cdf(*v).max(prev);
            *v = y;
            prev = y;
        }
    }
    SortedSample::from_sorted(partial)
}

/// [`sample_sorted`] from a fresh stream keyed by `seed`.
pub fn sample_sorted_seeded(model: Option<&AlternativeModel>, n: usize, seed: u64) -> SortedSample {
    sample_sorted(model, n, &mut seeded(seed))
}
