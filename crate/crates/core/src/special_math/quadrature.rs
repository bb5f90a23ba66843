//! Gauss rules for Gamma-density expectations.
//!
//! All rules here return probability weights: for the generalized
//! Gauss–Laguerre rule with parameter `alpha` the weights integrate against
//! the Gamma(alpha + 1) density, so `Σ wᵢ f(xᵢ)` approximates `E f(Z)`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use super::functions::log_gamma_unchecked;
use crate::error::{domain, Error, Result};

/// Hard cap on the number of nodes reached by adaptive doubling.
pub const MAX_NODES: usize = 1 << 14;

/// Starting node count used by [`QuadratureSpec::default`].
pub const DEFAULT_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// Weight u^{m-1} e^{-u}, normalized to the Gamma(m) density. Exact for
    /// polynomials of degree below twice the node count.
    GeneralizedGaussLaguerre,
    /// Trapezoid rule in y = ln(u/m) over the effective support. Converges
    /// geometrically for integrands with log or power singularities at the
    /// origin, where Gauss–Laguerre only converges algebraically.
    LogTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub kind: QuadratureKind,
    pub abs_tol: f64,
    /// Relative tolerance on the magnitude of the estimate; the refinement
    /// stops once successive estimates differ by less than
    /// `max(abs_tol, rel_tol * |estimate|)`.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count: DEFAULT_NODES,
            kind: QuadratureKind::GeneralizedGaussLaguerre,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec { abs_tol, rel_tol, ..Default::default() }
    }

    pub fn with_kind(self, kind: QuadratureKind) -> Self {
        QuadratureSpec { kind, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return domain(format!("node_count must be >= 2, got {}", self.node_count));
        }
        if self.node_count > MAX_NODES {
            return domain(format!("node_count {} exceeds the cap {MAX_NODES}", self.node_count));
        }
        if !(self.abs_tol >= 0.0) || !(self.rel_tol >= 0.0) {
            return domain("tolerances must be non-negative");
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub method: EstimateMethod,
    /// Node count (quadrature) or replication count (MC) behind the value.
    pub size: usize,
}

impl EstimateWithError {
    pub(crate) fn quadrature(value: f64, size: usize) -> Self {
        EstimateWithError { value, std_error: 0.0, method: EstimateMethod::Quadrature, size }
    }
}

/// Nodes and probability weights of a Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

type RuleCache = RwLock<HashMap<(usize, u64), Arc<GaussRule>>>;

fn laguerre_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn legendre_cache() -> &'static RwLock<HashMap<usize, Arc<GaussRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const LAGUERRE_CACHE_LIMIT: usize = 60_000;

/// Generalized Gauss–Laguerre rule with `n` nodes for the Gamma(alpha + 1)
/// density, computed once and cached.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Arc<GaussRule> {
    let key = (n, alpha.to_bits());
    if let Some(rule) = laguerre_cache().read().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|i| ((i as f64) * (i as f64 + alpha)).sqrt()).collect();
    let rule = Arc::new(golub_welsch(diag, off, 1.0));
    let mut cache = laguerre_cache().write().unwrap();
    if cache.len() >= LAGUERRE_CACHE_LIMIT {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&rule));
    rule
}

fn log_trapezoid_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Trapezoid rule with `n + 1` points in y = ln(u / shape) for the
/// Gamma(shape) density; the weights include the Jacobian.
pub fn log_trapezoid(n: usize, shape: f64) -> Arc<GaussRule> {
    let key = (n, shape.to_bits());
    if let Some(rule) = log_trapezoid_cache().read().unwrap().get(&key) {
        return Arc::clone(rule);
    }
    // log density of y: shape·(y + 1 − e^y) + const, peaked at y = 0
    const DEPTH: f64 = 50.0;
    let profile = |y: f64| shape * (y + 1.0 - y.exp());
    let edge = |mut far: f64| {
        let mut near = 0.0;
        while profile(far) > -DEPTH {
            far *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if profile(mid) > -DEPTH {
                near = mid;
            } else {
                far = mid;
            }
        }
        far
    };
    let lo = edge(-1.0);
    let hi = edge(1.0);
    let h = (hi - lo) / n as f64;
    // normalized by the discrete mass: the trapezoid sum of the density
    // converges as fast as the integrals themselves, and this avoids the
    // cancellation in ln Γ(shape) for large shapes
    let (nodes, mut weights): (Vec<f64>, Vec<f64>) = (0..=n)
        .map(|i| {
            let y = lo + i as f64 * h;
            (shape * y.exp(), profile(y).exp())
        })
        .unzip();
    let mass: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= mass);
    let rule = Arc::new(GaussRule { nodes, weights });
    let mut cache = log_trapezoid_cache().write().unwrap();
    if cache.len() >= LAGUERRE_CACHE_LIMIT {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&rule));
    rule
}

fn rule_for(kind: QuadratureKind, n: usize, shape: f64) -> Arc<GaussRule> {
    match kind {
        QuadratureKind::GeneralizedGaussLaguerre => gauss_laguerre(n, shape - 1.0),
        QuadratureKind::LogTrapezoid => log_trapezoid(n, shape),
    }
}

/// Gauss–Legendre rule on [-1, 1]; weights sum to 2.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    if let Some(rule) = legendre_cache().read().unwrap().get(&n) {
        return Arc::clone(rule);
    }
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            i / (4.0 * i * i - 1.0).sqrt()
        })
        .collect();
    let rule = Arc::new(golub_welsch(diag, off, 2.0));
    legendre_cache().write().unwrap().insert(n, Arc::clone(&rule));
    rule
}

/// Eigen-decomposition of the symmetric tridiagonal Jacobi matrix by implicit
/// QL, tracking only the first component of each eigenvector.
fn golub_welsch(mut d: Vec<f64>, off: Vec<f64>, mass: f64) -> GaussRule {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| mass * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    GaussRule { nodes, weights }
}

/// Log of the Gamma(shape) density.
pub(crate) fn gamma_log_density(u: f64, shape: f64) -> f64 {
    if shape == 1.0 {
        return -u;
    }
    (shape - 1.0) * u.ln() - u - log_gamma_unchecked(shape)
}

fn check_finite(value: f64, nodes: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::QuadratureNotConverged { nodes, last: value, previous: f64::NAN })
    }
}

/// Runs `estimate(n)` for n = start, 2·start, … until two successive
/// estimates agree to the spec's tolerance.
fn refine(spec: &QuadratureSpec, mut estimate: impl FnMut(usize) -> Result<f64>) -> Result<EstimateWithError> {
    spec.validate()?;
    let mut n = spec.node_count;
    let mut last = check_finite(estimate(n)?, n)?;
    let mut previous = f64::NAN;
    while n * 2 <= MAX_NODES {
        n *= 2;
        previous = last;
        last = estimate(n)?;
        if !last.is_finite() {
            break;
        }
        if (last - previous).abs() <= spec.tolerance(last) {
            return Ok(EstimateWithError::quadrature(last, n));
        }
    }
    Err(Error::QuadratureNotConverged { nodes: n, last, previous })
}

fn check_shape(shape: f64) -> Result<()> {
    if !(shape > 0.0) || !shape.is_finite() {
        return domain(format!("Gamma shape must be positive, got {shape}"));
    }
    Ok(())
}

/// E f(Z) for Z ~ Gamma(m, 1), by generalized Gauss–Laguerre with adaptive
/// node doubling.
pub fn gamma_expectation(f: impl Fn(f64) -> f64, m: u32, spec: &QuadratureSpec) -> Result<EstimateWithError> {
    if m == 0 {
        return domain("order m must be positive");
    }
    gamma_expectation_shape(f, m as f64, spec)
}

/// As [`gamma_expectation`] for a real shape parameter.
pub fn gamma_expectation_shape(
    f: impl Fn(f64) -> f64,
    shape: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_shape(shape)?;
    refine(spec, |n| Ok(rule_for(spec.kind, n, shape).apply(&f)))
}

/// E f(Z) for Z ~ Gamma(shape, 1) where `f` has a kink (or other non-smooth
/// point) at `kink`.
///
/// The support is split at the kink and at a far cutoff and each piece is
/// integrated with composite Gauss–Legendre against the explicit density.
/// Panels double on each refinement; `spec.node_count` is the starting
/// total node count.
pub fn gamma_expectation_kinked(
    f: impl Fn(f64) -> f64,
    shape: f64,
    kink: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_shape(shape)?;
    let upper = gamma_upper_cutoff(shape);
    if !(kink > 0.0 && kink < upper) {
        return gamma_expectation_shape(f, shape, spec);
    }
    const PER_PANEL: usize = 16;
    let rule = gauss_legendre(PER_PANEL);
    refine(spec, |n| {
        let panels = (n / PER_PANEL).max(1);
        let left = composite(&rule, 0.0, kink, panels, |u| f(u) * gamma_log_density(u, shape).exp());
        let right = composite(&rule, kink, upper, panels, |u| f(u) * gamma_log_density(u, shape).exp());
        Ok(left + right)
    })
}

/// Point beyond which the Gamma(shape) tail mass is negligible (< 1e-30).
pub(crate) fn gamma_upper_cutoff(shape: f64) -> f64 {
    shape + 40.0 * shape.sqrt() + 80.0
}

fn composite(rule: &GaussRule, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

fn check_lag(m: u32, j: u32) -> Result<()> {
    if m < 2 || j == 0 || j >= m {
        return domain(format!("lag j must lie in [1, m-1], got j = {j} with m = {m}"));
    }
    Ok(())
}

/// E[f(Z₀,ₘ) g(Z_{j,m})] for two Gamma(m) block sums sharing m − j
/// exponentials.
///
/// Writes Z₀ = A + B and Z_j = B + C with A, C ~ Gamma(j) and
/// B ~ Gamma(m − j) independent, and evaluates E_B[E_A f(A+B) · E_C g(B+C)]
/// with nested Gauss–Laguerre rules.
pub fn gamma_joint_expectation(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    m: u32,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_lag(m, j)?;
    let (edge, shared) = (j as f64, (m - j) as f64);
    refine(spec, |n| {
        let inner = rule_for(spec.kind, n, edge);
        let outer = rule_for(spec.kind, n, shared);
        Ok(outer.apply(|b| inner.apply(|a| f(a + b)) * inner.apply(|c| g(b + c))))
    })
}

/// E[f(Z₀,ₘ) f(Z_{j,m})], sharing the inner integral between both factors.
pub fn gamma_lag_product(
    f: impl Fn(f64) -> f64,
    m: u32,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_lag(m, j)?;
    let (edge, shared) = (j as f64, (m - j) as f64);
    refine(spec, |n| {
        let inner = rule_for(spec.kind, n, edge);
        let outer = rule_for(spec.kind, n, shared);
        Ok(outer.apply(|b| {
            let e = inner.apply(|a| f(a + b));
            e * e
        }))
    })
}

/// [`gamma_lag_product`] for a function with a kink at `kink`: the inner
/// integral is split at `kink − b` and the outer one at `kink`.
pub fn gamma_lag_product_kinked(
    f: impl Fn(f64) -> f64,
    m: u32,
    j: u32,
    kink: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_lag(m, j)?;
    let (edge, shared) = (j as f64, (m - j) as f64);
    const PER_PANEL: usize = 16;
    let rule = gauss_legendre(PER_PANEL);
    let inner_upper = gamma_upper_cutoff(edge);
    let outer_upper = gamma_upper_cutoff(shared);
    refine(spec, |n| {
        let panels = (n / PER_PANEL).max(1);
        let inner = |b: f64| {
            let density = |a: f64| f(a + b) * gamma_log_density(a, edge).exp();
            let split = kink - b;
            if split > 0.0 && split < inner_upper {
                composite(&rule, 0.0, split, panels, density) + composite(&rule, split, inner_upper, panels, density)
            } else {
                composite(&rule, 0.0, inner_upper, 2 * panels, density)
            }
        };
        let outer = |b: f64| {
            let e = inner(b);
            e * e * gamma_log_density(b, shared).exp()
        };
        if kink > 0.0 && kink < outer_upper {
            Ok(composite(&rule, 0.0, kink, panels, outer) + composite(&rule, kink, outer_upper, panels, outer))
        } else {
            Ok(composite(&rule, 0.0, outer_upper, 2 * panels, outer))
        }
    })
}
