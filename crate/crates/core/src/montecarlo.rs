//! Seeded simulation studies that check the asymptotic claims at finite n.
//!
//! Replication r draws from `substream(master_seed, r)` and the results are
//! reduced in replication order, so a report does not depend on how many
//! threads produced it. The pool size is read from `SPACINGS_GOF_THREADS`
//! (all cores when unset).

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::alternatives::{make_alternative, sample_sorted, AlternativeModel, PathFunction};
use crate::asymptotics::{
    critical_point, effective_tuning, efficacy, moments, null_standardization, predicted_power, TestSpec,
};
use crate::error::{domain, Error, Result};
use crate::json::{float17, opt_float17, Float17};
use crate::rng::substream;
use crate::spacings::{statistic, Mode, Scaling, SpacingsPlan};
use crate::special_math::{normal_cdf, normal_upper_quantile};
use crate::tuning::TuningFunction;

pub const THREADS_ENV: &str = "SPACINGS_GOF_THREADS";

/// Largest tolerated fraction of replications with a degenerate spacing.
pub const DEGENERATE_LIMIT: f64 = 1e-3;

const STREAM_DERIVATION: &str = "chacha8, key = seed_from_u64(master_seed), stream = replication index";

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub plan: SpacingsPlan,
    pub h: TuningFunction,
    /// `None` is the uniform null.
    pub model: Option<AlternativeModel>,
    pub reps: usize,
    pub master_seed: u64,
    pub alpha: f64,
}

impl SimulationConfig {
    pub fn new(
        plan: SpacingsPlan,
        h: TuningFunction,
        model: Option<AlternativeModel>,
        reps: usize,
        master_seed: u64,
        alpha: f64,
    ) -> Result<Self> {
        if reps < 100 {
            return domain(format!("need at least 100 replications, got {reps}"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if let Some(model) = &model {
            if model.n != plan.n || model.m != plan.m {
                return domain(format!(
                    "alternative built for n = {}, m = {} but the plan has n = {}, m = {}",
                    model.n, model.m, plan.n, plan.m
                ));
            }
        }
        Ok(SimulationConfig { plan, h, model, reps, master_seed, alpha })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Null,
    Power,
    Correlation,
    Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedsUsed {
    pub master_seed: u64,
    pub first_stream: u64,
    pub last_stream: u64,
    pub derivation: &'static str,
}

impl SeedsUsed {
    fn new(master_seed: u64, reps: usize) -> Self {
        SeedsUsed { master_seed, first_stream: 0, last_stream: reps as u64 - 1, derivation: STREAM_DERIVATION }
    }
}

/// Raw statistics against their analytic null mean and variance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentDeviation {
    #[serde(serialize_with = "float17")]
    pub expected_mean: f64,
    #[serde(serialize_with = "float17")]
    pub raw_mean: f64,
    #[serde(serialize_with = "float17")]
    pub mean_relative_deviation: f64,
    #[serde(serialize_with = "float17")]
    pub expected_var: f64,
    #[serde(serialize_with = "float17")]
    pub raw_var: f64,
    #[serde(serialize_with = "float17")]
    pub var_relative_deviation: f64,
}

/// One replication, as streamed to CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub rep: u64,
    pub statistic: f64,
    pub standardized: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub study: Study,
    pub h: String,
    pub n: usize,
    pub m: usize,
    pub mode: Mode,
    pub scaling: Scaling,
    pub path: Option<String>,
    #[serde(serialize_with = "opt_float17")]
    pub delta: Option<f64>,
    pub off_theory: bool,
    pub reps: usize,
    pub degenerate: usize,
    #[serde(serialize_with = "float17")]
    pub alpha: f64,
    #[serde(serialize_with = "float17")]
    pub center: f64,
    #[serde(serialize_with = "float17")]
    pub scale: f64,
    #[serde(serialize_with = "float17")]
    pub critical_point: f64,
    /// Mean and variance of the standardized statistics.
    #[serde(serialize_with = "float17")]
    pub empirical_mean: f64,
    #[serde(serialize_with = "float17")]
    pub empirical_var: f64,
    /// Kolmogorov–Smirnov distance of the standardized statistics to Φ.
    #[serde(serialize_with = "float17")]
    pub ks_to_normal: f64,
    pub rejections: usize,
    /// rejections / (reps − degenerate).
    #[serde(serialize_with = "float17")]
    pub rejection_rate: f64,
    #[serde(serialize_with = "float17")]
    pub rejection_se: f64,
    #[serde(serialize_with = "opt_float17")]
    pub predicted_power: Option<f64>,
    pub correlations: Option<BTreeMap<String, Float17>>,
    pub moments: Option<MomentDeviation>,
    pub seeds_used: SeedsUsed,
    #[serde(skip)]
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<ReplicationRow>,
}

impl SimulationReport {
    pub fn statistics(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.statistic).collect()
    }
}

/// Number of worker threads requested through the environment.
pub fn configured_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(0) | Err(_) => domain(format!("{THREADS_ENV} must be a positive integer, got '{text}'")),
            Ok(k) => Ok(Some(k)),
        },
    }
}

/// Runs `f(r)` for r in 0..reps on the configured pool; results come back in
/// replication order.
fn run_replications<T: Send>(reps: usize, f: impl Fn(u64) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(configured_threads()?.unwrap_or(0))
        .build()
        .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| (0..reps as u64).into_par_iter().map(f).collect()))
}

/// Splits outcomes into successes and a degenerate count, aborting above
/// the threshold. Other errors propagate.
fn screen<T>(outcomes: Vec<Result<T>>, reps: usize) -> Result<(Vec<(u64, T)>, usize)> {
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut degenerate = 0;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => kept.push((r as u64, v)),
            Err(Error::DegenerateSpacing { .. }) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    if degenerate as f64 > DEGENERATE_LIMIT * reps as f64 {
        return Err(Error::DegenerateAbort { degenerate, reps });
    }
    if kept.len() < 2 {
        return domain("fewer than two usable replications");
    }
    Ok((kept, degenerate))
}

fn simulate_statistics(cfg: &SimulationConfig) -> Result<(Vec<(u64, f64)>, usize)> {
    let model = cfg.model.as_ref();
    let outcomes = run_replications(cfg.reps, |r| {
        let sample = sample_sorted(model, cfg.plan.n, &mut substream(cfg.master_seed, r));
        statistic(&sample, &cfg.plan, &cfg.h)
    })?;
    screen(outcomes, cfg.reps)
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = xs.clone().fold((0usize, 0.0), |(c, s), x| (c + 1, s + x));
    let mean = sum / count as f64;
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (count - 1) as f64)
}

/// sup |F̂ − F| for a sample against a continuous CDF.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Pearson correlation; equal inputs give exactly 1.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn build_report(cfg: &SimulationConfig, study: Study, stats: &[(u64, f64)], degenerate: usize) -> Result<SimulationReport> {
    let st = null_standardization(&cfg.h, &cfg.plan)?;
    let crit = critical_point(&cfg.h, &cfg.plan, cfg.alpha)?;
    let rows: Vec<ReplicationRow> = stats
        .iter()
        .map(|&(rep, v)| ReplicationRow { rep, statistic: v, standardized: st.standardize(v), reject: v > crit })
        .collect();
    let standardized: Vec<f64> = rows.iter().map(|r| r.standardized).collect();
    let (empirical_mean, empirical_var) = mean_var(standardized.iter().copied());
    let rejections = rows.iter().filter(|r| r.reject).count();
    let valid = rows.len() as f64;
    let rate = rejections as f64 / valid;
    Ok(SimulationReport {
        study,
        h: cfg.h.name().to_string(),
        n: cfg.plan.n,
        m: cfg.plan.m,
        mode: cfg.plan.mode,
        scaling: cfg.plan.scaling,
        path: cfg.model.as_ref().map(|m| m.label.clone()),
        delta: cfg.model.as_ref().map(|m| m.delta),
        off_theory: cfg.model.as_ref().is_some_and(|m| m.off_theory),
        reps: cfg.reps,
        degenerate,
        alpha: cfg.alpha,
        center: st.center,
        scale: st.scale,
        critical_point: crit,
        empirical_mean,
        empirical_var,
        ks_to_normal: ks_distance(&standardized, normal_cdf),
        rejections,
        rejection_rate: rate,
        rejection_se: (rate * (1.0 - rate) / valid).sqrt(),
        predicted_power: None,
        correlations: None,
        moments: None,
        seeds_used: SeedsUsed::new(cfg.master_seed, cfg.reps),
        runtime_seconds: 0.0,
        rows,
    })
}

fn timed(start: Instant, mut report: SimulationReport) -> SimulationReport {
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report
}

/// Null distribution of the standardized statistic: KS distance to Φ,
/// mean, variance and empirical size.
pub fn null_distribution_study(cfg: &SimulationConfig) -> Result<SimulationReport> {
    if cfg.model.is_some() {
        return domain("the null study runs under the uniform null; drop the alternative");
    }
    let start = Instant::now();
    let (stats, degenerate) = simulate_statistics(cfg)?;
    Ok(timed(start, build_report(cfg, Study::Null, &stats, degenerate)?))
}

/// Rejection rate of the size-α test under the alternative, with the
/// asymptotic prediction Φ(√e²·‖l‖₂² − u_α) unless δ is off-theory.
pub fn power_study(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let Some(model) = &cfg.model else {
        return domain("the power study needs an alternative");
    };
    let start = Instant::now();
    let (stats, degenerate) = simulate_statistics(cfg)?;
    let mut report = build_report(cfg, Study::Power, &stats, degenerate)?;
    if !model.off_theory {
        let m = u32::try_from(cfg.plan.m).map_err(|_| Error::InvalidPlan("m too large".into()))?;
        let e2 = efficacy(&effective_tuning(&cfg.h, &cfg.plan)?, m, cfg.plan.mode)?.e2;
        report.predicted_power = Some(predicted_power(e2, model.l2norm2, cfg.alpha)?);
    }
    Ok(timed(start, report))
}

/// Null correlation between the disjoint statistic for h and the disjoint
/// Greenwood statistic, next to μ_m(h).
pub fn correlation_study(h: &TuningFunction, m: usize, n: usize, reps: usize, seed: u64) -> Result<SimulationReport> {
    let plan = SpacingsPlan::new(n, m, Mode::Disjoint, Scaling::ByN)?;
    let cfg = SimulationConfig::new(plan, h.clone(), None, reps, seed, 0.05)?;
    let greenwood = TuningFunction::greenwood();
    let start = Instant::now();
    let outcomes = run_replications(reps, |r| {
        let sample = sample_sorted(None, n, &mut substream(seed, r));
        Ok((statistic(&sample, &plan, h)?, statistic(&sample, &plan, &greenwood)?))
    })?;
    let (pairs, degenerate) = screen(outcomes, reps)?;
    let stats: Vec<(u64, f64)> = pairs.iter().map(|&(r, (v, _))| (r, v)).collect();
    let xs: Vec<f64> = pairs.iter().map(|(_, (v, _))| *v).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, (_, g))| *g).collect();
    let mut report = build_report(&cfg, Study::Correlation, &stats, degenerate)?;
    let mu = moments(h, m as u32)?.mu;
    report.correlations = Some(BTreeMap::from([
        ("greenwood".to_string(), Float17(correlation(&xs, &ys))),
        ("mu".to_string(), Float17(mu)),
    ]));
    Ok(timed(start, report))
}

/// Raw mean and variance of the statistic against terms·A₀ and terms·σ²
/// (σ*² for disjoint spacings).
pub fn empirical_moment_check(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let start = Instant::now();
    let (stats, degenerate) = simulate_statistics(cfg)?;
    let mut report = build_report(cfg, Study::Moments, &stats, degenerate)?;
    let (raw_mean, raw_var) = mean_var(stats.iter().map(|&(_, v)| v));
    let expected_var = report.scale * report.scale;
    report.moments = Some(MomentDeviation {
        expected_mean: report.center,
        raw_mean,
        mean_relative_deviation: (raw_mean - report.center) / report.center.abs(),
        expected_var,
        raw_var,
        var_relative_deviation: raw_var / expected_var - 1.0,
    });
    Ok(timed(start, report))
}

#[derive(Clone, Debug)]
pub struct MatchConfig {
    pub first: TestSpec,
    pub second: TestSpec,
    /// Sample size of the first test.
    pub n: usize,
    pub target_power: f64,
    pub alpha: f64,
    /// Shape of the alternative; θ is rescaled to reach the target power.
    pub path: PathFunction,
    pub reps: usize,
    pub master_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerPoint {
    pub k: usize,
    #[serde(serialize_with = "float17")]
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchReport {
    pub first: String,
    pub second: String,
    pub n: usize,
    pub k: usize,
    #[serde(serialize_with = "float17")]
    pub ratio: f64,
    #[serde(serialize_with = "float17")]
    pub ci_low: f64,
    #[serde(serialize_with = "float17")]
    pub ci_high: f64,
    /// m₁e₁²/(m₂e₂²) at the finite orders.
    #[serde(serialize_with = "float17")]
    pub predicted_ratio: f64,
    pub path: String,
    #[serde(serialize_with = "float17")]
    pub delta: f64,
    #[serde(serialize_with = "float17")]
    pub power_first: f64,
    #[serde(serialize_with = "float17")]
    pub power_first_se: f64,
    #[serde(serialize_with = "float17")]
    pub power_second_at_k: f64,
    pub evaluations: Vec<PowerPoint>,
    pub seeds_used: SeedsUsed,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

fn spec_label(s: &TestSpec) -> String {
    let mode = match s.mode {
        Mode::Overlapping => "overlapping",
        Mode::Disjoint => "disjoint",
    };
    format!("{}/{}/m={}", s.h.name(), mode, s.m)
}

/// Power of `spec` at sample size k under a fixed density, with common
/// random numbers across k.
fn simulated_power(spec: &TestSpec, k: usize, model: &AlternativeModel, alpha: f64, reps: usize, seed: u64) -> Result<f64> {
    let plan = SpacingsPlan::new(k, spec.m as usize, spec.mode, Scaling::ByN)?;
    let crit = critical_point(&spec.h, &plan, alpha)?;
    let outcomes = run_replications(reps, |r| {
        let sample = sample_sorted(Some(model), k, &mut substream(seed, r));
        statistic(&sample, &plan, &spec.h)
    })?;
    let (stats, _) = screen(outcomes, reps)?;
    Ok(stats.iter().filter(|(_, v)| *v > crit).count() as f64 / stats.len() as f64)
}

/// Sample size k at which the second test matches the power the first test
/// reaches at n, under the same alternative density. The ratio k/n is the
/// finite-n counterpart of the Pitman efficiency of the first test
/// relative to the second.
///
/// θ is chosen so that the first test's predicted power equals the target.
/// k is searched on the feasible grid (multiples of m for disjoint
/// spacings) up to 8n; the interval comes from matching the first power
/// ± 1.96 joint standard errors.
pub fn sample_size_match(cfg: &MatchConfig) -> Result<MatchReport> {
    let start = Instant::now();
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) || !(cfg.target_power > cfg.alpha && cfg.target_power < 1.0) {
        return domain(format!("need 0 < alpha < target power < 1, got {} and {}", cfg.alpha, cfg.target_power));
    }
    if cfg.reps < 100 {
        return domain(format!("need at least 100 replications, got {}", cfg.reps));
    }
    let e1 = efficacy(&cfg.first.h, cfg.first.m, cfg.first.mode)?.e2;
    let e2 = efficacy(&cfg.second.h, cfg.second.m, cfg.second.mode)?.e2;
    if !(e1 > 0.0) || !(e2 > 0.0) {
        return domain("both tests need positive efficacy");
    }
    let (l2, _) = cfg.path.norms();
    if !(l2 > 0.0) {
        return domain("the path must not vanish");
    }
    let needed = (normal_upper_quantile(1.0 - cfg.target_power)? + normal_upper_quantile(cfg.alpha)?) / e1.sqrt();
    let path = cfg.path.scaled((needed / l2).sqrt())?;
    let model = make_alternative(path, cfg.n, cfg.first.m as usize)?;

    let (reps, seed) = (cfg.reps, cfg.master_seed);
    let power_first = simulated_power(&cfg.first, cfg.n, &model, cfg.alpha, reps, seed)?;
    let power_first_se = (power_first * (1.0 - power_first) / reps as f64).sqrt();
    let joint_se = std::f64::consts::SQRT_2 * power_first_se.max(0.5 / reps as f64);

    let m2 = cfg.second.m as usize;
    let (step, k_min) = match cfg.second.mode {
        Mode::Overlapping => (1, m2 + 1),
        Mode::Disjoint => (m2, m2),
    };
    let index_max = (8 * cfg.n).saturating_sub(k_min) / step;
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut power_at = |index: usize| -> Result<f64> {
        let k = k_min + index * step;
        if let Some(&p) = cache.get(&k) {
            return Ok(p);
        }
        let p = simulated_power(&cfg.second, k, &model, cfg.alpha, reps, seed)?;
        cache.insert(k, p);
        Ok(p)
    };
    // smallest grid index whose power reaches `level`
    let crossing = |level: f64, power_at: &mut dyn FnMut(usize) -> Result<f64>| -> Result<usize> {
        let mut hi = ((cfg.n.saturating_sub(k_min)) / step).clamp(1, index_max);
        while power_at(hi)? < level {
            if hi == index_max {
                return Err(Error::TargetUnreachable(format!(
                    "power {:.4} of {} at k = {} is below {level:.4}",
                    power_at(hi)?,
                    spec_label(&cfg.second),
                    k_min + hi * step
                )));
            }
            hi = (2 * hi).min(index_max);
        }
        let mut lo = 0usize;
        if power_at(lo)? >= level {
            return Ok(lo);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if power_at(mid)? >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let k = k_min + step * crossing(power_first, &mut power_at)?;
    let k_low = k_min + step * crossing((power_first - 1.96 * joint_se).max(0.0), &mut power_at)?;
    let k_high = k_min + step * crossing((power_first + 1.96 * joint_se).min(1.0), &mut power_at)?;
    let power_second_at_k = power_at((k - k_min) / step)?;

    let mut evaluations: Vec<PowerPoint> = cache.into_iter().map(|(k, power)| PowerPoint { k, power }).collect();
    evaluations.sort_by_key(|p| p.k);
    let n = cfg.n as f64;
    Ok(MatchReport {
        first: spec_label(&cfg.first),
        second: spec_label(&cfg.second),
        n: cfg.n,
        k,
        ratio: k as f64 / n,
        ci_low: k_low as f64 / n,
        ci_high: k_high as f64 / n,
        predicted_ratio: cfg.first.m as f64 * e1 / (cfg.second.m as f64 * e2),
        path: model.label.clone(),
        delta: model.delta,
        power_first,
        power_first_se,
        power_second_at_k,
        evaluations,
        seeds_used: SeedsUsed::new(seed, reps),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
