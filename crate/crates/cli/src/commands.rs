use std::fs;
use std::path::Path;

use serde::Serialize;
use spacings_gof::alternatives::{make_alternative, make_alternative_with_delta, parse_path, AlternativeModel};
use spacings_gof::asymptotics::{
    critical_point, efficacy as efficacy_of, moments as moments_of, null_standardization, pitman_are, AreQuery,
    AreValue, EfficacyResult, GrowthRegime, MomentSet, TestSpec,
};
use spacings_gof::json::float17;
use spacings_gof::montecarlo::{
    correlation_study, empirical_moment_check, null_distribution_study, power_study, sample_size_match, MatchConfig,
    SimulationConfig, SimulationReport,
};
use spacings_gof::spacings::{parse_sample, statistic, Mode, Scaling, SpacingsPlan};
use spacings_gof::special_math::normal_sf;
use spacings_gof::tuning::{parse_tuning, TuningFunction};

use crate::render::render;
use crate::{CliError, OutputArgs, SimArgs, SimCommand};

fn warn_if_rough(h: &TuningFunction) {
    if h.outside_smooth_theory() {
        eprintln!("warning: {} has a kink; the limit theorems assume a continuous derivative", h.name());
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn emit<T: Serialize>(record: &T, output: &OutputArgs) -> Result<(), CliError> {
    let text = render(record, output.format())?;
    print!("{text}");
    if let Some(path) = &output.out {
        fs::write(path, &text)?;
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        usage(format!("--alpha must lie in (0, 1), got {alpha}"))
    }
}

/// `1,2,5` or `1..20` (inclusive), or a mix.
fn parse_orders(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse order list '{text}'"));
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

#[derive(Serialize)]
struct TestReport {
    h: String,
    n: usize,
    m: usize,
    mode: Mode,
    scaling: Scaling,
    #[serde(serialize_with = "float17")]
    alpha: f64,
    #[serde(serialize_with = "float17")]
    statistic: f64,
    #[serde(serialize_with = "float17")]
    standardized: f64,
    #[serde(serialize_with = "float17")]
    critical_point: f64,
    #[serde(serialize_with = "float17")]
    p_value: f64,
    decision: &'static str,
    p_value_basis: &'static str,
}

pub fn test(
    file: &Path,
    h: &str,
    m: u32,
    mode: Mode,
    scaling: Scaling,
    alpha: f64,
    output: &OutputArgs,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    let h = parse_tuning(h, Some(m))?;
    warn_if_rough(&h);
    let text = fs::read_to_string(file).map_err(|source| CliError::Read { path: file.to_path_buf(), source })?;
    let sample = parse_sample(&text)?;
    let plan = SpacingsPlan::new(sample.n(), m as usize, mode, scaling)?;
    let v = statistic(&sample, &plan, &h)?;
    let z = null_standardization(&h, &plan)?.standardize(v);
    let c = critical_point(&h, &plan, alpha)?;
    let report = TestReport {
        h: h.name().to_string(),
        n: plan.n,
        m: plan.m,
        mode,
        scaling,
        alpha,
        statistic: v,
        standardized: z,
        critical_point: c,
        p_value: normal_sf(z),
        decision: if v > c { "reject" } else { "retain" },
        p_value_basis: "asymptotic normal, one-sided (large values)",
    };
    emit(&report, output)
}

pub fn moments(h: &str, orders: &str, output: &OutputArgs) -> Result<(), CliError> {
    let orders = parse_orders(orders)?;
    let rows = orders
        .iter()
        .map(|&m| {
            let h = parse_tuning(h, Some(m))?;
            warn_if_rough(&h);
            Ok(moments_of(&h, m)?)
        })
        .collect::<Result<Vec<MomentSet>, CliError>>()?;
    emit(&rows, output)
}

pub fn efficacy(h: &str, orders: &str, mode: Mode, output: &OutputArgs) -> Result<(), CliError> {
    let orders = parse_orders(orders)?;
    let rows = orders
        .iter()
        .map(|&m| {
            let h = parse_tuning(h, Some(m))?;
            warn_if_rough(&h);
            Ok(efficacy_of(&h, m, mode)?)
        })
        .collect::<Result<Vec<EfficacyResult>, CliError>>()?;
    emit(&rows, output)
}

fn parse_mode(text: &str) -> Result<Mode, CliError> {
    match text {
        "overlapping" | "o" => Ok(Mode::Overlapping),
        "disjoint" | "d" => Ok(Mode::Disjoint),
        _ => usage(format!("unknown mode '{text}'")),
    }
}

/// `<h>/<mode>/<m>`; m may be missing when a growth regime replaces it.
fn parse_spec(text: &str, need_m: bool) -> Result<TestSpec, CliError> {
    let parts: Vec<&str> = text.split('/').collect();
    let (h, mode, m) = match parts.as_slice() {
        [h, mode, m] => (*h, parse_mode(mode)?, Some(m.parse::<u32>().map_err(|_| CliError::Usage(format!("bad order in '{text}'")))?)),
        [h, mode] if !need_m => (*h, parse_mode(mode)?, None),
        _ => return usage(format!("test spec '{text}' must look like <h>/<mode>/<m>")),
    };
    if m == Some(0) {
        return usage(format!("order must be positive in '{text}'"));
    }
    let order = m.unwrap_or(1);
    Ok(TestSpec::new(parse_tuning(h, Some(order))?, order, mode))
}

fn parse_regime(text: &str) -> Result<GrowthRegime, CliError> {
    let bad = || CliError::Usage(format!("regime '{text}' must look like c,p"));
    let (c, p) = text.split_once(',').ok_or_else(bad)?;
    Ok(GrowthRegime::new(c.trim().parse().map_err(|_| bad())?, p.trim().parse().map_err(|_| bad())?)?)
}

#[derive(Serialize)]
struct RegimeRecord {
    #[serde(serialize_with = "float17")]
    c: f64,
    #[serde(serialize_with = "float17")]
    p: f64,
}

#[derive(Serialize)]
struct AreReport {
    first: String,
    second: String,
    first_regime: Option<RegimeRecord>,
    second_regime: Option<RegimeRecord>,
    are: AreValue,
}

pub fn are(first: &str, second: &str, regimes: &[String], output: &OutputArgs) -> Result<(), CliError> {
    let regimes = match regimes {
        [] => None,
        [a, b] => Some((parse_regime(a)?, parse_regime(b)?)),
        _ => return usage("give --regime exactly twice (first test, then second) or not at all"),
    };
    let q = AreQuery {
        first: parse_spec(first, regimes.is_none())?,
        second: parse_spec(second, regimes.is_none())?,
        regimes,
    };
    let value = pitman_are(&q)?;
    let rec = |r: GrowthRegime| RegimeRecord { c: r.c, p: r.p };
    emit(
        &AreReport {
            first: first.to_string(),
            second: second.to_string(),
            first_regime: regimes.map(|(a, _)| rec(a)),
            second_regime: regimes.map(|(_, b)| rec(b)),
            are: value,
        },
        output,
    )
}

fn tuning_for(sim: &SimArgs) -> Result<TuningFunction, CliError> {
    let m = u32::try_from(sim.m).map_err(|_| CliError::Usage(format!("--m {} is too large", sim.m)))?;
    let h = parse_tuning(&sim.h, Some(m))?;
    warn_if_rough(&h);
    Ok(h)
}

fn config(sim: &SimArgs, model: Option<AlternativeModel>) -> Result<SimulationConfig, CliError> {
    check_alpha(sim.alpha)?;
    let plan = SpacingsPlan::new(sim.n, sim.m, sim.mode.into(), sim.scaling.into())?;
    Ok(SimulationConfig::new(plan, tuning_for(sim)?, model, sim.reps, sim.seed, sim.alpha)?)
}

fn alternative(sim: &SimArgs, path: &str, delta: Option<f64>) -> Result<AlternativeModel, CliError> {
    let path = parse_path(path)?;
    Ok(match delta {
        Some(d) => make_alternative_with_delta(path, sim.n, sim.m, d)?,
        None => make_alternative(path, sim.n, sim.m)?,
    })
}

fn finish(report: &SimulationReport, sim: &SimArgs) -> Result<(), CliError> {
    if let Some(path) = &sim.rows {
        let mut w = csv::Writer::from_path(path)?;
        for row in &report.rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    eprintln!("runtime: {:.3} s", report.runtime_seconds);
    emit(report, &sim.output)
}

pub fn simulate(study: SimCommand) -> Result<(), CliError> {
    match study {
        SimCommand::Null(sim) => {
            let cfg = config(&sim, None)?;
            finish(&null_distribution_study(&cfg)?, &sim)
        }
        SimCommand::Power { sim, path, delta } => {
            let cfg = config(&sim, Some(alternative(&sim, &path, delta)?))?;
            finish(&power_study(&cfg)?, &sim)
        }
        SimCommand::Corr(sim) => {
            // the correlation identity concerns disjoint spacings; --mode is not used
            check_alpha(sim.alpha)?;
            let report = correlation_study(&tuning_for(&sim)?, sim.m, sim.n, sim.reps, sim.seed)?;
            finish(&report, &sim)
        }
        SimCommand::Moments { sim, path } => {
            let model = path.as_deref().map(|p| alternative(&sim, p, None)).transpose()?;
            let cfg = config(&sim, model)?;
            finish(&empirical_moment_check(&cfg)?, &sim)
        }
        SimCommand::Match { sim, h2, m2, mode2, target_power, path } => {
            check_alpha(sim.alpha)?;
            if sim.rows.is_some() {
                return usage("--rows is not available for simulate match");
            }
            let m1 = u32::try_from(sim.m).map_err(|_| CliError::Usage("--m is too large".into()))?;
            let m2 = m2.unwrap_or(m1);
            let first = TestSpec::new(tuning_for(&sim)?, m1, sim.mode.into());
            let second = TestSpec::new(parse_tuning(h2.as_deref().unwrap_or(&sim.h), Some(m2))?, m2, mode2.into());
            let cfg = MatchConfig {
                first,
                second,
                n: sim.n,
                target_power,
                alpha: sim.alpha,
                path: parse_path(&path)?,
                reps: sim.reps,
                master_seed: sim.seed,
            };
            let report = sample_size_match(&cfg)?;
            eprintln!("runtime: {:.3} s", report.runtime_seconds);
            emit(&report, &sim.output)
        }
    }
}
