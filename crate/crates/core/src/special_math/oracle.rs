//! Monte-Carlo estimates of Gamma expectations, used as an independent check
//! on the quadrature kernels.

use rand_distr::{Distribution, Gamma};

use super::quadrature::{EstimateMethod, EstimateWithError};
use crate::error::{domain, Result};
use crate::rng::seeded;

/// The quantity the oracle estimates.
#[derive(Clone, Copy)]
pub enum GammaFunctional<'a> {
    /// E f(Z₀,ₘ).
    Single(&'a dyn Fn(f64) -> f64),
    /// E[f(Z₀,ₘ) g(Z_{lag,m})].
    Joint { f: &'a dyn Fn(f64) -> f64, g: &'a dyn Fn(f64) -> f64, lag: u32 },
}

/// Unbiased MC estimate with its standard error; deterministic given `seed`.
pub fn mc_gamma_oracle(functional: GammaFunctional<'_>, m: u32, reps: usize, seed: u64) -> Result<EstimateWithError> {
    if m == 0 {
        return domain("order m must be positive");
    }
    if reps < 100 {
        return domain(format!("the MC oracle needs at least 100 replications, got {reps}"));
    }
    let mut rng = seeded(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut push = |k: usize, x: f64| {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    };
    match functional {
        GammaFunctional::Single(f) => {
            let gamma = Gamma::new(m as f64, 1.0).expect("valid shape");
            for k in 0..reps {
                push(k, f(gamma.sample(&mut rng)));
            }
        }
        GammaFunctional::Joint { f, g, lag } => {
            if lag == 0 || lag >= m {
                return domain(format!("lag must lie in [1, m-1], got {lag} with m = {m}"));
            }
            let edge = Gamma::new(lag as f64, 1.0).expect("valid shape");
            let shared = Gamma::new((m - lag) as f64, 1.0).expect("valid shape");
            for k in 0..reps {
                let a = edge.sample(&mut rng);
                let b = shared.sample(&mut rng);
                let c = edge.sample(&mut rng);
                push(k, f(a + b) * g(b + c));
            }
        }
    }
    let var = m2 / (reps - 1) as f64;
    Ok(EstimateWithError {
        value: mean,
        std_error: (var / reps as f64).sqrt(),
        method: EstimateMethod::Mc,
        size: reps,
    })
}
