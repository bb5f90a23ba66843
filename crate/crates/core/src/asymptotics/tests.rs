use super::*;
use crate::special_math::{mc_gamma_oracle, GammaFunctional, QuadratureKind, QuadratureSpec};
use crate::spacings::{Mode, Scaling, SpacingsPlan};
use crate::tuning::{make_power_divergence, Family, TuningFunction};
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// 30-digit mpmath values by nested adaptive quadrature (no closed forms):
// (m, mean, tau, sigma_star2, sigma2, mu)
type Row = (u32, f64, f64, f64, f64, f64);

const ENTROPY: [Row; 3] = [
    (1, 0.42278433509846714, 1.4227843350984671, 0.28986813369645287, 0.28986813369645287, 0.92868785736690559),
    (2, 1.8455686701969343, 1.9227843350984671, 0.36960440108935862, 0.60881320326807586, 0.94966581634157658),
    (3, 3.7683530052954014, 2.2561176684318005, 0.4058754688453839, 0.93525281307230343, 0.96121210669805822),
];
const MORAN: [Row; 3] = [
    (1, 0.57721566490153286, -1.0, 0.64493406684822644, 0.64493406684822644, 0.62260462910470527),
    (2, -0.42278433509846714, -0.5, 0.14493406684822644, 0.22467033424113218, 0.75827046028917412),
    (3, -0.92278433509846714, -1.0 / 3.0, 0.061600733514893103, 0.13414286902694367, 0.82243472205749241),
];
const RAO: [Row; 2] = [
    (2, 1.0826822658929015, 0.35335283236612692, 0.57808266283868408, 0.92012159158140871, 0.82213932756705672),
    (3, 1.3442508459323265, 0.29446377756446252, 0.93286291431762493, 2.0553563649796169, 0.85228930405436698),
];
const PD_HALF: [Row; 2] = [
    (2, 3.0978012939304567, 3.3233509704478426, 0.94238923617722522, 1.5666390802386562, 0.98825820072046409),
    (5, 14.660293211946909, 4.7980879635840727, 2.4290027319887477, 8.8846722225212412, 0.9936160257271116),
];
const PD_TWO: [Row; 2] = [
    (2, 3.8333333333333333, 6.0, 52.0, 86.0, 0.9607689228305228),
    (5, 34.833333333333333, 21.0, 770.0, 2800.0, 0.97700842091839441),
];

fn check_rows(h: &TuningFunction, rows: &[Row], tol: f64) {
    for &(m, mean, tau, ss, s2, mu) in rows {
        let s = moments(h, m).unwrap();
        for (label, got, want) in [
            ("mean", s.mean_h, mean),
            ("tau", s.tau, tau),
            ("sigma_star2", s.sigma_star2, ss),
            ("sigma2", s.sigma2, s2),
            ("mu", s.mu, mu),
        ] {
            assert!(rel(got, want) < tol, "{} m={m} {label}: {got} vs {want}", h.name());
        }
    }
}

#[test]
fn frozen_high_precision_values() {
    check_rows(&TuningFunction::entropy(), &ENTROPY, 1e-12);
    check_rows(&TuningFunction::moran(), &MORAN, 1e-12);
    check_rows(&make_power_divergence(0.5).unwrap(), &PD_HALF, 1e-10);
    check_rows(&make_power_divergence(2.0).unwrap(), &PD_TWO, 1e-12);
    for row in RAO {
        check_rows(&TuningFunction::rao(row.0).unwrap(), &[row], 1e-9);
    }
}

#[test]
fn greenwood_quadrature_matches_closed_form() {
    let h = TuningFunction::greenwood();
    let spec = QuadratureSpec::default();
    for m in 1..=50u32 {
        let q = quadrature_moments(&h, m, &spec).unwrap();
        let mf = m as f64;
        assert!(rel(q.sigma2, 2.0 * mf * (mf + 1.0) * (2.0 * mf + 1.0) / 3.0) < 1e-9, "m = {m}");
        assert!(rel(q.sigma_star2, 2.0 * mf * (mf + 1.0)) < 1e-9, "m = {m}");
        assert!((q.mu - 1.0).abs() < 1e-10);
    }
}

#[test]
fn log_closed_forms_match_quadrature() {
    let spec = QuadratureSpec::default().with_kind(QuadratureKind::LogTrapezoid);
    for (family, h) in [(Family::Moran, TuningFunction::moran()), (Family::Entropy, TuningFunction::entropy())] {
        for m in 1..=20u32 {
            let c = closed_form_moments(family, m).unwrap();
            let q = quadrature_moments(&h, m, &spec).unwrap();
            assert!(relative_gap(&c, &q) < 1e-6, "{family:?} m = {m}: {c:?} vs {q:?}");
        }
    }
}

#[test]
fn documented_examples() {
    let g = TuningFunction::greenwood();
    let moran = TuningFunction::moran();
    assert_eq!(moments(&g, 1).unwrap().tau, 4.0);
    assert_eq!(moments(&g, 2).unwrap().sigma_star2, 12.0);
    assert_eq!(moments(&g, 2).unwrap().sigma2, 20.0);
    let g5 = moments(&g, 5).unwrap();
    assert_eq!((g5.sigma2, g5.sigma_star2), (220.0, 60.0));
    assert!((g5.mu - 1.0).abs() <= 1e-10);
    assert!((moments(&moran, 1).unwrap().tau + 1.0).abs() < 1e-15);
    assert!(rel(moments(&moran, 1).unwrap().sigma_star2, PI * PI / 6.0 - 1.0) < 1e-14);
    assert!(rel(moments(&moran, 2).unwrap().sigma2, 5.0 * (PI * PI / 6.0 - 1.0) - 3.0) < 1e-13);
    assert!(rel(null_mean(&moran, 2).unwrap(), -0.42278433509846714) < 1e-14);
    assert_eq!(null_mean(&g, 3).unwrap(), 12.0);
    // the m = 1 identity σ² = σ*²
    for h in [g.clone(), moran.clone(), TuningFunction::entropy(), make_power_divergence(0.5).unwrap()] {
        let s = moments(&h, 1).unwrap();
        assert!(rel(s.sigma2, s.sigma_star2) < 1e-12, "{}", h.name());
    }
    assert!((shifted_mean(&g, 2, 800, 0.5).unwrap() - 6.075).abs() < 1e-12);
}

#[test]
fn efficacy_examples() {
    let g = TuningFunction::greenwood();
    let e = efficacy(&g, 2, Mode::Overlapping).unwrap();
    assert!((e.e2 - 0.9).abs() < 1e-12);
    assert!(rel(e.e2, e.e2_covariance_form) < 1e-8);
    assert!((efficacy(&g, 1, Mode::Disjoint).unwrap().e2 - 1.0).abs() < 1e-12);
    for m in [1u32, 3, 7, 40] {
        let mf = m as f64;
        let e = efficacy(&g, m, Mode::Overlapping).unwrap().e2;
        assert!(rel(e, 3.0 * (mf + 1.0) / (2.0 * (2.0 * mf + 1.0))) < 1e-12);
    }
    assert!((efficacy(&g, 1_000_000, Mode::Overlapping).unwrap().e2 - 0.75).abs() < 1e-6);
}

#[test]
fn critical_points() {
    let g = TuningFunction::greenwood();
    let plan = SpacingsPlan::new(600, 2, Mode::Overlapping, Scaling::ByN).unwrap();
    let c = critical_point(&g, &plan, 0.05).unwrap();
    assert!((c - (1.6448536269514729 * 12_000f64.sqrt() + 3600.0)).abs() < 1e-9);
    assert!((c - 3780.18).abs() < 0.01);
    assert_eq!(critical_point(&g, &plan, 0.5).unwrap(), 3600.0);
    let plan = SpacingsPlan::new(100, 1, Mode::Disjoint, Scaling::ByN).unwrap();
    let c = critical_point(&TuningFunction::moran(), &plan, 0.05).unwrap();
    let want = 1.6448536269514729 * (PI * PI / 6.0 - 1.0).sqrt() * 10.0 + 100.0 * 0.5772156649015329;
    assert!((c - want).abs() < 1e-11);
}

#[test]
fn normalized_scaling_shifts_center_only_by_the_scale_rule() {
    // h(u/m) for Moran is h(u) + ln m
    let plan = SpacingsPlan::new(400, 4, Mode::Overlapping, Scaling::Normalized).unwrap();
    let by_n = SpacingsPlan::new(400, 4, Mode::Overlapping, Scaling::ByN).unwrap();
    let h = TuningFunction::moran();
    let a = null_standardization(&h, &plan).unwrap();
    let b = null_standardization(&h, &by_n).unwrap();
    assert!(rel(a.center, b.center + 400.0 * 4f64.ln()) < 1e-13);
    assert!(rel(a.scale, b.scale) < 1e-13);
}

#[test]
fn predicted_powers() {
    assert!((predicted_power(0.75, 2.0, 0.05).unwrap() - 0.5347).abs() < 1e-4);
    assert!((predicted_power(0.0, 3.0, 0.05).unwrap() - 0.05).abs() < 1e-15);
    assert!((predicted_power(0.75, 0.0, 0.05).unwrap() - 0.05).abs() < 1e-15);
}

#[test]
fn pitman_examples() {
    let g = TuningFunction::greenwood();
    let q = |h1: &TuningFunction, mode1, h2: &TuningFunction, mode2, regimes| AreQuery {
        first: TestSpec::new(h1.clone(), 2, mode1),
        second: TestSpec::new(h2.clone(), 2, mode2),
        regimes,
    };
    let a = pitman_are(&q(&g, Mode::Overlapping, &g, Mode::Disjoint, None)).unwrap();
    assert!((a.as_f64() - 1.2).abs() < 1e-12);
    let same = pitman_are(&q(&g, Mode::Overlapping, &g, Mode::Overlapping, None)).unwrap();
    assert_eq!(same.as_f64(), 1.0);
    let pd0 = make_power_divergence(0.0).unwrap();
    let pd1 = make_power_divergence(1.0).unwrap();
    let r = |c, p| GrowthRegime::new(c, p).unwrap();
    let v = pitman_are(&q(&pd0, Mode::Overlapping, &pd1, Mode::Overlapping, Some((r(2.0, 0.3), r(1.0, 0.3))))).unwrap();
    assert_eq!(v, AreValue::Finite(2.0));
    let v = pitman_are(&q(&g, Mode::Overlapping, &g, Mode::Disjoint, Some((r(1.0, 0.3), r(1.0, 0.3))))).unwrap();
    assert_eq!(v, AreValue::Finite(1.5));
    let v = pitman_are(&q(&g, Mode::Overlapping, &g, Mode::Disjoint, Some((r(1.0, 0.2), r(1.0, 0.3))))).unwrap();
    assert_eq!(v, AreValue::Zero);
    let v = pitman_are(&q(&g, Mode::Overlapping, &g, Mode::Disjoint, Some((r(1.0, 0.4), r(1.0, 0.3))))).unwrap();
    assert_eq!(v, AreValue::Infinite);
    assert_eq!(serde_json::to_string(&v).unwrap(), "\"infinity\"");
    let rao = TuningFunction::rao(2).unwrap();
    assert!(matches!(
        pitman_are(&q(&rao, Mode::Overlapping, &g, Mode::Overlapping, Some((r(1.0, 0.3), r(1.0, 0.3))))),
        Err(crate::Error::UnsupportedLimit(_))
    ));
}

#[test]
fn rao_mu_against_simulation() {
    let h = TuningFunction::rao(2).unwrap();
    let s = moments(&h, 2).unwrap();
    assert!(s.mu > 0.0 && s.mu < 1.0);
    // cov(φ(Z), (Z−m)²) by plain simulation
    let phi = |u: f64| (u - 2.0).abs() - s.mean_h - s.tau * (u - 2.0);
    let f = |u: f64| phi(u) * (u - 2.0) * (u - 2.0);
    let est = mc_gamma_oracle(GammaFunctional::Single(&f), 2, 400_000, 3).unwrap();
    let cov = s.mu * s.sigma_star2.sqrt() * 12f64.sqrt();
    assert!((est.value - cov).abs() < 4.0 * est.std_error, "{} ± {} vs {cov}", est.value, est.std_error);
}

#[test]
fn cressie_inequality() {
    let mut hs = vec![
        TuningFunction::greenwood(),
        TuningFunction::moran(),
        TuningFunction::entropy(),
        make_power_divergence(0.5).unwrap(),
        make_power_divergence(2.0).unwrap(),
    ];
    for m in 1..=50u32 {
        hs.push(TuningFunction::rao(m).unwrap());
        for h in &hs {
            if h.depends_on_m() && h.name() != format!("rao[{m}]") {
                continue;
            }
            let s = moments(h, m).unwrap();
            assert!(m as f64 * s.sigma_star2 - s.sigma2 >= -1e-9 * s.sigma2, "{} m = {m}", h.name());
        }
        hs.pop();
    }
}

#[test]
fn affine_invariance() {
    for h in [TuningFunction::moran(), TuningFunction::entropy()] {
        let t = h.affine_transform(2.0, -3.0, 7.0).unwrap();
        for m in [1u32, 4, 12] {
            let (a, b) = (moments(&h, m).unwrap(), moments(&t, m).unwrap());
            assert!(rel(b.mu, a.mu) < 1e-9);
            for mode in [Mode::Overlapping, Mode::Disjoint] {
                let (ea, eb) = (efficacy(&h, m, mode).unwrap().e2, efficacy(&t, m, mode).unwrap().e2);
                assert!(rel(eb, ea) < 1e-9, "{} m = {m}", h.name());
            }
        }
    }
}

#[test]
fn mu_increases_toward_one() {
    for d in [-1.0, 0.0, 0.5, 2.0] {
        let h = make_power_divergence(d).unwrap();
        let mu2: Vec<f64> = [2u32, 5, 20, 100].iter().map(|&m| moments(&h, m).unwrap().mu.powi(2)).collect();
        assert!(mu2.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(mu2.windows(2).all(|w| w[0] < w[1]), "d = {d}: {mu2:?}");
        assert!(1.0 - mu2[3] < (1.0 - mu2[1]) / 3.0);
    }
    let one = make_power_divergence(1.0).unwrap();
    for m in [2u32, 5, 20, 100] {
        assert!((moments(&one, m).unwrap().mu.powi(2) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn clt_ratio_scales_with_n() {
    let g = TuningFunction::greenwood();
    let a = clt_condition_ratio(&g, 5, 1000, 3.0, Mode::Overlapping, 20_000, 1).unwrap();
    let b = clt_condition_ratio(&g, 5, 4000, 3.0, Mode::Overlapping, 20_000, 1).unwrap();
    assert!(rel(a.ratio_half_power / b.ratio_half_power, 2.0) < 1e-12);
    let big = clt_condition_ratio(&g, 10, 1_000_000, 3.0, Mode::Overlapping, 1000, 2).unwrap();
    let small = clt_condition_ratio(&g, 10, 10_000, 3.0, Mode::Overlapping, 1000, 2).unwrap();
    assert!(big.ratio_full_power < small.ratio_full_power);
    let moran = clt_condition_ratio(&TuningFunction::moran(), 20, 10_000, 3.0, Mode::Overlapping, 2000, 3).unwrap();
    assert!(moran.ratio_half_power.is_finite() && moran.ratio_half_power > 0.0);
    assert!(clt_condition_ratio(&g, 5, 1000, 2.0, Mode::Overlapping, 200, 1).is_err());
}
