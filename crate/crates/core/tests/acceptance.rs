mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wristexo::biomech::{
    sweep_torque_curve, CurveSample, PostureLabel, DESIGN_ABDUCTION_LIMIT, DESIGN_ADDUCTION_LIMIT,
};
use wristexo::config::ToolkitConfig;
use wristexo::error::Error;
use wristexo::spring_design::{
    catalog_match, default_catalog, derive_spring, fit_linear, fit_linear_samples, stiffness_to_nmm_per_deg,
    worst_case_index,
};
use wristexo::transmission::{capstan_transmit, CableRoute, FrictionDirection, Gearing};
use wristexo::trial::{
    aggregate_report, chi2_sf, clean_interpolate, friedman_test, joint_torque_estimate, read_trial_file, rms_torque,
    rom_metrics, CleaningPolicy, TrialInput, TrialLog, TrialMeta, TrialSample,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn log_of(samples: Vec<TrialSample>) -> TrialLog {
    let meta = TrialMeta::from_filename("P1_POS1_unloaded_S1_T1.csv").unwrap();
    TrialLog::new(meta, samples).unwrap()
}

fn sample(t: f64, angle_deg: f64, current_ma: f64) -> TrialSample {
    TrialSample {
        t,
        angle_deg,
        current_ma,
        button: None,
    }
}

fn spring_derivation() -> Outcome {
    let n = 50;
    let samples: Vec<CurveSample> = (0..n)
        .map(|i| {
            let angle =
                DESIGN_ADDUCTION_LIMIT + (DESIGN_ABDUCTION_LIMIT - DESIGN_ADDUCTION_LIMIT) * i as f64 / (n - 1) as f64;
            CurveSample {
                angle,
                moment: -0.7054 * angle + 0.4157,
            }
        })
        .collect();
    let fit = fit_linear_samples(&samples).map_err(|e| e.to_string())?;
    let spring = derive_spring(&fit).map_err(|e| e.to_string())?;
    let k_nmm = stiffness_to_nmm_per_deg(spring.stiffness_k).map_err(|e| e.to_string())?;
    let expected_nmm = 0.7054 * 1000.0 * PI / 180.0;
    ensure(
        within(spring.stiffness_k, 0.7054, 1e-9),
        format!("k = {}", spring.stiffness_k),
    )?;
    ensure(
        within(k_nmm, 12.31, 0.10) && within(k_nmm, expected_nmm, 1e-9),
        format!("k = {k_nmm} N·mm/deg"),
    )?;
    ensure(
        within(spring.theta0, 0.589, 0.005),
        format!("theta0 = {}", spring.theta0),
    )?;
    Ok(format!(
        "k = {:.4} N·m/rad = {k_nmm:.3} N·mm/deg, theta0 = {:.4} rad",
        spring.stiffness_k, spring.theta0
    ))
}

fn catalog_selection() -> Outcome {
    let m = catalog_match(12.32, &default_catalog()).map_err(|e| e.to_string())?;
    let softer = m.softer.as_ref().map(|e| e.name.as_str());
    let stiffer = m.stiffer.as_ref().map(|e| e.name.as_str());
    ensure(
        m.nominal.name == "S2" && softer == Some("S1") && stiffer == Some("S3"),
        format!("nominal {} softer {softer:?} stiffer {stiffer:?}", m.nominal.name),
    )?;
    Ok("12.32 N·mm/deg -> S2 (S1 softer, S3 stiffer)".into())
}

fn friedman_p_values() -> Outcome {
    let blocks = |rows: &[[f64; 3]]| rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let a = friedman_test(&blocks(&[
        [1., 2., 3.],
        [1., 2., 3.],
        [1., 3., 2.],
        [2., 1., 3.],
        [2., 3., 1.],
    ]))
    .map_err(|e| e.to_string())?;
    let b = friedman_test(&blocks(&[
        [1., 2., 3.],
        [1., 2., 3.],
        [1., 2., 3.],
        [3., 1., 2.],
        [3., 2., 1.],
    ]))
    .map_err(|e| e.to_string())?;
    ensure(
        within(a.chi2, 2.8, 1e-12) && a.df == 2,
        format!("chi2 {} df {}", a.chi2, a.df),
    )?;
    ensure(
        within(b.chi2, 1.2, 1e-12) && b.df == 2,
        format!("chi2 {} df {}", b.chi2, b.df),
    )?;
    let p28 = chi2_sf(2.8, 2.0).map_err(|e| e.to_string())?;
    let p12 = chi2_sf(1.2, 2.0).map_err(|e| e.to_string())?;
    ensure(
        within(p28, 0.2466, 0.001) && within(a.p, 0.2466, 0.001),
        format!("p(2.8) = {p28}"),
    )?;
    ensure(
        within(p12, 0.5488, 0.001) && within(b.p, 0.5488, 0.001),
        format!("p(1.2) = {p12}"),
    )?;
    Ok(format!("p(2.8) = {p28:.4}, p(1.2) = {p12:.4}"))
}

fn friedman_unanimous() -> Outcome {
    let blocks: Vec<Vec<f64>> = (0..5)
        .map(|i| vec![0.5 * i as f64, 10.0 + i as f64, 30.0 - i as f64])
        .collect();
    let r = friedman_test(&blocks).map_err(|e| e.to_string())?;
    let (n, k) = (5.0, 3.0);
    let rank_sums: [f64; 3] = [5.0, 10.0, 15.0];
    let oracle = 12.0 / (n * k * (k + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n * (k + 1.0);
    ensure(
        r.chi2 == 10.0 && oracle == 10.0,
        format!("chi2 {} oracle {oracle}", r.chi2),
    )?;
    ensure(within(r.p, (-5.0f64).exp(), 1e-6), format!("p {}", r.p))?;
    Ok(format!("chi2 = {}, p = {:.8}", r.chi2, r.p))
}

fn torque_chain() -> Outcome {
    let log = log_of((0..100).map(|i| sample(i as f64 * 0.01, 0.0, 476.0)).collect());
    let gear = Gearing::default();
    let tau = rms_torque(&log, &gear).map_err(|e| e.to_string())?;
    let joint = joint_torque_estimate(tau, &gear);
    let ideal_gear = Gearing::new(128.0, 1.0, 0.0105).map_err(|e| e.to_string())?;
    let ideal = joint_torque_estimate(tau, &ideal_gear);
    ensure(
        within(tau * 1000.0, 4.998, 5e-4),
        format!("tau_rms = {} mN·m", tau * 1000.0),
    )?;
    ensure(
        within(joint, 0.499, 5e-4) && within(joint, 0.5, 0.025),
        format!("joint = {joint}"),
    )?;
    ensure(within(ideal, 0.640, 5e-4), format!("ideal = {ideal}"))?;
    Ok(format!(
        "tau_rms = {:.3} mN·m, joint = {joint:.3} N·m, ideal = {ideal:.3} N·m",
        tau * 1000.0
    ))
}

fn series_exp(x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..40 {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

fn capstan_properties() -> Outcome {
    use FrictionDirection::{Aiding, Opposing};
    let route = |mu: f64, wrap: f64| CableRoute::new(mu, wrap, 0.025).unwrap();
    let t = |f: f64, r: &CableRoute, d| capstan_transmit(f, r, d).unwrap();
    for d in [Opposing, Aiding] {
        ensure(t(37.5, &route(0.3, 0.0), d) == 37.5, "zero wrap is not identity")?;
        ensure(t(37.5, &route(0.0, 2.0), d) == 37.5, "zero friction is not identity")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (f, mu) = (rng.random_range(0.1..500.0), rng.random_range(0.0..0.5));
        let (a, b) = (rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        for d in [Opposing, Aiding] {
            let chained = t(t(f, &route(mu, a), d), &route(mu, b), d);
            let joined = t(f, &route(mu, a + b), d);
            worst = worst.max(((chained - joined) / joined).abs());
        }
    }
    ensure(worst <= 1e-12, format!("multiplicativity error {worst:e}"))?;
    let out = t(100.0, &route(0.04, PI), Opposing);
    let oracle = 100.0 * series_exp(0.04 * PI);
    ensure(
        within(out, 113.39, 0.01) && within(out, oracle, 1e-9),
        format!("{out} vs oracle {oracle}"),
    )?;
    Ok(format!(
        "identities exact, multiplicativity {worst:.1e}, 100 N -> {out:.2} N"
    ))
}

fn rom_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let len = rng.random_range(1..200);
        let centre = rng.random_range(-40.0..30.0);
        let angles: Vec<f64> = (0..len).map(|_| centre + rng.random_range(-20.0..20.0)).collect();
        let log = log_of(
            angles
                .iter()
                .enumerate()
                .map(|(i, &a)| sample(i as f64 * 0.01, a, 400.0))
                .collect(),
        );
        let r = rom_metrics(&log).map_err(|e| e.to_string())?;
        let (mut hi, mut lo) = (angles[0], angles[0]);
        for &a in &angles {
            if a > hi {
                hi = a;
            }
            if a < lo {
                lo = a;
            }
        }
        let ab = if hi > 0.0 { hi } else { 0.0 };
        let ad = if lo < 0.0 { -lo } else { 0.0 };
        ensure(
            r.ab == ab && r.ad == ad && r.total == ab + ad,
            format!("case {case}: {r:?} vs ({ab}, {ad})"),
        )?;
    }
    let mut trials = 0;
    for entry in std::fs::read_dir(common::trials_dir()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if TrialMeta::from_filename(&name).is_err() {
            continue;
        }
        let log = read_trial_file(&path).map_err(|e| e.to_string())?;
        if let Ok(cleaned) = clean_interpolate(&log, &CleaningPolicy::default()) {
            let r = rom_metrics(&cleaned.log).map_err(|e| e.to_string())?;
            ensure(r.total == r.ab + r.ad, format!("{name}: {r:?}"))?;
            trials += 1;
        }
    }
    Ok(format!(
        "1000 random signals exact, sum identity on {trials} fixture trials"
    ))
}

fn simulation_linearity() -> Outcome {
    let cfg = ToolkitConfig::default();
    let mut curves = Vec::new();
    let mut details = Vec::new();
    let mut low_r2 = Vec::new();
    for label in PostureLabel::PRESETS {
        let posture = cfg.posture(label).map_err(|e| e.to_string())?;
        let curve = sweep_torque_curve(&cfg.chain, posture, &cfg.motion, &cfg.load, cfg.gravity, 50)
            .map_err(|e| e.to_string())?;
        let fit = fit_linear(&curve).map_err(|e| e.to_string())?;
        details.push(format!(
            "{label} R² = {:.4} peak {:.3} N·m",
            fit.r_squared,
            curve.peak_abs_moment()
        ));
        if fit.r_squared < 0.9 {
            low_r2.push(label.to_string());
        }
        curves.push(curve);
    }
    let worst = curves[worst_case_index(&curves).map_err(|e| e.to_string())?].posture();
    details.push(format!("worst case {worst}"));
    let summary = details.join(", ");
    ensure(
        low_r2.is_empty(),
        format!("R² < 0.9 for {}; {summary}", low_r2.join(", ")),
    )?;
    ensure(
        worst == PostureLabel::P3,
        format!("expected P3 as worst case; {summary}"),
    )?;
    Ok(summary)
}

fn regression_robustness() -> Outcome {
    let (slope, intercept) = (-0.7054, 0.4157);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<CurveSample> = (0..100)
            .map(|i| {
                let angle =
                    DESIGN_ADDUCTION_LIMIT + (DESIGN_ABDUCTION_LIMIT - DESIGN_ADDUCTION_LIMIT) * i as f64 / 99.0;
                CurveSample {
                    angle,
                    moment: slope * angle + intercept + noise.sample(&mut rng),
                }
            })
            .collect();
        let fit = fit_linear_samples(&samples).map_err(|e| e.to_string())?;

        let n = samples.len() as f64;
        let (sx, sy) = samples.iter().fold((0.0, 0.0), |(a, b), s| (a + s.angle, b + s.moment));
        let (sxx, sxy) = samples
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a + s.angle * s.angle, b + s.angle * s.moment));
        let det = n * sxx - sx * sx;
        let oracle_slope = (n * sxy - sx * sy) / det;
        let oracle_intercept = (sxx * sy - sx * sxy) / det;

        for (got, reference) in [
            (fit.slope, oracle_slope),
            (fit.intercept, oracle_intercept),
            (fit.slope, slope),
            (fit.intercept, intercept),
        ] {
            worst = worst.max(((got - reference) / reference).abs());
        }
    }
    ensure(worst <= 0.02, format!("worst relative error {worst:.4}"))?;
    Ok(format!("20 seeds, worst relative error {:.3}%", worst * 100.0))
}

fn interpolation_contract() -> Outcome {
    let mut samples: Vec<TrialSample> = (0..40)
        .map(|i| sample(i as f64 * 0.25, 1.5 * i as f64 - 30.0, 400.0 + 8.0 * i as f64))
        .collect();
    samples[3].angle_deg = f64::NAN;
    samples[20].current_ma = f64::NAN;
    let cleaned = clean_interpolate(&log_of(samples.clone()), &CleaningPolicy::default()).map_err(|e| e.to_string())?;
    let got = cleaned.log.samples();
    let mid = |a: f64, b: f64| (a + b) / 2.0;
    ensure(
        got[3].angle_deg == mid(samples[2].angle_deg, samples[4].angle_deg),
        format!("angle {}", got[3].angle_deg),
    )?;
    ensure(
        got[20].current_ma == mid(samples[19].current_ma, samples[21].current_ma),
        format!("current {}", got[20].current_ma),
    )?;
    ensure(cleaned.repaired == 2, format!("repaired {}", cleaned.repaired))?;

    let policy = CleaningPolicy::default();
    let with_gaps = |bad: usize| {
        let mut s: Vec<TrialSample> = (0..100)
            .map(|i| sample(i as f64 * 0.01, (i as f64 * 0.1).sin() * 20.0, 450.0))
            .collect();
        for x in &mut s[10..10 + bad] {
            x.angle_deg = f64::NAN;
        }
        log_of(s)
    };
    ensure(
        clean_interpolate(&with_gaps(5), &policy).is_ok(),
        "5% invalid was rejected",
    )?;
    match clean_interpolate(&with_gaps(6), &policy) {
        Err(Error::Rejected {
            invalid: 6, total: 100, ..
        }) => {}
        other => return Err(format!("6% invalid not rejected: {other:?}")),
    }
    let inputs = vec![
        TrialInput {
            file: "P1_POS1_unloaded_S1_T1.csv".into(),
            log: with_gaps(0),
        },
        TrialInput {
            file: "P1_POS1_unloaded_S1_T2.csv".into(),
            log: with_gaps(6),
        },
    ];
    let report = aggregate_report(&inputs, &policy, &Gearing::default(), Vec::new()).map_err(|e| e.to_string())?;
    ensure(
        report.n_trials == 1 && report.rejected.len() == 1 && report.rejected[0].file == "P1_POS1_unloaded_S1_T2.csv",
        format!("rejected {:?}", report.rejected),
    )?;
    Ok("midpoints exact, 5% kept, 6% rejected and listed".into())
}

fn end_to_end_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = common::analyze_fixture(a.path());
    let second = common::analyze_fixture(b.path());
    ensure(first == second, "reports differ between runs")?;
    let report: serde_json::Value = serde_json::from_str(&first).map_err(|e| e.to_string())?;
    let (mismatches, checked) = common::compare_with_ground_truth(&report, &common::ground_truth());
    ensure(
        mismatches.is_empty(),
        format!(
            "{} of {checked} values differ, first: {}",
            mismatches.len(),
            mismatches.first().cloned().unwrap_or_default()
        ),
    )?;
    Ok(format!("byte-identical reports, {checked} ground-truth values matched"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("spring derivation golden values", spring_derivation),
        ("catalog selection", catalog_selection),
        ("Friedman p-values", friedman_p_values),
        ("Friedman unanimous ranking oracle", friedman_unanimous),
        ("torque chain consistency", torque_chain),
        ("capstan properties", capstan_properties),
        ("ROM metrics equivalence", rom_equivalence),
        ("simulation linearity and worst case", simulation_linearity),
        ("regression robustness", regression_robustness),
        ("interpolation contract", interpolation_contract),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
