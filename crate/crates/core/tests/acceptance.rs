//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! fails when its criterion is not met.
//!
//! The heavy experiment runs are cached so that criteria sharing a run do not
//! repeat it. Running the whole target takes several minutes on one core.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;

use marginal_abc::diagnostics::{sample_tv, sample_vs_density_tv, table_mass_in_ball};
use marginal_abc::experiment::{
    build_setup, only_label, pilot_plus_label, run_requests, ExperimentConfig, ExperimentId, ExperimentResult,
    RunRequest, GOLD_LABEL,
};
use marginal_abc::io::PopulationTable;
use marginal_abc::localize::{attach_marginal_discrepancies, log_pool_indicator_check, marginal_continue, pilot_run};
use marginal_abc::models::ma2::simulate_ma2;
use marginal_abc::reference::{ma2_alternate_root, ma2_binding, s3_asymptotic_check, AlternateRoot, DensityGrid};
use marginal_abc::rng::RandomStream;
use marginal_abc::smc::{calibrate_metric, SmcConfig};
use marginal_abc::stats::{mean, std_dev};
use marginal_abc::summaries::autocov::autocovariance_values;
use marginal_abc::summaries::octiles::octile_values;
use marginal_abc::summaries::{gaussian_rank_correlation, huber_regression};
use marginal_abc::types::{names, ParamVector};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 1;

/// Written to the stderr handle directly so the line shows even when the
/// test harness captures output.
fn verdict(id: u32, pass: bool, detail: &str) {
    let line = format!("criterion {id:>2}: {}  {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} not met: {detail}");
}

fn config(id: ExperimentId, budget: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(id, SEED);
    c.smc.max_simulations = budget;
    c
}

fn run(config: &ExperimentConfig, requests: Vec<RunRequest>) -> ExperimentResult {
    run_requests(config, Some(&requests)).expect("experiment runs")
}

fn only(p: &str) -> RunRequest {
    RunRequest::MarginalOnly(p.to_string())
}

fn plus(p: &str) -> RunRequest {
    RunRequest::PilotPlus(p.to_string())
}

fn normal() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        run(
            &config(ExperimentId::Normal, 500_000),
            vec![RunRequest::Gold, only("mu")],
        )
    })
}

fn normal_idealized() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        run(
            &config(ExperimentId::NormalIdealized, 500_000),
            vec![only("mu"), only("only_mu_mode")],
        )
    })
}

fn ma2() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        run(
            &config(ExperimentId::Ma2, 1_000_000),
            vec![RunRequest::Gold, only("theta1"), only("theta2"), plus("theta1")],
        )
    })
}

fn gandk() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        let mut reqs = vec![RunRequest::Gold];
        reqs.extend(["a", "b", "g"].map(only));
        reqs.extend(["a", "b", "g"].map(plus));
        run(&config(ExperimentId::Gandk, 1_000_000).reduced_n(), reqs)
    })
}

fn bivgandk() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        run(
            &config(ExperimentId::Bivgandk, 500_000),
            vec![RunRequest::Gold, only("r")],
        )
    })
}

fn regression() -> &'static ExperimentResult {
    static R: OnceLock<ExperimentResult> = OnceLock::new();
    R.get_or_init(|| {
        let mut reqs = vec![RunRequest::Gold];
        reqs.extend(["beta1", "beta2", "beta3", "sigma"].map(only));
        reqs.extend(["beta1", "beta2", "beta3"].map(plus));
        run(&config(ExperimentId::Regression, 1_000_000), reqs)
    })
}

fn tv_vs_gold(r: &ExperimentResult, label: &str, param: &str) -> f64 {
    sample_tv(&r.column(label, param).unwrap(), &r.column(GOLD_LABEL, param).unwrap()).unwrap()
}

/// k-th central moment of a tabulated density.
fn central_moment(g: &DensityGrid, k: i32) -> f64 {
    let m = g.mean();
    let f: Vec<f64> = g
        .points
        .iter()
        .zip(&g.density)
        .map(|(x, d)| (x - m).powi(k) * d)
        .collect();
    marginal_abc::reference::trapezoid(&g.points, &f) / g.integral()
}

/// Mode of a sample via its kernel density estimate.
fn kde_mode(x: &[f64]) -> f64 {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let grid = marginal_abc::reference::linspace(lo, hi, 1024);
    marginal_abc::diagnostics::kde_1d(x, &grid).unwrap().mode()
}

#[test]
fn criterion_01_exact_sufficient_summaries() {
    let r = normal();
    let exact = &r.references.as_ref().unwrap().phi_given_s2_ybar;
    let phi = r.column(GOLD_LABEL, "phi").unwrap();
    let n = phi.len() as f64;
    let (m, s) = (exact.mean(), exact.sd());
    let se_mean = s / n.sqrt();
    let se_sd = ((central_moment(exact, 4) - s.powi(4)) / (4.0 * s * s * n)).sqrt();
    let (am, asd) = (mean(&phi), std_dev(&phi));
    let tv = sample_vs_density_tv(&phi, exact).unwrap();
    let pass = (am - m).abs() <= 3.0 * se_mean && (asd - s).abs() <= 3.0 * se_sd && tv < 0.10;
    verdict(
        1,
        pass,
        &format!(
            "phi mean {am:.4} vs {m:.4} (3se {:.4}), sd {asd:.4} vs {s:.4} (3se {:.4}), TV {tv:.3} < 0.10",
            3.0 * se_mean,
            3.0 * se_sd
        ),
    );
}

#[test]
fn criterion_02_normal_marginal_pathology() {
    let r = normal();
    let full = r.column(GOLD_LABEL, "mu").unwrap();
    let ybar = r.column(&only_label("mu"), "mu").unwrap();
    let ratio = std_dev(&ybar) / std_dev(&full);
    let gap = (kde_mode(&ybar) - kde_mode(&full)).abs();
    let pass = ratio > 1.2 && gap < 0.3 * std_dev(&full);
    verdict(
        2,
        pass,
        &format!(
            "SD ratio {ratio:.3} > 1.2, mode gap {gap:.4} < {:.4}",
            0.3 * std_dev(&full)
        ),
    );
}

#[test]
fn criterion_03_idealized_summaries() {
    let r = normal_idealized();
    let Some(marg) = r.references.as_ref() else {
        panic!("normal experiments carry exact references");
    };
    let exact = &marg.mu_given_ybar_s2;
    let (em, ev) = (exact.mean(), exact.variance());
    let both = r.column(&only_label("mu"), "mu").unwrap();
    let mode_only = r.column("only_mu_mode", "mu").unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let (bm, bv) = (mean(&both), std_dev(&both).powi(2));
    let (mm, mv) = (mean(&mode_only), std_dev(&mode_only).powi(2));
    let pass = rel(bm, em) < 0.10 && rel(bv, ev) < 0.10 && rel(mm, em) < 0.10 && mv > 1.15 * ev;
    verdict(
        3,
        pass,
        &format!(
            "exact mean {em:.4} var {ev:.4}; (mode,var): mean {bm:.4} ({:.1}%) var {bv:.4} ({:.1}%); mode-only: mean {mm:.4} ({:.1}%) var ratio {:.2} > 1.15",
            100.0 * rel(bm, em),
            100.0 * rel(bv, ev),
            100.0 * rel(mm, em),
            mv / ev
        ),
    );
}

#[test]
fn criterion_04_ma2_bimodality_and_rescue() {
    let r = ma2();
    let root = match ma2_alternate_root(&r.setup.true_theta.values).unwrap() {
        AlternateRoot::Root(p) => p,
        AlternateRoot::Unique => panic!("MA(2) at the true parameters has a second root"),
    };
    assert!((root.values[0] - 0.4860).abs() < 1e-3 && (root.values[1] - 0.7591).abs() < 1e-3);
    let centre = ParamVector::new(vec![0.4860, 0.7591], names(&["theta1", "theta2"])).unwrap();
    let table = |label: &str| PopulationTable::from(&r.run(label).unwrap().population);
    let only_mass = table_mass_in_ball(&table(&only_label("theta1")), &centre, 0.15).unwrap();
    let plus_label = pilot_plus_label("theta1");
    let plus_mass = table_mass_in_ball(&table(&plus_label), &centre, 0.15).unwrap();
    let plus_mean = mean(&r.column(&plus_label, "theta1").unwrap());
    let tv = tv_vs_gold(r, &plus_label, "theta1");
    let pass = only_mass >= 0.05 && plus_mass < 0.01 && (plus_mean - 0.9).abs() <= 0.05 && tv < 0.15;
    verdict(
        4,
        pass,
        &format!(
            "S1S2-only mass {only_mass:.3} >= 0.05, pilot+ mass {plus_mass:.3} < 0.01, pilot+ theta1 mean {plus_mean:.3}, TV {tv:.3} < 0.15"
        ),
    );
}

#[test]
fn criterion_05_ma2_theta2_via_s3() {
    let r = ma2();
    let tv = tv_vs_gold(r, &only_label("theta2"), "theta2");
    let check = s3_asymptotic_check(&r.setup.true_theta.values, 10_000, 2000, &RandomStream::root(SEED)).unwrap();
    let pass = tv < 0.15 && check.passed;
    verdict(
        5,
        pass,
        &format!(
            "S3-only theta2 TV {tv:.3} < 0.15; S3 mean {:.5} vs {} ({}), variance {:.3e} vs claimed {:.3e} ({}; Bartlett {:.3e})",
            check.mean,
            check.theta[1],
            if check.mean_ok { "ok" } else { "off" },
            check.variance,
            check.claimed_variance,
            if check.variance_ok { "ok" } else { "off" },
            check.bartlett_variance
        ),
    );
}

#[test]
fn criterion_06_binding_function() {
    let theta = [0.9, -0.05];
    let base = RandomStream::root(SEED).derive(0xB1D);
    let reps: Vec<Vec<f64>> = (0..50u64)
        .map(|i| autocovariance_values(&simulate_ma2(&theta, 10_000, &mut base.derive(i).rng()).unwrap(), 2).unwrap())
        .collect();
    let target = [1.8125, 0.855, -0.05];
    let binding = ma2_binding(&theta);
    let mut ok = binding.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-12);
    let mut parts = Vec::new();
    for j in 0..3 {
        let col: Vec<f64> = reps.iter().map(|r| r[j]).collect();
        let (m, se) = (mean(&col), std_dev(&col) / 50f64.sqrt());
        ok &= (m - target[j]).abs() <= 3.0 * se;
        parts.push(format!("eta{j} {m:.4} vs {} (3se {:.4})", target[j], 3.0 * se));
    }
    verdict(6, ok, &parts.join(", "));
}

#[test]
fn criterion_07_gandk_ordering() {
    let r = gandk();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ["a", "b", "g"] {
        let (plus_tv, only_tv) = (tv_vs_gold(r, &pilot_plus_label(p), p), tv_vs_gold(r, &only_label(p), p));
        ok &= plus_tv < only_tv;
        parts.push(format!("{p}: pilot+ {plus_tv:.3} < only {only_tv:.3}"));
    }
    let ratio = std_dev(&r.column(&only_label("a"), "a").unwrap()) / std_dev(&r.column(GOLD_LABEL, "a").unwrap());
    ok &= ratio >= 3.0;
    parts.push(format!("S1-only/gold SD of a {ratio:.2} >= 3"));
    verdict(7, ok, &parts.join(", "));
}

#[test]
fn criterion_08_bivariate_gandk() {
    let r = bivgandk();
    let sr = r.column(&only_label("r"), "r").unwrap();
    let full = r.column(GOLD_LABEL, "r").unwrap();
    let (m, sd, gold_sd) = (mean(&sr), std_dev(&sr), std_dev(&full));

    let mut rng = RandomStream::root(SEED).derive(0x2A4C).rng();
    let n = 500;
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| 0.6 * v + 0.8 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let base = gaussian_rank_correlation(&x, &y).unwrap();
    let mut invariant = 0;
    for _ in 0..100 {
        let (a, b, c) = (
            rng.random_range(0.1..5.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.05..1.0),
        );
        let kind = rng.random_range(0..4);
        let f = |v: f64| match kind {
            0 => a * v + b,
            1 => (c * v).exp() + b,
            2 => v * v * v + a * v,
            _ => (c * v).sinh() * a + b,
        };
        let (fx, fy): (Vec<f64>, Vec<f64>) = if rng.random_bool(0.5) {
            (x.iter().map(|&v| f(v)).collect(), y.clone())
        } else {
            (x.iter().map(|&v| f(v)).collect(), y.iter().map(|&v| f(v)).collect())
        };
        if gaussian_rank_correlation(&fx, &fy).unwrap().to_bits() == base.to_bits() {
            invariant += 1;
        }
    }
    let pass = (m - 0.6).abs() <= 0.05 && sd < gold_sd && invariant == 100;
    verdict(
        8,
        pass,
        &format!("S_r-only r mean {m:.3}, SD {sd:.3} < full {gold_sd:.3}, rank correlation invariant on {invariant}/100 transforms"),
    );
}

#[test]
fn criterion_09_robust_regression() {
    let r = regression();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ["beta1", "beta2", "beta3"] {
        let (plus_tv, only_tv) = (tv_vs_gold(r, &pilot_plus_label(p), p), tv_vs_gold(r, &only_label(p), p));
        ok &= plus_tv < only_tv;
        parts.push(format!("{p}: pilot+ {plus_tv:.3} < only {only_tv:.3}"));
    }
    let sigma_tv = tv_vs_gold(r, &only_label("sigma"), "sigma");
    ok &= sigma_tv < 0.15;
    parts.push(format!("sigma S4-only TV {sigma_tv:.3} < 0.15"));
    verdict(9, ok, &parts.join(", "));
}

fn small_ma2(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentId::Ma2, seed).reduced_n();
    c.smc.n_particles = 200;
    c.smc.max_simulations = 40_000;
    c.metric_sims = 500;
    c
}

fn population_files(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir.join("populations"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_10_algorithm_invariants() {
    let mut parts = Vec::new();

    // dual constraints and the frozen pilot tolerance at every continuation iteration
    let cfg = small_ma2(SEED).resolved().unwrap();
    let setup = build_setup(&cfg).unwrap();
    let root = RandomStream::root(cfg.seed);
    let metric = calibrate_metric(&*setup.problem, cfg.metric_sims, &root).unwrap();
    let smc = SmcConfig {
        n_particles: 200,
        ..SmcConfig::default()
    };
    let pilot = pilot_run(&*setup.problem, &setup.observed, &metric, &smc, 0.30, &root).unwrap();
    let pilot_monotone = pilot.trace.records.windows(2).all(|w| w[1].epsilon < w[0].epsilon);
    let indices = setup.set.indices("theta1").unwrap();
    let (mut checked, mut violations, mut unfrozen, mut nonmonotone, mut iterations) =
        (0usize, 0usize, 0usize, 0usize, 0usize);
    for budget in [2_000u64, 5_000, 10_000, 20_000, 40_000, 1_000_000] {
        let (pop, _) =
            attach_marginal_discrepancies(pilot.population.clone(), &setup.set, "theta1", &setup.observed).unwrap();
        let cont = SmcConfig {
            max_simulations: budget,
            ..smc.clone()
        };
        let (pop, trace) = marginal_continue(
            pop,
            pilot.epsilon0,
            &setup.set,
            "theta1",
            &setup.observed,
            &*setup.problem,
            &cont,
            0.01,
            &root,
        )
        .unwrap();
        iterations = iterations.max(trace.records.len());
        let eps_j = pop.epsilon_marginal.unwrap();
        for p in &pop.particles {
            checked += 1;
            let rho_full = metric.eval(&p.summaries.values, &setup.observed.values, None);
            let rho_j = metric.eval(&p.summaries.values, &setup.observed.values, Some(&indices));
            if !(rho_full <= pilot.epsilon0 && rho_j <= eps_j && p.rho_marginal == Some(rho_j)) {
                violations += 1;
            }
        }
        unfrozen += usize::from(pop.epsilon_full != pilot.epsilon0);
        unfrozen += trace
            .records
            .iter()
            .filter(|r| r.epsilon_full != pilot.epsilon0)
            .count();
        nonmonotone += trace
            .records
            .windows(2)
            .filter(|w| !(w[1].epsilon < w[0].epsilon))
            .count();
    }
    parts.push(format!(
        "{violations} constraint violations in {checked} particles over {iterations} iterations, {unfrozen} unfrozen eps0, {nonmonotone} non-decreasing steps, pilot monotone {pilot_monotone}"
    ));

    // pool weight cannot change the indicator product
    let mut pool_ok = true;
    for &(rf, e0, rj, ej) in &[
        (0.1, 0.2, 0.05, 0.1),
        (0.3, 0.2, 0.05, 0.1),
        (0.1, 0.2, 0.15, 0.1),
        (0.2, 0.2, 0.1, 0.1),
    ] {
        let vals: Vec<u8> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&a| log_pool_indicator_check(rf, e0, rj, ej, a).unwrap())
            .collect();
        let product = u8::from(rf <= e0 && rj <= ej);
        pool_ok &= vals.iter().all(|&v| v == product);
    }
    parts.push(format!("log-pool weight invariant {pool_ok}"));

    // byte-identical populations for any worker count
    let files: Vec<BTreeMap<String, Vec<u8>>> = [1usize, 3]
        .iter()
        .map(|&threads| {
            let dir = tempfile::tempdir().unwrap();
            let mut c = small_ma2(SEED);
            c.output_dir = Some(dir.path().to_path_buf());
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_requests(&c, None))
                .unwrap();
            population_files(dir.path())
        })
        .collect();
    let identical = files[0] == files[1] && !files[0].is_empty();
    parts.push(format!(
        "{} population CSVs identical for 1 and 3 threads: {identical}",
        files[0].len()
    ));

    let pass =
        violations == 0 && checked > 0 && unfrozen == 0 && nonmonotone == 0 && pilot_monotone && pool_ok && identical;
    verdict(10, pass, &parts.join("; "));
}

#[test]
fn criterion_11_summary_oracles() {
    let mut rng = RandomStream::root(SEED).derive(0x5111).rng();

    let (n, q) = (200, 3);
    let x = DMatrix::from_fn(n, q, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 * x[(i, 0)] - 0.5 * x[(i, 1)] + 2.0 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let huber = huber_regression(&x, &y, 1e6).unwrap();
    let ols = x
        .clone()
        .svd(true, true)
        .solve(&nalgebra::DVector::from_vec(y), 1e-12)
        .unwrap();
    let huber_dev = huber
        .beta
        .iter()
        .zip(ols.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let z: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let oct = octile_values(&z).unwrap();
    let target = [0.0, 1.3490, 0.0, 1.2331];
    let oct_dev = oct.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let series: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
    let eta = autocovariance_values(&series, 3).unwrap();
    let t = series.len() as f64;
    let mut identities = eta[0] == series.iter().map(|v| v * v).sum::<f64>() / t;
    let flipped: Vec<f64> = series.iter().map(|v| -v).collect();
    identities &= autocovariance_values(&flipped, 3).unwrap() == eta;
    let doubled: Vec<f64> = series.iter().map(|v| 2.0 * v).collect();
    identities &= autocovariance_values(&doubled, 3)
        .unwrap()
        .iter()
        .zip(&eta)
        .all(|(a, b)| *a == 4.0 * b);
    identities &= eta[1..].iter().all(|e| e.abs() <= eta[0]);
    let ones = vec![1.0; 8];
    identities &= autocovariance_values(&ones, 3).unwrap() == vec![1.0, 7.0 / 8.0, 6.0 / 8.0, 5.0 / 8.0];
    identities &= autocovariance_values(&ones, 8).is_err();

    let pass = huber_dev <= 1e-6 && oct_dev <= 0.02 && identities;
    verdict(
        11,
        pass,
        &format!("Huber vs OLS max dev {huber_dev:.2e} <= 1e-6; octiles {oct:.4?} max dev {oct_dev:.4} <= 0.02; autocovariance identities {identities}"),
    );
}
