//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p jumpact --test acceptance -- --nocapture` to see
//! the report.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use common::{ks_to_standard_normal, JumpExplicitIncrement};
use jumpact::estimator::weights;
use jumpact::experiment::{emit, run_grid, ExperimentGrid, ExperimentTable, Method};
use jumpact::kernel::identities::{fourier_moment, levy_symbol_integral};
use jumpact::kernel::{c_beta, compute_k_beta, compute_k_beta_rho, compute_kbar_beta_rho};
use jumpact::simulate::{
    calibrate_theta, simulate_path, SymmetricStable, DEFAULT_N, JUMP_THRESHOLD,
};
use jumpact::{estimate, jump_count, EstimatorConfig, LogPricePath, SimulationModel};

const BETAS: [f64; 4] = [0.4, 0.8, 1.2, 1.6];
const PS: [f64; 3] = [0.005, 0.01, 0.02];
const SEED: u64 = 20_240_101;

/// Published (mean, std, coverage) by beta row and p column.
const PUBLISHED_HAT: [[(f64, f64, f64); 3]; 4] = [
    [(0.39, 0.13, 0.91), (0.39, 0.09, 0.92), (0.39, 0.07, 0.91)],
    [(0.81, 0.26, 0.92), (0.80, 0.18, 0.93), (0.79, 0.13, 0.93)],
    [(1.22, 0.40, 0.93), (1.22, 0.29, 0.94), (1.20, 0.21, 0.92)],
    [(1.54, 0.43, 0.93), (1.58, 0.36, 0.93), (1.57, 0.31, 0.92)],
];

#[derive(Default)]
struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(name.to_string());
        }
    }
}

fn table_reproduction(report: &mut Report, table: &ExperimentTable) {
    let mut bad = Vec::new();
    for (i, &beta) in BETAS.iter().enumerate() {
        for (j, &p) in PS.iter().enumerate() {
            let c = table.cell(beta, p, Method::Multiscale).unwrap();
            let (mean, std, cov) = PUBLISHED_HAT[i][j];
            let ok = (c.mean - mean).abs() <= 0.05
                && (c.std_dev / std - 1.0).abs() <= 0.25
                && (c.coverage - cov).abs() <= 0.03;
            println!(
                "    beta={beta} p={p}: mean {:.3} ({mean}) std {:.3} ({std}) coverage {:.3} ({cov}){}",
                c.mean,
                c.std_dev,
                c.coverage,
                if ok { "" } else { "  <-- out of tolerance" }
            );
            if !ok {
                bad.push(format!("({beta}, {p})"));
            }
        }
    }
    report.check(
        "table reproduction (multi-scale, 2000 reps)",
        bad.is_empty(),
        if bad.is_empty() {
            "all 12 cells within mean ±0.05, std ±25%, coverage ±0.03".into()
        } else {
            format!("cells out of tolerance: {}", bad.join(" "))
        },
    );
}

fn comparator_contrast(report: &mut Report, table: &ExperimentTable) {
    let c = table.cell(1.6, 0.005, Method::Aj).unwrap();
    report.check(
        "comparator cell (beta=1.6, p=0.5%)",
        (c.mean - 0.91).abs() <= 0.15 && (c.coverage - 0.53).abs() <= 0.05,
        format!(
            "mean {:.3} (0.91 ± 0.15), coverage {:.3} (0.53 ± 0.05)",
            c.mean, c.coverage
        ),
    );
    let mut worse = Vec::new();
    for &beta in &BETAS {
        for &p in &PS {
            let hat = table.cell(beta, p, Method::Multiscale).unwrap().rmse;
            let tilde = table.cell(beta, p, Method::Aj).unwrap().rmse;
            println!("    beta={beta} p={p}: rmse multiscale {hat:.4} vs comparator {tilde:.4}");
            if hat >= tilde {
                worse.push(format!("({beta}, {p})"));
            }
        }
    }
    report.check(
        "rmse ordering in every cell",
        worse.is_empty(),
        if worse.is_empty() {
            "multi-scale rmse strictly smaller in all 12 cells".into()
        } else {
            format!("not smaller at {}", worse.join(" "))
        },
    );
}

fn clt_check(report: &mut Report, table: &ExperimentTable) {
    let mut detail = Vec::new();
    let mut pass = true;
    for beta in [0.4, 0.8, 1.2] {
        let c = table.cell(beta, 0.01, Method::Multiscale).unwrap();
        let ks = ks_to_standard_normal(c.standardized_errors.clone());
        pass &= ks < 0.1;
        detail.push(format!(
            "beta={beta}: KS {ks:.4} over {} values",
            c.standardized_errors.len()
        ));
    }
    report.check(
        "standardized errors near N(0,1) at p=1%",
        pass,
        detail.join("; "),
    );

    let c = table.cell(1.6, 0.01, Method::Multiscale).unwrap();
    let u = &c.standardized_errors;
    let ks = ks_to_standard_normal(u.clone());
    let right = u.iter().filter(|&&x| x > 1.959_963_984_540_054).count() as f64 / u.len() as f64;
    let left = u.iter().filter(|&&x| x < -1.959_963_984_540_054).count() as f64 / u.len() as f64;
    println!(
        "INFO beta=1.6 p=1%: KS {ks:.4}; tail shares beyond ±1.96: left {left:.4}, right {right:.4} (0.025 each under N(0,1))"
    );
}

fn constants_identities(report: &mut Report) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let beta = 0.2 * i as f64;
        for rho in [1.5, 2.0, 3.0] {
            let lhs = compute_k_beta_rho(beta, rho).unwrap() / rho.powf(beta);
            let rhs = (1.0 + rho.powf(-beta)) * compute_kbar_beta_rho(beta, 1.0).unwrap()
                - 2.0 * rho.powf(-0.5 * beta) * compute_kbar_beta_rho(beta, rho).unwrap();
            worst = worst.max(((lhs - rhs) / lhs).abs());
        }
    }
    let t = start.elapsed();
    report.check(
        "variance-formula equivalence on the (beta, rho) grid",
        worst < 1e-5 && t.as_secs_f64() < 1.0,
        format!("max relative gap {worst:.2e} in {t:.2?}"),
    );

    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0, 1.5] {
        for u in [0.7, 1.0, 3.0] {
            let q = levy_symbol_integral(beta, u).unwrap();
            let exact = 0.5 * c_beta(beta).unwrap() * u.powf(beta);
            worst = worst.max(((q - exact) / exact).abs());
        }
    }
    let t = start.elapsed();
    report.check(
        "Lévy symbol integral equals C_beta |u|^beta / 2",
        worst < 1e-4 && t.as_secs_f64() < 1.0,
        format!("max relative gap {worst:.2e} in {t:.2?}"),
    );

    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for beta in [0.4, 0.8, 1.2, 1.6] {
        let lhs = fourier_moment(beta, 1e-12).unwrap();
        let rhs = 2.0 * std::f64::consts::PI * compute_k_beta(beta).unwrap();
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    let t = start.elapsed();
    report.check(
        "Fourier moment identity",
        worst < 1e-3 && t.as_secs_f64() < 1.0,
        format!("max relative gap {worst:.2e} in {t:.2?}"),
    );
}

fn weight_identities(report: &mut Report) {
    let w3 = weights(3).unwrap();
    let exact = w3 == [1.5, -0.75, 1.0 / 6.0];
    let mut worst: f64 = 0.0;
    for m in 1..=12 {
        let w = weights(m).unwrap();
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(i, wk)| 2.0 * (i + 1) as f64 * wk)
            .sum();
        worst = worst.max((s - 1.0).abs());
    }
    report.check(
        "weight identities",
        exact && worst <= 8.0 * f64::EPSILON,
        format!("w(3) = {w3:?}; max |2 sum k w_k - 1| over m = 1..12: {worst:.1e}"),
    );
}

fn estimator_trivial_cases(report: &mut Report) {
    let config = EstimatorConfig::default();
    let mut pass = true;
    for path in [
        vec![2.5; 500],
        (0..500).map(|j| 1.0 + 0.25 * j as f64).collect::<Vec<_>>(),
        (0..500).map(|j| -3.0 - 1e3 * j as f64).collect::<Vec<_>>(),
    ] {
        let e = estimate(&LogPricePath::new(path).unwrap(), &config).unwrap();
        pass &= e.beta_hat == 0.0 && e.confidence_interval(0.95).unwrap().is_empty();
    }

    let model = SimulationModel::new(1.2, 0.01, 4_000, 0.01, SEED).unwrap();
    let path = simulate_path(&model, 0).unwrap().observed;
    let tau = config.tau(path.len());
    let base = jump_count(&path, tau, 3).unwrap();
    let mut covariant = true;
    for s in [0.25, 2.0, 1024.0] {
        let scaled = jump_count(&path.scaled(s).unwrap(), tau / s, 3).unwrap();
        covariant &= scaled.raw.to_bits() == base.raw.to_bits();
    }
    report.check(
        "estimator totality and trivial cases",
        pass && covariant,
        format!(
            "constant/affine paths give 0 with empty interval: {pass}; jump_count(s X, tau/s) bitwise equal: {covariant}"
        ),
    );
}

fn stable_cf(report: &mut Report) {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for alpha in [0.8, 1.5] {
        let s = SymmetricStable::new(alpha).unwrap();
        let draws: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
        for u in [0.5, 1.0, 2.0] {
            let emp = draws.iter().map(|x| (u * x).cos()).sum::<f64>() / draws.len() as f64;
            worst = worst.max((emp - (-f64::powf(u, alpha)).exp()).abs());
        }
    }
    report.check(
        "stable sampler characteristic function",
        worst < 0.01,
        format!("max |empirical - exp(-|u|^a)| = {worst:.4} at 10^6 draws"),
    );
}

fn calibration_exceedance(report: &mut Report) {
    let (beta, p, n) = (0.8, 0.01, DEFAULT_N);
    let theta = calibrate_theta(beta, p, n, JUMP_THRESHOLD).unwrap();
    let oracle = JumpExplicitIncrement {
        a: beta,
        theta,
        dt: 1.0 / n as f64,
        cutoff: 0.01,
    };
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut with_jump = 0usize;
    let mut oracle_big = 0usize;
    for _ in 0..draws {
        let d = oracle.sample(&mut rng);
        with_jump += (d.largest_jump > JUMP_THRESHOLD) as usize;
        oracle_big += (d.value.abs() > JUMP_THRESHOLD) as usize;
    }
    let freq = with_jump as f64 / draws as f64;

    // the production sampler's increments, compared with the jump-built ones
    let s = SymmetricStable::new(beta).unwrap();
    let scale = theta * (1.0 / n as f64).powf(1.0 / beta);
    let big = (0..draws)
        .filter(|_| (scale * s.sample(&mut rng)).abs() > JUMP_THRESHOLD)
        .count();
    let oracle_tail = oracle_big as f64 / draws as f64;
    let sampler_tail = big as f64 / draws as f64;
    report.check(
        "calibration exceedance at (0.8, 1%)",
        (freq - p).abs() <= 0.002 && (sampler_tail - oracle_tail).abs() <= 0.002,
        format!(
            "share of steps with a jump > 0.2: {freq:.5}; |increment| > 0.2: sampler {sampler_tail:.5} vs jump-built {oracle_tail:.5}"
        ),
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn thread_determinism(report: &mut Report) {
    let grid = ExperimentGrid {
        betas: vec![0.8, 1.6],
        ps: vec![0.01],
        reps: 40,
        n: 5_000,
        base_seed: SEED,
        ..ExperimentGrid::default()
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let dir = tmp.path().join(format!("t{threads}"));
        emit(&run_grid(&grid, threads).unwrap(), &dir).unwrap();
        outputs.push(dir_bytes(&dir));
    }
    report.check(
        "determinism across thread counts",
        outputs[0] == outputs[1] && !outputs[0].is_empty(),
        format!(
            "{} emitted files compared bytewise at 1 and 3 threads",
            outputs[0].len()
        ),
    );
}

/// Interval diameters at the beta=0.8, p=1% cell against the `tau^{-beta/2}`
/// rate, with jump scales frozen at their n = 23,400 values.
fn diameter_rate_note() {
    let base = SimulationModel::new(0.8, 0.01, DEFAULT_N, 0.01, SEED).unwrap();
    let mut rows = Vec::new();
    for n in [5_850, 23_400, 93_600] {
        let grid = ExperimentGrid {
            betas: vec![0.8],
            ps: vec![0.01],
            reps: 100,
            n,
            base_seed: SEED,
            ..ExperimentGrid::default()
        };
        let mut model = grid.model(0.8, 0.01).unwrap();
        model.theta1 = base.theta1;
        model.theta2 = base.theta2;
        let mut diam = Vec::new();
        for r in 0..grid.reps as u64 {
            let path = simulate_path(&model, r).unwrap().observed;
            let e = estimate(&path, &grid.estimator).unwrap();
            let ci = e.confidence_interval(0.95).unwrap();
            if !ci.is_empty() {
                diam.push(ci.diameter());
            }
        }
        let mean = diam.iter().sum::<f64>() / diam.len() as f64;
        rows.push((n, mean, grid.estimator.tau(n).powf(-0.4)));
    }
    let (_, d0, r0) = rows[1];
    for (n, d, r) in rows {
        let (ratio, rate) = (d / d0, r / r0);
        println!(
            "INFO diameter rate n={n}: mean diameter {d:.4}, ratio to n=23400 {ratio:.3} vs tau-rate {rate:.3} (within 30%: {})",
            (ratio / rate - 1.0).abs() <= 0.3
        );
    }
}

#[test]
fn acceptance() {
    let mut report = Report::default();

    constants_identities(&mut report);
    weight_identities(&mut report);
    estimator_trivial_cases(&mut report);
    stable_cf(&mut report);
    calibration_exceedance(&mut report);
    thread_determinism(&mut report);

    let grid = ExperimentGrid {
        base_seed: SEED,
        ..ExperimentGrid::quick()
    };
    let start = Instant::now();
    let table = run_grid(&grid, 0).unwrap();
    println!(
        "INFO 12-cell grid, {} reps per cell, in {:.1?}",
        grid.reps,
        start.elapsed()
    );
    table_reproduction(&mut report, &table);
    comparator_contrast(&mut report, &table);
    clt_check(&mut report, &table);
    diameter_rate_note();

    assert!(
        report.failures.is_empty(),
        "failed criteria: {:?}",
        report.failures
    );
}
