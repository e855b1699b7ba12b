//! Acceptance criteria 1-12. Each test prints one PASS/FAIL line straight to
//! stderr (bypassing libtest capture) and then asserts the criterion.

use std::io::Write;

use serde_json::{json, Value};

use nwflab::experiments::{execute, ExperimentConfig, ExperimentResult, StatReport};

const SEED: u64 = 20_261_016;

fn run(experiment: &str, params: Value) -> ExperimentResult {
    let mut cfg = ExperimentConfig::new(experiment, SEED);
    if let Value::Object(map) = params {
        cfg.parameters = map.into_iter().collect();
    }
    execute(&cfg).unwrap_or_else(|e| panic!("{experiment}: {e}")).0
}

fn get<'a>(r: &'a ExperimentResult, name: &str) -> &'a StatReport {
    r.reports
        .iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("{}: no report named {name}", r.experiment))
}

fn announce(criterion: u32, title: &str, checks: &[(String, bool)]) {
    let ok = checks.iter().all(|(_, p)| *p);
    let detail: Vec<&str> = checks.iter().map(|(d, _)| d.as_str()).collect();
    let _ = writeln!(
        std::io::stderr(),
        "acceptance {criterion:>2} {title}: {} [{}]",
        if ok { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    assert!(ok, "criterion {criterion} failed: {checks:?}");
}

fn above(r: &StatReport, level: f64) -> (String, bool) {
    (format!("{} {} = {:.4e} > {level}", r.name, r.statistic, r.value), r.value > level)
}

fn at_most(r: &StatReport, bound: f64) -> (String, bool) {
    (format!("{} {} = {:.4e} <= {bound:.4e}", r.name, r.statistic, r.value), r.value <= bound)
}

#[test]
fn criterion_01_exit_time_law() {
    let r = run(
        "verify-exit-time",
        json!({"z": [1.0/3.0, 1.0/3.0, 1.0/3.0], "delta": [0.5, 0.5, 0.5], "paths": 10_000, "step": 1e-4}),
    );
    let ks = get(&r, "tau_ks");
    assert_eq!(ks.sample_sizes, vec![10_000, 10_000]);
    announce(1, "exit time vs min z_i/2G_i", &[above(ks, 0.01)]);
}

#[test]
fn criterion_02_exit_face_closed_form() {
    let r = run(
        "verify-exit-face",
        json!({"z": [1.0/3.0, 2.0/3.0], "paths": 10_000, "step": 1e-4, "mc_draws": 1_000_000}),
    );
    announce(
        2,
        "two-type exit face probability 2/3",
        &[
            at_most(get(&r, "euler_face0_z"), 3.0),
            at_most(get(&r, "gamma_mc_face0_z"), 3.0),
            at_most(get(&r, "quadrature_face0_error"), 1e-8),
        ],
    );
}

#[test]
fn criterion_03_exit_density_series() {
    let r = run(
        "verify-exit-density",
        json!({"points": 100_000, "step": 1e-4, "max_n": 60, "tol": 1e-10, "face": 0}),
    );
    let gof = get(&r, "exit_point_chi_square");
    assert_eq!(gof.sample_sizes[0], 100_000);
    announce(
        3,
        "exit density series GOF and normalisation",
        &[above(gof, 0.01), at_most(get(&r, "series_normalisation"), 5e-3)],
    );
}

#[test]
fn criterion_04_besq_time_reversal() {
    let r = run("verify-time-reversal", json!({"theta": [0.0, 1.0], "x": 1.0, "paths": 10_000, "step": 1e-4}));
    let checks: Vec<_> = [
        "theta_0_hitting_time_ks",
        "theta_0_midpoint_ks",
        "theta_1_hitting_time_ks",
        "theta_1_midpoint_ks",
    ]
    .iter()
    .map(|n| above(get(&r, n), 0.01))
    .collect();
    announce(4, "BESQ time reversal", &checks);
}

#[test]
fn criterion_05_transition_density_identity() {
    let r = run("verify-transition-density", json!({}));
    announce(
        5,
        "density identity and mass defect",
        &[
            at_most(get(&r, "symmetry_max_rel_error"), 1e-10),
            at_most(get(&r, "mass_defect_max_error"), 1e-6),
        ],
    );
}

#[test]
fn criterion_06_cladogram_exact_moments() {
    let start = std::time::Instant::now();
    let r = run("verify-clado-moments", json!({"n": [7, 8, 9, 10, 11, 12], "trees": 50}));
    let secs = start.elapsed().as_secs_f64();
    let rep = get(&r, "formula_vs_enumeration_mismatches");
    assert!(rep.sample_sizes[0] > 0);
    announce(
        6,
        "cladogram one-step moments, exact",
        &[
            (format!("{} comparisons, {} mismatches", rep.sample_sizes[0], rep.value), rep.value == 0.0),
            (format!("runtime {secs:.2} s"), secs < 60.0),
        ],
    );
}

#[test]
fn criterion_07_chain_stationarity() {
    let r = run("verify-chain-stationarity", json!({"n": 5, "samples": 10_000, "thin": 50}));
    announce(7, "Aldous chain keeps the uniform law", &[above(get(&r, "topology_chi_square"), 0.01)]);
}

#[test]
fn criterion_08_concentration() {
    let r = run(
        "verify-concentration",
        json!({"n": 100, "delta": 0.0, "r": [0.5, 1.0, 2.0], "samples": 100_000,
               "gradient_points": 1000, "k": [1.5, 2.0, 4.0, 16.0]}),
    );
    let mut checks = Vec::new();
    for r_val in ["0.5", "1", "2"] {
        let rep = get(&r, &format!("tail_r_{r_val}"));
        let rr: f64 = r_val.parse().unwrap();
        let bound = (-rr * rr).exp();
        let sigma = (bound * (1.0 - bound) / 100_000.0).sqrt();
        checks.push(at_most(rep, bound + 3.0 * sigma));
    }
    for k in ["1.5", "2", "4", "16"] {
        checks.push(at_most(get(&r, &format!("gradient_k_{k}")), 0.0));
    }
    announce(8, "max-Gamma concentration and gradient inequality", &checks);
}

#[test]
fn criterion_09_max_gamma_scaling() {
    let r = run("verify-max-gamma", json!({"n": [10, 100, 1000, 10_000], "delta": 0.5, "samples": 100_000}));
    let checks: Vec<_> = [10, 100, 1000, 10_000]
        .iter()
        .map(|n| {
            let rep = get(&r, &format!("ratio_n_{n}"));
            (format!("n={n}: ratio {:.4}", rep.value), (0.7..=2.5).contains(&rep.value))
        })
        .collect();
    announce(9, "E sqrt(max Gamma) / sqrt(log n) in [0.7, 2.5]", &checks);
}

#[test]
fn criterion_10_two_simulators() {
    let r = run("verify-two-simulators", json!({"u": 0.05, "paths": 10_000, "step": 1e-4}));
    announce(
        10,
        "Euler vs skew-product marginal",
        &[above(get(&r, "marginal_ks"), 0.01), above(get(&r, "survival_two_proportion"), 0.01)],
    );
}

#[test]
fn criterion_11_bessel_clock() {
    let r = run("verify-bessel-clock", json!({"theta": 6.0, "eps": 1e-5, "paths": 100}));
    let rep = get(&r, "clock_over_log");
    announce(
        11,
        "Bessel clock log growth",
        &[(format!("mean ratio {:.4} vs 0.25", rep.value), (rep.value - 0.25).abs() <= 0.25 * 0.25)],
    );
}

#[test]
fn criterion_12_null_calibration() {
    let r = run("verify-null-calibration", json!({"repetitions": 200, "level": 0.05}));
    let sigma = (0.05f64 * 0.95 / 200.0).sqrt();
    let checks: Vec<_> = r
        .reports
        .iter()
        .map(|rep| {
            (
                format!("{} {:.3}", rep.name, rep.value),
                (rep.value - 0.05).abs() <= 3.0 * sigma,
            )
        })
        .collect();
    assert!(checks.len() >= 5);
    announce(12, "null false-rejection rates", &checks);
}
