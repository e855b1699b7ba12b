//! The registered verification runners.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::calibrate::{self, null_rejection_rate};
use super::{Runner, RunnerContext, RunnerOutput, StatReport, Threshold, P_THRESHOLD};
use crate::besq::{besq_transition_density, bessel_clock, simulate_besq_exact, verify_time_reversal};
use crate::cladogram::{
    aldous_chain_step, enumerate_cladograms, one_step_moment_enumeration, one_step_transition_probs,
    sample_uniform_cladogram,
};
use crate::distributions::sample_gamma;
use crate::error::{param, Error, Result};
use crate::exit_law::{
    exit_density_nwf, exit_face_mass_nwf, expected_sqrt_max_gamma, face_probability,
    lk_norm_gradient_inequality_check, max_gamma_concentration_check, sample_exit_time_analytic, FaceMethod,
    SeriesTruncation,
};
use crate::parallel::{par_draws, par_paths, par_paths_from};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::simplex::{nwf_euler_exit, nwf_euler_state_at, skew_product_exit, skew_product_state_at, NwfParams, SimplexState};
use crate::special::gamma_cdf;
use crate::stats::{chi_square_gof, chi_square_sf, histogram, ks_two_sample};
use crate::textio::{fmt_num, CsvTable};

macro_rules! runner {
    ($name:literal, $summary:literal, $f:path) => {
        Runner {
            name: $name,
            summary: $summary,
            run: $f,
        }
    };
}

pub(super) static REGISTRY: &[Runner] = &[
    runner!("verify-exit-time", "NWF exit time vs min z_i/2G_i (skew product, KS)", exit_time),
    runner!("verify-exit-face", "two-type exit-face probability: Euler, Gamma MC, quadrature", exit_face),
    runner!("verify-exit-density", "exit points on a face vs the Dirichlet-mixture series", exit_density),
    runner!("verify-time-reversal", "BESQ(-θ) reversed at T0 vs BESQ(4+θ) to its last exit", time_reversal),
    runner!("verify-transition-density", "negative-dimension density identity and mass defect", transition_density),
    runner!("verify-clado-moments", "one-step branchpoint moments: formula vs enumeration", clado_moments),
    runner!("verify-chain-stationarity", "Aldous chain keeps the uniform law on 5-leaf cladograms", chain_stationarity),
    runner!("verify-concentration", "max-Gamma tail bound and the l^k gradient inequality", concentration),
    runner!("verify-max-gamma", "E sqrt(max of n Gammas) / sqrt(log n) stays bounded", max_gamma),
    runner!("verify-two-simulators", "NWF Euler vs skew product marginal at a fixed time", two_simulators),
    runner!("verify-bessel-clock", "log growth of the Bessel clock of BESQ(θ) from 0", bessel_clock_growth),
    runner!("verify-null-calibration", "false-rejection rates of every calibrated test", null_calibration),
    runner!("calibrate-ks-two-sample", "null calibration: two-sample KS", cal_ks_two),
    runner!("calibrate-ks-one-sample", "null calibration: one-sample KS", cal_ks_one),
    runner!("calibrate-chi-square", "null calibration: chi-square GOF", cal_chi_square),
    runner!("calibrate-clado-uniform", "null calibration: uniform cladogram sampler GOF", cal_clado),
    runner!("calibrate-max-gamma", "null calibration: max-Gamma sampler KS", cal_max_gamma),
];

const CLAIM_EXIT_TIME: &str =
    "the NWF exit time from z has the law of min_i z_i/(2 G_i) with independent G_i ~ Gamma(1 + delta_i)";
const CLAIM_FACE: &str = "for two types with delta = 0 the process leaves through face i with probability z_j/(z_1 + z_2), j != i";
const CLAIM_DENSITY: &str = "the NWF exit density on a face is the Dirichlet-mixture series over compositions";
const CLAIM_REVERSAL: &str =
    "BESQ(-theta) from x reversed at T0 is BESQ(4 + theta) from 0 run to its last exit from x, and T0 ~ x/2G";
const CLAIM_SYMMETRY: &str = "p^{-theta}_t(x, y) = p^{4+theta}_t(y, x)";
const CLAIM_DEFECT: &str = "the missing mass of p^{-theta}_t(x, .) is P(x/2G <= t), G ~ Gamma(1 + theta/2)";
const CLAIM_CLADO: &str =
    "one Aldous move changes a leaf proportion by -1/n w.p. x(2n(1-x)-2)/(2n-5) and by +1/n w.p. (1-x)(2nx-1)/(2n-5)";
const CLAIM_STATIONARY: &str = "the Aldous chain is reversible with respect to the uniform law on cladograms";
const CLAIM_SELF: &str = "the Aldous chain stays put with probability 1/(2n-5)";
const CLAIM_CONCENTRATION: &str = "P(sqrt(max_i G_i) > a_n + r) <= exp(-r^2)";
const CLAIM_GRADIENT: &str = "sum_i x_i (d_i F_k)^2 <= F_k(x) for the l^k norm F_k";
const CLAIM_MAX_GAMMA: &str = "E sqrt(max of n iid Gammas) is of order sqrt(log n)";
const CLAIM_TWO_SIM: &str = "the NWF equation and the time-changed independent BESQ coordinates give the same process";
const CLAIM_CLOCK: &str = "for BESQ(theta) from 0, theta > 2, int_eps^1 du/Z_u ~ log(1/eps)/(theta - 2)";
const CLAIM_CALIBRATION: &str = "each statistical test rejects a true null at its nominal level";

fn ks_report(name: &str, claim: &str, a: &[f64], b: &[f64]) -> Result<StatReport> {
    let ks = ks_two_sample(a, b)?;
    Ok(StatReport::new(
        name,
        claim,
        "ks_p_value",
        ks.p_value,
        Threshold::Above(P_THRESHOLD),
        vec![a.len(), b.len()],
    ))
}

/// |freq − p| in units of the binomial standard deviation at `p`.
fn z_score(freq: f64, p: f64, m: usize) -> f64 {
    let sigma = (p * (1.0 - p) / m as f64).sqrt();
    if sigma == 0.0 {
        if freq == p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (freq - p).abs() / sigma
    }
}

fn nwf_setup(ctx: &RunnerContext, n_default: usize, delta_default: f64) -> Result<(NwfParams, SimplexState)> {
    let delta = ctx.params.vec_f64("delta", &vec![delta_default; n_default])?;
    let n = delta.len();
    let z = ctx.params.vec_f64("z", &vec![1.0 / n as f64; n])?;
    if z.len() != n {
        return param("z and delta must have the same length");
    }
    Ok((NwfParams::new(delta)?, SimplexState::new(z)?))
}

fn exit_time(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let (params, start) = nwf_setup(ctx, 3, 0.5)?;
    let paths = ctx.params.usize("paths", 10_000)?;
    let step = ctx.params.f64("step", 1e-4)?;
    let mut out = RunnerOutput::default();
    let (taus, analytic) = out.timed(|| {
        let recs = par_paths(&ctx.stream, 1, paths, |_, s| skew_product_exit(&params, &start, step, s));
        let taus = recs
            .into_iter()
            .map(|r| r.map(|r| r.tau_besq.expect("skew product records tau")))
            .collect::<Result<Vec<f64>>>()?;
        let analytic = par_draws(&ctx.stream, 2, paths, |s| {
            sample_exit_time_analytic(start.coords(), params.delta(), s).map(|v| v.0)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let r = ks_report("tau_ks", CLAIM_EXIT_TIME, &taus, &analytic)?;
        Ok(((taus, analytic), vec![r]))
    })?;
    let mut t = CsvTable::new(["tau_skew_product", "tau_analytic"]);
    for (a, b) in taus.iter().zip(&analytic) {
        t.push(vec![*a, *b]);
    }
    out.tables.push(("exit_times.csv".into(), t.to_string_lossy()));
    Ok(out)
}

fn exit_face(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let z = ctx.params.vec_f64("z", &[1.0 / 3.0, 2.0 / 3.0])?;
    let paths = ctx.params.usize("paths", 10_000)?;
    let step = ctx.params.f64("step", 1e-4)?;
    let draws = ctx.params.usize("mc_draws", 1_000_000)?;
    if z.len() != 2 {
        return param("this check is for two types");
    }
    let params = NwfParams::new(vec![0.0, 0.0])?;
    let start = SimplexState::new(z.clone())?;
    let exact = face_probability(&z, &[0.0, 0.0], FaceMethod::ClosedFormN2, &mut ctx.stream.fork(3, 0))?.probabilities[0];
    let mut out = RunnerOutput::default();
    out.timed(|| {
        let faces = par_paths(&ctx.stream, 1, paths, |_, s| nwf_euler_exit(&params, &start, step, s).map(|r| r.face));
        let faces = faces.into_iter().collect::<Result<Vec<usize>>>()?;
        let freq = faces.iter().filter(|f| **f == 0).count() as f64 / paths as f64;
        Ok((
            (),
            vec![StatReport::new(
                "euler_face0_z",
                CLAIM_FACE,
                "abs_z_score",
                z_score(freq, exact, paths),
                Threshold::AtMost(3.0),
                vec![paths],
            )],
        ))
    })?;
    out.timed(|| {
        let mc = face_probability(&z, &[0.0, 0.0], FaceMethod::MonteCarlo(draws), &mut ctx.stream.fork(2, 0))?;
        Ok((
            (),
            vec![StatReport::new(
                "gamma_mc_face0_z",
                CLAIM_FACE,
                "abs_z_score",
                z_score(mc.probabilities[0], exact, draws),
                Threshold::AtMost(3.0),
                vec![draws],
            )],
        ))
    })?;
    out.timed(|| {
        let q = face_probability(&z, &[0.0, 0.0], FaceMethod::Quadrature, &mut ctx.stream.fork(3, 1))?;
        Ok((
            (),
            vec![StatReport::new(
                "quadrature_face0_error",
                CLAIM_FACE,
                "abs_error",
                (q.probabilities[0] - exact).abs(),
                Threshold::AtMost(1e-8),
                vec![],
            )],
        ))
    })?;
    Ok(out)
}

fn exit_density(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let (params, start) = nwf_setup(ctx, 3, 0.5)?;
    if params.n() != 3 {
        return param("the exit-density check uses three types");
    }
    let face = ctx.params.usize("face", 0)?;
    let points = ctx.params.usize("points", 100_000)?;
    let step = ctx.params.f64("step", 1e-4)?;
    let bins = ctx.params.usize("bins", 20)?;
    let batch = ctx.params.usize("batch", 20_000)?;
    let trunc = SeriesTruncation::new(ctx.params.usize("max_n", 60)?, ctx.params.f64("tol", 1e-10)?)?;
    if face > 2 || bins < 2 || batch == 0 {
        return param("need face < 3, bins ≥ 2 and a positive batch");
    }
    let (z, delta) = (start.coords().to_vec(), params.delta().to_vec());
    // the free coordinate on the face: the first index other than `face`
    let free = if face == 0 { 1 } else { 0 };
    let mut out = RunnerOutput::default();
    let mass = exit_face_mass_nwf(&z, &delta, face, trunc)?;
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    let (counts, probs, simulated) = out.timed(|| {
        let mut pts = Vec::with_capacity(points);
        let mut next = 0u64;
        let mut simulated = 0usize;
        while pts.len() < points {
            let recs = par_paths_from(&ctx.stream, 1, next, batch, |_, s| skew_product_exit(&params, &start, step, s));
            next += batch as u64;
            simulated += batch;
            for r in recs {
                let r = r?;
                if r.face == face && pts.len() < points {
                    pts.push(r.exit_point[free]);
                }
            }
            if simulated > 1000 * points.max(1) {
                return Err(Error::Range("too few exits through the requested face".into()));
            }
        }
        let probs = edges
            .windows(2)
            .map(|w| {
                integrate(
                    |u| {
                        let mut x = [0.0; 3];
                        x[free] = u;
                        x[3 - face - free] = 1.0 - u;
                        exit_density_nwf(&z, &delta, face, &x, trunc).map(|v| v.value).unwrap_or(f64::NAN)
                    },
                    w[0],
                    w[1],
                    1e-12,
                    1e-10,
                )
                .map(|v| v / mass)
            })
            .collect::<Result<Vec<f64>>>()?;
        let counts = histogram(&pts, &edges);
        let gof = chi_square_gof(&counts, &probs)?;
        let r = StatReport::new(
            "exit_point_chi_square",
            CLAIM_DENSITY,
            "chi_square_p_value",
            gof.p_value,
            Threshold::Above(P_THRESHOLD),
            vec![pts.len(), simulated],
        );
        Ok(((counts, probs, simulated), vec![r]))
    })?;
    out.timed(|| {
        let total = (0..3)
            .map(|i| exit_face_mass_nwf(&z, &delta, i, trunc))
            .sum::<Result<f64>>()?;
        Ok((
            (),
            vec![StatReport::new(
                "series_normalisation",
                CLAIM_DENSITY,
                "abs_total_mass_error",
                (total - 1.0).abs(),
                Threshold::AtMost(5e-3),
                vec![],
            )],
        ))
    })?;
    let mut t = CsvTable::new(["bin_lo", "bin_hi", "observed", "expected"]);
    let n_pts: u64 = counts.iter().sum();
    for (k, w) in edges.windows(2).enumerate() {
        t.push(vec![w[0], w[1], counts[k] as f64, probs[k] * n_pts as f64]);
    }
    t.metadata.push(("paths_simulated".into(), simulated.to_string()));
    t.metadata.push(("face_mass".into(), fmt_num(mass)));
    out.tables.push(("exit_density_bins.csv".into(), t.to_string_lossy()));
    Ok(out)
}

fn time_reversal(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let thetas = ctx.params.vec_f64("theta", &[0.0, 1.0])?;
    let x = ctx.params.f64("x", 1.0)?;
    let paths = ctx.params.usize("paths", 10_000)?;
    let step = ctx.params.f64("step", 1e-4)?;
    let mut out = RunnerOutput::default();
    let mut summary = CsvTable::new(["theta", "hitting_ks_p", "midpoint_ks_p", "censored_reverse", "censored_forward"]);
    for (k, &theta) in thetas.iter().enumerate() {
        let rep = out.timed(|| {
            let rep = verify_time_reversal(theta, x, paths, step, &ctx.stream.fork(40 + k as u64, 0))?;
            let sizes = vec![paths];
            let reports = vec![
                StatReport::new(
                    format!("theta_{theta}_hitting_time_ks"),
                    CLAIM_REVERSAL,
                    "ks_p_value",
                    rep.hitting_time_ks.p_value,
                    Threshold::Above(P_THRESHOLD),
                    sizes.clone(),
                ),
                StatReport::new(
                    format!("theta_{theta}_midpoint_ks"),
                    CLAIM_REVERSAL,
                    "ks_p_value",
                    rep.midpoint_ks.p_value,
                    Threshold::Above(P_THRESHOLD),
                    vec![paths - rep.censored_reverse, paths - rep.censored_forward],
                ),
            ];
            Ok((rep, reports))
        })?;
        summary.push(vec![
            theta,
            rep.hitting_time_ks.p_value,
            rep.midpoint_ks.p_value,
            rep.censored_reverse as f64,
            rep.censored_forward as f64,
        ]);
    }
    out.tables.push(("time_reversal.csv".into(), summary.to_string_lossy()));
    Ok(out)
}

fn transition_density(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let thetas = ctx.params.vec_f64("theta", &[0.0, 1.0, 2.5])?;
    let xs = ctx.params.vec_f64("x", &[0.2, 0.7, 1.0, 1.9, 3.0])?;
    let ys = ctx.params.vec_f64("y", &[0.1, 0.5, 1.0, 2.2, 4.0])?;
    let ts = ctx.params.vec_f64("t", &[0.05, 0.5, 2.0])?;
    let mut out = RunnerOutput::default();
    out.timed(|| {
        // p^{-θ}(x, y) = p^{4+θ}(y, x) = (x/y)^{1+θ/2} p^{4+θ}(x, y) by reversibility
        // of BESQ(4+θ) against its speed measure y^{1+θ/2}
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for &th in &thetas {
            for &x in &xs {
                for &y in &ys {
                    for &t in &ts {
                        let neg = besq_transition_density(-th, x, y, t)?;
                        let pos = besq_transition_density(4.0 + th, x, y, t)?;
                        let want = (x / y).powf(1.0 + 0.5 * th) * pos;
                        worst = worst.max((neg - want).abs() / want.abs().max(1e-300));
                        count += 1;
                    }
                }
            }
        }
        Ok((
            (),
            vec![StatReport::new(
                "symmetry_max_rel_error",
                CLAIM_SYMMETRY,
                "max_relative_error",
                worst,
                Threshold::AtMost(1e-10),
                vec![count],
            )],
        ))
    })?;
    out.timed(|| {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for &th in &thetas {
            for &x in &[0.5, 1.0, 2.0] {
                for &t in &[0.1, 0.5, 2.0] {
                    let mass = integrate_to_infinity(
                        |y| besq_transition_density(-th, x, y, t).unwrap_or(f64::NAN),
                        0.0,
                        1e-12,
                        1e-10,
                    )?;
                    let survive = gamma_cdf(1.0 + 0.5 * th, x / (2.0 * t))?;
                    worst = worst.max((mass - survive).abs());
                    count += 1;
                }
            }
        }
        Ok((
            (),
            vec![StatReport::new(
                "mass_defect_max_error",
                CLAIM_DEFECT,
                "max_abs_error",
                worst,
                Threshold::AtMost(1e-6),
                vec![count],
            )],
        ))
    })?;
    Ok(out)
}

fn clado_moments(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let ns = ctx.params.vec_usize("n", &[7, 8, 9, 10, 11, 12])?;
    let trees = ctx.params.usize("trees", 50)?;
    let mut out = RunnerOutput::default();
    let mut table = CsvTable::new(["n", "comparisons", "mismatches", "skipped_branchpoints"]);
    out.timed(|| {
        let (mut total, mut bad) = (0usize, 0usize);
        for &n in &ns {
            let mut s = ctx.stream.fork(6, n as u64);
            let (mut comps, mut mism, mut skipped) = (0usize, 0usize, 0usize);
            for _ in 0..trees {
                let t = sample_uniform_cladogram(n, &mut s)?;
                for b in t.branchpoints() {
                    let m = t.branchpoint_masses(b)?;
                    if m.counts.iter().any(|c| *c < 2) {
                        skipped += 1;
                        continue;
                    }
                    for j in 0..3 {
                        let got = one_step_moment_enumeration(&t, b, j)?;
                        let want = one_step_transition_probs(n as i64, m.x[j])?;
                        comps += 1;
                        mism += (got != want) as usize;
                    }
                }
            }
            table.push(vec![n as f64, comps as f64, mism as f64, skipped as f64]);
            total += comps;
            bad += mism;
        }
        if total == 0 {
            return param("no branchpoint had all three sets of size ≥ 2");
        }
        Ok((
            (),
            vec![StatReport::new(
                "formula_vs_enumeration_mismatches",
                CLAIM_CLADO,
                "mismatch_count",
                bad as f64,
                Threshold::AtMost(0.0),
                vec![total],
            )],
        ))
    })?;
    out.tables.push(("clado_moments.csv".into(), table.to_string_lossy()));
    Ok(out)
}

fn chain_stationarity(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let n = ctx.params.usize("n", 5)?;
    let samples = ctx.params.usize("samples", 10_000)?;
    let thin = ctx.params.usize("thin", 50)?;
    if !(4..=8).contains(&n) || thin == 0 {
        return param("need 4 ≤ n ≤ 8 and thin ≥ 1");
    }
    let classes = enumerate_cladograms(n)?;
    let index: HashMap<_, _> = classes.iter().enumerate().map(|(i, t)| (t.canonical_form(), i)).collect();
    let mut out = RunnerOutput::default();
    out.timed(|| {
        let mut s = ctx.stream.fork(7, 0);
        let mut t = sample_uniform_cladogram(n, &mut s)?;
        let mut counts = vec![0u64; classes.len()];
        let mut stays = 0usize;
        let mut form = t.canonical_form();
        for _ in 0..samples {
            for _ in 0..thin {
                aldous_chain_step(&mut t, &mut s)?;
                let next = t.canonical_form();
                stays += (next == form) as usize;
                form = next;
            }
            counts[index[&form]] += 1;
        }
        let probs = vec![1.0 / classes.len() as f64; classes.len()];
        let gof = chi_square_gof(&counts, &probs)?;
        let steps = samples * thin;
        let p_stay = 1.0 / (2 * n - 5) as f64;
        Ok((
            (),
            vec![
                StatReport::new(
                    "topology_chi_square",
                    CLAIM_STATIONARY,
                    "chi_square_p_value",
                    gof.p_value,
                    Threshold::Above(P_THRESHOLD),
                    vec![samples],
                ),
                StatReport::new(
                    "self_transition_z",
                    CLAIM_SELF,
                    "abs_z_score",
                    z_score(stays as f64 / steps as f64, p_stay, steps),
                    Threshold::AtMost(3.0),
                    vec![steps],
                ),
            ],
        ))
    })?;
    Ok(out)
}

fn concentration(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let n = ctx.params.usize("n", 100)?;
    let delta = ctx.params.f64("delta", 0.0)?;
    let radii = ctx.params.vec_f64("r", &[0.5, 1.0, 2.0])?;
    let samples = ctx.params.usize("samples", 100_000)?;
    let points = ctx.params.usize("gradient_points", 1000)?;
    let ks = ctx.params.vec_f64("k", &[1.5, 2.0, 4.0, 16.0])?;
    let dim = ctx.params.usize("gradient_dim", n)?;
    let mut out = RunnerOutput::default();
    let rep = out.timed(|| {
        let rep = max_gamma_concentration_check(n, delta, &radii, samples, &ctx.stream.fork(8, 0))?;
        let reports = rep
            .rows
            .iter()
            .map(|row| {
                StatReport::new(
                    format!("tail_r_{}", row.r),
                    CLAIM_CONCENTRATION,
                    "tail_frequency",
                    row.frequency,
                    Threshold::AtMost(row.bound + 3.0 * row.sigma),
                    vec![samples, samples],
                )
            })
            .collect();
        Ok((rep, reports))
    })?;
    out.timed(|| {
        let pts = par_draws(&ctx.stream.fork(8, 1), 0, points, |s| {
            (0..dim).map(|_| sample_gamma(1.0, s)).collect::<Result<Vec<f64>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut reports = Vec::new();
        for &k in &ks {
            let mut violations = 0;
            for x in &pts {
                violations += (!lk_norm_gradient_inequality_check(x, k)?.passed) as usize;
            }
            reports.push(StatReport::new(
                format!("gradient_k_{k}"),
                CLAIM_GRADIENT,
                "violations",
                violations as f64,
                Threshold::AtMost(0.0),
                vec![points],
            ));
        }
        Ok(((), reports))
    })?;
    let mut t = CsvTable::new(["r", "bound", "frequency", "sigma"]);
    for row in &rep.rows {
        t.push(vec![row.r, row.bound, row.frequency, row.sigma]);
    }
    t.metadata.push(("a_hat".into(), fmt_num(rep.a_hat.mean)));
    out.tables.push(("concentration.csv".into(), t.to_string_lossy()));
    Ok(out)
}

fn max_gamma(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let ns = ctx.params.vec_usize("n", &[10, 100, 1000, 10_000])?;
    let delta = ctx.params.f64("delta", 0.5)?;
    let samples = ctx.params.usize("samples", 100_000)?;
    let lo = ctx.params.f64("lower", 0.7)?;
    let hi = ctx.params.f64("upper", 2.5)?;
    if ns.iter().any(|n| *n < 2) {
        return param("n must be at least 2 so that log n > 0");
    }
    let mut out = RunnerOutput::default();
    let mut t = CsvTable::new(["n", "a_hat", "se", "ratio"]);
    for (k, &n) in ns.iter().enumerate() {
        out.timed(|| {
            let est = expected_sqrt_max_gamma(n, delta, samples, &ctx.stream.fork(9, k as u64))?;
            let ratio = est.mean / (n as f64).ln().sqrt();
            t.push(vec![n as f64, est.mean, est.se, ratio]);
            Ok((
                (),
                vec![StatReport::new(
                    format!("ratio_n_{n}"),
                    CLAIM_MAX_GAMMA,
                    "a_hat_over_sqrt_log_n",
                    ratio,
                    Threshold::Between(lo, hi),
                    vec![samples],
                )],
            ))
        })?;
    }
    out.tables.push(("max_gamma.csv".into(), t.to_string_lossy()));
    Ok(out)
}

fn two_simulators(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let (params, start) = nwf_setup(ctx, 3, 0.5)?;
    let u = ctx.params.f64("u", 0.05)?;
    let paths = ctx.params.usize("paths", 10_000)?;
    let step = ctx.params.f64("step", 1e-4)?;
    let coord = ctx.params.usize("coordinate", 0)?;
    if coord >= params.n() {
        return param("coordinate out of range");
    }
    let mut out = RunnerOutput::default();
    out.timed(|| {
        let euler = par_paths(&ctx.stream, 1, paths, |_, s| nwf_euler_state_at(&params, &start, u, step, s))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let skew = par_paths(&ctx.stream, 2, paths, |_, s| skew_product_state_at(&params, &start, u, step, s))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let a: Vec<f64> = euler.iter().flatten().map(|x| x[coord]).collect();
        let b: Vec<f64> = skew.iter().flatten().map(|x| x[coord]).collect();
        if a.is_empty() || b.is_empty() {
            return Err(Error::Range(format!("no path survives to internal time {u}")));
        }
        // two-proportion test on survival to u
        let (pa, pb) = (a.len() as f64 / paths as f64, b.len() as f64 / paths as f64);
        let pooled = 0.5 * (pa + pb);
        let var = pooled * (1.0 - pooled) * 2.0 / paths as f64;
        let p_surv = if var > 0.0 { chi_square_sf((pa - pb).powi(2) / var, 1.0) } else { 1.0 };
        Ok((
            (),
            vec![
                ks_report("marginal_ks", CLAIM_TWO_SIM, &a, &b)?,
                StatReport::new(
                    "survival_two_proportion",
                    CLAIM_TWO_SIM,
                    "p_value",
                    p_surv,
                    Threshold::Above(P_THRESHOLD),
                    vec![paths, paths],
                ),
            ],
        ))
    })?;
    Ok(out)
}

fn bessel_clock_growth(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let theta = ctx.params.f64("theta", 6.0)?;
    let eps = ctx.params.f64("eps", 1e-5)?;
    let paths = ctx.params.usize("paths", 100)?;
    let per_decade = ctx.params.usize("points_per_decade", 200)?;
    let rel = ctx.params.f64("relative_tolerance", 0.25)?;
    if !(theta > 2.0) || !(eps > 0.0 && eps < 1.0) || per_decade == 0 || paths == 0 {
        return param("need theta > 2, 0 < eps < 1 and positive counts");
    }
    let decades = (1.0 / eps).log10();
    let m = (decades * per_decade as f64).ceil() as usize;
    let mut times = vec![0.0];
    times.extend((0..=m).map(|k| eps.powf(1.0 - k as f64 / m as f64)));
    let target = 1.0 / (theta - 2.0);
    let log_inv = (1.0 / eps).ln();
    let mut out = RunnerOutput::default();
    let ratios = out.timed(|| {
        let ratios = par_paths(&ctx.stream, 1, paths, |_, s| {
            let path = simulate_besq_exact(theta, 0.0, &times, s)?;
            Ok(bessel_clock(&path, eps, 1.0)? / log_inv)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mean = ratios.iter().sum::<f64>() / paths as f64;
        Ok((
            ratios,
            vec![StatReport::new(
                "clock_over_log",
                CLAIM_CLOCK,
                "mean_ratio",
                mean,
                Threshold::Between(target * (1.0 - rel), target * (1.0 + rel)),
                vec![paths],
            )],
        ))
    })?;
    let mut t = CsvTable::new(["path", "ratio"]);
    for (i, r) in ratios.iter().enumerate() {
        t.push(vec![i as f64, *r]);
    }
    out.tables.push(("bessel_clock.csv".into(), t.to_string_lossy()));
    Ok(out)
}

fn calibration_reports(ctx: &RunnerContext, names: &[&str], out: &mut RunnerOutput) -> Result<()> {
    let reps = ctx.params.usize("repetitions", 200)?;
    let level = ctx.params.f64("level", 0.05)?;
    let size_override = ctx.params.usize("size", 0)?;
    if reps == 0 || !(level > 0.0 && level < 1.0) {
        return param("need repetitions ≥ 1 and 0 < level < 1");
    }
    let mut table = String::from("test,rejections,repetitions,rate,sigma\n");
    for (k, name) in names.iter().enumerate() {
        let test = calibrate::find(name).ok_or_else(|| Error::Parameter(format!("unknown test {name}")))?;
        let size = if size_override > 0 { size_override } else { test.default_size };
        let c = out.timed(|| {
            let c = null_rejection_rate(test, size, reps, level, &ctx.stream, 120 + k as u64)?;
            let r = StatReport::new(
                format!("{name}_false_rejection_rate"),
                CLAIM_CALIBRATION,
                "rejection_rate",
                c.rate,
                Threshold::Between(level - 3.0 * c.sigma, level + 3.0 * c.sigma),
                vec![reps, size],
            );
            Ok((c, vec![r]))
        })?;
        let _ = writeln!(
            table,
            "{name},{},{},{},{}",
            c.rejections,
            c.repetitions,
            fmt_num(c.rate),
            fmt_num(c.sigma)
        );
    }
    out.tables.push(("calibration.csv".into(), table));
    Ok(())
}

fn null_calibration(ctx: &RunnerContext) -> Result<RunnerOutput> {
    let mut out = RunnerOutput::default();
    let names: Vec<&str> = calibrate::CALIBRATION_TESTS.iter().map(|c| c.name).collect();
    calibration_reports(ctx, &names, &mut out)?;
    Ok(out)
}

macro_rules! single_calibration {
    ($f:ident, $name:literal) => {
        fn $f(ctx: &RunnerContext) -> Result<RunnerOutput> {
            let mut out = RunnerOutput::default();
            calibration_reports(ctx, &[$name], &mut out)?;
            Ok(out)
        }
    };
}

single_calibration!(cal_ks_two, "ks-two-sample");
single_calibration!(cal_ks_one, "ks-one-sample");
single_calibration!(cal_chi_square, "chi-square");
single_calibration!(cal_clado, "clado-uniform");
single_calibration!(cal_max_gamma, "max-gamma");
