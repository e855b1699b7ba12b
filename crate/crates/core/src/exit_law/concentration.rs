//! Moments and tails of `√χ`, `χ = max_i G_i` with `G_i` iid `Gamma(δ+1)`,
//! which governs the exit time `τ = 1/(2χ)` of the symmetric diffusion
//! started from the barycenter of the BESQ scale.

use serde::Serialize;

use crate::distributions::gamma_unchecked;
use crate::error::{param, Result};
use crate::parallel::par_draws;
use crate::rng::RandomStream;
use crate::special::gamma_upper_quantile;
use crate::stats::mean_and_se;

const LANE_MEAN: u64 = 1;
const LANE_TAIL: u64 = 2;

/// Above this many terms the maximum is drawn by inverting its CDF.
const DIRECT_MAX_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

/// One draw of `max_i G_i` for `n` iid `Gamma(shape)`.
///
/// Small `n` samples all terms; large `n` solves `P(max > x) = 1 − U^{1/n}`
/// with the upper-tail quantile, which has the same law.
pub fn sample_max_gamma(n: usize, shape: f64, stream: &mut RandomStream) -> f64 {
    if n <= DIRECT_MAX_LIMIT {
        (0..n).map(|_| gamma_unchecked(shape, stream)).fold(0.0, f64::max)
    } else {
        let tail = -(stream.open01().ln() / n as f64).exp_m1();
        gamma_upper_quantile(shape, tail).expect("tail probability lies in (0, 1)")
    }
}

fn check(n: usize, delta: f64, samples: usize, min_samples: usize) -> Result<()> {
    if n < 1 {
        return param("n must be at least 1");
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return param(format!("delta must be nonnegative, got {delta}"));
    }
    if samples < min_samples {
        return param(format!("need at least {min_samples} samples, got {samples}"));
    }
    Ok(())
}

fn sqrt_max_draws(n: usize, delta: f64, samples: usize, stream: &RandomStream, lane: u64) -> Vec<f64> {
    par_draws(stream, lane, samples, |s| sample_max_gamma(n, delta + 1.0, s).sqrt())
}

/// Monte Carlo estimate of `a_n = E√(max_i G_i)`.
pub fn expected_sqrt_max_gamma(n: usize, delta: f64, samples: usize, stream: &RandomStream) -> Result<McEstimate> {
    check(n, delta, samples, 1000)?;
    let xs = sqrt_max_draws(n, delta, samples, stream, LANE_MEAN);
    let (mean, se) = mean_and_se(&xs);
    Ok(McEstimate { mean, se, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub r: f64,
    /// `e^{−r²}`.
    pub bound: f64,
    /// Empirical `P(√χ > â_n + r)`.
    pub frequency: f64,
    /// Binomial standard deviation at the bound.
    pub sigma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub delta: f64,
    pub samples: usize,
    pub a_hat: McEstimate,
    pub rows: Vec<ConcentrationRow>,
    pub passed: bool,
}

/// Compares the empirical upper tail of `√χ` beyond `â_n + r` with
/// `e^{−r²}`. `â_n` comes from an independent sample of the same size.
pub fn max_gamma_concentration_check(
    n: usize,
    delta: f64,
    r_list: &[f64],
    samples: usize,
    stream: &RandomStream,
) -> Result<ConcentrationReport> {
    check(n, delta, samples, 10_000)?;
    if r_list.iter().any(|r| !(*r >= 0.0)) {
        return param("radii must be nonnegative");
    }
    let a_hat = expected_sqrt_max_gamma(n, delta, samples, stream)?;
    let xs = sqrt_max_draws(n, delta, samples, stream, LANE_TAIL);
    let m = samples as f64;
    let rows: Vec<ConcentrationRow> = r_list
        .iter()
        .map(|&r| {
            let bound = (-r * r).exp();
            let frequency = xs.iter().filter(|x| **x > a_hat.mean + r).count() as f64 / m;
            let sigma = (bound * (1.0 - bound) / m).sqrt();
            ConcentrationRow {
                r,
                bound,
                frequency,
                sigma,
                passed: frequency <= bound + 3.0 * sigma,
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(ConcentrationReport {
        n,
        delta,
        samples,
        a_hat,
        rows,
        passed,
    })
}

/// Gradient of `F_k(x) = (Σ x_i^k)^{1/k}`.
pub fn lk_norm_gradient(x: &[f64], k: f64) -> Vec<f64> {
    let s: f64 = x.iter().map(|v| v.powf(k)).sum();
    let scale = s.powf(1.0 / k - 1.0);
    x.iter().map(|v| v.powf(k - 1.0) * scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientCheck {
    /// `Σ x_i (∂_i F_k)²`.
    pub lhs: f64,
    /// `F_k(x)`.
    pub rhs: f64,
    pub passed: bool,
}

/// Checks `Σ x_i (∂_i F_k)² ≤ F_k(x)` at a positive point.
pub fn lk_norm_gradient_inequality_check(x: &[f64], k: f64) -> Result<GradientCheck> {
    if x.is_empty() || x.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return param("need a nonempty positive vector");
    }
    if !(k > 1.0) || !k.is_finite() {
        return param(format!("k must exceed 1, got {k}"));
    }
    let grad = lk_norm_gradient(x, k);
    let lhs = x.iter().zip(&grad).map(|(v, g)| v * g * g).sum();
    let rhs = x.iter().map(|v| v.powf(k)).sum::<f64>().powf(1.0 / k);
    Ok(GradientCheck {
        lhs,
        rhs,
        passed: lhs <= rhs + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitIntervalReport {
    pub n: usize,
    pub delta: f64,
    pub r: f64,
    pub samples: usize,
    pub a_hat: McEstimate,
    /// Interval for `√(2τ)`, i.e. `[1/(â+r), 1/(â−r)]`, narrowed by three
    /// standard errors of `â` on each side.
    pub lower: f64,
    pub upper: f64,
    pub frequency: f64,
    /// `1 − 2e^{−r²}`.
    pub bound: f64,
    pub sigma: f64,
    pub passed: bool,
}

/// Frequency of `√(2τ) ∈ [1/(â_n+r), 1/(â_n−r)]` for `τ = 1/(2χ)`, against
/// the two-sided bound `1 − 2e^{−r²}`.
pub fn exit_time_interval_check(
    n: usize,
    delta: f64,
    r: f64,
    samples: usize,
    stream: &RandomStream,
) -> Result<ExitIntervalReport> {
    check(n, delta, samples, 1000)?;
    let a_hat = expected_sqrt_max_gamma(n, delta, samples, stream)?;
    if !(r > 0.0 && r < a_hat.mean) {
        return param(format!("r must lie in (0, â_n = {}), got {r}", a_hat.mean));
    }
    let slack = 3.0 * a_hat.se;
    let hi = a_hat.mean + r - slack;
    let lo = (a_hat.mean - r + slack).max(0.0);
    let taus: Vec<f64> = par_draws(stream, LANE_TAIL, samples, |s| 1.0 / (2.0 * sample_max_gamma(n, delta + 1.0, s)));
    let (lower, upper) = (1.0 / hi, if lo > 0.0 { 1.0 / lo } else { f64::INFINITY });
    let m = samples as f64;
    let frequency = taus
        .iter()
        .filter(|t| {
            let v = (2.0 * **t).sqrt();
            v >= lower && v <= upper
        })
        .count() as f64
        / m;
    let bound = 1.0 - 2.0 * (-r * r).exp();
    let p = bound.clamp(0.0, 1.0);
    let sigma = (p * (1.0 - p) / m).sqrt();
    Ok(ExitIntervalReport {
        n,
        delta,
        r,
        samples,
        a_hat,
        lower,
        upper,
        frequency,
        bound,
        sigma,
        passed: frequency >= bound - 3.0 * sigma,
    })
}
