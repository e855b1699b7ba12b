//! Two-simulator check of the time-reversal identity between `Q^{−θ}_x` run
//! to its absorption time and `Q^{4+θ}_0` run to its last passage at `x`.

use rayon::prelude::*;
use serde::Serialize;

use super::{euler_drive, interpolate, transition_unchecked, BesqParams, EulerEnd, Visit};
use crate::distributions::gamma_unchecked;
use crate::error::{param, Result};
use crate::rng::RandomStream;
use crate::special::gamma_quantile;
use crate::stats::{ks_two_sample, KsResult};

const LANE_REVERSE: u64 = 1;
const LANE_ANALYTIC: u64 = 2;
const LANE_FORWARD: u64 = 3;

/// Forward step control: a step never exceeds these multiples of
/// `(Y−x)²/Y`, `|Y−x|/dimension` and `max(Y, x)`, and is never below the
/// base step.
const CROSSING_FACTOR: f64 = 0.005;
const DRIFT_FACTOR: f64 = 0.1;
const RELATIVE_FACTOR: f64 = 0.01;

pub const PASS_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeReversalReport {
    pub theta: f64,
    pub x: f64,
    pub num_paths: usize,
    pub step: f64,
    pub horizon: f64,
    /// Euler absorption times against `x/2G`, both censored at the horizon.
    pub hitting_time_ks: KsResult,
    /// Reversed path at half its absorption time against the forward path at
    /// half its last passage time.
    pub midpoint_ks: KsResult,
    pub censored_reverse: usize,
    pub censored_forward: usize,
    pub passed: bool,
}

struct PathDraw {
    hitting: f64,
    analytic: f64,
    reverse_mid: Option<f64>,
    forward_mid: Option<f64>,
}

/// Runs `num_paths` independent triples (Euler reverse path, analytic
/// hitting time, exact forward path) and compares them by two-sample KS.
pub fn verify_time_reversal(
    theta: f64,
    x: f64,
    num_paths: usize,
    step: f64,
    stream: &RandomStream,
) -> Result<TimeReversalReport> {
    if num_paths < 1000 {
        return param(format!("time-reversal check needs at least 1000 paths, got {num_paths}"));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return param(format!("theta must be nonnegative, got {theta}"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return param(format!("x must be positive, got {x}"));
    }
    if !(step > 0.0) {
        return param(format!("step must be positive, got {step}"));
    }
    let shape = 0.5 * theta + 1.0;
    let horizon = 5.0 * x / (2.0 * gamma_quantile(shape, 0.01)?);
    let reverse = BesqParams::new(-theta, x)?;
    let forward_dim = 4.0 + theta;

    let draws: Vec<PathDraw> = (0..num_paths as u64)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(ts, zs), i| {
                let mut s = stream.fork(LANE_REVERSE, i);
                let (hitting, reverse_mid) = reverse_path(reverse, step, horizon, &mut s, ts, zs);
                let mut s = stream.fork(LANE_ANALYTIC, i);
                let analytic = (x / (2.0 * gamma_unchecked(shape, &mut s))).min(horizon);
                let mut s = stream.fork(LANE_FORWARD, i);
                let forward_mid = forward_path(forward_dim, x, step, horizon, &mut s, ts, zs);
                PathDraw {
                    hitting,
                    analytic,
                    reverse_mid,
                    forward_mid,
                }
            },
        )
        .collect();

    let hitting: Vec<f64> = draws.iter().map(|d| d.hitting).collect();
    let analytic: Vec<f64> = draws.iter().map(|d| d.analytic).collect();
    let rev: Vec<f64> = draws.iter().filter_map(|d| d.reverse_mid).collect();
    let fwd: Vec<f64> = draws.iter().filter_map(|d| d.forward_mid).collect();
    let hitting_time_ks = ks_two_sample(&hitting, &analytic)?;
    let midpoint_ks = ks_two_sample(&rev, &fwd)?;
    Ok(TimeReversalReport {
        theta,
        x,
        num_paths,
        step,
        horizon,
        hitting_time_ks,
        midpoint_ks,
        censored_reverse: num_paths - rev.len(),
        censored_forward: num_paths - fwd.len(),
        passed: hitting_time_ks.p_value > PASS_LEVEL && midpoint_ks.p_value > PASS_LEVEL,
    })
}

/// Euler path of `Q^{−θ}_x`; returns the censored absorption time and, if
/// absorbed, the value at half that time.
fn reverse_path(
    params: BesqParams,
    step: f64,
    horizon: f64,
    s: &mut RandomStream,
    ts: &mut Vec<f64>,
    zs: &mut Vec<f64>,
) -> (f64, Option<f64>) {
    ts.clear();
    zs.clear();
    ts.push(0.0);
    zs.push(params.start);
    let (end, _) = euler_drive(params, step, horizon, s, |_, _, t, z| {
        ts.push(t);
        zs.push(z);
        Visit::Continue
    });
    match end {
        EulerEnd::Absorbed(t0) => {
            ts.push(t0);
            zs.push(0.0);
            (t0, Some(interpolate(ts, zs, 0.5 * t0)))
        }
        _ => (horizon, None),
    }
}

/// Exact-transition path of `Q^{4+θ}_0` on an adaptive grid up to the
/// horizon; returns the value at half the last passage time of `x`, or `None`
/// if the path ends below `x`.
fn forward_path(
    dim: f64,
    x: f64,
    step: f64,
    horizon: f64,
    s: &mut RandomStream,
    ts: &mut Vec<f64>,
    zs: &mut Vec<f64>,
) -> Option<f64> {
    ts.clear();
    zs.clear();
    let (mut t, mut y) = (0.0, 0.0);
    ts.push(t);
    zs.push(y);
    while t < horizon {
        let gap = (y - x).abs();
        let crossing = if y > 0.0 { CROSSING_FACTOR * gap * gap / y } else { f64::INFINITY };
        let dt = crossing
            .min(DRIFT_FACTOR * gap / dim)
            .min(RELATIVE_FACTOR * y.max(x))
            .max(step)
            .min(horizon - t);
        y = transition_unchecked(dim, y, dt, s);
        t = if horizon - t <= dt { horizon } else { t + dt };
        ts.push(t);
        zs.push(y);
    }
    if *zs.last()? < x {
        return None;
    }
    let k = (0..zs.len() - 1).rev().find(|&k| zs[k] <= x)?;
    let (t0, t1, z0, z1) = (ts[k], ts[k + 1], zs[k], zs[k + 1]);
    let last = t0 + (x - z0) / (z1 - z0) * (t1 - t0);
    Some(interpolate(ts, zs, 0.5 * last))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_enough_paths() {
        let s = RandomStream::new(1, 0);
        assert!(verify_time_reversal(0.0, 1.0, 10, 1e-3, &s).is_err());
    }

    #[test]
    fn coarse_run_reports_consistent_counts() {
        let s = RandomStream::new(11, 0);
        let r = verify_time_reversal(1.0, 1.0, 1000, 1e-3, &s).unwrap();
        assert!(r.censored_reverse < 30 && r.censored_forward < 30);
        assert!(r.horizon > 10.0);
        assert!(r.hitting_time_ks.p_value > 1e-4);
    }
}
