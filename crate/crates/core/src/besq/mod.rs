//! Squared Bessel processes of arbitrary real dimension.
//!
//! `dZ = a dt + 2 √Z dβ`. For `a < 2` the process reaches zero and is absorbed
//! there; this includes `a ∈ (0, 2)`, where the classical process would
//! reflect instead.

mod reversal;

use std::io::{self, Write};

use crate::distributions::{gamma_unchecked, noncentral_chisq_unchecked, sample_normal};
use crate::error::{domain, param, Error, Result};
use crate::rng::RandomStream;
use crate::special::{ln_gamma, log_add};
use crate::textio::{fmt_num, CsvTable};

pub use reversal::{verify_time_reversal, TimeReversalReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesqParams {
    pub dimension: f64,
    pub start: f64,
}

impl BesqParams {
    pub fn new(dimension: f64, start: f64) -> Result<Self> {
        if !dimension.is_finite() {
            return param(format!("dimension must be finite, got {dimension}"));
        }
        if !(start >= 0.0) || !start.is_finite() {
            return param(format!("start must be a finite nonnegative number, got {start}"));
        }
        Ok(Self { dimension, start })
    }

    /// Whether simulated paths stop at their first visit to zero.
    pub fn absorbing(&self) -> bool {
        self.dimension < 2.0
    }
}

/// One simulated trajectory on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    times: Vec<f64>,
    values: Vec<f64>,
    absorbed_at: Option<f64>,
    clipped_steps: usize,
}

impl ScalarPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, absorbed_at: Option<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return param("times and values must be nonempty and of equal length");
        }
        if times[0] != 0.0 {
            return param("time grid must start at 0");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return param("time grid must be strictly increasing");
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return param("path values must be nonnegative");
        }
        if let Some(a) = absorbed_at {
            if !(a >= 0.0) {
                return param("absorption time must be nonnegative");
            }
            if times.iter().zip(&values).any(|(t, v)| *t >= a && *v != 0.0) {
                return param("path must vanish after absorption");
            }
        }
        Ok(Self::from_parts(times, values, absorbed_at, 0))
    }

    pub(crate) fn from_parts(times: Vec<f64>, values: Vec<f64>, absorbed_at: Option<f64>, clipped_steps: usize) -> Self {
        Self {
            times,
            values,
            absorbed_at,
            clipped_steps,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn absorbed_at(&self) -> Option<f64> {
        self.absorbed_at
    }

    /// Euler steps whose raw update went negative and was reset to zero
    /// (dimension ≥ 2 only). Nonzero counts are discretisation artifacts.
    pub fn clipped_steps(&self) -> usize {
        self.clipped_steps
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("nonempty path")
    }

    /// Linear interpolation of the path at time `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.end_time()) {
            return Err(Error::Range(format!("time {t} outside [0, {}]", self.end_time())));
        }
        Ok(interpolate(&self.times, &self.values, t))
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(["t", "z"]);
        for (t, z) in self.times.iter().zip(&self.values) {
            table.push(vec![*t, *z]);
        }
        let absorbed = self.absorbed_at.map(fmt_num).unwrap_or_else(|| "none".into());
        table.metadata.push(("absorbed_at".into(), absorbed));
        table
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

/// Piecewise-linear interpolation on a sorted grid; `t` must lie in its range.
pub(crate) fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|s| *s <= t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[k - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    values[k - 1] + w * (values[k] - values[k - 1])
}

fn check_step(step: f64, horizon: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return param(format!("step must be positive, got {step}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return param(format!("horizon must be positive, got {horizon}"));
    }
    Ok(())
}

/// Signal from an Euler visitor.
pub(crate) enum Visit {
    Continue,
    Stop,
}

/// How an Euler run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EulerEnd {
    Absorbed(f64),
    Stopped,
    Horizon,
}

/// Drives the Euler scheme on the uniform grid `k·step` (last step truncated at
/// `horizon`). `visit(t_prev, z_prev, t, z)` sees every completed step and may
/// stop the run; absorption is reported separately.
pub(crate) fn euler_drive<F>(
    params: BesqParams,
    step: f64,
    horizon: f64,
    stream: &mut RandomStream,
    mut visit: F,
) -> (EulerEnd, usize)
where
    F: FnMut(f64, f64, f64, f64) -> Visit,
{
    let a = params.dimension;
    let absorbing = params.absorbing();
    let mut z = params.start;
    if absorbing && z == 0.0 && a <= 0.0 {
        return (EulerEnd::Absorbed(0.0), 0);
    }
    let n_steps = (horizon / step).ceil().max(1.0) as u64;
    let mut clipped = 0;
    let mut t_prev = 0.0;
    for k in 1..=n_steps {
        let t = if k == n_steps { horizon } else { k as f64 * step };
        let h = t - t_prev;
        let mut next = z + a * h + 2.0 * z.max(0.0).sqrt() * h.sqrt() * sample_normal(stream);
        if next <= 0.0 {
            if absorbing {
                let frac = if z > 0.0 { z / (z - next) } else { 0.0 };
                return (EulerEnd::Absorbed(t_prev + frac * h), clipped);
            }
            if next < 0.0 {
                clipped += 1;
            }
            next = 0.0;
        }
        if let Visit::Stop = visit(t_prev, z, t, next) {
            return (EulerEnd::Stopped, clipped);
        }
        z = next;
        t_prev = t;
    }
    (EulerEnd::Horizon, clipped)
}

/// Euler–Maruyama path on a uniform grid up to `horizon`.
///
/// An absorbed path ends with the points `(absorbed_at, 0)` and, if earlier
/// than the horizon, `(horizon, 0)`.
pub fn simulate_besq_euler(params: BesqParams, step: f64, horizon: f64, stream: &mut RandomStream) -> Result<ScalarPath> {
    check_step(step, horizon)?;
    let cap = ((horizon / step).ceil() as usize).min(1 << 24) + 2;
    let mut times = Vec::with_capacity(cap);
    let mut values = Vec::with_capacity(cap);
    times.push(0.0);
    values.push(params.start);
    let (end, clipped) = euler_drive(params, step, horizon, stream, |_, _, t, z| {
        times.push(t);
        values.push(z);
        Visit::Continue
    });
    let absorbed_at = match end {
        EulerEnd::Absorbed(t0) => {
            if t0 > *times.last().unwrap() {
                times.push(t0);
                values.push(0.0);
            } else {
                // Started at zero.
                *values.last_mut().unwrap() = 0.0;
            }
            if t0 < horizon {
                times.push(horizon);
                values.push(0.0);
            }
            Some(t0)
        }
        _ => None,
    };
    Ok(ScalarPath::from_parts(times, values, absorbed_at, clipped))
}

/// Euler absorption time without storing the path; `None` if the path
/// survives to `horizon`.
pub fn euler_hitting_time(params: BesqParams, step: f64, horizon: f64, stream: &mut RandomStream) -> Result<Option<f64>> {
    check_step(step, horizon)?;
    if !params.absorbing() {
        return Err(Error::Unsupported("dimension ≥ 2 paths are not absorbed at zero".into()));
    }
    let (end, _) = euler_drive(params, step, horizon, stream, |_, _, _, _| Visit::Continue);
    Ok(match end {
        EulerEnd::Absorbed(t) => Some(t),
        _ => None,
    })
}

/// First exit of an Euler path from `(0, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalExit {
    pub time: f64,
    pub at_upper: bool,
}

/// Exit of an Euler path from `(0, upper)`, with the upper crossing located by
/// linear interpolation. `None` if neither level is reached by `horizon`.
pub fn euler_exit_interval(
    params: BesqParams,
    upper: f64,
    step: f64,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<Option<IntervalExit>> {
    check_step(step, horizon)?;
    if !(upper > params.start) {
        return param("upper level must exceed the start");
    }
    if !params.absorbing() {
        return Err(Error::Unsupported("dimension ≥ 2 paths are not absorbed at zero".into()));
    }
    let mut hit = None;
    let (end, _) = euler_drive(params, step, horizon, stream, |t0, z0, t1, z1| {
        if z1 >= upper {
            hit = Some(t0 + (upper - z0) / (z1 - z0) * (t1 - t0));
            Visit::Stop
        } else {
            Visit::Continue
        }
    });
    Ok(match end {
        EulerEnd::Absorbed(t) => Some(IntervalExit { time: t, at_upper: false }),
        EulerEnd::Stopped => hit.map(|t| IntervalExit { time: t, at_upper: true }),
        EulerEnd::Horizon => None,
    })
}

/// Exact draw of `Z(elapsed)` given `Z(0) = from` for positive dimension.
pub fn sample_besq_transition_exact(dimension: f64, from: f64, elapsed: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(dimension > 0.0) {
        return Err(Error::Unsupported(format!(
            "exact transitions need positive dimension, got {dimension}"
        )));
    }
    if !(from >= 0.0) || !from.is_finite() {
        return param(format!("from must be nonnegative, got {from}"));
    }
    if !(elapsed > 0.0) || !elapsed.is_finite() {
        return param(format!("elapsed must be positive, got {elapsed}"));
    }
    Ok(transition_unchecked(dimension, from, elapsed, stream))
}

pub(crate) fn transition_unchecked(dimension: f64, from: f64, elapsed: f64, stream: &mut RandomStream) -> f64 {
    elapsed * noncentral_chisq_unchecked(dimension, from / elapsed, stream)
}

/// Path sampled exactly at the given grid (which must start at 0).
pub fn simulate_besq_exact(dimension: f64, start: f64, times: &[f64], stream: &mut RandomStream) -> Result<ScalarPath> {
    if times.first() != Some(&0.0) {
        return param("time grid must start at 0");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return param("time grid must be strictly increasing");
    }
    let mut values = Vec::with_capacity(times.len());
    values.push(start);
    let mut z = start;
    for w in times.windows(2) {
        z = sample_besq_transition_exact(dimension, z, w[1] - w[0], stream)?;
        values.push(z);
    }
    Ok(ScalarPath::from_parts(times.to_vec(), values, None, 0))
}

/// Absorption time of `Q^dimension_start`, drawn as `start / 2G` with
/// `G ~ Gamma(1 − dimension/2)`. Requires `dimension < 2`.
pub fn sample_hitting_time(dimension: f64, start: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(dimension < 2.0) {
        return param(format!("hitting-time law needs dimension < 2, got {dimension}"));
    }
    if !(start > 0.0) || !start.is_finite() {
        return param(format!("start must be positive, got {start}"));
    }
    Ok(start / (2.0 * gamma_unchecked(1.0 - 0.5 * dimension, stream)))
}

/// Transition density `p_t^a(from, to)`.
///
/// Positive dimensions use the Poisson mixture of chi-square densities;
/// dimension `−θ ≤ 0` uses `p^{−θ}_t(x, y) = p^{4+θ}_t(y, x)`.
pub fn besq_transition_density(dimension: f64, from: f64, to: f64, elapsed: f64) -> Result<f64> {
    if !dimension.is_finite() {
        return param("dimension must be finite");
    }
    if !(elapsed > 0.0) || !elapsed.is_finite() {
        return param(format!("elapsed must be positive, got {elapsed}"));
    }
    if !(to > 0.0) || !to.is_finite() {
        return domain(format!("target must be positive, got {to}"));
    }
    if dimension > 0.0 {
        if !(from >= 0.0) || !from.is_finite() {
            return domain(format!("from must be nonnegative, got {from}"));
        }
        Ok(ln_noncentral_chisq_density(to / elapsed, dimension, from / elapsed).exp() / elapsed)
    } else {
        if !(from > 0.0) || !from.is_finite() {
            return domain(format!("from must be positive for dimension {dimension} (0 is absorbing)"));
        }
        besq_transition_density(4.0 - dimension, to, from, elapsed)
    }
}

fn ln_chisq_density(dof: f64, x: f64) -> f64 {
    let h = 0.5 * dof;
    (h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)
}

/// Log-density of the noncentral chi-square at `x > 0`, summed in log space
/// until the geometric tail bound drops below 1e-14 of the running total.
pub(crate) fn ln_noncentral_chisq_density(x: f64, dof: f64, ncp: f64) -> f64 {
    if ncp == 0.0 {
        return ln_chisq_density(dof, x);
    }
    let half = 0.5 * ncp;
    let ln_half = half.ln();
    let mut acc = f64::NEG_INFINITY;
    let mut j = 0u64;
    loop {
        let jf = j as f64;
        let term = -half + jf * ln_half - ln_gamma(jf + 1.0) + ln_chisq_density(dof + 2.0 * jf, x);
        acc = log_add(acc, term);
        // term ratio (j+1)/j, decreasing in j
        let ratio = ncp * x / (4.0 * (jf + 1.0) * (0.5 * dof + jf));
        if j >= 10 && ratio < 1.0 && jf >= half {
            let tail = term + ratio.ln() - (1.0 - ratio).ln();
            if tail - acc < (1e-14f64).ln() {
                return acc;
            }
        }
        j += 1;
        if j > 10_000_000 {
            return acc;
        }
    }
}

/// Scale function `s(x) = x^{θ/2+1}` of `Q^{−θ}`.
pub fn scale_function(theta: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("scale function needs x ≥ 0, got {x}"));
    }
    Ok(x.powf(0.5 * theta + 1.0))
}

/// Trapezoid approximation of `∫_lower^upper du / Z(u)` along a path, with the
/// endpoint values interpolated.
pub fn bessel_clock(path: &ScalarPath, lower: f64, upper: f64) -> Result<f64> {
    if !(lower >= 0.0 && lower < upper && upper <= path.end_time()) {
        return Err(Error::Range(format!(
            "need 0 ≤ lower < upper ≤ {}, got [{lower}, {upper}]",
            path.end_time()
        )));
    }
    let (times, values) = (path.times(), path.values());
    let mut pts: Vec<(f64, f64)> = vec![(lower, interpolate(times, values, lower))];
    let first = times.partition_point(|t| *t <= lower);
    for k in first..times.len() {
        if times[k] >= upper {
            break;
        }
        pts.push((times[k], values[k]));
    }
    pts.push((upper, interpolate(times, values, upper)));
    if pts.iter().any(|(_, z)| *z <= 0.0) {
        return Err(Error::Divergence(format!("path touches zero on [{lower}, {upper}]")));
    }
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (1.0 / w[0].1 + 1.0 / w[1].1))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;
    use crate::special::gamma_cdf;
    use crate::stats::{ks_two_sample, mean_and_se};

    #[test]
    fn path_validation() {
        assert!(ScalarPath::new(vec![0.0, 1.0], vec![1.0, 0.5], None).is_ok());
        assert!(ScalarPath::new(vec![0.5, 1.0], vec![1.0, 0.5], None).is_err());
        assert!(ScalarPath::new(vec![0.0, 0.0], vec![1.0, 0.5], None).is_err());
        assert!(ScalarPath::new(vec![0.0, 1.0], vec![1.0, -0.5], None).is_err());
        assert!(ScalarPath::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.1], Some(1.0)).is_err());
    }

    #[test]
    fn euler_rejects_bad_steps() {
        let p = BesqParams::new(0.0, 1.0).unwrap();
        let mut s = RandomStream::new(1, 0);
        assert!(matches!(simulate_besq_euler(p, 0.0, 1.0, &mut s), Err(Error::Parameter(_))));
        assert!(matches!(simulate_besq_euler(p, 0.1, -1.0, &mut s), Err(Error::Parameter(_))));
    }

    #[test]
    fn absorbed_paths_stay_at_zero() {
        let p = BesqParams::new(-1.0, 0.3).unwrap();
        for i in 0..50 {
            let mut s = RandomStream::new(2, i);
            let path = simulate_besq_euler(p, 1e-3, 5.0, &mut s).unwrap();
            assert!(path.values().iter().all(|v| *v >= 0.0));
            assert_eq!(path.times()[0], 0.0);
            assert_eq!(path.values()[0], 0.3);
            if let Some(a) = path.absorbed_at() {
                for (t, z) in path.times().iter().zip(path.values()) {
                    if *t >= a {
                        assert_eq!(*z, 0.0);
                    }
                }
                assert_eq!(path.end_time(), 5.0);
            }
        }
    }

    #[test]
    fn driftless_mean_is_preserved() {
        let p = BesqParams::new(0.0, 1.0).unwrap();
        let finals: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut s = RandomStream::new(3, i);
                simulate_besq_euler(p, 1e-3, 0.5, &mut s).unwrap().value_at(0.5).unwrap()
            })
            .collect();
        let (m, se) = mean_and_se(&finals);
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn euler_mean_absorption_time() {
        let p = BesqParams::new(-1.0, 1.0).unwrap();
        let ts: Vec<f64> = (0..4000)
            .map(|i| {
                let mut s = RandomStream::new(4, i);
                // E T0 = 1 but the law has a heavy tail; censor far out.
                euler_hitting_time(p, 1e-3, 1e4, &mut s).unwrap().unwrap_or(1e4)
            })
            .collect();
        let (m, se) = mean_and_se(&ts);
        assert!((m - 1.0).abs() < 3.0 * se + 0.01, "{m} ± {se}");
    }

    #[test]
    fn hitting_time_sampler_moments() {
        let mut s = RandomStream::new(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_hitting_time(-1.0, 1.0, &mut s).unwrap()).collect();
        // Var(1/(2G)) with G ~ Gamma(3/2) is infinite; use the median of 1/(2G) as well.
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.0).abs() < 5.0 * se, "{m} ± {se}");

        let mut ys: Vec<f64> = (0..100_000).map(|_| sample_hitting_time(0.0, 2.0, &mut s).unwrap()).collect();
        ys.sort_by(f64::total_cmp);
        let med = ys[ys.len() / 2];
        let exact = 1.0 / 2f64.ln();
        // density of 1/G at the median is 1/(m² e^{1/m})... about 0.24
        assert!((med - exact).abs() < 0.02, "{med} vs {exact}");

        assert!(sample_hitting_time(2.0, 1.0, &mut s).is_err());
        assert!(sample_hitting_time(-1.0, 0.0, &mut s).is_err());
        assert!(sample_hitting_time(1.9, 1.0, &mut s).is_ok());
    }

    #[test]
    fn tiny_start_hits_quickly() {
        let mut s = RandomStream::new(6, 0);
        let mut ts: Vec<f64> = (0..2001).map(|_| sample_hitting_time(0.0, 1e-4, &mut s).unwrap()).collect();
        ts.sort_by(f64::total_cmp);
        assert!(ts[1000] < 1e-3);
    }

    #[test]
    fn exact_transition_from_zero() {
        let mut s = RandomStream::new(7, 0);
        let t = 0.7;
        let xs: Vec<f64> = (0..50_000)
            .map(|_| sample_besq_transition_exact(4.0, 0.0, t, &mut s).unwrap())
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 4.0 * t).abs() < 3.0 * se);
        assert!(matches!(
            sample_besq_transition_exact(-1.0, 1.0, 1.0, &mut s),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn exact_transition_is_markov() {
        let mut s = RandomStream::new(8, 0);
        let one: Vec<f64> = (0..10_000)
            .map(|_| sample_besq_transition_exact(3.0, 1.5, 1.0, &mut s).unwrap())
            .collect();
        let two: Vec<f64> = (0..10_000)
            .map(|_| {
                let mid = sample_besq_transition_exact(3.0, 1.5, 0.5, &mut s).unwrap();
                sample_besq_transition_exact(3.0, mid, 0.5, &mut s).unwrap()
            })
            .collect();
        assert!(ks_two_sample(&one, &two).unwrap().p_value > 0.01);
    }

    #[test]
    fn density_reference_values() {
        // mpmath: besseli-form noncentral chi-square density
        // 0.5 * exp(-(x+λ)/2) * (x/λ)^(k/4-1/2) * I_{k/2-1}(sqrt(λ x))
        let cases = [
            (4.5, 2.0, 1.3, 0.5, 0.12312629367062932),
            (5.0, 1.0, 2.0, 1.0, 0.10195453003429833),
            (1.0, 0.5, 0.2, 0.3, 0.81601326687646928),
            (6.0, 0.0, 3.0, 1.0, 0.12551071508349178),
        ];
        for (a, x, y, t, want) in cases {
            let got = besq_transition_density(a, x, y, t).unwrap();
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "{a} {x} {y} {t}: {got} vs {want}");
        }
    }

    #[test]
    fn density_reversal_identity() {
        for &x in &[0.2, 0.7, 1.0, 1.9, 3.0] {
            for &y in &[0.1, 0.5, 1.0, 2.2, 4.0] {
                for &t in &[0.05, 0.5, 2.0] {
                    let neg = besq_transition_density(-1.0, x, y, t).unwrap();
                    let pos = besq_transition_density(5.0, y, x, t).unwrap();
                    assert_eq!(neg, pos);
                }
            }
        }
        assert!(matches!(besq_transition_density(-1.0, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn density_mass_and_defect() {
        for &a in &[2.0, 3.0, 4.5, 7.0] {
            let m = integrate_to_infinity(|y| besq_transition_density(a, 1.3, y, 0.8).unwrap(), 0.0, 1e-12, 1e-10)
                .unwrap();
            assert!((m - 1.0).abs() < 1e-6, "dimension {a}: mass {m}");
        }
        let m = integrate_to_infinity(|y| besq_transition_density(-1.0, 1.0, y, 0.5).unwrap(), 0.0, 1e-12, 1e-10)
            .unwrap();
        let survive = gamma_cdf(1.5, 1.0).unwrap();
        assert!((m - survive).abs() < 1e-6, "{m} vs {survive}");
    }

    #[test]
    fn density_concentrates_for_short_times() {
        let window = |t: f64| {
            crate::quadrature::integrate(|y| besq_transition_density(4.0, 1.0, y, t).unwrap(), 0.9, 1.1, 1e-13, 1e-11)
                .unwrap()
        };
        // mpmath reference for t = 1e-3: the window is only about 1.6 standard deviations wide
        assert!((window(1e-3) - 0.885509571805320889).abs() < 1e-9);
        assert!(window(2.5e-4) > 0.998);
        assert!(window(1e-4) >= 0.99);
    }

    #[test]
    fn scale_function_values() {
        for &th in &[0.0, 1.0, 3.5] {
            assert_eq!(scale_function(th, 0.0).unwrap(), 0.0);
            assert_eq!(scale_function(th, 1.0).unwrap(), 1.0);
        }
        assert_eq!(scale_function(0.0, 2.7).unwrap(), 2.7);
        assert!(scale_function(1.0, -1.0).is_err());
    }

    #[test]
    fn clock_of_constant_path() {
        let path = ScalarPath::new(vec![0.0, 0.3, 1.0, 2.0], vec![2.0; 4], None).unwrap();
        assert!((bessel_clock(&path, 0.1, 1.7).unwrap() - 1.6 / 2.0).abs() < 1e-15);
        let zero = ScalarPath::new(vec![0.0, 1.0], vec![1.0, 0.0], Some(1.0)).unwrap();
        assert!(matches!(bessel_clock(&zero, 0.0, 1.0), Err(Error::Divergence(_))));
        assert!(matches!(bessel_clock(&path, 1.0, 3.0), Err(Error::Range(_))));
    }

    #[test]
    fn csv_export() {
        let path = ScalarPath::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.0, 0.0], Some(0.5)).unwrap();
        let text = path.to_csv().to_string_lossy();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,z");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "# absorbed_at=5.0000000000000000e-1");
    }
}
