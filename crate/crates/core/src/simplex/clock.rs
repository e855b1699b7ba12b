//! The additive functional `factor · ∫ ds / ζ(s)` and its inverse.

use crate::besq::ScalarPath;
use crate::error::{Error, Result};

/// A time change tabulated on a source grid, inverted by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockMap {
    source_times: Vec<f64>,
    clock_values: Vec<f64>,
}

impl ClockMap {
    /// Trapezoid clock `factor · ∫_0^t ds / ζ(s)` on the grid of `(times, zeta)`.
    pub fn from_grid(times: &[f64], zeta: &[f64], factor: f64) -> Result<Self> {
        if times.len() != zeta.len() || times.is_empty() {
            return Err(Error::Parameter("times and values must be nonempty and of equal length".into()));
        }
        if !(factor > 0.0) {
            return Err(Error::Parameter(format!("clock factor must be positive, got {factor}")));
        }
        if let Some(k) = zeta.iter().position(|z| !(*z > 0.0)) {
            return Err(Error::Divergence(format!("clock integrand 1/ζ diverges at t = {}", times[k])));
        }
        let mut clock_values = Vec::with_capacity(times.len());
        clock_values.push(0.0);
        let mut acc = 0.0;
        for k in 1..times.len() {
            let dt = times[k] - times[k - 1];
            if !(dt > 0.0) {
                return Err(Error::Parameter("source times must be strictly increasing".into()));
            }
            acc += 0.5 * factor * dt * (1.0 / zeta[k - 1] + 1.0 / zeta[k]);
            clock_values.push(acc);
        }
        Ok(Self {
            source_times: times.to_vec(),
            clock_values,
        })
    }

    pub fn source_times(&self) -> &[f64] {
        &self.source_times
    }

    pub fn clock_values(&self) -> &[f64] {
        &self.clock_values
    }

    /// Clock value at the end of the source grid.
    pub fn total(&self) -> f64 {
        *self.clock_values.last().expect("nonempty")
    }

    /// `4C_t` (or `factor · C_t`) at source time `t`.
    pub fn clock_at(&self, t: f64) -> Result<f64> {
        lookup(&self.source_times, &self.clock_values, t)
    }

    /// Source time `A_u` at which the clock reaches `u`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        lookup(&self.clock_values, &self.source_times, u)
    }
}

fn lookup(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::Range(format!("{x} outside the tabulated range [{lo}, {hi}]")));
    }
    Ok(crate::besq::interpolate(xs, ys, x))
}

/// Clock `factor · ∫_0^t ds / ζ(s)` along a path of ζ.
pub fn clock_and_inverse(zeta: &ScalarPath, factor: f64) -> Result<ClockMap> {
    ClockMap::from_grid(zeta.times(), zeta.values(), factor)
}
