//! Wright-Fisher diffusions on the unit simplex, with positive (WF) or
//! negative (NWF) mutation rates.
//!
//! Coordinates and exit faces are indexed from 0: face `i` is the part of the
//! boundary where coordinate `i` vanishes.

mod clock;
mod euler;
mod increasing;
pub(crate) mod skew;

use std::io::{self, Write};

use serde::Serialize;

use crate::distributions::SIMPLEX_TOL;
use crate::error::{param, Result};
use crate::textio::CsvTable;

pub use clock::{clock_and_inverse, ClockMap};
pub use euler::{nwf_euler_exit, nwf_euler_state_at, simulate_nwf_euler, simulate_wf, MAX_INTERNAL_TIME};
pub use increasing::{simulate_increasing_dimension_wf, IncreasingDimensionRecord};
pub use skew::{simulate_nwf_skew_product, skew_product_exit, skew_product_state_at};

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexState {
    coords: Vec<f64>,
}

impl SimplexState {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return param("simplex point needs at least one coordinate");
        }
        if coords.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return param(format!("simplex coordinates must be nonnegative, got {coords:?}"));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return param(format!("simplex coordinates must sum to 1, got {sum}"));
        }
        Ok(Self { coords })
    }

    /// Uniform point `(1/n, …, 1/n)`.
    pub fn barycenter(n: usize) -> Result<Self> {
        if n == 0 {
            return param("simplex dimension must be positive");
        }
        Ok(Self {
            coords: vec![1.0 / n as f64; n],
        })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn is_interior(&self) -> bool {
        self.coords.iter().all(|c| *c > 0.0)
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Mutation parameters `δ_1, …, δ_n ≥ 0` and their sum `δ_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NwfParams {
    delta: Vec<f64>,
    delta0: f64,
}

impl NwfParams {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.is_empty() {
            return param("need at least one mutation parameter");
        }
        if delta.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return param(format!("mutation parameters must be nonnegative, got {delta:?}"));
        }
        let delta0 = delta.iter().sum();
        Ok(Self { delta, delta0 })
    }

    pub fn symmetric(n: usize, delta: f64) -> Result<Self> {
        Self::new(vec![delta; n])
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftSign {
    /// Classical Wright-Fisher: drift `+½(δ_i − δ_0 x_i)`.
    Wf,
    /// Negative mutation rates: drift `−½(δ_i − δ_0 x_i)`.
    Nwf,
}

impl DriftSign {
    fn factor(self) -> f64 {
        match self {
            DriftSign::Wf => 0.5,
            DriftSign::Nwf => -0.5,
        }
    }
}

/// Drift vector and diffusion matrix `a_ij = x_i(1{i=j} − x_j)` at `x`.
pub fn drift_and_diffusion(x: &SimplexState, params: &NwfParams, sign: DriftSign) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_len(x.n(), params)?;
    let xs = x.coords();
    let mut drift = vec![0.0; xs.len()];
    fill_drift(xs, params, sign, &mut drift);
    let a = xs
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            xs.iter()
                .enumerate()
                .map(|(j, xj)| xi * (if i == j { 1.0 } else { 0.0 } - xj))
                .collect()
        })
        .collect();
    Ok((drift, a))
}

pub(crate) fn fill_drift(xs: &[f64], params: &NwfParams, sign: DriftSign, out: &mut [f64]) {
    let f = sign.factor();
    for ((o, x), d) in out.iter_mut().zip(xs).zip(params.delta()) {
        *o = f * (d - params.delta0 * x);
    }
}

/// Adds `Σ_j σ̃_ij ξ_j` to `out`, where `σ̃_ij = √x_i (1{i=j} − √(x_i x_j))`
/// so that `σ̃ σ̃ᵀ = a` on the simplex.
pub(crate) fn add_factored_noise(xs: &[f64], xi: &[f64], out: &mut [f64]) {
    let proj: f64 = xs.iter().zip(xi).map(|(x, e)| x.max(0.0).sqrt() * e).sum();
    for ((o, x), e) in out.iter_mut().zip(xs).zip(xi) {
        let r = x.max(0.0).sqrt();
        *o += r * (e - r * proj);
    }
}

pub(crate) fn check_len(n: usize, params: &NwfParams) -> Result<()> {
    if n != params.n() {
        return param(format!("state has {n} coordinates but {} mutation parameters", params.n()));
    }
    Ok(())
}

/// Exit from the open simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitRecord {
    /// Exit time on the BESQ clock, when the path came from BESQ coordinates.
    pub tau_besq: Option<f64>,
    /// Exit time in the diffusion's own (internal) time.
    pub sigma0_internal: Option<f64>,
    /// Index of the vanishing coordinate.
    pub face: usize,
    /// Exit location: a simplex point with `exit_point[face] = 0`, or the
    /// unnormalised BESQ coordinates for BESQ-scale records.
    pub exit_point: Vec<f64>,
}

/// Simplex-valued path on an increasing grid of internal times.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPath {
    n: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
}

impl SimplexPath {
    pub(crate) fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            times: Vec::with_capacity(cap),
            coords: Vec::with_capacity(cap * n),
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.n);
        self.times.push(t);
        self.coords.extend_from_slice(x);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.coords[k * self.n..(k + 1) * self.n]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    /// Linear interpolation between grid states; `None` outside the grid.
    pub fn state_at(&self, u: f64) -> Option<Vec<f64>> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if !(u >= first && u <= last) {
            return None;
        }
        let k = self.times.partition_point(|s| *s <= u);
        if k == self.times.len() {
            return Some(self.state(k - 1).to_vec());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (u - t0) / (t1 - t0);
        Some(
            self.state(k - 1)
                .iter()
                .zip(self.state(k))
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut header = vec!["u".to_string()];
        header.extend((1..=self.n).map(|i| format!("x{i}")));
        let mut table = CsvTable::new(header);
        for (t, x) in self.times.iter().zip(self.states()) {
            let mut row = Vec::with_capacity(self.n + 1);
            row.push(*t);
            row.extend_from_slice(x);
            table.push(row);
        }
        table
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

/// Divides by the coordinate sum.
pub(crate) fn renormalize(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= s;
    }
}

/// Sets coordinate `face` to zero, clips the rest at zero and renormalises.
pub(crate) fn project_to_face(x: &mut [f64], face: usize) {
    x[face] = 0.0;
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    renormalize(x);
}

/// Earliest linear crossing of zero between `prev` and `next`; ties go to the
/// smallest index. Returns `(index, fraction of the step)`.
pub(crate) fn first_crossing(prev: &[f64], next: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (p, q)) in prev.iter().zip(next).enumerate() {
        if *q <= 0.0 {
            let f = if *p > 0.0 { p / (p - q) } else { 0.0 };
            if best.is_none_or(|(_, g)| f < g) {
                best = Some((i, f));
            }
        }
    }
    best
}
