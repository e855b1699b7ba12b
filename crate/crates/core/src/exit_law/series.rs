//! Dirichlet-mixture series for the exit distribution.
//!
//! Both densities have the form `Σ_N c_N Σ_{|k|=N} Π_{j≠i} w_j(k_j)`. The
//! inner sum over compositions of `N` is the `N`-th coefficient of the
//! product of the generating series of the `w_j`, computed by log-space
//! convolution; it equals exhaustive composition enumeration term by term.

use serde::Serialize;

use crate::distributions::{xlogy, SIMPLEX_TOL};
use crate::error::{param, Error, Result};
use crate::quadrature::integrate;
use crate::special::{ln_gamma, log_add};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTruncation {
    pub max_n: usize,
    pub relative_tol: f64,
}

impl SeriesTruncation {
    pub fn new(max_n: usize, relative_tol: f64) -> Result<Self> {
        if max_n < 1 {
            return param("max_n must be at least 1");
        }
        if !(relative_tol > 0.0) {
            return param("relative tolerance must be positive");
        }
        Ok(Self { max_n, relative_tol })
    }
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            max_n: 60,
            relative_tol: 1e-10,
        }
    }
}

/// A truncated series value with its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Last summed block divided by the running total.
    pub last_block_rel: f64,
    /// Number of `N`-blocks summed (`N = 0, …, blocks_used − 1`).
    pub blocks_used: usize,
    /// Whether the last summed block fell below the relative tolerance.
    pub converged: bool,
}

/// `ln Σ_{|k|=N} Π_j exp(lw[j][k_j])` for `N = 0..=max_n`.
pub(crate) fn log_convolve(lw: &[Vec<f64>], max_n: usize) -> Vec<f64> {
    let mut acc = vec![f64::NEG_INFINITY; max_n + 1];
    acc[0] = 0.0;
    for w in lw {
        let mut next = vec![f64::NEG_INFINITY; max_n + 1];
        for (n, slot) in next.iter_mut().enumerate() {
            let mut s = f64::NEG_INFINITY;
            for k in 0..=n {
                s = log_add(s, acc[n - k] + w[k]);
            }
            *slot = s;
        }
        acc = next;
    }
    acc
}

/// Visits every composition of `total` into `parts` nonnegative integers.
pub fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for k in 0..=rest {
            buf[slot] = k;
            rec(rest - k, slot + 1, buf, f);
        }
    }
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

/// Sums blocks `exp(ln_blocks[N])` in order until a block that is smaller than
/// its predecessor falls below `relative_tol` of the running total.
fn sum_blocks(ln_blocks: impl Iterator<Item = f64>, trunc: SeriesTruncation) -> SeriesValue {
    let mut total = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut used = 0;
    let mut rel = f64::NAN;
    for (n, b) in ln_blocks.enumerate().take(trunc.max_n + 1) {
        total = log_add(total, b);
        used = n + 1;
        rel = if total == f64::NEG_INFINITY { 0.0 } else { (b - total).exp() };
        if n >= 1 && b <= prev && rel < trunc.relative_tol {
            return SeriesValue {
                value: total.exp(),
                last_block_rel: rel,
                blocks_used: used,
                converged: true,
            };
        }
        prev = b;
    }
    SeriesValue {
        value: total.exp(),
        last_block_rel: rel,
        blocks_used: used,
        converged: rel < trunc.relative_tol,
    }
}

fn check_face(n: usize, face: usize) -> Result<()> {
    if n < 2 {
        return param("exit densities need at least two coordinates");
    }
    if face >= n {
        return param(format!("face index {face} out of range for n = {n}"));
    }
    Ok(())
}

/// Density of the BESQ-scale exit point `Z(τ)` on `H_i = {y_i = 0}` with
/// respect to `(y_j, j ≠ i)`, for independent coordinates of dimensions `−θ_j`
/// started at `z`.
pub fn exit_density_besq(
    z: &[f64],
    theta: &[f64],
    face: usize,
    y: &[f64],
    trunc: SeriesTruncation,
) -> Result<SeriesValue> {
    let n = z.len();
    check_face(n, face)?;
    if theta.len() != n || y.len() != n {
        return param("z, theta and y must have equal lengths");
    }
    if z.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || theta.iter().any(|t| !(*t >= 0.0)) {
        return param("need positive z and nonnegative theta");
    }
    if y[face] != 0.0 || y.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("y must be nonnegative with y[{face}] = 0, got {y:?}")));
    }
    let nf = n as f64;
    let theta0: f64 = theta.iter().sum();
    let s: f64 = y.iter().chain(z).sum();
    let ln_s = s.ln();
    let base = (1.0 - 0.5 * theta0 - 2.0 * nf) * ln_s - ln_gamma(0.5 * theta[face] + 1.0)
        + z.iter().zip(theta).map(|(zj, t)| (0.5 * t + 1.0) * zj.ln()).sum::<f64>();
    let lw: Vec<Vec<f64>> = (0..n)
        .filter(|j| *j != face)
        .map(|j| {
            (0..=trunc.max_n)
                .map(|k| {
                    let kf = k as f64;
                    xlogy(kf, y[j] * z[j]) - ln_gamma(kf + 1.0) - ln_gamma(0.5 * theta[j] + 2.0 + kf)
                })
                .collect()
        })
        .collect();
    let conv = log_convolve(&lw, trunc.max_n);
    let blocks = conv.iter().enumerate().map(|(nn, c)| {
        let nn = nn as f64;
        base + ln_gamma(0.5 * theta0 + 2.0 * nf + 2.0 * nn - 1.0) - 2.0 * nn * ln_s + c
    });
    Ok(sum_blocks(blocks, trunc))
}

/// Density of the NWF exit point on `F_i` with respect to `(x_j, j ≠ i)`
/// (the last surviving coordinate eliminated), started from `z`:
/// `(δ_i+1) Σ_N Γ(N+n+δ_0)/Γ(N+2n+δ_0) Σ_{|k|=N} Dir_n(z; k+δ+2) Dir_{n−1}(x; k+1)`.
pub fn exit_density_nwf(
    z: &[f64],
    delta: &[f64],
    face: usize,
    x: &[f64],
    trunc: SeriesTruncation,
) -> Result<SeriesValue> {
    let n = z.len();
    check_face(n, face)?;
    if delta.len() != n || x.len() != n {
        return param("z, delta and x must have equal lengths");
    }
    if delta.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return param("mutation parameters must be nonnegative");
    }
    on_simplex(z, "z")?;
    on_simplex(x, "x")?;
    if x[face].abs() > SIMPLEX_TOL {
        return Err(Error::Domain(format!("x must lie on face {face}, got {x:?}")));
    }
    let nf = n as f64;
    let delta0: f64 = delta.iter().sum();
    // (δ_i + 1) · z_i^{δ_i+1} / Γ(δ_i + 2) · Π_{j≠i} z_j^{δ_j+1}; the remaining
    // Dirichlet normalisers Γ(N+2n+δ_0) and Γ(N+n−1) are added per block.
    let base = (delta[face] + 1.0).ln() + xlogy(delta[face] + 1.0, z[face]) - ln_gamma(delta[face] + 2.0)
        + (0..n)
            .filter(|j| *j != face)
            .map(|j| xlogy(delta[j] + 1.0, z[j]))
            .sum::<f64>();
    let lw: Vec<Vec<f64>> = (0..n)
        .filter(|j| *j != face)
        .map(|j| {
            (0..=trunc.max_n)
                .map(|k| {
                    let kf = k as f64;
                    xlogy(kf, z[j] * x[j]) - ln_gamma(kf + 1.0) - ln_gamma(kf + delta[j] + 2.0)
                })
                .collect()
        })
        .collect();
    let conv = log_convolve(&lw, trunc.max_n);
    let blocks = conv.iter().enumerate().map(|(nn, c)| {
        let nn = nn as f64;
        base + ln_gamma(nn + nf + delta0) - ln_gamma(nn + 2.0 * nf + delta0)
            + ln_gamma(nn + 2.0 * nf + delta0)
            + ln_gamma(nn + nf - 1.0)
            + c
    });
    Ok(sum_blocks(blocks, trunc))
}

fn on_simplex(v: &[f64], name: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Domain(format!("{name} must lie on the simplex, got {v:?}")));
    }
    Ok(())
}

/// Total exit mass on face `F_i` from the series: the density value itself
/// for `n = 2`, a one-dimensional integral for `n = 3`.
pub fn exit_face_mass_nwf(z: &[f64], delta: &[f64], face: usize, trunc: SeriesTruncation) -> Result<f64> {
    let n = z.len();
    check_face(n, face)?;
    match n {
        2 => {
            let mut x = vec![1.0; 2];
            x[face] = 0.0;
            Ok(exit_density_nwf(z, delta, face, &x, trunc)?.value)
        }
        3 => {
            let others: Vec<usize> = (0..3).filter(|j| *j != face).collect();
            let density = |t: f64| {
                let mut x = [0.0; 3];
                x[others[0]] = t;
                x[others[1]] = 1.0 - t;
                exit_density_nwf(z, delta, face, &x, trunc).map(|v| v.value).unwrap_or(f64::NAN)
            };
            integrate(density, 0.0, 1.0, 1e-12, 1e-10)
        }
        _ => Err(Error::Unsupported("face mass by quadrature is implemented for n ≤ 3".into())),
    }
}
