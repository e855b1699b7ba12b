//! Forward construction of a Wright-Fisher path whose support grows one
//! coordinate at a time.
//!
//! With `R_i = z_i / 2G_i`, `G_i ~ Gamma(δ_i + 1)`, sort the radii in
//! decreasing order `R_{π_1} ≥ R_{π_2} ≥ …` and let `R* = R_{π_2}`. Each
//! coordinate is an independent `BESQ(4 + 2δ_i)` path `Y_i` from 0, started
//! at source time `R* − R_i`, i.e. `X_i(t) = Y_i((t − R* + R_i)^+)` on
//! `[0, R*]`. With `S = Σ X_i`, the normalised process `ν = X / S` run on the
//! clock `4∫ ds/S` is the WF path.

use super::clock::ClockMap;
use super::SimplexPath;
use crate::besq::{transition_unchecked, ScalarPath};
use crate::distributions::gamma_unchecked;
use crate::error::{param, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct IncreasingDimensionRecord {
    /// Sampled radii `R_i`, by coordinate.
    pub radii: Vec<f64>,
    /// Coordinates by decreasing radius: `order[0]` is `π_1`.
    pub order: Vec<usize>,
    /// `R* = R_{π_2}`, the length of the source interval.
    pub r_star: f64,
    /// Internal times `V_k = 4C_{R* − R_{π_k}}` at which coordinate `π_k`
    /// enters, for `k = 2, …, n` (so the first entry is 0).
    pub insertion_times: Vec<f64>,
    /// `S = Σ X_i` on the source grid.
    pub s: ScalarPath,
    /// `ν` on a uniform internal-time grid ending at `4C_{R*}`.
    pub nu: SimplexPath,
    /// The staggered coordinates `X_i` on the source grid.
    pub x: Vec<ScalarPath>,
}

pub fn simulate_increasing_dimension_wf(
    delta: &[f64],
    z: &[f64],
    step: f64,
    stream: &mut RandomStream,
) -> Result<IncreasingDimensionRecord> {
    let n = delta.len();
    if n < 2 || z.len() != n {
        return param("need n ≥ 2 mutation parameters and starting values of equal length");
    }
    if delta.iter().any(|d| !(*d >= 0.0)) {
        return param("mutation parameters must be nonnegative");
    }
    if z.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return param("starting values must be positive");
    }
    if !(step > 0.0) || !step.is_finite() {
        return param(format!("step must be positive, got {step}"));
    }
    let radii: Vec<f64> = delta
        .iter()
        .zip(z)
        .map(|(d, zi)| zi / (2.0 * gamma_unchecked(d + 1.0, stream)))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));
    let r_star = radii[order[1]];
    let entry: Vec<f64> = radii.iter().map(|r| r_star - r).collect();

    let mut grid: Vec<f64> = (0..)
        .map(|k| k as f64 * step)
        .take_while(|t| *t < r_star)
        .collect();
    grid.extend(entry.iter().copied().filter(|e| *e >= 0.0));
    grid.push(r_star);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let dim = 4.0 + 2.0 * delta[i];
        let mut y = 0.0;
        let mut last_s = 0.0;
        let vals: Vec<f64> = grid
            .iter()
            .map(|t| {
                let s = t - entry[i];
                if s <= 0.0 {
                    return 0.0;
                }
                y = transition_unchecked(dim, y, s - last_s, stream);
                last_s = s;
                y
            })
            .collect();
        xs.push(vals);
    }
    let s_vals: Vec<f64> = (0..grid.len()).map(|k| xs.iter().map(|x| x[k]).sum()).collect();
    let clock = ClockMap::from_grid(&grid, &s_vals, 4.0)?;
    let insertion_times = order[1..]
        .iter()
        .map(|&i| clock.clock_at(entry[i]))
        .collect::<Result<Vec<f64>>>()?;

    let total = clock.total();
    let mut nu = SimplexPath::with_capacity(n, (total / step) as usize + 2);
    let mut buf = vec![0.0; n];
    let mut j = 0u64;
    loop {
        let u = (j as f64 * step).min(total);
        let a = clock.inverse(u)?;
        let k = grid.partition_point(|s| *s <= a).clamp(1, grid.len() - 1);
        let w = (a - grid[k - 1]) / (grid[k] - grid[k - 1]);
        for (b, x) in buf.iter_mut().zip(&xs) {
            *b = x[k - 1] + w * (x[k] - x[k - 1]);
        }
        let sum: f64 = buf.iter().sum();
        buf.iter_mut().for_each(|b| *b /= sum);
        nu.push(u, &buf);
        if u >= total {
            break;
        }
        j += 1;
    }

    let x = xs
        .into_iter()
        .map(|v| ScalarPath::from_parts(grid.clone(), v, None, 0))
        .collect();
    Ok(IncreasingDimensionRecord {
        radii,
        order,
        r_star,
        insertion_times,
        s: ScalarPath::from_parts(grid, s_vals, None, 0),
        nu,
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_vertex_and_stays_on_simplex() {
        let delta = [0.5, 1.0, 0.25, 0.5];
        let z = [0.2, 0.3, 0.1, 0.4];
        for i in 0..20 {
            let mut s = RandomStream::new(31, i);
            let rec = simulate_increasing_dimension_wf(&delta, &z, 1e-3, &mut s).unwrap();
            let first = rec.nu.state(0);
            for (c, v) in first.iter().enumerate() {
                assert_eq!(*v, if c == rec.order[0] { 1.0 } else { 0.0 });
            }
            for st in rec.nu.states() {
                assert!((st.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            assert_eq!(rec.insertion_times[0], 0.0);
            assert!(rec.insertion_times.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(rec.r_star, rec.radii[rec.order[1]]);
            // X_i(R*) = Y_i(R_i); coordinates enter in radius order
            for (k, &i) in rec.order.iter().enumerate().skip(1) {
                let entry = rec.r_star - rec.radii[i];
                assert_eq!(rec.x[i].value_at(entry).unwrap(), 0.0, "rank {k}");
            }
            assert!(rec.s.values().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = RandomStream::new(32, 0);
        assert!(simulate_increasing_dimension_wf(&[0.5], &[1.0], 1e-3, &mut s).is_err());
        assert!(simulate_increasing_dimension_wf(&[0.5, 0.5], &[1.0, 0.0], 1e-3, &mut s).is_err());
    }
}
