//! NWF paths built from independent negative-dimension BESQ coordinates:
//! `Z_i(t) = ζ(t) μ_i(4C_t)` with `ζ = Σ Z_i` and `C_t = ∫_0^t ds/ζ(s)`,
//! up to the first absorption time `τ` of a coordinate.

use super::clock::ClockMap;
use super::{check_len, first_crossing, ExitRecord, NwfParams, SimplexPath, SimplexState};
use crate::distributions::sample_normal;
use crate::error::{param, Error, Result};
use crate::rng::RandomStream;

use super::euler::MAX_INTERNAL_TIME;

/// First absorption of a vector of independent BESQ coordinates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct VectorExit {
    pub tau: f64,
    pub face: usize,
    /// Coordinates at `τ`; entry `face` is exactly zero.
    pub point: Vec<f64>,
}

/// Joint Euler scheme for independent BESQ coordinates of the given
/// dimensions (all < 2, so each is absorbed at zero). `visit(t0, z0, t1, z1)`
/// sees each step, including the final partial step ending at `τ`; returning
/// `false` stops the run with `Ok(None)`.
pub(crate) fn vector_besq_drive<F>(
    dims: &[f64],
    start: &[f64],
    step: f64,
    stream: &mut RandomStream,
    mut visit: F,
) -> Result<Option<VectorExit>>
where
    F: FnMut(f64, &[f64], f64, &[f64]) -> bool,
{
    if dims.len() != start.len() || dims.is_empty() {
        return param("dimension and start vectors must be nonempty and of equal length");
    }
    if dims.iter().any(|a| !(*a < 2.0)) {
        return param("coordinates must have dimension < 2 to be absorbed");
    }
    if start.iter().any(|z| !(*z > 0.0) || !z.is_finite()) {
        return param("start coordinates must be positive");
    }
    if !(step > 0.0) || !step.is_finite() {
        return param(format!("step must be positive, got {step}"));
    }
    let sqrt_h = step.sqrt();
    let mut z = start.to_vec();
    let mut next = vec![0.0; z.len()];
    let mut t = 0.0;
    let max_steps = (MAX_INTERNAL_TIME / step).ceil() as u64;
    for k in 1..=max_steps {
        for ((v, z0), a) in next.iter_mut().zip(&z).zip(dims) {
            *v = z0 + a * step + 2.0 * z0.sqrt() * sqrt_h * sample_normal(stream);
        }
        if let Some((face, f)) = first_crossing(&z, &next) {
            let mut point: Vec<f64> = z.iter().zip(&next).map(|(a, b)| (a + f * (b - a)).max(0.0)).collect();
            point[face] = 0.0;
            let tau = t + f * step;
            visit(t, &z, tau, &point);
            return Ok(Some(VectorExit { tau, face, point }));
        }
        let t1 = k as f64 * step;
        if !visit(t, &z, t1, &next) {
            return Ok(None);
        }
        std::mem::swap(&mut z, &mut next);
        t = t1;
    }
    Err(Error::NoExit(MAX_INTERNAL_TIME))
}

fn dims_and_start(params: &NwfParams, start: &SimplexState, step: f64) -> Result<Vec<f64>> {
    check_len(start.n(), params)?;
    if !start.is_interior() {
        return param("start must lie in the open simplex");
    }
    if !(step > 0.0) {
        return param(format!("step must be positive, got {step}"));
    }
    Ok(params.delta().iter().map(|d| -2.0 * d).collect())
}

/// Skew-product NWF path in internal time on the uniform grid `k·step`
/// (plus the exit time), together with the exit record carrying both `τ`
/// and `σ_0 = 4C_τ`.
pub fn simulate_nwf_skew_product(
    params: &NwfParams,
    start: &SimplexState,
    step: f64,
    stream: &mut RandomStream,
) -> Result<(SimplexPath, ExitRecord)> {
    let dims = dims_and_start(params, start, step)?;
    let n = dims.len();
    let mut times = vec![0.0];
    let mut zs: Vec<f64> = start.coords().to_vec();
    let mut zeta = vec![start.coords().iter().sum::<f64>()];
    let exit = vector_besq_drive(&dims, start.coords(), step, stream, |_, _, t1, z1| {
        times.push(t1);
        zs.extend_from_slice(z1);
        zeta.push(z1.iter().sum());
        true
    })?
    .expect("visitor never stops");
    let clock = ClockMap::from_grid(&times, &zeta, 4.0)?;
    let sigma0 = clock.total();

    let mut path = SimplexPath::with_capacity(n, (sigma0 / step) as usize + 2);
    let mut buf = vec![0.0; n];
    let mut j = 0u64;
    loop {
        let u = j as f64 * step;
        if u >= sigma0 {
            break;
        }
        let a = clock.inverse(u)?;
        let k = times.partition_point(|s| *s <= a).clamp(1, times.len() - 1);
        let w = (a - times[k - 1]) / (times[k] - times[k - 1]);
        for (i, b) in buf.iter_mut().enumerate() {
            let (z0, z1) = (zs[(k - 1) * n + i], zs[k * n + i]);
            *b = z0 + w * (z1 - z0);
        }
        let total: f64 = buf.iter().sum();
        buf.iter_mut().for_each(|b| *b /= total);
        path.push(u, &buf);
        j += 1;
    }
    let exit_point = normalized(&exit.point);
    path.push(sigma0, &exit_point);
    Ok((
        path,
        ExitRecord {
            tau_besq: Some(exit.tau),
            sigma0_internal: Some(sigma0),
            face: exit.face,
            exit_point,
        },
    ))
}

fn normalized(z: &[f64]) -> Vec<f64> {
    let s: f64 = z.iter().sum();
    z.iter().map(|v| v / s).collect()
}

/// Exit record of the skew-product construction without storing paths.
pub fn skew_product_exit(params: &NwfParams, start: &SimplexState, step: f64, stream: &mut RandomStream) -> Result<ExitRecord> {
    let dims = dims_and_start(params, start, step)?;
    let mut clock = 0.0;
    let exit = vector_besq_drive(&dims, start.coords(), step, stream, |t0, z0, t1, z1| {
        clock += clock_increment(t0, z0, t1, z1);
        true
    })?
    .expect("visitor never stops");
    Ok(ExitRecord {
        tau_besq: Some(exit.tau),
        sigma0_internal: Some(clock),
        face: exit.face,
        exit_point: normalized(&exit.point),
    })
}

fn clock_increment(t0: f64, z0: &[f64], t1: f64, z1: &[f64]) -> f64 {
    let s0: f64 = z0.iter().sum();
    let s1: f64 = z1.iter().sum();
    2.0 * (t1 - t0) * (1.0 / s0 + 1.0 / s1)
}

/// Skew-product state at internal time `u`, or `None` if `σ_0 < u`.
pub fn skew_product_state_at(
    params: &NwfParams,
    start: &SimplexState,
    u: f64,
    step: f64,
    stream: &mut RandomStream,
) -> Result<Option<Vec<f64>>> {
    let dims = dims_and_start(params, start, step)?;
    if !(u >= 0.0) {
        return param(format!("internal time must be nonnegative, got {u}"));
    }
    if u == 0.0 {
        return Ok(Some(start.coords().to_vec()));
    }
    let mut clock = 0.0;
    let mut found = None;
    vector_besq_drive(&dims, start.coords(), step, stream, |t0, z0, t1, z1| {
        let dc = clock_increment(t0, z0, t1, z1);
        if clock + dc >= u {
            let w = (u - clock) / dc;
            let z: Vec<f64> = z0.iter().zip(z1).map(|(a, b)| a + w * (b - a)).collect();
            found = Some(normalized(&z));
            return false;
        }
        clock += dc;
        true
    })?;
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_paths_live_on_simplex() {
        let p = NwfParams::symmetric(3, 0.5).unwrap();
        let x = SimplexState::barycenter(3).unwrap();
        for i in 0..10 {
            let mut s = RandomStream::new(21, i);
            let (path, exit) = simulate_nwf_skew_product(&p, &x, 1e-3, &mut s).unwrap();
            for st in path.states() {
                assert!((st.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(st.iter().all(|v| *v >= 0.0));
            }
            assert_eq!(path.state(0), x.coords());
            assert_eq!(exit.exit_point[exit.face], 0.0);
            assert_eq!(path.times().last().copied(), exit.sigma0_internal);
            assert!(exit.tau_besq.unwrap() > 0.0);
        }
    }

    #[test]
    fn skew_product_identity_on_source_grid() {
        // Re-run the same stream: Z_i(t) / ζ(t) must equal μ_i(4 C_t).
        let p = NwfParams::new(vec![0.5, 1.0, 0.25]).unwrap();
        let x = SimplexState::new(vec![0.3, 0.3, 0.4]).unwrap();
        let step = 1e-3;
        let mut s = RandomStream::new(22, 0);
        let (path, _) = simulate_nwf_skew_product(&p, &x, step, &mut s).unwrap();
        let mut s = RandomStream::new(22, 0);
        let dims: Vec<f64> = p.delta().iter().map(|d| -2.0 * d).collect();
        let mut clock = 0.0;
        let mut worst: f64 = 0.0;
        vector_besq_drive(&dims, x.coords(), step, &mut s, |t0, z0, t1, z1| {
            clock += clock_increment(t0, z0, t1, z1);
            if let Some(mu) = path.state_at(clock) {
                let zeta: f64 = z1.iter().sum();
                for (m, z) in mu.iter().zip(z1) {
                    worst = worst.max((m - z / zeta).abs());
                }
            }
            true
        })
        .unwrap();
        // interpolation error is of the order of one Euler increment
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn state_at_matches_full_path() {
        let p = NwfParams::symmetric(3, 0.5).unwrap();
        let x = SimplexState::barycenter(3).unwrap();
        let mut s1 = RandomStream::new(23, 4);
        let mut s2 = RandomStream::new(23, 4);
        let (path, exit) = simulate_nwf_skew_product(&p, &x, 1e-3, &mut s1).unwrap();
        let u = 0.5 * exit.sigma0_internal.unwrap();
        let direct = skew_product_state_at(&p, &x, u, 1e-3, &mut s2).unwrap().unwrap();
        let from_path = path.state_at(u).unwrap();
        for (a, b) in direct.iter().zip(&from_path) {
            assert!((a - b).abs() < 2e-2, "{a} vs {b}");
        }
    }
}
