//! Direct Euler–Maruyama schemes for the NWF and WF equations.

use super::{
    add_factored_noise, check_len, fill_drift, first_crossing, project_to_face, renormalize, DriftSign, ExitRecord,
    NwfParams, SimplexPath, SimplexState,
};
use crate::distributions::sample_normal;
use crate::error::{param, Error, Result};
use crate::rng::RandomStream;

/// Internal-time safety horizon for exit simulations.
pub const MAX_INTERNAL_TIME: f64 = 1e4;

fn check_start(params: &NwfParams, start: &SimplexState, step: f64) -> Result<()> {
    check_len(start.n(), params)?;
    if !start.is_interior() {
        return param("start must lie in the open simplex");
    }
    if !(step > 0.0) || !step.is_finite() {
        return param(format!("step must be positive, got {step}"));
    }
    Ok(())
}

/// Runs the NWF Euler scheme until exit. `visit(t, x)` sees each interior
/// grid state after the start and returns `false` to stop early, in which
/// case the result is `Ok(None)`.
fn nwf_drive<F>(
    params: &NwfParams,
    start: &SimplexState,
    step: f64,
    stream: &mut RandomStream,
    mut visit: F,
) -> Result<Option<ExitRecord>>
where
    F: FnMut(f64, &[f64]) -> bool,
{
    check_start(params, start, step)?;
    let n = start.n();
    let sqrt_h = step.sqrt();
    let mut x = start.coords().to_vec();
    let mut next = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut t = 0.0;
    let max_steps = (MAX_INTERNAL_TIME / step).ceil() as u64;
    for k in 1..=max_steps {
        fill_drift(&x, params, DriftSign::Nwf, &mut next);
        for (v, e) in next.iter_mut().zip(xi.iter_mut()) {
            *v *= step;
            *e = sqrt_h * sample_normal(stream);
        }
        add_factored_noise(&x, &xi, &mut next);
        for (v, x0) in next.iter_mut().zip(&x) {
            *v += x0;
        }
        if let Some((face, f)) = first_crossing(&x, &next) {
            let mut point: Vec<f64> = x.iter().zip(&next).map(|(a, b)| a + f * (b - a)).collect();
            project_to_face(&mut point, face);
            return Ok(Some(ExitRecord {
                tau_besq: None,
                sigma0_internal: Some(t + f * step),
                face,
                exit_point: point,
            }));
        }
        renormalize(&mut next);
        std::mem::swap(&mut x, &mut next);
        t = k as f64 * step;
        if !visit(t, &x) {
            return Ok(None);
        }
    }
    Err(Error::NoExit(MAX_INTERNAL_TIME))
}

/// Euler path of the NWF equation up to its exit from the open simplex. The
/// returned path ends at the interpolated exit point.
pub fn simulate_nwf_euler(
    params: &NwfParams,
    start: &SimplexState,
    step: f64,
    stream: &mut RandomStream,
) -> Result<(SimplexPath, ExitRecord)> {
    let mut path = SimplexPath::with_capacity(start.n(), 1024);
    path.push(0.0, start.coords());
    let exit = nwf_drive(params, start, step, stream, |t, x| {
        path.push(t, x);
        true
    })?
    .expect("visitor never stops");
    let sigma0 = exit.sigma0_internal.expect("set by the Euler scheme");
    if sigma0 > *path.times().last().unwrap() {
        path.push(sigma0, &exit.exit_point);
    }
    Ok((path, exit))
}

/// Exit record of an NWF Euler path without storing the path.
pub fn nwf_euler_exit(params: &NwfParams, start: &SimplexState, step: f64, stream: &mut RandomStream) -> Result<ExitRecord> {
    Ok(nwf_drive(params, start, step, stream, |_, _| true)?.expect("visitor never stops"))
}

/// State of an NWF Euler path at internal time `u` (linear interpolation
/// between grid points), or `None` if the path exits first.
pub fn nwf_euler_state_at(
    params: &NwfParams,
    start: &SimplexState,
    u: f64,
    step: f64,
    stream: &mut RandomStream,
) -> Result<Option<Vec<f64>>> {
    if !(u >= 0.0) {
        return param(format!("internal time must be nonnegative, got {u}"));
    }
    if u == 0.0 {
        return Ok(Some(start.coords().to_vec()));
    }
    let mut prev_t = 0.0;
    let mut prev = start.coords().to_vec();
    let mut found = None;
    nwf_drive(params, start, step, stream, |t, x| {
        if t >= u {
            let w = (u - prev_t) / (t - prev_t);
            found = Some(prev.iter().zip(x).map(|(a, b)| a + w * (b - a)).collect());
            false
        } else {
            prev_t = t;
            prev.copy_from_slice(x);
            true
        }
    })?;
    Ok(found)
}

/// Euler path of the classical WF equation on `[0, horizon]`. Negative
/// coordinates are reset to zero before renormalising.
pub fn simulate_wf(
    delta: &[f64],
    start: &SimplexState,
    step: f64,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<SimplexPath> {
    let params = NwfParams::new(delta.to_vec())?;
    check_len(start.n(), &params)?;
    if !(step > 0.0) || !step.is_finite() {
        return param(format!("step must be positive, got {step}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return param(format!("horizon must be positive, got {horizon}"));
    }
    let n = start.n();
    let n_steps = (horizon / step).ceil() as u64;
    let mut path = SimplexPath::with_capacity(n, n_steps as usize + 1);
    let mut x = start.coords().to_vec();
    let mut next = vec![0.0; n];
    let mut xi = vec![0.0; n];
    path.push(0.0, &x);
    let mut t_prev = 0.0;
    for k in 1..=n_steps {
        let t = if k == n_steps { horizon } else { k as f64 * step };
        let h = t - t_prev;
        fill_drift(&x, &params, DriftSign::Wf, &mut next);
        for (v, e) in next.iter_mut().zip(xi.iter_mut()) {
            *v *= h;
            *e = h.sqrt() * sample_normal(stream);
        }
        add_factored_noise(&x, &xi, &mut next);
        for (v, x0) in next.iter_mut().zip(&x) {
            *v = (*v + x0).max(0.0);
        }
        renormalize(&mut next);
        std::mem::swap(&mut x, &mut next);
        path.push(t, &x);
        t_prev = t;
    }
    Ok(path)
}
