//! Exit laws from the simplex and the concentration estimates for the exit
//! time of the symmetric NWF diffusion.

mod concentration;
mod series;

use serde::Serialize;

use crate::distributions::gamma_unchecked;
use crate::error::{param, Result};
use crate::quadrature::integrate_to_infinity;
use crate::rng::RandomStream;
use crate::simplex::skew::vector_besq_drive;
use crate::special::{ln_gamma_density, reg_lower};

pub use crate::simplex::ExitRecord;
pub use concentration::{
    exit_time_interval_check, expected_sqrt_max_gamma, lk_norm_gradient, lk_norm_gradient_inequality_check,
    max_gamma_concentration_check, sample_max_gamma, ConcentrationReport, ConcentrationRow, ExitIntervalReport,
    GradientCheck, McEstimate,
};
pub use series::{
    exit_density_besq, exit_density_nwf, exit_face_mass_nwf, for_each_composition, SeriesTruncation, SeriesValue,
};

fn check_z_delta(z: &[f64], delta: &[f64]) -> Result<()> {
    if z.is_empty() || z.len() != delta.len() {
        return param("z and delta must be nonempty and of equal length");
    }
    if z.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return param(format!("starting values must be positive, got {z:?}"));
    }
    if delta.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return param(format!("mutation parameters must be nonnegative, got {delta:?}"));
    }
    Ok(())
}

/// Draws `(min_i z_i / 2G_i, argmin)` with `G_i ~ Gamma(δ_i + 1)`: the law of
/// the first absorption time of independent `BESQ(−2δ_i)` coordinates and of
/// the face they exit through.
pub fn sample_exit_time_analytic(z: &[f64], delta: &[f64], stream: &mut RandomStream) -> Result<(f64, usize)> {
    check_z_delta(z, delta)?;
    Ok(exit_time_unchecked(z, delta, stream))
}

pub(crate) fn exit_time_unchecked(z: &[f64], delta: &[f64], stream: &mut RandomStream) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, (zi, d)) in z.iter().zip(delta).enumerate() {
        let t = zi / (2.0 * gamma_unchecked(d + 1.0, stream));
        if t < best.0 {
            best = (t, i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceMethod {
    /// Direct Gamma sampling with the given number of draws.
    MonteCarlo(usize),
    /// `(z_2, z_1) / (z_1 + z_2)`; only for two coordinates with `δ = 0`.
    ClosedFormN2,
    /// One-dimensional quadrature over Gamma CDF products.
    Quadrature,
}

/// Face probabilities with, for the Monte Carlo method, binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceProbabilities {
    pub probabilities: Vec<f64>,
    pub standard_errors: Option<Vec<f64>>,
}

/// `P(exit through F_i) = P(G_i/z_i > G_j/z_j for all j ≠ i)`.
pub fn face_probability(
    z: &[f64],
    delta: &[f64],
    method: FaceMethod,
    stream: &mut RandomStream,
) -> Result<FaceProbabilities> {
    check_z_delta(z, delta)?;
    let n = z.len();
    match method {
        FaceMethod::ClosedFormN2 => {
            if n != 2 || delta.iter().any(|d| *d != 0.0) {
                return param("closed form needs n = 2 and δ = (0, 0)");
            }
            let s = z[0] + z[1];
            Ok(FaceProbabilities {
                probabilities: vec![z[1] / s, z[0] / s],
                standard_errors: None,
            })
        }
        FaceMethod::MonteCarlo(samples) => {
            if samples == 0 {
                return param("need at least one sample");
            }
            let mut counts = vec![0u64; n];
            for _ in 0..samples {
                counts[exit_time_unchecked(z, delta, stream).1] += 1;
            }
            let m = samples as f64;
            let probabilities: Vec<f64> = counts.iter().map(|c| *c as f64 / m).collect();
            let standard_errors = probabilities.iter().map(|p| (p * (1.0 - p) / m).sqrt()).collect();
            Ok(FaceProbabilities {
                probabilities,
                standard_errors: Some(standard_errors),
            })
        }
        FaceMethod::Quadrature => {
            let probabilities = (0..n)
                .map(|i| {
                    let a = delta[i] + 1.0;
                    integrate_to_infinity(
                        |g| {
                            let mut v = ln_gamma_density(a, g).exp();
                            for j in (0..n).filter(|j| *j != i) {
                                v *= reg_lower(delta[j] + 1.0, g * z[j] / z[i]);
                            }
                            v
                        },
                        0.0,
                        1e-13,
                        1e-11,
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(FaceProbabilities {
                probabilities,
                standard_errors: None,
            })
        }
    }
}

/// First absorption of independent BESQ coordinates of dimensions `−θ_i`
/// started at `z` (Euler scheme). The exit point is on the BESQ scale.
pub fn simulate_besq_exit(theta: &[f64], z: &[f64], step: f64, stream: &mut RandomStream) -> Result<ExitRecord> {
    check_z_delta(z, theta)?;
    let dims: Vec<f64> = theta.iter().map(|t| -t).collect();
    let exit = vector_besq_drive(&dims, z, step, stream, |_, _, _, _| true)?.expect("visitor never stops");
    Ok(ExitRecord {
        tau_besq: Some(exit.tau),
        sigma0_internal: None,
        face: exit.face,
        exit_point: exit.point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    #[test]
    fn single_coordinate_is_hitting_time() {
        let mut a = RandomStream::new(41, 0);
        let mut b = RandomStream::new(41, 0);
        let (t, i) = sample_exit_time_analytic(&[1.3], &[0.5], &mut a).unwrap();
        let h = crate::besq::sample_hitting_time(-1.0, 1.3, &mut b).unwrap();
        assert_eq!(i, 0);
        assert_eq!(t, h);
    }

    #[test]
    fn symmetric_exit_time_is_inverse_max() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 0);
        for _ in 0..100 {
            let (t, _) = sample_exit_time_analytic(&[1.0; 3], &[0.5; 3], &mut a).unwrap();
            let g: Vec<f64> = (0..3).map(|_| gamma_unchecked(1.5, &mut b)).collect();
            let m = g.iter().cloned().fold(0.0, f64::max);
            assert_eq!(t, 1.0 / (2.0 * m));
        }
    }

    #[test]
    fn face_probability_methods_agree() {
        let mut s = RandomStream::new(43, 0);
        let z = [1.0 / 3.0, 2.0 / 3.0];
        let exact = face_probability(&z, &[0.0, 0.0], FaceMethod::ClosedFormN2, &mut s).unwrap();
        assert!((exact.probabilities[0] - 2.0 / 3.0).abs() < 1e-15);
        let quad = face_probability(&z, &[0.0, 0.0], FaceMethod::Quadrature, &mut s).unwrap();
        assert!((quad.probabilities[0] - 2.0 / 3.0).abs() < 1e-9);
        let mc = face_probability(&z, &[0.0, 0.0], FaceMethod::MonteCarlo(200_000), &mut s).unwrap();
        let se = mc.standard_errors.as_ref().unwrap()[0];
        assert!((mc.probabilities[0] - 2.0 / 3.0).abs() < 3.0 * se);
        assert_eq!(mc.probabilities.iter().sum::<f64>(), 1.0);
        assert!(face_probability(&[0.2, 0.3, 0.5], &[0.0; 3], FaceMethod::ClosedFormN2, &mut s).is_err());
    }

    #[test]
    fn symmetric_faces_are_uniform() {
        let mut s = RandomStream::new(44, 0);
        let q = face_probability(&[0.25; 4], &[0.5; 4], FaceMethod::Quadrature, &mut s).unwrap();
        for p in q.probabilities {
            assert!((p - 0.25).abs() < 1e-9);
        }
        let q = face_probability(&[0.2, 0.3, 0.5], &[0.5, 1.0, 0.0], FaceMethod::Quadrature, &mut s).unwrap();
        assert!((q.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn besq_exit_time_matches_min_construction() {
        let z = [0.5, 1.0, 1.5];
        let theta = [1.0, 1.0, 2.0];
        let sim: Vec<f64> = (0..3000)
            .map(|i| {
                let mut s = RandomStream::new(45, i);
                simulate_besq_exit(&theta, &z, 1e-3, &mut s).unwrap().tau_besq.unwrap()
            })
            .collect();
        let mut s = RandomStream::new(46, 0);
        let delta: Vec<f64> = theta.iter().map(|t| t / 2.0).collect();
        let exact: Vec<f64> = (0..3000)
            .map(|_| sample_exit_time_analytic(&z, &delta, &mut s).unwrap().0)
            .collect();
        assert!(ks_two_sample(&sim, &exact).unwrap().p_value > 0.01);
    }
}
