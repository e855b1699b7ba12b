//! Samplers and densities shared by the simulators.
//!
//! Every sampler takes its randomness from an explicit [`RandomStream`]; there
//! is no global generator. Gamma variables use the unit-rate convention
//! throughout: `Gamma(a)` has density `y^(a-1) e^(-y) / Γ(a)`.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{domain, param, Result};
use crate::rng::RandomStream;
pub use crate::special::{gamma_cdf, gamma_sf, log_gamma};
use crate::special::ln_gamma;

/// Tolerance on the coordinate sum for points handed to [`dirichlet_density`].
pub const SIMPLEX_TOL: f64 = 1e-9;

pub fn sample_normal(stream: &mut RandomStream) -> f64 {
    stream.sample(StandardNormal)
}

/// Draw from unit-rate Gamma(shape).
pub fn sample_gamma(shape: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return param(format!("gamma shape must be positive, got {shape}"));
    }
    Ok(gamma_unchecked(shape, stream))
}

/// Marsaglia-Tsang squeeze/rejection; shapes below one are boosted through
/// Gamma(a) = Gamma(a + 1) * U^(1/a).
pub(crate) fn gamma_unchecked(shape: f64, stream: &mut RandomStream) -> f64 {
    if shape < 1.0 {
        let g = gamma_unchecked(shape + 1.0, stream);
        return g * stream.open01().powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_normal(stream);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = stream.open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

pub fn sample_poisson(mean: f64, stream: &mut RandomStream) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return param(format!("poisson mean must be finite and nonnegative, got {mean}"));
    }
    Ok(poisson_unchecked(mean, stream))
}

pub(crate) fn poisson_unchecked(mean: f64, stream: &mut RandomStream) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("validated poisson mean");
    dist.sample(stream) as u64
}

/// Noncentral chi-square: a Poisson(ncp/2) mixture of central chi-squares.
pub fn sample_noncentral_chisq(dof: f64, noncentrality: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(dof > 0.0) || !dof.is_finite() {
        return param(format!("degrees of freedom must be positive, got {dof}"));
    }
    if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
        return param(format!("noncentrality must be nonnegative, got {noncentrality}"));
    }
    Ok(noncentral_chisq_unchecked(dof, noncentrality, stream))
}

pub(crate) fn noncentral_chisq_unchecked(dof: f64, ncp: f64, stream: &mut RandomStream) -> f64 {
    let n = poisson_unchecked(0.5 * ncp, stream);
    2.0 * gamma_unchecked(0.5 * dof + n as f64, stream)
}

/// Dirichlet(alpha) density of `x` with respect to Lebesgue measure on the
/// first `m - 1` coordinates (the last one is determined by the others).
///
/// For `m = 1` the simplex is a single point and the density is 1.
pub fn dirichlet_density(alpha: &[f64], x: &[f64]) -> Result<f64> {
    Ok(ln_dirichlet_density(alpha, x)?.exp())
}

pub fn ln_dirichlet_density(alpha: &[f64], x: &[f64]) -> Result<f64> {
    if alpha.is_empty() || alpha.len() != x.len() {
        return param("alpha and x must be nonempty and of equal length");
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return param(format!("dirichlet parameters must be positive, got {a}"));
    }
    let sum: f64 = x.iter().sum();
    if x.iter().any(|v| *v < -SIMPLEX_TOL || !v.is_finite()) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return domain(format!("point is not on the simplex (sum {sum})"));
    }
    Ok(ln_dirichlet_unchecked(alpha, x))
}

pub(crate) fn ln_dirichlet_unchecked(alpha: &[f64], x: &[f64]) -> f64 {
    if alpha.len() == 1 {
        return 0.0;
    }
    let total: f64 = alpha.iter().sum();
    let mut acc = ln_gamma(total);
    for (&a, &xi) in alpha.iter().zip(x) {
        acc -= ln_gamma(a);
        acc += xlogy(a - 1.0, xi.max(0.0));
    }
    acc
}

/// `a * ln(y)` with the convention 0 * ln 0 = 0.
pub(crate) fn xlogy(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if y == 0.0 {
        if a > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        a * y.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    /// Standard error of the sample variance from the fourth central moment.
    fn var_se(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let (mean, var) = moments(xs);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        ((m4 - var * var) / n).sqrt()
    }

    #[test]
    fn gamma_one_has_unit_mean() {
        let mut s = RandomStream::new(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(1.0, &mut s).unwrap()).collect();
        let (mean, _) = moments(&xs);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn gamma_moments_match_shape() {
        for (k, shape) in [0.3, 1.5, 2.5, 7.0].into_iter().enumerate() {
            let mut s = RandomStream::new(12, k as u64);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(shape, &mut s).unwrap()).collect();
            let (mean, var) = moments(&xs);
            let se_mean = (shape / xs.len() as f64).sqrt();
            assert!((mean - shape).abs() < 3.0 * se_mean, "shape {shape}: mean {mean}");
            assert!((var - shape).abs() < 3.0 * var_se(&xs), "shape {shape}: var {var}");
        }
    }

    #[test]
    fn gamma_rejects_bad_shape() {
        let mut s = RandomStream::new(0, 0);
        assert!(matches!(sample_gamma(0.0, &mut s), Err(crate::Error::Parameter(_))));
        assert!(sample_gamma(-2.0, &mut s).is_err());
    }

    #[test]
    fn poisson_moments_and_zero_mass() {
        let mut s = RandomStream::new(13, 0);
        assert!((0..1000).all(|_| sample_poisson(0.0, &mut s).unwrap() == 0));
        let xs: Vec<f64> = (0..100_000).map(|_| sample_poisson(4.0, &mut s).unwrap() as f64).collect();
        let (mean, var) = moments(&xs);
        assert!((mean - 4.0).abs() < 3.0 * (4.0 / 1e5f64).sqrt());
        assert!((var - 4.0).abs() < 3.0 * var_se(&xs));

        let zeros = (0..100_000).filter(|_| sample_poisson(0.5, &mut s).unwrap() == 0).count();
        let p0 = (-0.5f64).exp();
        let freq = zeros as f64 / 1e5;
        assert!((freq - p0).abs() < 3.0 * (p0 * (1.0 - p0) / 1e5).sqrt());
        assert!(sample_poisson(-1.0, &mut s).is_err());
    }

    #[test]
    fn noncentral_chisq_moments() {
        let grid = [(3.0, 2.0), (1.0, 0.0), (4.5, 10.0), (0.7, 0.3)];
        for (k, (dof, ncp)) in grid.into_iter().enumerate() {
            let mut s = RandomStream::new(14, k as u64);
            let xs: Vec<f64> = (0..100_000)
                .map(|_| sample_noncentral_chisq(dof, ncp, &mut s).unwrap())
                .collect();
            let (mean, var) = moments(&xs);
            let want_var = 2.0 * dof + 4.0 * ncp;
            assert!((mean - (dof + ncp)).abs() < 3.0 * (want_var / 1e5).sqrt(), "({dof},{ncp}) mean {mean}");
            assert!((var - want_var).abs() < 3.0 * var_se(&xs), "({dof},{ncp}) var {var}");
        }
        let mut s = RandomStream::new(0, 0);
        assert!(sample_noncentral_chisq(0.0, 1.0, &mut s).is_err());
        assert!(sample_noncentral_chisq(1.0, -1.0, &mut s).is_err());
    }

    #[test]
    fn dirichlet_density_closed_forms() {
        let d = dirichlet_density(&[1.0, 1.0, 1.0], &[0.2, 0.3, 0.5]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let b = dirichlet_density(&[2.0, 2.0], &[0.5, 0.5]).unwrap();
        assert!((b - 1.5).abs() < 1e-12);
        assert_eq!(dirichlet_density(&[3.0], &[1.0]).unwrap(), 1.0);
        // boundary conventions
        assert_eq!(dirichlet_density(&[2.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((dirichlet_density(&[1.0, 2.0], &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_density_rejects_off_simplex() {
        assert!(matches!(
            dirichlet_density(&[1.0, 1.0], &[0.5, 0.6]),
            Err(crate::Error::Domain(_))
        ));
        assert!(dirichlet_density(&[1.0, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn dirichlet_density_integrates_to_one() {
        // Importance sampling with uniform proposals on the 2-simplex.
        for (k, alpha) in [[1.0, 1.0, 1.0], [2.5, 1.3, 3.0], [1.7, 4.2, 2.2]].iter().enumerate() {
            let mut s = RandomStream::new(15, k as u64);
            let n = 200_000;
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                let e: Vec<f64> = (0..3).map(|_| -s.open01().ln()).collect();
                let t: f64 = e.iter().sum();
                let x: Vec<f64> = e.iter().map(|v| v / t).collect();
                // uniform density on the simplex is 2
                vals.push(dirichlet_density(alpha, &x).unwrap() / 2.0);
            }
            let (mean, var) = moments(&vals);
            let se = (var / n as f64).sqrt();
            assert!((mean - 1.0).abs() < 3.0 * se + 1e-12, "alpha {alpha:?}: {mean} ± {se}");
        }
    }
}
