//! Goodness-of-fit statistics used by the verification runners.

use serde::Serialize;

use crate::error::{param, Result};
use crate::special::reg_upper;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Classical two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return param("ks_two_sample needs two nonempty samples");
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return param("ks_two_sample: NaN in sample");
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    })
}

/// One-sample KS test of `a` against the continuous CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<KsResult> {
    if a.is_empty() {
        return param("ks_one_sample needs a nonempty sample");
    }
    let mut xs = a.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - k as f64 / n).max((k + 1) as f64 / n - f);
    }
    let en = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form of the CDF converges fast for small arguments.
        let l2 = lambda * lambda;
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            cdf += (-odd * odd * pi2 / (8.0 * l2)).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of bins left after merging low-expectation neighbours.
    pub bins: usize,
}

/// Smallest expected count a bin may carry before it is merged into a neighbour.
pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson chi-square goodness-of-fit test.
///
/// Adjacent bins are merged left to right until every merged bin expects at
/// least [`MIN_EXPECTED`] observations; a short trailing group is folded into
/// its predecessor.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected_probs.len() || observed.is_empty() {
        return param("observed and expected must be nonempty and of equal length");
    }
    if expected_probs.iter().any(|p| !(*p >= 0.0)) {
        return param("expected probabilities must be nonnegative");
    }
    let total_p: f64 = expected_probs.iter().sum();
    if (total_p - 1.0).abs() > 1e-6 {
        return param(format!("expected probabilities sum to {total_p}, not 1"));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return param("no observations");
    }
    let nf = n as f64;

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        e_acc += p * nf;
        o_acc += o as f64;
        if e_acc >= MIN_EXPECTED {
            merged.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => merged.push((o_acc, e_acc)),
        }
    }
    if merged.len() < 2 {
        return param("binning is degenerate: fewer than two bins with enough expected mass");
    }
    let statistic: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof as f64),
        bins: merged.len(),
    })
}

pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    reg_upper(0.5 * dof, 0.5 * x.max(0.0))
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Histogram counts of `xs` over consecutive bins given by sorted `edges`.
/// Values outside `[edges[0], edges[last]]` are dropped.
pub fn histogram(xs: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    for &x in xs {
        if x < edges[0] || x > edges[edges.len() - 1] {
            continue;
        }
        let k = edges.partition_point(|e| *e <= x).clamp(1, edges.len() - 1) - 1;
        counts[k] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn identical_samples_give_zero_statistic() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_uniforms_are_rejected() {
        let mut s = RandomStream::new(3, 0);
        let a: Vec<f64> = (0..1000).map(|_| s.open01()).collect();
        let b: Vec<f64> = (0..1000).map(|_| s.open01() + 0.5).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-10);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(ks_two_sample(&[], &[1.0]).is_err());
        assert!(ks_one_sample(&[], |x| x).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let a = kolmogorov_sf(1.18 - 1e-12);
        let b = kolmogorov_sf(1.18 + 1e-12);
        assert!((a - b).abs() < 1e-9);
        // classical 5% critical value
        assert!((kolmogorov_sf(1.358_1) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn proportional_counts_give_zero_chi_square() {
        let r = chi_square_gof(&[10, 20, 30, 40], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.dof, 3);
    }

    #[test]
    fn merging_never_raises_dof() {
        let probs = [0.001, 0.002, 0.3, 0.3, 0.397];
        let obs = [0, 1, 30, 31, 38];
        let merged = chi_square_gof(&obs, &probs).unwrap();
        assert!(merged.dof <= probs.len() - 1);
        // coarser binning of the same data
        let coarse = chi_square_gof(&[1, 30, 69], &[0.003, 0.3, 0.697]).unwrap();
        assert!(coarse.dof <= merged.dof);
    }

    #[test]
    fn degenerate_binning_is_rejected() {
        assert!(chi_square_gof(&[3, 4], &[0.5, 0.5]).is_err());
        assert!(chi_square_gof(&[3, 4], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn chi_square_sf_reference() {
        // P(chi2_2 > x) = exp(-x/2)
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn histogram_bins() {
        let c = histogram(&[0.0, 0.1, 0.5, 0.99, 1.0, 1.5], &[0.0, 0.5, 1.0]);
        assert_eq!(c, vec![2, 3]);
    }
}
