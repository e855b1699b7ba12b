//! Null calibration: run a test many times on data that satisfy its null
//! hypothesis and count how often it rejects.

use std::collections::HashMap;

use crate::cladogram::{enumerate_cladograms, sample_uniform_cladogram};
use crate::distributions::sample_gamma;
use crate::error::Result;
use crate::exit_law::sample_max_gamma;
use crate::parallel::par_paths;
use crate::rng::RandomStream;
use crate::stats::{chi_square_gof, ks_one_sample, ks_two_sample};

/// One null draw of a test's p-value, with `size` observations per sample.
type NullDraw = fn(size: usize, stream: &mut RandomStream) -> Result<f64>;

pub struct CalibrationTest {
    pub name: &'static str,
    pub summary: &'static str,
    pub default_size: usize,
    draw: NullDraw,
}

pub const CALIBRATION_TESTS: &[CalibrationTest] = &[
    CalibrationTest {
        name: "ks-two-sample",
        summary: "two-sample KS on independent Uniform(0,1) samples",
        default_size: 10_000,
        draw: ks_two_uniform,
    },
    CalibrationTest {
        name: "ks-one-sample",
        summary: "one-sample KS of Uniform(0,1) draws against the uniform CDF",
        default_size: 10_000,
        draw: ks_one_uniform,
    },
    CalibrationTest {
        name: "chi-square",
        summary: "chi-square GOF of uniform draws over 15 classes",
        default_size: 10_000,
        draw: chi_square_uniform,
    },
    CalibrationTest {
        name: "clado-uniform",
        summary: "chi-square GOF of sampled 5-leaf cladograms over the 15 topologies",
        default_size: 2_000,
        draw: clado_uniform,
    },
    CalibrationTest {
        name: "max-gamma",
        summary: "two-sample KS of the inverse-CDF maximum sampler against direct maxima of 300 Gammas",
        default_size: 1_000,
        draw: max_gamma_samplers,
    },
];

fn ks_two_uniform(size: usize, s: &mut RandomStream) -> Result<f64> {
    let a: Vec<f64> = (0..size).map(|_| s.open01()).collect();
    let b: Vec<f64> = (0..size).map(|_| s.open01()).collect();
    Ok(ks_two_sample(&a, &b)?.p_value)
}

fn ks_one_uniform(size: usize, s: &mut RandomStream) -> Result<f64> {
    let a: Vec<f64> = (0..size).map(|_| s.open01()).collect();
    Ok(ks_one_sample(&a, |x| x.clamp(0.0, 1.0))?.p_value)
}

fn chi_square_uniform(size: usize, s: &mut RandomStream) -> Result<f64> {
    let mut counts = vec![0u64; 15];
    for _ in 0..size {
        counts[s.below(15)] += 1;
    }
    Ok(chi_square_gof(&counts, &[1.0 / 15.0; 15])?.p_value)
}

fn clado_uniform(size: usize, s: &mut RandomStream) -> Result<f64> {
    let index: HashMap<_, _> = enumerate_cladograms(5)?
        .iter()
        .enumerate()
        .map(|(i, t)| (t.canonical_form(), i))
        .collect();
    let mut counts = vec![0u64; index.len()];
    for _ in 0..size {
        counts[index[&sample_uniform_cladogram(5, s)?.canonical_form()]] += 1;
    }
    Ok(chi_square_gof(&counts, &vec![1.0 / 15.0; 15])?.p_value)
}

fn max_gamma_samplers(size: usize, s: &mut RandomStream) -> Result<f64> {
    let n = 300;
    let shape = 1.5;
    let inverse: Vec<f64> = (0..size).map(|_| sample_max_gamma(n, shape, s)).collect();
    let direct = (0..size)
        .map(|_| (0..n).try_fold(0.0f64, |m, _| Ok(m.max(sample_gamma(shape, s)?))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ks_two_sample(&inverse, &direct)?.p_value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub rejections: usize,
    pub repetitions: usize,
    pub rate: f64,
    /// Binomial standard deviation of the rate under a correctly sized test.
    pub sigma: f64,
}

/// Fraction of `repetitions` null runs with `p < level`.
pub fn null_rejection_rate(
    test: &CalibrationTest,
    size: usize,
    repetitions: usize,
    level: f64,
    stream: &RandomStream,
    lane: u64,
) -> Result<Calibration> {
    let ps = par_paths(stream, lane, repetitions, |_, s| (test.draw)(size, s));
    let ps = ps.into_iter().collect::<Result<Vec<f64>>>()?;
    let rejections = ps.iter().filter(|p| **p < level).count();
    let m = repetitions as f64;
    Ok(Calibration {
        rejections,
        repetitions,
        rate: rejections as f64 / m,
        sigma: (level * (1.0 - level) / m).sqrt(),
    })
}

pub(super) fn find(name: &str) -> Option<&'static CalibrationTest> {
    CALIBRATION_TESTS.iter().find(|c| c.name == name)
}
