//! Exact one-step moments of a branchpoint's leaf proportion under the chain.

use num_rational::Ratio;
use super::{Cladogram, Label, NodeId};
use crate::error::{param, Error, Result};

type Q = Ratio<i64>;

/// Probabilities `(q, p)` that the tracked proportion `x1` moves by `−1/n`
/// and `+1/n` in one step of the chain:
///
/// q = x1 (2n(1 − x1) − 2) / (2n − 5),  p = (1 − x1)(2n x1 − 1) / (2n − 5).
pub fn one_step_transition_probs(n: i64, x1: Q) -> Result<(Q, Q)> {
    if n < 4 {
        return param(format!("n must be at least 4, got {n}"));
    }
    let k = x1 * n;
    if !k.is_integer() || k.to_integer() < 1 || k.to_integer() > n - 2 {
        return param(format!("x1 = {x1} is not in {{1/n, ..., (n-2)/n}}"));
    }
    let one = Q::from_integer(1);
    let two_n = Q::from_integer(2 * n);
    let denom = Q::from_integer(2 * n - 5);
    let q = x1 * (two_n * (one - x1) - 2) / denom;
    let p = (one - x1) * (two_n * x1 - 1) / denom;
    Ok((q, p))
}

/// Exhaustive oracle for [`one_step_transition_probs`]: applies all
/// `n(2n − 5)` equally likely (leaf, edge) moves to a copy of `tree` and
/// counts how the size of set `set_index` of `b` changes.
///
/// Every set of `b` must hold at least 2 leaves. Otherwise some move deletes
/// `b` and the displacement is undefined, so an unsupported error is returned.
pub fn one_step_moment_enumeration(tree: &Cladogram, b: NodeId, set_index: usize) -> Result<(Q, Q)> {
    if set_index > 2 {
        return param("set index must be 0, 1 or 2");
    }
    let masses = tree.branchpoint_masses(b)?;
    if masses.counts[set_index] < 2 {
        return Err(Error::Unsupported(format!(
            "tracked set has {} leaf; moving it can destroy the branchpoint",
            masses.counts[set_index]
        )));
    }
    if masses.counts.iter().any(|c| *c < 2) {
        return Err(Error::Unsupported(
            "a set of size 1 leaves the branchpoint exposed to removal".into(),
        ));
    }
    let tracked: &[Label] = &masses.sets[set_index];
    let old = tracked.len() as i64;
    let n = tree.n_leaves() as i64;
    let (mut down, mut up) = (0i64, 0i64);
    for &leaf in tree.leaves() {
        let mut reduced = tree.clone();
        reduced.remove_leaf(leaf)?;
        let anchor = *tracked.iter().find(|l| **l != leaf).expect("tracked set has ≥ 2 leaves");
        for &f in reduced.edges() {
            let mut t = reduced.clone();
            t.add_leaf(f, leaf)?;
            let m = t.branchpoint_masses(b)?;
            let j = (0..3)
                .find(|&j| m.sets[j].binary_search(&anchor).is_ok())
                .expect("anchor leaf lies in some set");
            match m.counts[j] as i64 - old {
                -1 => down += 1,
                1 => up += 1,
                0 => {}
                d => unreachable!("one move cannot change a set by {d}"),
            }
        }
    }
    let total = n * (2 * n - 5);
    Ok((Q::new(down, total), Q::new(up, total)))
}

/// Pre-limit moments of the chain run at speed `n²/2`: the drift
/// `(n²/2) E[ΔX1]` and second moment `(n²/2) E[(ΔX1)²]`, as exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaledMoments {
    pub drift: Q,
    pub second: Q,
}

pub fn scaled_moments(n: i64, x1: Q) -> Result<ScaledMoments> {
    let (q, p) = one_step_transition_probs(n, x1)?;
    let step = Q::new(1, n);
    let speed = Q::new(n * n, 2);
    Ok(ScaledMoments {
        drift: speed * (p - q) * step,
        second: speed * (p + q) * step * step,
    })
}

/// Diffusion limit of [`scaled_moments`]: drift `−(1/4)(1 − 3x)` and
/// second moment `x(1 − x)`.
pub fn limit_moments(x1: f64) -> (f64, f64) {
    (-0.25 * (1.0 - 3.0 * x1), x1 * (1.0 - x1))
}

#[cfg(test)]
mod tests {
    use super::super::tests::seven_leaf_tree;
    use super::super::sample_uniform_cladogram;
    use super::*;
    use crate::rng::RandomStream;

    fn r(a: i64, b: i64) -> Q {
        Q::new(a, b)
    }

    #[test]
    fn seven_leaf_values() {
        let (q, p) = one_step_transition_probs(7, r(3, 7)).unwrap();
        assert_eq!((q, p), (r(2, 7), r(20, 63)));
    }

    #[test]
    fn sum_and_difference_identities() {
        for n in 4..40 {
            for k in 1..=n - 2 {
                let x = r(k, n);
                let (q, p) = one_step_transition_probs(n, x).unwrap();
                let d = Q::from_integer(2 * n - 5);
                assert_eq!(p - q, (x * 3 - 1) / d);
                assert_eq!(p + q, (x * (Q::from_integer(1) - x) * (4 * n) - x - 1) / d);
                assert!(p + q <= Q::from_integer(1));
                assert!(q >= Q::from_integer(0) && p >= Q::from_integer(0));
            }
        }
    }

    #[test]
    fn out_of_lattice_rejected() {
        assert!(one_step_transition_probs(7, r(1, 2)).is_err());
        assert!(one_step_transition_probs(7, r(6, 7)).is_err());
        assert!(one_step_transition_probs(3, r(1, 3)).is_err());
    }

    #[test]
    fn seven_leaf_tree_enumeration() {
        let (t, b) = seven_leaf_tree();
        let m = t.branchpoint_masses(b).unwrap();
        assert_eq!(m.counts, [3, 2, 2]);
        assert_eq!(one_step_moment_enumeration(&t, b, 0).unwrap(), (r(2, 7), r(20, 63)));
        for j in 1..3 {
            let (q, p) = one_step_moment_enumeration(&t, b, j).unwrap();
            assert_eq!((q, p), one_step_transition_probs(7, r(2, 7)).unwrap());
        }
    }

    #[test]
    fn singleton_sets_unsupported() {
        let mut s = RandomStream::new(81, 0);
        let t = sample_uniform_cladogram(9, &mut s).unwrap();
        let mut seen = false;
        for b in t.branchpoints() {
            let m = t.branchpoint_masses(b).unwrap();
            for j in 0..3 {
                let res = one_step_moment_enumeration(&t, b, j);
                if m.counts.iter().any(|c| *c < 2) {
                    seen = true;
                    assert!(matches!(res, Err(Error::Unsupported(_))));
                }
            }
        }
        assert!(seen);
    }

    #[test]
    fn enumeration_matches_formula_on_random_trees() {
        let mut s = RandomStream::new(82, 0);
        for n in 7..=10usize {
            for _ in 0..5 {
                let t = sample_uniform_cladogram(n, &mut s).unwrap();
                for b in t.branchpoints() {
                    let m = t.branchpoint_masses(b).unwrap();
                    if m.counts.iter().any(|c| *c < 2) {
                        continue;
                    }
                    for j in 0..3 {
                        let got = one_step_moment_enumeration(&t, b, j).unwrap();
                        assert_eq!(got, one_step_transition_probs(n as i64, m.x[j]).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn scaled_moments_converge() {
        let x = 0.3;
        let (d_lim, s_lim) = limit_moments(x);
        for (n, tol) in [(100i64, 0.10), (1000, 0.01)] {
            let m = scaled_moments(n, r(3 * n / 10, n)).unwrap();
            let drift = *m.drift.numer() as f64 / *m.drift.denom() as f64;
            let second = *m.second.numer() as f64 / *m.second.denom() as f64;
            // drift error is exactly 5/(2n − 5)
            assert!(((drift - d_lim) / d_lim).abs() <= tol);
            assert!((((drift - d_lim) / d_lim).abs() - 5.0 / (2 * n - 5) as f64).abs() < 1e-12);
            assert!(((second - s_lim) / s_lim).abs() <= tol);
        }
    }
}
