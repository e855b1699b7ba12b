//! Property tests for invariants that hold for every input.

use num_rational::Ratio;
use proptest::prelude::*;

use nwflab::besq::besq_transition_density;
use nwflab::cladogram::{one_step_transition_probs, sample_uniform_cladogram, Cladogram};
use nwflab::distributions::dirichlet_density;
use nwflab::exit_law::{exit_density_nwf, SeriesTruncation};
use nwflab::simplex::{nwf_euler_exit, skew_product_exit, NwfParams, SimplexState};
use nwflab::special::{gamma_cdf, gamma_quantile};
use nwflab::stats::{chi_square_gof, ks_two_sample};
use nwflab::RandomStream;

fn simplex_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_moves_keep_trees_valid(n in 4usize..14, seed in any::<u64>(), moves in 1usize..40) {
        let mut s = RandomStream::new(seed, 0);
        let mut t = sample_uniform_cladogram(n, &mut s).unwrap();
        for _ in 0..moves {
            let leaf = t.random_leaf(&mut s);
            let merged = t.remove_leaf(leaf).unwrap();
            prop_assert!(t.is_live_edge(merged));
            prop_assert_eq!(t.n_edges(), 2 * n - 5);
            let f = t.random_edge(&mut s);
            t.add_leaf(f, leaf).unwrap();
            prop_assert!(t.validate().is_empty());
        }
        let back: Cladogram = t.to_newick().parse().unwrap();
        prop_assert_eq!(back.canonical_form(), t.canonical_form());
    }

    #[test]
    fn branchpoint_masses_partition_the_leaves(n in 4usize..20, seed in any::<u64>()) {
        let mut s = RandomStream::new(seed, 1);
        let t = sample_uniform_cladogram(n, &mut s).unwrap();
        let bs = t.branchpoints();
        prop_assert_eq!(bs.len(), n - 2);
        for b in bs {
            let m = t.branchpoint_masses(b).unwrap();
            prop_assert_eq!(m.x.iter().sum::<Ratio<i64>>(), Ratio::from_integer(1));
            prop_assert!(m.counts.iter().all(|c| *c >= 1));
            prop_assert_eq!(m.counts.iter().map(|c| 2 * c - 1).sum::<usize>(), 2 * n - 3);
        }
    }

    #[test]
    fn one_step_probabilities_are_subprobabilities(n in 4i64..200, k_frac in 0.0f64..1.0) {
        let k = 1 + ((n - 3) as f64 * k_frac) as i64;
        let (q, p) = one_step_transition_probs(n, Ratio::new(k, n)).unwrap();
        prop_assert!(q >= Ratio::from_integer(0));
        prop_assert!(p >= Ratio::from_integer(0));
        prop_assert!(p + q <= Ratio::from_integer(1));
    }

    #[test]
    fn negative_dimension_density_is_reversed(theta in 0.0f64..4.0, x in 0.05f64..4.0, y in 0.05f64..4.0, t in 0.02f64..3.0) {
        let neg = besq_transition_density(-theta, x, y, t).unwrap();
        let pos = besq_transition_density(4.0 + theta, y, x, t).unwrap();
        prop_assert!(neg >= 0.0 && neg.is_finite());
        prop_assert_eq!(neg, pos);
    }

    #[test]
    fn dirichlet_density_is_permutation_invariant(a in prop::collection::vec(0.3f64..4.0, 3), x in simplex_point(3)) {
        let d = dirichlet_density(&a, &x).unwrap();
        let a2 = [a[2], a[0], a[1]];
        let x2 = [x[2], x[0], x[1]];
        let d2 = dirichlet_density(&a2, &x2).unwrap();
        prop_assert!((d - d2).abs() <= 1e-10 * d.abs().max(1.0));
    }

    #[test]
    fn exit_density_respects_relabelling(z in simplex_point(3), d in prop::collection::vec(0.0f64..1.5, 3), u in 0.05f64..0.95) {
        let trunc = SeriesTruncation::new(60, 1e-10).unwrap();
        let a = exit_density_nwf(&z, &d, 0, &[0.0, u, 1.0 - u], trunc).unwrap();
        // swap coordinates 1 and 2
        let zs = [z[0], z[2], z[1]];
        let ds = [d[0], d[2], d[1]];
        let b = exit_density_nwf(&zs, &ds, 0, &[0.0, 1.0 - u, u], trunc).unwrap();
        prop_assert!(a.value >= 0.0);
        prop_assert!((a.value - b.value).abs() <= 1e-9 * a.value.max(1e-300));
    }

    #[test]
    fn exit_records_lie_on_their_face(seed in any::<u64>(), z in simplex_point(3), delta in 0.0f64..1.0) {
        let p = NwfParams::symmetric(3, delta).unwrap();
        let start = SimplexState::new(z).unwrap();
        let mut s = RandomStream::new(seed, 2);
        for rec in [nwf_euler_exit(&p, &start, 1e-3, &mut s).unwrap(), skew_product_exit(&p, &start, 1e-3, &mut s).unwrap()] {
            prop_assert_eq!(rec.exit_point[rec.face], 0.0);
            let sum: f64 = rec.exit_point.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(rec.exit_point.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn gamma_quantile_inverts_cdf(shape in 0.2f64..20.0, p in 0.001f64..0.999) {
        let x = gamma_quantile(shape, p).unwrap();
        prop_assert!((gamma_cdf(shape, x).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn ks_statistic_is_symmetric_and_bounded(a in prop::collection::vec(-5.0f64..5.0, 1..60), b in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert!((0.0..=1.0).contains(&ab.statistic));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn merging_bins_never_raises_dof(counts in prop::collection::vec(0u64..200, 3..12)) {
        prop_assume!(counts.iter().sum::<u64>() > 40);
        let k = counts.len();
        let probs = vec![1.0 / k as f64; k];
        let Ok(full) = chi_square_gof(&counts, &probs) else { return Ok(()); };
        let mut merged_counts = counts[1..].to_vec();
        merged_counts[0] += counts[0];
        let mut merged_probs = probs[1..].to_vec();
        merged_probs[0] += probs[0];
        if let Ok(m) = chi_square_gof(&merged_counts, &merged_probs) {
            prop_assert!(m.dof <= full.dof);
        }
    }
}
