//! The Aldous chain, its Poissonized variant, and branchpoint tracking.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use super::{Cladogram, EdgeId, Label, NodeId};
use crate::error::{param, Result};
use crate::rng::RandomStream;
use crate::textio::fmt_num;

/// One remove-and-reattach move: a uniform leaf is removed and reattached to
/// a uniform edge of the reduced tree. Returns the moved leaf and the edge.
pub fn aldous_chain_step(tree: &mut Cladogram, stream: &mut RandomStream) -> Result<(Label, EdgeId)> {
    if tree.n_leaves() < 3 {
        return param("the chain needs at least 3 leaves");
    }
    let leaf = tree.random_leaf(stream);
    tree.remove_leaf(leaf)?;
    let f = tree.random_edge(stream);
    tree.add_leaf(f, leaf)?;
    Ok((leaf, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainEvent {
    /// A leaf died; its branchpoint was removed and the two edges merged.
    Death { label: Label },
    /// An edge split and a newborn leaf with a fresh label attached.
    Birth { label: Label },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonStep {
    pub elapsed: f64,
    pub event: ChainEvent,
    /// True when the tree now has fewer than 4 leaves.
    pub below_domain: bool,
}

/// One event of the continuous-time chain: each leaf dies at rate 2 and each
/// edge sprouts a new leaf at rate 1. Below 4 leaves deaths are switched off,
/// so a 3-leaf tree can only grow.
pub fn poissonized_chain_step(tree: &mut Cladogram, stream: &mut RandomStream) -> Result<PoissonStep> {
    let n = tree.n_leaves();
    if n < 3 {
        return param("the chain needs at least 3 leaves");
    }
    let death_rate = if n >= 4 { 2.0 * n as f64 } else { 0.0 };
    let birth_rate = tree.n_edges() as f64;
    let total = death_rate + birth_rate;
    let elapsed = -stream.open01().ln() / total;
    let event = if stream.open01() * total < death_rate {
        let label = tree.random_leaf(stream);
        tree.remove_leaf(label)?;
        ChainEvent::Death { label }
    } else {
        let label = tree.fresh_label();
        let f = tree.random_edge(stream);
        tree.add_leaf(f, label)?;
        ChainEvent::Birth { label }
    };
    Ok(PoissonStep {
        elapsed,
        event,
        below_domain: tree.n_leaves() < 4,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackRow {
    pub step: usize,
    /// `start`, `move`, `birth`, `death` or `exit`.
    pub event: &'static str,
    pub n_leaves: usize,
    pub x: [f64; 3],
    /// Continuous time, for Poissonized runs.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedRun {
    pub rows: Vec<TrackRow>,
    /// Step at which the tracked branchpoint disappeared.
    pub exit_step: Option<usize>,
}

impl TrackedRun {
    /// CSV with header `step,event,n_leaves,x1,x2,x3`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,event,n_leaves,x1,x2,x3\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.step,
                r.event,
                r.n_leaves,
                fmt_num(r.x[0]),
                fmt_num(r.x[1]),
                fmt_num(r.x[2])
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Leaf sets around `b`, ordered so that set `j` overlaps `reference[j]`.
fn reorder_sets(tree: &Cladogram, b: NodeId, reference: &[Vec<Label>; 3]) -> Option<[Vec<Label>; 3]> {
    let m = tree.branchpoint_masses(b).ok()?;
    let mut out: [Vec<Label>; 3] = Default::default();
    let mut used = [false; 3];
    for (j, r) in reference.iter().enumerate() {
        let k = (0..3).find(|&k| !used[k] && m.sets[k].iter().any(|l| r.binary_search(l).is_ok()))?;
        used[k] = true;
        out[j] = m.sets[k].clone();
    }
    Some(out)
}

fn proportions(sets: &[Vec<Label>; 3], n: usize) -> [f64; 3] {
    sets.clone().map(|s| s.len() as f64 / n as f64)
}

/// Runs `steps` events and follows the leaf masses of branchpoint `b`. The
/// run stops early when `b` is destroyed, which happens exactly when the only
/// leaf of one of its sets is removed.
pub fn run_tracked_chain(
    tree: &mut Cladogram,
    b: NodeId,
    steps: usize,
    poissonized: bool,
    stream: &mut RandomStream,
) -> Result<TrackedRun> {
    let mut sets = tree.branchpoint_masses(b)?.sets;
    let mut rows = vec![TrackRow {
        step: 0,
        event: "start",
        n_leaves: tree.n_leaves(),
        x: proportions(&sets, tree.n_leaves()),
        time: 0.0,
    }];
    let mut time = 0.0;
    for step in 1..=steps {
        // a singleton set whose leaf is about to leave takes b with it
        let singleton_of_b = |tree: &Cladogram, l: Label| {
            let v = tree.leaf_node(l).expect("live leaf");
            tree.neighbors(v).next() == Some(b)
        };
        let event;
        if poissonized {
            let n = tree.n_leaves();
            let death_rate = if n >= 4 { 2.0 * n as f64 } else { 0.0 };
            let total = death_rate + tree.n_edges() as f64;
            time += -stream.open01().ln() / total;
            if stream.open01() * total < death_rate {
                let l = tree.random_leaf(stream);
                if singleton_of_b(tree, l) {
                    tree.remove_leaf(l)?;
                    rows.push(exit_row(step, tree.n_leaves(), &sets, l, time));
                    return Ok(TrackedRun {
                        rows,
                        exit_step: Some(step),
                    });
                }
                tree.remove_leaf(l)?;
                event = "death";
            } else {
                let l = tree.fresh_label();
                let f = tree.random_edge(stream);
                tree.add_leaf(f, l)?;
                event = "birth";
            }
        } else {
            let l = tree.random_leaf(stream);
            if singleton_of_b(tree, l) {
                tree.remove_leaf(l)?;
                let f = tree.random_edge(stream);
                tree.add_leaf(f, l)?;
                rows.push(exit_row(step, tree.n_leaves(), &sets, l, time));
                return Ok(TrackedRun {
                    rows,
                    exit_step: Some(step),
                });
            }
            tree.remove_leaf(l)?;
            let f = tree.random_edge(stream);
            tree.add_leaf(f, l)?;
            event = "move";
        }
        let mut reference = sets.clone();
        // a newborn leaf is found through its neighbours, so only old labels matter
        for r in reference.iter_mut() {
            r.retain(|l| tree.has_leaf(*l));
        }
        sets = reorder_sets(tree, b, &reference).expect("b survives moves of non-singleton leaves");
        rows.push(TrackRow {
            step,
            event,
            n_leaves: tree.n_leaves(),
            x: proportions(&sets, tree.n_leaves()),
            time,
        });
    }
    Ok(TrackedRun { rows, exit_step: None })
}

fn exit_row(step: usize, n: usize, sets: &[Vec<Label>; 3], gone: Label, time: f64) -> TrackRow {
    let mut x = [0.0; 3];
    let total: usize = sets.iter().map(|s| s.iter().filter(|l| **l != gone).count()).sum();
    for (j, s) in sets.iter().enumerate() {
        x[j] = s.iter().filter(|l| **l != gone).count() as f64 / total.max(1) as f64;
    }
    TrackRow {
        step,
        event: "exit",
        n_leaves: n,
        x,
        time,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{enumerate_cladograms, sample_uniform_cladogram};
    use super::*;
    use crate::stats::chi_square_gof;
    use std::collections::HashMap;

    #[test]
    fn step_preserves_validity() {
        let mut s = RandomStream::new(71, 0);
        let mut t = sample_uniform_cladogram(9, &mut s).unwrap();
        for _ in 0..2000 {
            aldous_chain_step(&mut t, &mut s).unwrap();
            assert!(t.validate().is_empty());
        }
    }

    #[test]
    fn self_transition_rate() {
        let n = 6;
        let mut s = RandomStream::new(72, 0);
        let mut t = sample_uniform_cladogram(n, &mut s).unwrap();
        let steps = 40_000;
        let mut stays = 0;
        for _ in 0..steps {
            let before = t.canonical_form();
            aldous_chain_step(&mut t, &mut s).unwrap();
            stays += (t.canonical_form() == before) as usize;
        }
        let p = 1.0 / (2 * n - 5) as f64;
        let sigma = (p * (1.0 - p) / steps as f64).sqrt();
        let freq = stays as f64 / steps as f64;
        assert!((freq - p).abs() < 4.0 * sigma, "{freq} vs {p}");
    }

    #[test]
    fn uniform_sampler_is_uniform_at_five_leaves() {
        let classes: Vec<_> = enumerate_cladograms(5).unwrap().iter().map(|t| t.canonical_form()).collect();
        let index: HashMap<_, _> = classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut s = RandomStream::new(73, 0);
        let mut counts = vec![0u64; 15];
        for _ in 0..30_000 {
            let t = sample_uniform_cladogram(5, &mut s).unwrap();
            counts[index[&t.canonical_form()]] += 1;
        }
        let r = chi_square_gof(&counts, &[1.0 / 15.0; 15]).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn flux_between_neighbours_balances() {
        let mut s = RandomStream::new(78, 0);
        let mut t = sample_uniform_cladogram(5, &mut s).unwrap();
        let mut flux: HashMap<(Vec<Vec<Label>>, Vec<Vec<Label>>), u64> = HashMap::new();
        let mut form = t.canonical_form();
        for _ in 0..200_000 {
            aldous_chain_step(&mut t, &mut s).unwrap();
            let next = t.canonical_form();
            if next != form {
                *flux.entry((form.clone(), next.clone())).or_default() += 1;
            }
            form = next;
        }
        let ((a, b), ab) = flux.iter().max_by_key(|(k, v)| (**v, (*k).clone())).unwrap();
        let ba = flux[&(b.clone(), a.clone())];
        // given the total, each direction is Binomial(total, 1/2) under reversibility
        let total = (ab + ba) as f64;
        assert!((*ab as f64 - total / 2.0).abs() < 3.0 * (total / 4.0).sqrt() + 1.0, "{ab} vs {ba}");
    }

    #[test]
    fn uniform_sampler_at_four_leaves() {
        let classes: Vec<_> = enumerate_cladograms(4).unwrap().iter().map(|t| t.canonical_form()).collect();
        let mut s = RandomStream::new(79, 0);
        let m = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..m {
            let f = sample_uniform_cladogram(4, &mut s).unwrap().canonical_form();
            counts[classes.iter().position(|c| *c == f).unwrap()] += 1;
        }
        let sd = (2.0 / 9.0 / m as f64).sqrt();
        for c in counts {
            assert!((c as f64 / m as f64 - 1.0 / 3.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn poissonized_rates() {
        let mut s = RandomStream::new(74, 0);
        let base = sample_uniform_cladogram(10, &mut s).unwrap();
        let draws = 100_000;
        let (mut deaths, mut hold) = (0usize, 0.0);
        for _ in 0..draws {
            let mut t = base.clone();
            let st = poissonized_chain_step(&mut t, &mut s).unwrap();
            deaths += matches!(st.event, ChainEvent::Death { .. }) as usize;
            hold += st.elapsed;
            assert!(t.validate().is_empty());
        }
        let p = 20.0 / 37.0;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((deaths as f64 / draws as f64 - p).abs() < 3.0 * sd);
        let mean = 1.0 / 37.0;
        assert!((hold / draws as f64 - mean).abs() < 3.0 * mean / (draws as f64).sqrt());
    }

    #[test]
    fn poissonized_below_domain_only_grows() {
        let mut s = RandomStream::new(75, 0);
        let mut t = Cladogram::star([0, 1, 2]).unwrap();
        for _ in 0..20 {
            let mut u = t.clone();
            let st = poissonized_chain_step(&mut u, &mut s).unwrap();
            assert!(matches!(st.event, ChainEvent::Birth { label: 3 }));
            assert!(!st.below_domain);
        }
        let mut four = sample_uniform_cladogram(4, &mut s).unwrap();
        loop {
            let mut u = four.clone();
            let st = poissonized_chain_step(&mut u, &mut s).unwrap();
            if let ChainEvent::Death { .. } = st.event {
                assert!(st.below_domain);
                assert_eq!(u.n_leaves(), 3);
                t = u;
                break;
            }
            four = u;
            if four.n_leaves() > 4 {
                four = sample_uniform_cladogram(4, &mut s).unwrap();
            }
        }
        assert!(t.validate_shape().is_empty());
    }

    #[test]
    fn fresh_labels_are_monotone() {
        let mut s = RandomStream::new(76, 0);
        let mut t = sample_uniform_cladogram(6, &mut s).unwrap();
        let mut last = 5;
        for _ in 0..500 {
            if let ChainEvent::Birth { label } = poissonized_chain_step(&mut t, &mut s).unwrap().event {
                assert!(label > last);
                last = label;
            }
            if t.n_leaves() < 3 {
                break;
            }
        }
    }

    #[test]
    fn tracked_run_masses_stay_consistent() {
        let mut s = RandomStream::new(77, 0);
        for poissonized in [false, true] {
            let mut t = sample_uniform_cladogram(12, &mut s).unwrap();
            let b = t.branchpoints()[0];
            let run = run_tracked_chain(&mut t, b, 400, poissonized, &mut s).unwrap();
            for w in run.rows.windows(2) {
                let r = &w[1];
                let sum: f64 = r.x.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                if r.event == "move" {
                    // one leaf moves, so at most two coordinates change by 1/n
                    let n = r.n_leaves as f64;
                    for j in 0..3 {
                        let d = (r.x[j] - w[0].x[j]) * n;
                        assert!(d.abs() < 1.0 + 1e-9);
                    }
                }
            }
            let csv = run.to_csv();
            assert!(csv.starts_with("step,event,n_leaves,x1,x2,x3\n"));
            assert_eq!(csv.lines().count(), run.rows.len() + 1);
            if let Some(k) = run.exit_step {
                assert_eq!(run.rows.last().unwrap().step, k);
                assert!(run.rows.last().unwrap().x.iter().any(|x| *x == 0.0));
            }
        }
    }
}
