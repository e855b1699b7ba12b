//! Leaf-labelled unrooted binary trees (cladograms) and the Aldous
//! remove-and-reattach chain.
//!
//! Vertices and edges live in slabs with stable handles; live leaves and
//! edges are also kept in dense lists so that uniform choices are O(1).

mod chain;
mod moments;
mod newick;

use std::collections::HashMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::rng::RandomStream;

pub use chain::{
    aldous_chain_step, poissonized_chain_step, run_tracked_chain, ChainEvent, PoissonStep, TrackRow, TrackedRun,
};
pub use moments::{
    limit_moments, one_step_moment_enumeration, one_step_transition_probs, scaled_moments, ScaledMoments,
};

pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(usize);

#[derive(Debug, Clone, PartialEq)]
struct Node {
    label: Option<Label>,
    adj: Vec<EdgeId>,
    alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Edge {
    ends: [NodeId; 2],
    alive: bool,
    /// Position in `live_edges`.
    pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cladogram {
    nodes: Vec<Node>,
    free_nodes: Vec<usize>,
    edges: Vec<Edge>,
    free_edges: Vec<usize>,
    live_edges: Vec<EdgeId>,
    leaves: Vec<Label>,
    leaf_index: HashMap<Label, (NodeId, usize)>,
    next_label: Label,
}

/// Leaf counts of the three components around a branchpoint, and their
/// proportions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchpointMasses {
    pub counts: [usize; 3],
    pub x: [Ratio<i64>; 3],
    /// Leaf labels of each component, sorted.
    pub sets: [Vec<Label>; 3],
}

impl Cladogram {
    fn empty() -> Self {
        Self {
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            edges: Vec::new(),
            free_edges: Vec::new(),
            live_edges: Vec::new(),
            leaves: Vec::new(),
            leaf_index: HashMap::new(),
            next_label: 0,
        }
    }

    /// The three-leaf star on the given labels.
    pub fn star(labels: [Label; 3]) -> Result<Self> {
        if labels[0] == labels[1] || labels[1] == labels[2] || labels[0] == labels[2] {
            return param("star labels must be distinct");
        }
        let mut t = Self::empty();
        let centre = t.new_node(None);
        for l in labels {
            let leaf = t.new_leaf(l);
            t.new_edge(centre, leaf);
        }
        Ok(t)
    }

    /// Builds a tree from an explicit edge list over vertices `0..num_vertices`,
    /// with `leaf_labels[v]` set for leaves. Structure is checked by
    /// [`Cladogram::validate_shape`].
    pub fn from_edges(leaf_labels: &[Option<Label>], edges: &[(usize, usize)]) -> Result<Self> {
        let mut t = Self::empty();
        let mut ids = Vec::with_capacity(leaf_labels.len());
        for l in leaf_labels {
            ids.push(match l {
                Some(l) => {
                    if t.leaf_index.contains_key(l) {
                        return param(format!("duplicate leaf label {l}"));
                    }
                    t.new_leaf(*l)
                }
                None => t.new_node(None),
            });
        }
        for &(a, b) in edges {
            if a >= ids.len() || b >= ids.len() || a == b {
                return param(format!("bad edge ({a}, {b})"));
            }
            t.new_edge(ids[a], ids[b]);
        }
        let violations = t.validate_shape();
        if !violations.is_empty() {
            return Err(Error::Parameter(violations.join("; ")));
        }
        Ok(t)
    }

    fn new_node(&mut self, label: Option<Label>) -> NodeId {
        let node = Node {
            label,
            adj: Vec::with_capacity(3),
            alive: true,
        };
        match self.free_nodes.pop() {
            Some(i) => {
                self.nodes[i] = node;
                NodeId(i)
            }
            None => {
                self.nodes.push(node);
                NodeId(self.nodes.len() - 1)
            }
        }
    }

    fn new_leaf(&mut self, label: Label) -> NodeId {
        let id = self.new_node(Some(label));
        self.leaf_index.insert(label, (id, self.leaves.len()));
        self.leaves.push(label);
        self.next_label = self.next_label.max(label + 1);
        id
    }

    fn new_edge(&mut self, a: NodeId, b: NodeId) -> EdgeId {
        let edge = Edge {
            ends: [a, b],
            alive: true,
            pos: self.live_edges.len(),
        };
        let id = match self.free_edges.pop() {
            Some(i) => {
                self.edges[i] = edge;
                EdgeId(i)
            }
            None => {
                self.edges.push(edge);
                EdgeId(self.edges.len() - 1)
            }
        };
        self.live_edges.push(id);
        self.nodes[a.0].adj.push(id);
        self.nodes[b.0].adj.push(id);
        id
    }

    fn drop_edge(&mut self, e: EdgeId) {
        let pos = self.edges[e.0].pos;
        self.live_edges.swap_remove(pos);
        if let Some(moved) = self.live_edges.get(pos).copied() {
            self.edges[moved.0].pos = pos;
        }
        self.edges[e.0].alive = false;
        self.free_edges.push(e.0);
    }

    fn drop_node(&mut self, v: NodeId) {
        if let Some(l) = self.nodes[v.0].label {
            let (_, pos) = self.leaf_index.remove(&l).expect("leaf is indexed");
            self.leaves.swap_remove(pos);
            if let Some(moved) = self.leaves.get(pos).copied() {
                self.leaf_index.get_mut(&moved).expect("leaf is indexed").1 = pos;
            }
        }
        self.nodes[v.0].alive = false;
        self.nodes[v.0].adj.clear();
        self.free_nodes.push(v.0);
    }

    fn other_end(&self, e: EdgeId, v: NodeId) -> NodeId {
        let [a, b] = self.edges[e.0].ends;
        if a == v {
            b
        } else {
            a
        }
    }

    fn replace_adj(&mut self, v: NodeId, old: EdgeId, new: EdgeId) {
        for slot in self.nodes[v.0].adj.iter_mut() {
            if *slot == old {
                *slot = new;
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_edges(&self) -> usize {
        self.live_edges.len()
    }

    /// Live leaf labels, in internal (unspecified but deterministic) order.
    pub fn leaves(&self) -> &[Label] {
        &self.leaves
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.live_edges
    }

    pub fn has_leaf(&self, label: Label) -> bool {
        self.leaf_index.contains_key(&label)
    }

    /// A label larger than every label used so far.
    pub fn fresh_label(&self) -> Label {
        self.next_label
    }

    pub fn is_live_edge(&self, e: EdgeId) -> bool {
        self.edges.get(e.0).is_some_and(|x| x.alive)
    }

    pub fn edge_ends(&self, e: EdgeId) -> Option<(NodeId, NodeId)> {
        self.is_live_edge(e).then(|| (self.edges[e.0].ends[0], self.edges[e.0].ends[1]))
    }

    pub fn leaf_node(&self, label: Label) -> Option<NodeId> {
        self.leaf_index.get(&label).map(|(v, _)| *v)
    }

    /// Internal vertices, in slab order.
    pub fn branchpoints(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, v)| v.alive && v.label.is_none())
            .map(|(i, _)| NodeId(i))
            .collect()
    }

    pub fn is_branchpoint(&self, v: NodeId) -> bool {
        self.nodes.get(v.0).is_some_and(|x| x.alive && x.label.is_none())
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.nodes[v.0].adj.len()
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[v.0].adj.iter().map(move |e| self.other_end(*e, v))
    }

    pub fn label(&self, v: NodeId) -> Option<Label> {
        self.nodes[v.0].label
    }

    /// Structural checks that hold for any leaf count ≥ 2: labelled leaves of
    /// degree 1, unlabelled vertices of degree 3, connected, acyclic.
    pub fn validate_shape(&self) -> Vec<String> {
        let mut out = Vec::new();
        let live: Vec<usize> = (0..self.nodes.len()).filter(|i| self.nodes[*i].alive).collect();
        for &i in &live {
            let v = &self.nodes[i];
            match v.label {
                Some(l) if v.adj.len() != 1 => out.push(format!("leaf {l} has degree {}", v.adj.len())),
                None if v.adj.len() != 3 => out.push(format!("internal vertex {i} has degree {}", v.adj.len())),
                _ => {}
            }
        }
        if live.is_empty() {
            out.push("tree has no vertices".into());
            return out;
        }
        if self.live_edges.len() + 1 != live.len() {
            out.push(format!(
                "{} edges for {} vertices (a tree needs one fewer)",
                self.live_edges.len(),
                live.len()
            ));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![live[0]];
        seen[live[0]] = true;
        let mut reached = 0;
        while let Some(v) = stack.pop() {
            reached += 1;
            for w in self.neighbors(NodeId(v)) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w.0);
                }
            }
        }
        if reached != live.len() {
            out.push("tree is disconnected".into());
        }
        out
    }

    /// All cladogram invariants, including `n ≥ 4` and `2n − 3` edges.
    pub fn validate(&self) -> Vec<String> {
        let mut out = self.validate_shape();
        let n = self.n_leaves();
        if n < 4 {
            out.push(format!("cladograms need at least 4 leaves, found {n}"));
        }
        if self.n_edges() + 3 != 2 * n {
            out.push(format!("{} edges for {n} leaves (expected {})", self.n_edges(), (2 * n).saturating_sub(3)));
        }
        if self.branchpoints().len() + 2 != n {
            out.push(format!("expected {} branchpoints", n.saturating_sub(2)));
        }
        out
    }

    /// Deletes leaf `label` and its branchpoint and merges the two remaining
    /// edges; returns the handle of the merged edge.
    pub fn remove_leaf(&mut self, label: Label) -> Result<EdgeId> {
        let Some(leaf) = self.leaf_node(label) else {
            return param(format!("{label} is not a leaf of the tree"));
        };
        if self.n_leaves() < 3 {
            return param("cannot remove a leaf from a tree with fewer than 3 leaves");
        }
        let e0 = self.nodes[leaf.0].adj[0];
        let v = self.other_end(e0, leaf);
        let others: Vec<EdgeId> = self.nodes[v.0].adj.iter().copied().filter(|e| *e != e0).collect();
        let (e1, e2) = (others[0], others[1]);
        let a = self.other_end(e1, v);
        let b = self.other_end(e2, v);
        self.edges[e1.0].ends = [a, b];
        self.replace_adj(b, e2, e1);
        self.drop_edge(e2);
        self.drop_edge(e0);
        self.drop_node(leaf);
        self.drop_node(v);
        Ok(e1)
    }

    /// Splits edge `f` with a new branchpoint and attaches a new leaf `label`
    /// to it. The handle `f` stays on the half nearer its first endpoint.
    pub fn add_leaf(&mut self, f: EdgeId, label: Label) -> Result<NodeId> {
        if !self.is_live_edge(f) {
            return param(format!("edge {f:?} is not in the tree"));
        }
        if self.has_leaf(label) {
            return param(format!("leaf {label} is already present"));
        }
        let [a, b] = self.edges[f.0].ends;
        let v = self.new_node(None);
        self.edges[f.0].ends = [a, v];
        self.nodes[v.0].adj.push(f);
        let nb = self.new_edge(v, b);
        // new_edge pushed `nb` onto b's adjacency; drop the stale `f` entry there.
        self.nodes[b.0].adj.retain(|e| *e != f);
        let leaf = self.new_leaf(label);
        self.new_edge(v, leaf);
        debug_assert_eq!(self.nodes[v.0].adj, vec![f, nb, self.nodes[leaf.0].adj[0]]);
        Ok(v)
    }

    /// Leaves reachable from `start` without crossing `from`.
    fn side_leaves(&self, start: NodeId, from: NodeId) -> Vec<Label> {
        let mut out = Vec::new();
        let mut stack = vec![(start, from)];
        while let Some((v, parent)) = stack.pop() {
            if let Some(l) = self.nodes[v.0].label {
                out.push(l);
            }
            for w in self.neighbors(v) {
                if w != parent {
                    stack.push((w, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Leaf sets of the three components of the tree with `b` removed, in the
    /// order of `b`'s incident edges.
    pub fn branchpoint_masses(&self, b: NodeId) -> Result<BranchpointMasses> {
        if !self.is_branchpoint(b) {
            return param(format!("{b:?} is not a branchpoint"));
        }
        let n = self.n_leaves() as i64;
        let nbrs: Vec<NodeId> = self.neighbors(b).collect();
        let sets: [Vec<Label>; 3] = [
            self.side_leaves(nbrs[0], b),
            self.side_leaves(nbrs[1], b),
            self.side_leaves(nbrs[2], b),
        ];
        let counts = [sets[0].len(), sets[1].len(), sets[2].len()];
        let x = counts.map(|c| Ratio::new(c as i64, n));
        Ok(BranchpointMasses { counts, x, sets })
    }

    /// Nontrivial splits (both sides ≥ 2 leaves), each recorded as the side
    /// without the smallest label. Two trees on the same labels are equal iff
    /// their canonical forms are equal.
    pub fn canonical_form(&self) -> Vec<Vec<Label>> {
        let min_label = self.leaves.iter().copied().min();
        let mut splits: Vec<Vec<Label>> = self
            .live_edges
            .iter()
            .filter_map(|e| {
                let [a, b] = self.edges[e.0].ends;
                let side = self.side_leaves(a, b);
                let other = self.n_leaves() - side.len();
                if side.len() < 2 || other < 2 {
                    return None;
                }
                Some(if Some(side[0]) == min_label { self.side_leaves(b, a) } else { side })
            })
            .collect();
        splits.sort();
        splits
    }

    /// Uniform leaf label.
    pub fn random_leaf(&self, stream: &mut RandomStream) -> Label {
        self.leaves[stream.below(self.leaves.len())]
    }

    /// Uniform live edge.
    pub fn random_edge(&self, stream: &mut RandomStream) -> EdgeId {
        self.live_edges[stream.below(self.live_edges.len())]
    }
}

/// Uniform cladogram on leaves `0..n`, built by attaching leaf `m` to a
/// uniform edge of the tree on leaves `0..m`.
pub fn sample_uniform_cladogram(n: usize, stream: &mut RandomStream) -> Result<Cladogram> {
    if n < 4 {
        return param(format!("cladograms need n ≥ 4, got {n}"));
    }
    let mut t = Cladogram::star([0, 1, 2])?;
    for m in 3..n {
        let e = t.random_edge(stream);
        t.add_leaf(e, m as Label)?;
    }
    Ok(t)
}

/// Every cladogram on leaves `0..n`; there are `(2n − 5)!!` of them.
pub fn enumerate_cladograms(n: usize) -> Result<Vec<Cladogram>> {
    if !(3..=10).contains(&n) {
        return param("enumeration is limited to 3 ≤ n ≤ 10");
    }
    let mut level = vec![Cladogram::star([0, 1, 2])?];
    for m in 3..n {
        let mut next = Vec::with_capacity(level.len() * (2 * m - 3));
        for t in &level {
            for e in t.edges() {
                let mut u = t.clone();
                u.add_leaf(*e, m as Label)?;
                next.push(u);
            }
        }
        level = next;
    }
    Ok(level)
}
