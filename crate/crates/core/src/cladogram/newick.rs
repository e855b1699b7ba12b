//! Newick text with unit branch lengths.
//!
//! Output is rooted at the branchpoint next to the smallest leaf label and
//! orders subtrees by their smallest label, so equal topologies print equal
//! strings.

use std::str::FromStr;

use super::{Cladogram, Label, NodeId};
use crate::error::{Error, Result};

enum Parsed {
    Leaf(Label),
    Inner(Vec<Parsed>),
}

impl Cladogram {
    pub fn to_newick(&self) -> String {
        let Some(&min) = self.leaves.iter().min() else {
            return ";".into();
        };
        let leaf = self.leaf_node(min).expect("live leaf");
        let hub = self.neighbors(leaf).next().expect("leaf has a neighbour");
        if self.label(hub).is_some() {
            // two leaves joined by one edge
            let mut pair = [min, self.label(hub).unwrap()];
            pair.sort_unstable();
            return format!("({}:1,{}:1);", pair[0], pair[1]);
        }
        let mut out = String::new();
        self.write_subtree(hub, None, &mut out);
        out.push(';');
        out
    }

    fn min_label_below(&self, v: NodeId, parent: NodeId) -> Label {
        self.side_leaves(v, parent)[0]
    }

    fn write_subtree(&self, v: NodeId, parent: Option<NodeId>, out: &mut String) {
        if let Some(l) = self.label(v) {
            out.push_str(&l.to_string());
        } else {
            let mut kids: Vec<(Label, NodeId)> = self
                .neighbors(v)
                .filter(|w| Some(*w) != parent)
                .map(|w| (self.min_label_below(w, v), w))
                .collect();
            kids.sort_unstable();
            out.push('(');
            for (i, (_, w)) in kids.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_subtree(*w, Some(v), out);
            }
            out.push(')');
        }
        if parent.is_some() {
            out.push_str(":1");
        }
    }

    /// Parses a Newick string. Branch lengths and internal labels are read and
    /// ignored; a bifurcating root is suppressed.
    pub fn from_newick(text: &str) -> Result<Self> {
        let mut p = Parser {
            s: text.trim().as_bytes(),
            i: 0,
        };
        let root = p.subtree()?;
        p.skip_ws();
        if p.peek() != Some(b';') {
            return Err(p.err("expected ';'"));
        }
        p.i += 1;
        p.skip_ws();
        if p.i != p.s.len() {
            return Err(p.err("trailing characters"));
        }
        let mut t = Cladogram::empty();
        match root {
            Parsed::Leaf(_) => return Err(Error::Parameter("a tree needs at least two leaves".into())),
            Parsed::Inner(kids) if kids.len() == 2 => {
                let mut it = kids.into_iter();
                let a = t.build(it.next().unwrap())?;
                let b = t.build(it.next().unwrap())?;
                t.new_edge(a, b);
            }
            Parsed::Inner(kids) => {
                let hub = t.new_node(None);
                for k in kids {
                    let c = t.build(k)?;
                    t.new_edge(hub, c);
                }
            }
        }
        let violations = t.validate_shape();
        if !violations.is_empty() {
            return Err(Error::Parameter(violations.join("; ")));
        }
        Ok(t)
    }

    fn build(&mut self, p: Parsed) -> Result<NodeId> {
        match p {
            Parsed::Leaf(l) => {
                if self.has_leaf(l) {
                    return Err(Error::Parameter(format!("duplicate leaf label {l}")));
                }
                Ok(self.new_leaf(l))
            }
            Parsed::Inner(kids) => {
                let v = self.new_node(None);
                for k in kids {
                    let c = self.build(k)?;
                    self.new_edge(v, c);
                }
                Ok(v)
            }
        }
    }
}

impl FromStr for Cladogram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Cladogram::from_newick(s)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.i += 1;
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parameter(format!("newick: {msg} at byte {}", self.i))
    }

    fn token(&mut self) -> &str {
        let start = self.i;
        while self
            .peek()
            .is_some_and(|c| !matches!(c, b'(' | b')' | b',' | b':' | b';') && !c.is_ascii_whitespace())
        {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).unwrap_or("")
    }

    fn branch_length(&mut self) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(b':') {
            self.i += 1;
            self.skip_ws();
            let tok = self.token().to_string();
            tok.parse::<f64>().map_err(|_| self.err("bad branch length"))?;
        }
        Ok(())
    }

    fn subtree(&mut self) -> Result<Parsed> {
        self.skip_ws();
        let node = if self.peek() == Some(b'(') {
            self.i += 1;
            let mut kids = vec![self.subtree()?];
            loop {
                self.skip_ws();
                match self.peek() {
                    Some(b',') => {
                        self.i += 1;
                        kids.push(self.subtree()?);
                    }
                    Some(b')') => {
                        self.i += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
            self.skip_ws();
            let _internal_label = self.token();
            Parsed::Inner(kids)
        } else {
            let tok = self.token().to_string();
            let l = tok.parse::<Label>().map_err(|_| self.err("leaf labels must be nonnegative integers"))?;
            Parsed::Leaf(l)
        };
        self.branch_length()?;
        Ok(node)
    }
}
