//! Connected edge-subset enumeration.
//!
//! ESU run over the line graph: every connected set of edges is produced
//! exactly once, rooted at its smallest edge index. Restricting the root
//! range to `0..m` yields exactly the subsets that touch one of the first `m`
//! edges, which is what incremental counting in the generator relies on.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::chem::canon::{canonical_form_dense, CanonicalCode, DenseGraph};
use crate::chem::MolecularGraph;

/// Line-graph view over an edge list.
pub struct EdgeSet {
    ends: Vec<(usize, usize)>,
    /// Edge adjacency (sharing an endpoint), sorted.
    adj: Vec<Vec<usize>>,
}

impl EdgeSet {
    pub fn new(ends: Vec<(usize, usize)>) -> Self {
        let m = ends.len();
        let mut adj = vec![Vec::new(); m];
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = ends[i];
                let (c, d) = ends[j];
                if a == c || a == d || b == c || b == d {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        EdgeSet { ends, adj }
    }

    pub fn from_graph(g: &MolecularGraph) -> Self {
        EdgeSet::new(g.bonds().iter().map(|b| (b.a, b.b)).collect())
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn ends(&self) -> &[(usize, usize)] {
        &self.ends
    }

    /// Calls `f` once per connected edge subset of size `1..=max_edges`
    /// whose smallest edge index lies in `roots`.
    pub fn for_each_connected(&self, max_edges: usize, roots: Range<usize>, mut f: impl FnMut(&[usize])) {
        self.try_for_each_connected(max_edges, roots, |sub| {
            f(sub);
            true
        });
    }

    /// Like [`EdgeSet::for_each_connected`], stopping as soon as `f` returns
    /// false. Returns whether the enumeration ran to completion.
    pub fn try_for_each_connected(&self, max_edges: usize, roots: Range<usize>, mut f: impl FnMut(&[usize]) -> bool) -> bool {
        if max_edges == 0 {
            return true;
        }
        let m = self.ends.len();
        // Edges adjacent to the current subset (or in it).
        let mut near = vec![0u32; m];
        let mut sub = Vec::with_capacity(max_edges);
        for root in roots.start..roots.end.min(m) {
            sub.push(root);
            self.mark(root, &mut near, 1);
            let ext: Vec<usize> = self.adj[root].iter().copied().filter(|&e| e > root).collect();
            let go = f(&sub) && self.extend(root, max_edges, &mut sub, &mut near, ext, &mut f);
            self.mark(root, &mut near, -1);
            sub.pop();
            if !go {
                return false;
            }
        }
        true
    }

    fn mark(&self, e: usize, near: &mut [u32], delta: i32) {
        near[e] = (near[e] as i32 + delta) as u32;
        for &x in &self.adj[e] {
            near[x] = (near[x] as i32 + delta) as u32;
        }
    }

    fn extend(
        &self,
        root: usize,
        max_edges: usize,
        sub: &mut Vec<usize>,
        near: &mut [u32],
        mut ext: Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if sub.len() == max_edges {
            return true;
        }
        while let Some(w) = ext.pop() {
            // Exclusive neighbors of w: not in the subset and not adjacent to it.
            let mut next = ext.clone();
            for &u in &self.adj[w] {
                if u > root && near[u] == 0 {
                    next.push(u);
                }
            }
            sub.push(w);
            self.mark(w, near, 1);
            let go = f(sub) && self.extend(root, max_edges, sub, near, next, f);
            self.mark(w, near, -1);
            sub.pop();
            if !go {
                return false;
            }
        }
        true
    }
}

/// Canonical code of the edge-induced subgraph on `edges`, with atom labels
/// and bond codes taken from `labels` / `codes`.
pub fn subset_code(ends: &[(usize, usize)], labels: &[u8], codes: &[u8], edges: &[usize]) -> CanonicalCode {
    let mut local: Vec<(usize, usize)> = Vec::with_capacity(edges.len() + 1);
    let find = |v: usize, local: &mut Vec<(usize, usize)>| -> usize {
        match local.iter().position(|&(g, _)| g == v) {
            Some(i) => i,
            None => {
                local.push((v, local.len()));
                local.len() - 1
            }
        }
    };
    let mut pairs = Vec::with_capacity(edges.len());
    for &e in edges {
        let (a, b) = ends[e];
        let la = find(a, &mut local);
        let lb = find(b, &mut local);
        pairs.push((la, lb, codes[e]));
    }
    let mut dense = DenseGraph::with_labels(local.iter().map(|&(v, _)| labels[v]).collect());
    for (a, b, c) in pairs {
        dense.set_bond(a, b, c);
    }
    canonical_form_dense(&dense)
}

/// Counts of every connected substructure with `1..=max_bonds` bonds, keyed
/// by canonical code. Each distinct edge subset counts once.
pub fn substructure_counts(g: &MolecularGraph, max_bonds: usize) -> BTreeMap<CanonicalCode, u32> {
    let edges = EdgeSet::from_graph(g);
    let labels: Vec<u8> = g.atoms().iter().map(|a| a.label()).collect();
    let codes: Vec<u8> = g.bonds().iter().map(|b| b.order.code()).collect();
    let mut counts = BTreeMap::new();
    edges.for_each_connected(max_bonds, 0..edges.len(), |sub| {
        *counts.entry(subset_code(edges.ends(), &labels, &codes, sub)).or_insert(0) += 1;
    });
    counts
}
