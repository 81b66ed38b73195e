//! Canonical labeling and isomorphism testing.
//!
//! Canonical labeling runs equitable partition refinement seeded with atom
//! label, degree and bond-order multiset, then individualizes vertices of the
//! first non-singleton cell and recurses. Among all discrete leaves the one
//! with the lexicographically smallest adjacency encoding wins. Automorphisms
//! discovered at equal leaves prune sibling branches.

use std::fmt;

use super::graph::{Atom, Bond, BondOrder, MolecularGraph};

/// Dense view: per-vertex labels plus an `n x n` matrix of bond codes
/// (0 = no bond).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseGraph {
    n: usize,
    labels: Vec<u8>,
    adj: Vec<u8>,
}

impl DenseGraph {
    pub fn with_labels(labels: Vec<u8>) -> Self {
        let n = labels.len();
        DenseGraph { n, labels, adj: vec![0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn label(&self, v: usize) -> u8 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn bond(&self, u: usize, v: usize) -> u8 {
        self.adj[u * self.n + v]
    }

    pub fn set_bond(&mut self, u: usize, v: usize, code: u8) {
        self.adj[u * self.n + v] = code;
        self.adj[v * self.n + u] = code;
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v * self.n..(v + 1) * self.n].iter().filter(|&&c| c != 0).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.adj[v * self.n..(v + 1) * self.n]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(u, &c)| (u, c))
    }

    /// Appends an isolated vertex and returns its index.
    pub fn push_vertex(&mut self, label: u8) -> usize {
        let n = self.n;
        let mut adj = vec![0; (n + 1) * (n + 1)];
        for u in 0..n {
            adj[u * (n + 1)..u * (n + 1) + n].copy_from_slice(&self.adj[u * n..(u + 1) * n]);
        }
        self.adj = adj;
        self.labels.push(label);
        self.n = n + 1;
        n
    }

    /// Graph without vertex `v` (indices above `v` shift down by one).
    pub fn without_vertex(&self, v: usize) -> DenseGraph {
        let keep: Vec<usize> = (0..self.n).filter(|&u| u != v).collect();
        let mut out = DenseGraph::with_labels(keep.iter().map(|&u| self.labels[u]).collect());
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate().skip(i + 1) {
                let c = self.bond(a, b);
                if c != 0 {
                    out.set_bond(i, j, c);
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&c| c != 0).count() / 2
    }

    /// Converts back to a validated molecular graph.
    pub fn to_molecular(&self) -> Result<MolecularGraph, super::graph::GraphError> {
        let atoms: Vec<Atom> = self
            .labels
            .iter()
            .map(|&l| Atom::from_label(l).expect("valid atom label"))
            .collect();
        let mut bonds = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                let c = self.bond(u, v);
                if c != 0 {
                    bonds.push(Bond::new(u, v, BondOrder::from_code(c).expect("valid bond code")));
                }
            }
        }
        MolecularGraph::new(atoms, bonds)
    }
}

/// Byte string identifying an isomorphism class of labeled graphs.
///
/// Layout: vertex count, vertex labels in canonical order, then the upper
/// triangle of the canonically ordered bond-code matrix, row by row.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<CanonicalCode> {
        if s.len() % 2 != 0 {
            return None;
        }
        let bytes = (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        let code = CanonicalCode(bytes);
        code.decode().map(|_| code)
    }

    pub fn vertex_count(&self) -> usize {
        self.0.first().copied().unwrap_or(0) as usize
    }

    /// Number of bonds encoded.
    pub fn bond_count(&self) -> usize {
        let n = self.vertex_count();
        self.0[1 + n..].iter().filter(|&&c| c != 0).count()
    }

    /// Rebuilds the canonically ordered dense graph.
    pub fn decode(&self) -> Option<DenseGraph> {
        let n = *self.0.first()? as usize;
        if self.0.len() != 1 + n + n * n.saturating_sub(1) / 2 {
            return None;
        }
        let mut g = DenseGraph::with_labels(self.0[1..1 + n].to_vec());
        let mut k = 1 + n;
        for u in 0..n {
            for v in u + 1..n {
                let c = self.0[k];
                if c > 4 {
                    return None;
                }
                if c != 0 {
                    g.set_bond(u, v, c);
                }
                k += 1;
            }
        }
        Some(g)
    }

    /// Decodes into a validated molecular graph.
    pub fn to_graph(&self) -> Option<MolecularGraph> {
        self.decode()?.to_molecular().ok()
    }
}

impl fmt::Debug for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalCode({})", self.to_hex())
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Canonical code plus the vertex order that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalLabeling {
    pub code: CanonicalCode,
    /// `order[position]` is the original vertex placed at that position.
    pub order: Vec<usize>,
}

impl CanonicalLabeling {
    /// Inverse of `order`: canonical position of each original vertex.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &v) in self.order.iter().enumerate() {
            pos[v] = p;
        }
        pos
    }
}

pub fn canonical_form(g: &MolecularGraph) -> CanonicalCode {
    canonical_labeling(g).code
}

pub fn canonical_labeling(g: &MolecularGraph) -> CanonicalLabeling {
    canonical_labeling_dense(&g.to_dense())
}

pub fn canonical_labeling_dense(g: &DenseGraph) -> CanonicalLabeling {
    let n = g.len();
    if n == 0 {
        return CanonicalLabeling { code: CanonicalCode(vec![0]), order: Vec::new() };
    }
    let mut search = Search { g, best: None, autos: Vec::new() };
    let colors = initial_colors(g);
    let mut path = Vec::new();
    search.descend(colors, &mut path);
    let (adj_code, order) = search.best.expect("at least one leaf");
    let mut bytes = Vec::with_capacity(1 + n + adj_code.len());
    bytes.push(n as u8);
    bytes.extend(order.iter().map(|&v| g.label(v)));
    bytes.extend(adj_code);
    CanonicalLabeling { code: CanonicalCode(bytes), order }
}

pub fn canonical_form_dense(g: &DenseGraph) -> CanonicalCode {
    canonical_labeling_dense(g).code
}

fn initial_colors(g: &DenseGraph) -> Vec<u32> {
    let n = g.len();
    let sigs: Vec<(u8, usize, Vec<u8>)> = (0..n)
        .map(|v| {
            let mut bonds: Vec<u8> = g.neighbors(v).map(|(_, c)| c).collect();
            bonds.sort_unstable();
            (g.label(v), bonds.len(), bonds)
        })
        .collect();
    rank(&sigs)
}

/// Dense ranks of `keys` in sorted order.
fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("present") as u32)
        .collect()
}

fn class_count(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// Iterates neighbor-signature refinement until the partition is stable.
/// Signatures start with the current color, so cell order is preserved.
fn refine(g: &DenseGraph, colors: &mut Vec<u32>) {
    let n = g.len();
    let mut classes = class_count(colors);
    loop {
        if classes == n {
            return;
        }
        let sigs: Vec<(u32, Vec<(u32, u8)>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<(u32, u8)> = g.neighbors(v).map(|(u, c)| (colors[u], c)).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let next = rank(&sigs);
        let next_classes = class_count(&next);
        *colors = next;
        if next_classes == classes {
            return;
        }
        classes = next_classes;
    }
}

struct Search<'a> {
    g: &'a DenseGraph,
    best: Option<(Vec<u8>, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn descend(&mut self, mut colors: Vec<u32>, path: &mut Vec<usize>) {
        refine(self.g, &mut colors);
        let n = self.g.len();
        if class_count(&colors) == n {
            self.leaf(&colors);
            return;
        }
        // First non-singleton cell in color order.
        let mut sizes = vec![0usize; n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = sizes.iter().position(|&s| s > 1).expect("non-discrete partition") as u32;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if explored.iter().any(|&w| self.equivalent_under_autos(path, w, v)) {
                continue;
            }
            let child: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| {
                    if c < target {
                        c
                    } else if c == target {
                        if u == v {
                            target
                        } else {
                            target + 1
                        }
                    } else {
                        c + 1
                    }
                })
                .collect();
            path.push(v);
            self.descend(child, path);
            path.pop();
            explored.push(v);
        }
    }

    /// True when a known automorphism fixing `path` pointwise maps `w` to `v`,
    /// following orbits under the group generated by those automorphisms.
    fn equivalent_under_autos(&self, path: &[usize], w: usize, v: usize) -> bool {
        let usable: Vec<&Vec<usize>> = self
            .autos
            .iter()
            .filter(|a| path.iter().all(|&p| a[p] == p))
            .collect();
        if usable.is_empty() {
            return false;
        }
        let n = self.g.len();
        let mut seen = vec![false; n];
        let mut stack = vec![w];
        seen[w] = true;
        while let Some(x) = stack.pop() {
            if x == v {
                return true;
            }
            for a in &usable {
                let y = a[x];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    fn leaf(&mut self, colors: &[u32]) {
        let n = self.g.len();
        let mut order = vec![0usize; n];
        for (v, &c) in colors.iter().enumerate() {
            order[c as usize] = v;
        }
        let mut code = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                code.push(self.g.bond(order[i], order[j]));
            }
        }
        match &self.best {
            None => self.best = Some((code, order)),
            Some((best_code, best_order)) => match code.cmp(best_code) {
                std::cmp::Ordering::Less => self.best = Some((code, order)),
                std::cmp::Ordering::Equal => {
                    // best_order[i] -> order[i] is an automorphism.
                    let mut auto = vec![0usize; n];
                    for i in 0..n {
                        auto[best_order[i]] = order[i];
                    }
                    if auto.iter().enumerate().any(|(i, &j)| i != j) {
                        self.autos.push(auto);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

/// Element- and bond-order-preserving isomorphism test by direct
/// backtracking. Independent of [`canonical_form`].
pub fn are_isomorphic(a: &MolecularGraph, b: &MolecularGraph) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let invariant = |g: &MolecularGraph, v: usize| {
        let mut orders: Vec<u8> = g.neighbors(v).iter().map(|&(_, bi)| g.bonds()[bi].order.code()).collect();
        orders.sort_unstable();
        (g.atom(v).label(), orders)
    };
    let inv_a: Vec<_> = (0..a.atom_count()).map(|v| invariant(a, v)).collect();
    let inv_b: Vec<_> = (0..b.atom_count()).map(|v| invariant(b, v)).collect();
    let mut sa = inv_a.clone();
    let mut sb = inv_b.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    // Match vertices of `a` in BFS order so each new vertex has a mapped neighbor.
    let mut order = Vec::with_capacity(a.atom_count());
    let mut seen = vec![false; a.atom_count()];
    seen[0] = true;
    order.push(0);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(u, _) in a.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
    }
    let mut map = vec![usize::MAX; a.atom_count()];
    let mut used = vec![false; b.atom_count()];
    extend_match(a, b, &inv_a, &inv_b, &order, 0, &mut map, &mut used)
}

#[allow(clippy::too_many_arguments)]
fn extend_match(
    a: &MolecularGraph,
    b: &MolecularGraph,
    inv_a: &[(u8, Vec<u8>)],
    inv_b: &[(u8, Vec<u8>)],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for w in 0..b.atom_count() {
        if used[w] || inv_a[v] != inv_b[w] {
            continue;
        }
        let consistent = a.neighbors(v).iter().all(|&(u, bi)| {
            map[u] == usize::MAX || b.bond_between(map[u], w) == Some(a.bonds()[bi].order)
        }) && b.neighbors(w).iter().all(|&(x, _)| !used[x] || a.bond_between(v, position_of(map, x)).is_some());
        if !consistent {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if extend_match(a, b, inv_a, inv_b, order, depth + 1, map, used) {
            return true;
        }
        map[v] = usize::MAX;
        used[w] = false;
    }
    false
}

fn position_of(map: &[usize], target: usize) -> usize {
    map.iter().position(|&m| m == target).expect("used vertex is mapped")
}
