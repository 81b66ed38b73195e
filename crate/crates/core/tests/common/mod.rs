//! Independent oracles shared by integration tests. Nothing here uses
//! canonical codes unless stated.
#![allow(dead_code)]

use invdes::chem::*;

pub fn p(s: &str) -> MolecularGraph {
    parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

/// All k-subsets of 0..m.
pub fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

/// Whether the bonds in `subset` form a connected edge set (union-find).
pub fn edges_connected(g: &MolecularGraph, subset: &[usize]) -> bool {
    let n = g.atom_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    let mut touched = vec![false; n];
    for &e in subset {
        let b = g.bonds()[e];
        touched[b.a] = true;
        touched[b.b] = true;
        let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
        parent[ra] = rb;
    }
    let roots: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| touched[v]).map(|v| find(&mut parent, v)).collect();
    roots.len() <= 1
}

/// Brute-force occurrence count: every connected k-edge subset of `g`
/// whose induced fragment is isomorphic to `fragment`.
pub fn brute_force_count(g: &MolecularGraph, fragment: &MolecularGraph) -> u32 {
    let k = fragment.bond_count();
    k_subsets(g.bond_count(), k)
        .into_iter()
        .filter(|s| edges_connected(g, s))
        .filter(|s| are_isomorphic(&g.edge_subgraph(s), fragment))
        .count() as u32
}

/// All connected k-edge fragments of `g`, deduplicated by isomorphism.
pub fn brute_force_fragments(g: &MolecularGraph, k: usize) -> Vec<MolecularGraph> {
    let mut out: Vec<MolecularGraph> = Vec::new();
    for s in k_subsets(g.bond_count(), k) {
        if edges_connected(g, &s) {
            let f = g.edge_subgraph(&s);
            if !out.iter().any(|h| are_isomorphic(h, &f)) {
                out.push(f);
            }
        }
    }
    out
}

/// Test molecule corpus: QM9-style SMILES within the supported subset.
pub fn corpus() -> Vec<String> {
    include_str!("../data/molecules.smi")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

pub fn corpus_graphs() -> Vec<MolecularGraph> {
    corpus().iter().map(|s| p(s)).collect()
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &v)| {
        let mut r = r.clone();
        r.push(v);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).exp()
}

/// Uniform random matrix from a seeded generator.
pub fn random_rows(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Isomorphism-class key by brute force: the smallest (labels, bond matrix)
/// over every vertex order. Only for small graphs.
pub fn brute_key(g: &MolecularGraph) -> Vec<u8> {
    let n = g.atom_count();
    let mut best: Option<Vec<u8>> = None;
    for perm in permutations(n) {
        // perm[i] = original vertex at position i.
        let mut key: Vec<u8> = perm.iter().map(|&v| g.atom(v).label()).collect();
        for i in 0..n {
            for j in i + 1..n {
                key.push(g.bond_between(perm[i], perm[j]).map_or(0, |o| o.code()));
            }
        }
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.unwrap_or_default()
}

/// Every connected single-bond molecule over C/N/O/F with up to `max_atoms`
/// atoms, one per isomorphism class: all edge subsets of the complete graph
/// times all element assignments, filtered by valence.
pub fn naive_single_bond_molecules(max_atoms: usize) -> Vec<MolecularGraph> {
    let mut classes = std::collections::BTreeMap::new();
    for n in 1..=max_atoms {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let bonds: Vec<Bond> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &(a, b))| Bond::new(a, b, BondOrder::Single))
                .collect();
            let mut degree = vec![0u8; n];
            for b in &bonds {
                degree[b.a] += 1;
                degree[b.b] += 1;
            }
            if degree.iter().any(|&d| d > 4) {
                continue;
            }
            for colors in 0..4usize.pow(n as u32) {
                let atoms: Vec<Atom> =
                    (0..n).map(|i| Atom::new(Element::ALL[colors / 4usize.pow(i as u32) % 4])).collect();
                if atoms.iter().zip(&degree).any(|(a, &d)| d > a.element.valence_cap()) {
                    continue;
                }
                // Rejects disconnected graphs.
                if let Ok(g) = MolecularGraph::new(atoms, bonds.clone()) {
                    classes.entry(brute_key(&g)).or_insert(g);
                }
            }
        }
    }
    classes.into_values().collect()
}

/// Degree frequencies of all connected graphs on n labeled vertices with
/// maximum degree 4, by enumerating every edge subset of K_n.
pub fn brute_force_frequencies(n: usize) -> std::collections::BTreeSet<DegreeFrequency> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = std::collections::BTreeSet::new();
    if n == 1 {
        out.insert(DegreeFrequency::default());
        return out;
    }
    for mask in 0u64..(1 << pairs.len()) {
        if (mask.count_ones() as usize) < n - 1 {
            continue;
        }
        let mut deg = vec![0usize; n];
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                deg[a] += 1;
                deg[b] += 1;
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        if deg.iter().any(|&d| d > 4) {
            continue;
        }
        let root = find(&mut parent, 0);
        if (0..n).all(|v| find(&mut parent, v) == root) {
            let mut f = [0u32; 4];
            for d in deg {
                f[d - 1] += 1;
            }
            out.insert(DegreeFrequency(f));
        }
    }
    out
}
