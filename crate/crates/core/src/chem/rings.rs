//! Ring perception via a minimum cycle basis.
//!
//! All simple cycles are enumerated (molecules here are small) and a basis is
//! picked greedily by length over GF(2). Equal-length cycles are taken
//! all-aromatic first, so the basis holds as many aromatic rings as any
//! minimum basis can. Ring sizes per length are the same for every minimum
//! cycle basis, so the counts do not depend on the tie-break.

use std::collections::BTreeMap;

use super::graph::{BondOrder, MolecularGraph};

/// Smallest and largest ring sizes counted as aromatic rings.
pub const AROMATIC_RING_SIZES: std::ops::RangeInclusive<usize> = 5..=7;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RingProfile {
    /// Ring size -> count over the minimum cycle basis.
    pub rings: BTreeMap<usize, u32>,
    /// Ring size (5..=7) -> count of basis rings whose atoms and bonds are all aromatic.
    pub aromatic: BTreeMap<usize, u32>,
}

impl RingProfile {
    pub fn ring_count(&self) -> u32 {
        self.rings.values().sum()
    }
}

/// A cycle as a bond bitset plus its atoms in traversal order.
#[derive(Debug, Clone)]
pub struct Cycle {
    pub bonds: Vec<u64>,
    pub atoms: Vec<usize>,
    pub aromatic: bool,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub fn ring_profile(g: &MolecularGraph) -> RingProfile {
    let mut profile = RingProfile::default();
    for cycle in minimum_cycle_basis(g) {
        *profile.rings.entry(cycle.len()).or_insert(0) += 1;
        if cycle.aromatic && AROMATIC_RING_SIZES.contains(&cycle.len()) {
            *profile.aromatic.entry(cycle.len()).or_insert(0) += 1;
        }
    }
    profile
}

/// Cycle rank |E| - |V| + 1 of a connected graph.
pub fn cycle_rank(g: &MolecularGraph) -> usize {
    g.bond_count() + 1 - g.atom_count()
}

pub fn minimum_cycle_basis(g: &MolecularGraph) -> Vec<Cycle> {
    let rank = cycle_rank(g);
    if rank == 0 {
        return Vec::new();
    }
    let mut cycles = simple_cycles(g);
    cycles.sort_by(|x, y| {
        x.len()
            .cmp(&y.len())
            .then(y.aromatic.cmp(&x.aromatic))
            .then_with(|| x.bonds.cmp(&y.bonds))
    });
    let words = g.bond_count().div_ceil(64);
    let mut basis_rows: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::with_capacity(rank);
    for cycle in cycles {
        let mut row = cycle.bonds.clone();
        row.resize(words, 0);
        for (r, &p) in basis_rows.iter().zip(&pivots) {
            if bit(&row, p) {
                xor_into(&mut row, r);
            }
        }
        if let Some(p) = first_bit(&row) {
            // Keep the stored rows fully reduced on their pivots.
            for r in basis_rows.iter_mut() {
                if bit(r, p) {
                    xor_into(r, &row);
                }
            }
            basis_rows.push(row);
            pivots.push(p);
            chosen.push(cycle);
            if chosen.len() == rank {
                break;
            }
        }
    }
    chosen
}

fn bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn first_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

/// Every simple cycle, each reported once. A cycle is found from its
/// smallest atom, and the direction is fixed by requiring the second atom to
/// be smaller than the last.
pub fn simple_cycles(g: &MolecularGraph) -> Vec<Cycle> {
    let n = g.atom_count();
    let words = g.bond_count().div_ceil(64).max(1);
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    let mut path_atoms = Vec::new();
    let mut path_bonds = Vec::new();
    for start in 0..n {
        on_path[start] = true;
        path_atoms.push(start);
        cycle_dfs(g, start, start, &mut on_path, &mut path_atoms, &mut path_bonds, words, &mut out);
        path_atoms.pop();
        on_path[start] = false;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cycle_dfs(
    g: &MolecularGraph,
    start: usize,
    v: usize,
    on_path: &mut [bool],
    path_atoms: &mut Vec<usize>,
    path_bonds: &mut Vec<usize>,
    words: usize,
    out: &mut Vec<Cycle>,
) {
    for &(u, bi) in g.neighbors(v) {
        if u == start && path_atoms.len() >= 3 {
            if path_atoms[1] < *path_atoms.last().expect("non-empty path") {
                let mut bonds = vec![0u64; words];
                let mut aromatic = true;
                for &b in path_bonds.iter().chain(std::iter::once(&bi)) {
                    bonds[b / 64] |= 1 << (b % 64);
                    aromatic &= g.bonds()[b].order == BondOrder::Aromatic;
                }
                aromatic &= path_atoms.iter().all(|&a| g.atom(a).aromatic);
                out.push(Cycle { bonds, atoms: path_atoms.clone(), aromatic });
            }
            continue;
        }
        if u <= start || on_path[u] {
            continue;
        }
        on_path[u] = true;
        path_atoms.push(u);
        path_bonds.push(bi);
        cycle_dfs(g, start, u, on_path, path_atoms, path_bonds, words, out);
        path_bonds.pop();
        path_atoms.pop();
        on_path[u] = false;
    }
}
