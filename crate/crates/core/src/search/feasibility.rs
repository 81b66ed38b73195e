//! Degree frequencies realizable by connected graphs with maximum degree 4.
//!
//! A degree sequence with every degree ≥ 1 has a connected simple
//! realization iff it is graphical (Erdős–Gallai) and its sum is at least
//! 2(n − 1). Enumerating the frequency vectors of each vertex count and
//! applying that test gives the exact table without generating graphs.

use crate::chem::DegreeFrequency;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityTable {
    /// `entries[n]` holds the sorted frequencies for `n` vertices.
    entries: Vec<Vec<DegreeFrequency>>,
}

impl FeasibilityTable {
    pub fn build(max_vertices: usize) -> Self {
        let mut entries = vec![Vec::new(); max_vertices + 1];
        if max_vertices >= 1 {
            entries[1].push(DegreeFrequency::default());
        }
        for (n, list) in entries.iter_mut().enumerate().skip(2) {
            let n32 = n as u32;
            for d4 in 0..=n32 {
                for d3 in 0..=n32 - d4 {
                    for d2 in 0..=n32 - d4 - d3 {
                        let d1 = n32 - d4 - d3 - d2;
                        let f = DegreeFrequency::new(d1, d2, d3, d4);
                        if connected_realizable(&f) {
                            list.push(f);
                        }
                    }
                }
            }
            list.sort();
        }
        FeasibilityTable { entries }
    }

    pub fn max_vertices(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn entries(&self, n: usize) -> &[DegreeFrequency] {
        self.entries.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, n: usize, f: &DegreeFrequency) -> bool {
        self.entries(n).binary_search(f).is_ok()
    }
}

fn connected_realizable(f: &DegreeFrequency) -> bool {
    let n = f.vertex_count() as usize;
    let sum = f.degree_sum() as usize;
    if sum % 2 == 1 || sum < 2 * (n - 1) {
        return false;
    }
    let mut degrees: Vec<usize> = (1..=4usize)
        .rev()
        .flat_map(|d| std::iter::repeat(d).take(f.get(d) as usize))
        .collect();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    erdos_gallai(&degrees)
}

/// Graphicality of a non-increasing degree sequence.
pub fn erdos_gallai(degrees: &[usize]) -> bool {
    if degrees.iter().sum::<usize>() % 2 == 1 {
        return false;
    }
    let n = degrees.len();
    let mut prefix = 0;
    for k in 1..=n {
        prefix += degrees[k - 1];
        let tail: usize = degrees[k..].iter().map(|&d| d.min(k)).sum();
        if prefix > k * (k - 1) + tail {
            return false;
        }
    }
    true
}
