//! Necessary conditions for a count vector to describe a molecule.
//!
//! Both checks assume the closed world of the schema: every bond, 2-bond
//! path and 3-bond star of a molecule is one of the schema's substructure
//! keys. That holds for every molecule of the dataset the schema was built
//! from, and it is the same structure space the generator decodes into.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::feasibility::FeasibilityTable;
use super::neighborhoods::NeighborhoodModel;
use crate::chem::{BondOrder, Element, DEFAULT_MAX_ATOMS};
use crate::features::{ComponentKey, FeatureSchema, FeatureVector};

/// Which rule a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// A counted substructure needs more atoms of an element than counted.
    AtomContainment,
    /// More aromatic rings of a size than rings of that size.
    AromaticRings,
    /// More atoms than the atom cap.
    AtomCap,
    /// A ring larger than the molecule.
    RingSize,
    /// Bonds − atoms + 1 differs from the ring count.
    CycleRank,
    /// Bond orders on an element exceed its valence budget.
    ValenceBudget,
    /// Fewer bond ends on an element than atoms of it (isolated atoms).
    Incidence,
    /// No degree assignment for an element matches its bond ends and the
    /// 2-bond paths centered on it.
    PathCount,
    /// Aromatic rings without enough aromatic bonds.
    AromaticBonds,
    /// The atoms of an element cannot be given neighborhoods that produce
    /// exactly the bonds, paths and stars counted around that element.
    Neighborhoods,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Schema index the violation is attributed to, when there is one.
    pub component: Option<usize>,
    pub magnitude: f64,
}

/// Per-substructure facts used by the checks.
#[derive(Debug, Clone)]
struct SubInfo {
    index: usize,
    bonds: usize,
    elements: [u32; 4],
    /// Number of fragment vertices with degree ≥ d, for d = 1..4.
    tails: [u32; 4],
    /// For single bonds: bond-end count per element, and bond valence.
    ends: [u32; 4],
    valence: u32,
    aromatic_bond: bool,
    /// For 2-bond paths: the center element.
    center: Option<Element>,
    /// 3-bond stars.
    star: bool,
}

/// Schema digest shared by the constraint checks.
#[derive(Debug, Clone)]
pub struct ConstraintContext {
    dim: usize,
    max_bonds: usize,
    max_atoms: usize,
    atoms: [Option<usize>; 4],
    rings: Vec<(usize, usize)>,
    aromatic: Vec<(usize, usize)>,
    subs: Vec<SubInfo>,
    neighborhoods: Option<NeighborhoodModel>,
    table: FeasibilityTable,
}

impl ConstraintContext {
    pub fn new(schema: &FeatureSchema) -> Self {
        Self::with_max_atoms(schema, DEFAULT_MAX_ATOMS)
    }

    pub fn with_max_atoms(schema: &FeatureSchema, max_atoms: usize) -> Self {
        Self::with_table(schema, FeasibilityTable::build(max_atoms))
    }

    /// Uses `table`; its vertex limit doubles as the atom cap.
    pub fn with_table(schema: &FeatureSchema, table: FeasibilityTable) -> Self {
        let mut atoms = [None; 4];
        let mut rings = Vec::new();
        let mut aromatic = Vec::new();
        let mut subs = Vec::new();
        for (i, key) in schema.components().iter().enumerate() {
            match key {
                ComponentKey::Atom(e) => atoms[e.index()] = Some(i),
                ComponentKey::RingSize(s) => rings.push((*s, i)),
                ComponentKey::AromaticRingSize(s) => aromatic.push((*s, i)),
                ComponentKey::Substructure { bonds, .. } => {
                    let Some(g) = key.fragment() else { continue };
                    let mut elements = [0u32; 4];
                    for a in g.atoms() {
                        elements[a.element.index()] += 1;
                    }
                    let tails = g.degree_frequency().tails();
                    let mut ends = [0u32; 4];
                    let (mut valence, mut aromatic_bond) = (0, false);
                    if *bonds == 1 {
                        let b = g.bonds()[0];
                        ends[g.atom(b.a).element.index()] += 1;
                        ends[g.atom(b.b).element.index()] += 1;
                        valence = b.order.valence() as u32;
                        aromatic_bond = b.order == BondOrder::Aromatic;
                    }
                    let center = (*bonds == 2)
                        .then(|| (0..g.atom_count()).find(|&v| g.degree(v) == 2).map(|v| g.atom(v).element))
                        .flatten();
                    let star = *bonds == 3 && (0..g.atom_count()).any(|v| g.degree(v) == 3);
                    subs.push(SubInfo { index: i, bonds: *bonds, elements, tails, ends, valence, aromatic_bond, center, star });
                }
            }
        }
        ConstraintContext {
            dim: schema.dimension(),
            max_bonds: schema.max_bonds(),
            max_atoms: table.max_vertices(),
            atoms,
            rings,
            aromatic,
            subs,
            neighborhoods: NeighborhoodModel::new(schema),
            table,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn table(&self) -> &FeasibilityTable {
        &self.table
    }

    pub fn max_atoms(&self) -> usize {
        self.max_atoms
    }

    fn element_count(&self, v: &[u32], e: usize) -> u32 {
        self.atoms[e].map_or(0, |i| v[i])
    }

    fn atom_total(&self, v: &[u32]) -> u32 {
        (0..4).map(|e| self.element_count(v, e)).sum()
    }

    fn ring_total(&self, v: &[u32]) -> u32 {
        self.rings.iter().map(|&(_, i)| v[i]).sum()
    }

    fn bond_total(&self, v: &[u32]) -> u32 {
        self.subs.iter().filter(|s| s.bonds == 1).map(|s| v[s.index]).sum()
    }

    /// Bond count implied by the vector: counted single-bond keys when the
    /// schema has them, otherwise atoms − 1 + rings.
    fn implied_bonds(&self, v: &[u32]) -> u32 {
        if self.max_bonds >= 1 {
            self.bond_total(v)
        } else {
            (self.atom_total(v) + self.ring_total(v)).saturating_sub(1)
        }
    }

    pub fn explicit_violations(&self, v: &FeatureVector) -> Vec<Violation> {
        let v = &v.0;
        assert_eq!(v.len(), self.dim, "vector does not match schema");
        let mut out = Vec::new();
        let mut push = |rule, component, magnitude: f64| {
            if magnitude > 0.0 {
                out.push(Violation { rule, component, magnitude });
            }
        };
        let n = self.atom_total(v);

        for s in &self.subs {
            if v[s.index] == 0 {
                continue;
            }
            for e in 0..4 {
                let need = s.elements[e];
                let have = self.element_count(v, e);
                if need > have {
                    push(Rule::AtomContainment, Some(s.index), (need - have) as f64);
                }
            }
        }

        for &(size, ai) in &self.aromatic {
            let rings = self.rings.iter().find(|&&(s, _)| s == size).map_or(0, |&(_, i)| v[i]);
            if v[ai] > rings {
                push(Rule::AromaticRings, Some(ai), (v[ai] - rings) as f64);
            }
        }

        if n as usize > self.max_atoms {
            push(Rule::AtomCap, None, (n as usize - self.max_atoms) as f64);
        }

        for &(size, i) in &self.rings {
            if v[i] > 0 && size > n as usize {
                push(Rule::RingSize, Some(i), (size - n as usize) as f64);
            }
        }

        if n >= 1 && self.max_bonds >= 1 {
            let expected = n as i64 - 1 + self.ring_total(v) as i64;
            push(Rule::CycleRank, None, (self.bond_total(v) as i64 - expected).abs() as f64);
        }

        if self.max_bonds >= 1 {
            let mut ends = [0u32; 4];
            let mut orders = [0u32; 4];
            let mut aromatic_bonds = 0;
            for s in self.subs.iter().filter(|s| s.bonds == 1) {
                for e in 0..4 {
                    ends[e] += s.ends[e] * v[s.index];
                    orders[e] += s.ends[e] * s.valence * v[s.index];
                }
                if s.aromatic_bond {
                    aromatic_bonds += v[s.index];
                }
            }
            for e in 0..4 {
                let count = self.element_count(v, e);
                let el = Element::from_index(e).expect("element index");
                let budget = count * el.valence_cap() as u32;
                if orders[e] > budget {
                    push(Rule::ValenceBudget, self.atoms[e], (orders[e] - budget) as f64);
                }
                if n >= 2 && ends[e] < count {
                    push(Rule::Incidence, self.atoms[e], (count - ends[e]) as f64);
                }
            }
            let largest_aromatic = self.aromatic.iter().filter(|&&(_, i)| v[i] > 0).map(|&(s, _)| s as u32).max();
            if let Some(size) = largest_aromatic {
                if aromatic_bonds < size {
                    push(Rule::AromaticBonds, None, (size - aromatic_bonds) as f64);
                }
            }

            if self.max_bonds >= 2 {
                let mut paths = [0u32; 4];
                for s in &self.subs {
                    if let Some(c) = s.center {
                        paths[c.index()] += v[s.index];
                    }
                }
                for e in 0..4 {
                    let count = self.element_count(v, e);
                    let el = Element::from_index(e).expect("element index");
                    let min_degree = u32::from(n >= 2);
                    if !degree_assignment_exists(count, ends[e], paths[e], min_degree, el.max_degree() as u32) {
                        push(Rule::PathCount, self.atoms[e], 1.0);
                    }
                }
            }
        }

        if n >= 2 {
            if let Some(model) = &self.neighborhoods {
                for e in model.failing_elements(v) {
                    push(Rule::Neighborhoods, self.atoms[e], 1.0);
                }
            }
        }
        out
    }

    /// Skeleton-degree necessary condition against the feasibility table.
    pub fn realizable(&self, v: &FeatureVector) -> bool {
        let v = &v.0;
        let n = self.atom_total(v) as usize;
        if n == 0 || n > self.table.max_vertices() {
            return false;
        }
        let mut needed = [0u32; 4];
        for s in &self.subs {
            if v[s.index] > 0 {
                for d in 0..4 {
                    needed[d] = needed[d].max(s.tails[d]);
                }
            }
        }
        let degree_sum = 2 * self.implied_bonds(v) as u64;
        let path_total: u64 = self.subs.iter().filter(|s| s.bonds == 2).map(|s| v[s.index] as u64).sum();
        let star_total: u64 = self.subs.iter().filter(|s| s.star).map(|s| v[s.index] as u64).sum();
        self.table.entries(n).iter().any(|f| {
            let tails = f.tails();
            (0..4).all(|d| tails[d] >= needed[d])
                && f.degree_sum() as u64 == degree_sum
                && (self.max_bonds < 2 || f.star_count(2) == path_total)
                && (self.max_bonds < 3 || f.star_count(3) == star_total)
        })
    }

    /// Explicit-violation magnitude plus one when realizability fails.
    pub fn penalty(&self, v: &FeatureVector) -> (f64, bool) {
        let explicit: f64 = self.explicit_violations(v).iter().map(|x| x.magnitude).sum();
        let realizable = self.realizable(v);
        (explicit, realizable)
    }
}

/// Whether `count` atoms with degrees in `min..=max` can have degree sum
/// `ends` and Σ C(d, 2) equal to `paths`.
fn degree_assignment_exists(count: u32, ends: u32, paths: u32, min: u32, max: u32) -> bool {
    if count == 0 {
        return ends == 0 && paths == 0;
    }
    let mut states: BTreeSet<(u32, u32)> = BTreeSet::from([(0, 0)]);
    for _ in 0..count {
        let mut next = BTreeSet::new();
        for &(s, p) in &states {
            for d in min..=max {
                let (s2, p2) = (s + d, p + d * d.saturating_sub(1) / 2);
                if s2 <= ends && p2 <= paths {
                    next.insert((s2, p2));
                }
            }
        }
        states = next;
        if states.is_empty() {
            return false;
        }
    }
    states.contains(&(ends, paths))
}

pub fn explicit_violations(v: &FeatureVector, schema: &FeatureSchema) -> Vec<Violation> {
    ConstraintContext::new(schema).explicit_violations(v)
}

pub fn realizability_check(v: &FeatureVector, schema: &FeatureSchema, table: &FeasibilityTable) -> bool {
    ConstraintContext::with_table(schema, table.clone()).realizable(v)
}
