//! Heavy-atom molecular graphs.
//!
//! A [`MolecularGraph`] stores heavy atoms and the bonds between them.
//! Hydrogens are never stored; they are derived from the valence model in
//! [`MolecularGraph::implicit_hydrogens`].

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest atom count accepted by the parser and generator unless configured
/// otherwise.
pub const DEFAULT_MAX_ATOMS: usize = 9;

/// Supported heavy elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    C,
    N,
    O,
    F,
}

impl Element {
    pub const ALL: [Element; 4] = [Element::C, Element::N, Element::O, Element::F];

    /// Maximum bond-order sum for an aliphatic atom.
    pub fn valence_cap(self) -> u8 {
        match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::F => 1,
        }
    }

    /// Maximum bond-order sum for an aromatic atom (aromatic bonds count 1).
    /// Carbon reserves one unit for its shared pi electron; nitrogen and
    /// oxygen may instead donate a lone pair. Fluorine is never aromatic.
    pub fn aromatic_cap(self) -> Option<u8> {
        match self {
            Element::C => Some(3),
            Element::N => Some(3),
            Element::O => Some(2),
            Element::F => None,
        }
    }

    /// Largest possible skeleton degree.
    pub fn max_degree(self) -> u8 {
        self.valence_cap()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
        }
    }

    pub fn aromatic_symbol(self) -> Option<&'static str> {
        match self {
            Element::C => Some("c"),
            Element::N => Some("n"),
            Element::O => Some("o"),
            Element::F => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Element> {
        Element::ALL.get(i).copied()
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        match s {
            "C" => Some(Element::C),
            "N" => Some(Element::N),
            "O" => Some(Element::O),
            "F" => Some(Element::F),
            _ => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Contribution to the bond-order sum of each endpoint.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Non-zero byte used in dense adjacency encodings.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<BondOrder> {
        match code {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            4 => Some(BondOrder::Aromatic),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom { element, aromatic: false }
    }

    pub fn aromatic(element: Element) -> Self {
        Atom { element, aromatic: true }
    }

    /// Small integer label used by canonical labeling: element index times two
    /// plus the aromatic flag.
    pub fn label(self) -> u8 {
        (self.element.index() as u8) * 2 + self.aromatic as u8
    }

    pub fn from_label(label: u8) -> Option<Atom> {
        let element = Element::from_index((label / 2) as usize)?;
        Some(Atom { element, aromatic: label % 2 == 1 })
    }

    /// Bond-order capacity under the aliphatic or aromatic valence table.
    pub fn capacity(self) -> u8 {
        if self.aromatic {
            self.element.aromatic_cap().unwrap_or(0)
        } else {
            self.element.valence_cap()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no atoms")]
    Empty,
    #[error("bond {bond} references atom {atom}, but the graph has {count} atoms")]
    AtomIndex { bond: usize, atom: usize, count: usize },
    #[error("bond {bond} connects atom {atom} to itself")]
    SelfLoop { bond: usize, atom: usize },
    #[error("atoms {a} and {b} are bonded more than once")]
    DuplicateBond { a: usize, b: usize },
    #[error("aromatic bond {bond} touches a non-aromatic atom")]
    AromaticBondOnAliphaticAtom { bond: usize },
    #[error("atom {atom} ({element}) cannot be aromatic")]
    AromaticElement { atom: usize, element: Element },
    #[error("atom {atom} ({element}) has bond-order sum {used}, above its cap {cap}")]
    ValenceExceeded { atom: usize, element: Element, used: u8, cap: u8 },
    #[error("graph is disconnected (atom {atom} unreachable from atom 0)")]
    Disconnected { atom: usize },
}

/// Counts of atoms with skeleton degree 1, 2, 3 and 4.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DegreeFrequency(pub [u32; 4]);

impl DegreeFrequency {
    pub fn new(d1: u32, d2: u32, d3: u32, d4: u32) -> Self {
        DegreeFrequency([d1, d2, d3, d4])
    }

    /// Number of vertices with degree `d` (1..=4).
    pub fn get(&self, degree: usize) -> u32 {
        self.0[degree - 1]
    }

    pub fn vertex_count(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn degree_sum(&self) -> u32 {
        self.0.iter().enumerate().map(|(i, &c)| (i as u32 + 1) * c).sum()
    }

    /// `tails()[d-1]` is the number of vertices with degree at least `d`.
    pub fn tails(&self) -> [u32; 4] {
        let mut t = [0; 4];
        let mut acc = 0;
        for d in (0..4).rev() {
            acc += self.0[d];
            t[d] = acc;
        }
        t
    }

    /// Sum over vertices of C(degree, k), i.e. the number of k-edge stars.
    pub fn star_count(&self, k: u32) -> u64 {
        (1..=4u64)
            .map(|d| binomial(d, k as u64) * self.0[d as usize - 1] as u64)
            .sum()
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A connected, valence-valid heavy-atom graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index), sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolecularGraph {
    /// Validates structure and valence. The atom-count cap is a policy of the
    /// parser and generator, not of the graph type.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut used = vec![0u8; n];
        for (i, bond) in bonds.iter().enumerate() {
            for atom in [bond.a, bond.b] {
                if atom >= n {
                    return Err(GraphError::AtomIndex { bond: i, atom, count: n });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop { bond: i, atom: bond.a });
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(GraphError::DuplicateBond { a: bond.a.min(bond.b), b: bond.a.max(bond.b) });
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic) {
                return Err(GraphError::AromaticBondOnAliphaticAtom { bond: i });
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
            used[bond.a] = used[bond.a].saturating_add(bond.order.valence());
            used[bond.b] = used[bond.b].saturating_add(bond.order.valence());
        }
        for (i, atom) in atoms.iter().enumerate() {
            if atom.aromatic && atom.element.aromatic_cap().is_none() {
                return Err(GraphError::AromaticElement { atom: i, element: atom.element });
            }
            let cap = atom.capacity();
            if used[i] > cap {
                return Err(GraphError::ValenceExceeded { atom: i, element: atom.element, used: used[i], cap });
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let graph = MolecularGraph { atoms, bonds, adjacency };
        if let Some(atom) = graph.first_unreachable() {
            return Err(GraphError::Disconnected { atom });
        }
        Ok(graph)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> Atom {
        self.atoms[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// (neighbor, bond index) pairs sorted by neighbor.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bi)| self.bonds[bi].order)
    }

    /// Bond-order sum, aromatic bonds counting 1.
    pub fn valence_used(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.valence())
            .sum()
    }

    /// Implicit hydrogens: cap minus bond-order sum for aliphatic atoms; one
    /// fewer for aromatic atoms (never negative).
    pub fn implicit_hydrogens(&self, atom: usize) -> u8 {
        let a = self.atoms[atom];
        let used = self.valence_used(atom);
        if a.aromatic {
            a.element.valence_cap().saturating_sub(1).saturating_sub(used)
        } else {
            a.element.valence_cap() - used
        }
    }

    /// Remaining bond-order capacity for new bonds.
    pub fn free_valence(&self, atom: usize) -> u8 {
        self.atoms[atom].capacity().saturating_sub(self.valence_used(atom))
    }

    pub fn count_element(&self, element: Element) -> usize {
        self.atoms.iter().filter(|a| a.element == element).count()
    }

    /// Skeleton degree frequency (bond orders ignored).
    pub fn degree_frequency(&self) -> DegreeFrequency {
        let mut counts = [0u32; 4];
        for list in &self.adjacency {
            let d = list.len();
            if (1..=4).contains(&d) {
                counts[d - 1] += 1;
            }
        }
        DegreeFrequency(counts)
    }

    /// The graph with atom `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length mismatch");
        let mut atoms = self.atoms.clone();
        for (i, &p) in perm.iter().enumerate() {
            atoms[p] = self.atoms[i];
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(perm[b.a], perm[b.b], b.order))
            .collect();
        MolecularGraph::new(atoms, bonds).expect("relabeling preserves validity")
    }

    /// Edge-induced subgraph over the given bond indices. The bonds must form
    /// a connected set.
    pub fn edge_subgraph(&self, bond_indices: &[usize]) -> MolecularGraph {
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        let mut bonds = Vec::with_capacity(bond_indices.len());
        for &bi in bond_indices {
            let b = self.bonds[bi];
            for end in [b.a, b.b] {
                if map[end] == usize::MAX {
                    map[end] = atoms.len();
                    atoms.push(self.atoms[end]);
                }
            }
            bonds.push(Bond::new(map[b.a], map[b.b], b.order));
        }
        MolecularGraph::new(atoms, bonds).expect("connected edge subset of a valid graph")
    }

    /// Graph without atom `atom`, or `None` when removal disconnects it or
    /// leaves nothing.
    pub fn without_atom(&self, atom: usize) -> Option<MolecularGraph> {
        if self.atoms.len() <= 1 {
            return None;
        }
        let remap = |i: usize| if i > atom { i - 1 } else { i };
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != atom)
            .map(|(_, &a)| a)
            .collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| b.a != atom && b.b != atom)
            .map(|b| Bond::new(remap(b.a), remap(b.b), b.order))
            .collect();
        MolecularGraph::new(atoms, bonds).ok()
    }

    /// Dense label/adjacency view used by canonical labeling.
    pub fn to_dense(&self) -> crate::chem::canon::DenseGraph {
        let mut dense = crate::chem::canon::DenseGraph::with_labels(self.atoms.iter().map(|a| a.label()).collect());
        for b in &self.bonds {
            dense.set_bond(b.a, b.b, b.order.code());
        }
        dense
    }
}
