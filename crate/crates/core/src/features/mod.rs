//! Substructure-count feature vectors.
//!
//! A [`FeatureSchema`] fixes which components are counted: atoms per element,
//! rings per size, aromatic rings per size, and every connected substructure
//! of up to `max_bonds` bonds seen in a reference dataset.

pub mod enumerate;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::canon::CanonicalCode;
use crate::chem::rings::AROMATIC_RING_SIZES;
use crate::chem::{ring_profile, Element, MolecularGraph};

pub use enumerate::substructure_counts;
pub use io::{read_schema, write_schema};

/// Largest supported substructure size in bonds.
pub const MAX_SUBSTRUCTURE_BONDS: usize = 5;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a schema from an empty dataset")]
    EmptyDataset,
    #[error("max_bonds {0} is outside 0..={MAX_SUBSTRUCTURE_BONDS}")]
    MaxBonds(usize),
    #[error("expected {expected} condition values, got {got}")]
    ConditionArity { expected: usize, got: usize },
    #[error("vector has {got} entries but the schema has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("schema line {line}: {message}")]
    SchemaFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One countable component. The derived order (class, then size, then code)
/// is the schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKey {
    Atom(Element),
    RingSize(usize),
    AromaticRingSize(usize),
    Substructure { bonds: usize, code: CanonicalCode },
}

impl ComponentKey {
    pub fn substructure(code: CanonicalCode) -> Self {
        ComponentKey::Substructure { bonds: code.bond_count(), code }
    }

    /// The fragment graph for substructure keys.
    pub fn fragment(&self) -> Option<MolecularGraph> {
        match self {
            ComponentKey::Substructure { code, .. } => code.to_graph(),
            _ => None,
        }
    }
}

impl fmt::Display for ComponentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentKey::Atom(e) => write!(f, "atom:{e}"),
            ComponentKey::RingSize(s) => write!(f, "ring:{s}"),
            ComponentKey::AromaticRingSize(s) => write!(f, "aromatic_ring:{s}"),
            ComponentKey::Substructure { code, .. } => match code.to_graph() {
                Some(g) => write!(f, "sub:{}", crate::chem::write_smiles(&g)),
                None => write!(f, "sub:{code}"),
            },
        }
    }
}

/// Ordered, duplicate-free list of components.
#[derive(Debug, Clone)]
pub struct FeatureSchema {
    components: Vec<ComponentKey>,
    max_bonds: usize,
    provenance: String,
    index: HashMap<ComponentKey, usize>,
}

impl PartialEq for FeatureSchema {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.max_bonds == other.max_bonds && self.provenance == other.provenance
    }
}

impl FeatureSchema {
    /// Sorts and deduplicates `components`.
    pub fn new(components: impl IntoIterator<Item = ComponentKey>, max_bonds: usize, provenance: impl Into<String>) -> Self {
        let set: BTreeSet<ComponentKey> = components.into_iter().collect();
        let components: Vec<ComponentKey> = set.into_iter().collect();
        let index = components.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        FeatureSchema { components, max_bonds, provenance: provenance.into(), index }
    }

    pub fn components(&self) -> &[ComponentKey] {
        &self.components
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn max_bonds(&self) -> usize {
        self.max_bonds
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn index_of(&self, key: &ComponentKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn atom_index(&self, e: Element) -> Option<usize> {
        self.index_of(&ComponentKey::Atom(e))
    }

    /// Largest substructure size actually present.
    pub fn largest_substructure(&self) -> usize {
        self.components
            .iter()
            .filter_map(|k| match k {
                ComponentKey::Substructure { bonds, .. } => Some(*bonds),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Non-negative counts aligned with a schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<u32>);

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

/// Feature counts followed by numeric condition values.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedVector {
    pub counts: FeatureVector,
    pub conditions: Vec<f64>,
}

impl AugmentedVector {
    pub fn len(&self) -> usize {
        self.counts.len() + self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.counts.as_f64();
        out.extend_from_slice(&self.conditions);
        out
    }

    /// The trailing `arity` entries of a flat row.
    pub fn conditions_of(row: &[f64], arity: usize) -> &[f64] {
        &row[row.len() - arity..]
    }
}

pub fn concat_conditions(v: &FeatureVector, conditions: &[f64], arity: usize) -> Result<AugmentedVector, FeatureError> {
    if conditions.len() != arity {
        return Err(FeatureError::ConditionArity { expected: arity, got: conditions.len() });
    }
    Ok(AugmentedVector { counts: v.clone(), conditions: conditions.to_vec() })
}

/// All components of one molecule, with counts.
pub fn component_counts(g: &MolecularGraph, max_bonds: usize) -> BTreeMap<ComponentKey, u32> {
    let mut out = BTreeMap::new();
    for a in g.atoms() {
        *out.entry(ComponentKey::Atom(a.element)).or_insert(0) += 1;
    }
    let rings = ring_profile(g);
    for (&size, &c) in &rings.rings {
        out.insert(ComponentKey::RingSize(size), c);
    }
    for (&size, &c) in &rings.aromatic {
        if AROMATIC_RING_SIZES.contains(&size) {
            out.insert(ComponentKey::AromaticRingSize(size), c);
        }
    }
    for (code, c) in substructure_counts(g, max_bonds) {
        out.insert(ComponentKey::substructure(code), c);
    }
    out
}

pub fn build_schema(dataset: &[MolecularGraph], max_bonds: usize) -> Result<FeatureSchema, FeatureError> {
    build_schema_with_provenance(dataset, max_bonds, "")
}

pub fn build_schema_with_provenance(
    dataset: &[MolecularGraph],
    max_bonds: usize,
    provenance: &str,
) -> Result<FeatureSchema, FeatureError> {
    if dataset.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if max_bonds > MAX_SUBSTRUCTURE_BONDS {
        return Err(FeatureError::MaxBonds(max_bonds));
    }
    let keys = dataset
        .par_iter()
        .map(|g| component_counts(g, max_bonds).into_keys().collect::<BTreeSet<_>>())
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(FeatureSchema::new(keys, max_bonds, provenance))
}

pub fn count_occurrences(g: &MolecularGraph, key: &ComponentKey) -> u32 {
    match key {
        ComponentKey::Atom(e) => g.count_element(*e) as u32,
        ComponentKey::RingSize(s) => ring_profile(g).rings.get(s).copied().unwrap_or(0),
        ComponentKey::AromaticRingSize(s) => ring_profile(g).aromatic.get(s).copied().unwrap_or(0),
        ComponentKey::Substructure { bonds, code } => substructure_counts(g, *bonds).get(code).copied().unwrap_or(0),
    }
}

/// Counts every schema component in `g`; components of `g` missing from the
/// schema are ignored.
pub fn encode(g: &MolecularGraph, schema: &FeatureSchema) -> FeatureVector {
    let counts = component_counts(g, schema.largest_substructure());
    FeatureVector(
        schema
            .components()
            .iter()
            .map(|k| counts.get(k).copied().unwrap_or(0))
            .collect(),
    )
}

pub fn encode_all(graphs: &[MolecularGraph], schema: &FeatureSchema) -> Vec<FeatureVector> {
    graphs.par_iter().map(|g| encode(g, schema)).collect()
}
