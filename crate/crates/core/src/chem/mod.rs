//! Molecular graphs, SMILES, canonical labeling and ring statistics.

pub mod canon;
pub mod graph;
pub mod rings;
pub mod smiles;

pub use canon::{are_isomorphic, canonical_form, canonical_labeling, CanonicalCode, CanonicalLabeling, DenseGraph};
pub use graph::{Atom, Bond, BondOrder, DegreeFrequency, Element, GraphError, MolecularGraph, DEFAULT_MAX_ATOMS};
pub use rings::{ring_profile, RingProfile};
pub use smiles::{parse_smiles, parse_smiles_with, write_smiles, ParseOptions, SmilesError};

pub fn degree_frequency(g: &MolecularGraph) -> DegreeFrequency {
    g.degree_frequency()
}
