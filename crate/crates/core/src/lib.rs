//! Inverse molecular design: encode molecules as substructure counts, learn a
//! property model, search the count lattice for vectors that hit a target
//! range, and decode those vectors back into molecules.

pub mod chem;
pub mod features;
pub mod regression;
pub mod search;
pub mod generate;
pub mod pipeline;
