//! Line-oriented schema file.
//!
//! ```text
//! # max_bonds=2
//! # provenance=train.csv
//! atom            C       C
//! ring            6       C1CCCCC1
//! aromatic_ring   5       c1cccc1
//! substructure    <hex>   CC=O
//! ```
//!
//! Fields are tab-separated. For substructures the descriptor is the
//! canonical code in hex and the pattern is informational; a descriptor of
//! `*` makes the reader derive the code from the pattern SMILES instead, so
//! hand-added rows only need a pattern.

use std::io::{BufRead, Write};

use super::{ComponentKey, FeatureError, FeatureSchema};
use crate::chem::{canonical_form, parse_smiles_with, write_smiles, Element, ParseOptions};

fn ring_pattern(size: usize, aromatic: bool) -> String {
    let atom = if aromatic { "c" } else { "C" };
    format!("{atom}1{}1", atom.repeat(size - 1))
}

pub fn write_schema(schema: &FeatureSchema, mut out: impl Write) -> Result<(), FeatureError> {
    writeln!(out, "# max_bonds={}", schema.max_bonds())?;
    writeln!(out, "# provenance={}", schema.provenance())?;
    for key in schema.components() {
        match key {
            ComponentKey::Atom(e) => writeln!(out, "atom\t{e}\t{e}")?,
            ComponentKey::RingSize(s) => writeln!(out, "ring\t{s}\t{}", ring_pattern(*s, false))?,
            ComponentKey::AromaticRingSize(s) => writeln!(out, "aromatic_ring\t{s}\t{}", ring_pattern(*s, true))?,
            ComponentKey::Substructure { code, .. } => {
                let pattern = code.to_graph().map(|g| write_smiles(&g)).unwrap_or_default();
                writeln!(out, "substructure\t{}\t{pattern}", code.to_hex())?
            }
        }
    }
    Ok(())
}

pub fn read_schema(input: impl BufRead) -> Result<FeatureSchema, FeatureError> {
    let mut max_bonds = None;
    let mut provenance = String::new();
    let mut keys = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let err = |message: String| FeatureError::SchemaFormat { line: lineno, message };
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("max_bonds=") {
                max_bonds = Some(v.trim().parse::<usize>().map_err(|e| err(format!("bad max_bonds: {e}")))?);
            } else if let Some(v) = meta.strip_prefix("provenance=") {
                provenance = v.to_string();
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < 2 {
            return Err(err(format!("expected class<TAB>descriptor<TAB>pattern, got {trimmed:?}")));
        }
        let (class, descriptor) = (fields[0].trim(), fields[1].trim());
        let pattern = fields.get(2).map(|s| s.trim()).unwrap_or("");
        let size = || descriptor.parse::<usize>().map_err(|e| err(format!("bad ring size {descriptor:?}: {e}")));
        let key = match class {
            "atom" => ComponentKey::Atom(
                Element::from_symbol(descriptor).ok_or_else(|| err(format!("unknown element {descriptor:?}")))?,
            ),
            "ring" => ComponentKey::RingSize(size()?),
            "aromatic_ring" => ComponentKey::AromaticRingSize(size()?),
            "substructure" => {
                let code = if descriptor == "*" {
                    let g = parse_smiles_with(pattern, &ParseOptions { max_atoms: 64 })
                        .map_err(|e| err(format!("bad pattern {pattern:?}: {e}")))?;
                    canonical_form(&g)
                } else {
                    crate::chem::CanonicalCode::from_hex(descriptor)
                        .filter(|c| c.to_graph().is_some())
                        .ok_or_else(|| err(format!("bad canonical code {descriptor:?}")))?
                };
                ComponentKey::substructure(code)
            }
            other => return Err(err(format!("unknown component class {other:?}"))),
        };
        keys.push(key);
    }
    let inferred = keys
        .iter()
        .filter_map(|k| match k {
            ComponentKey::Substructure { bonds, .. } => Some(*bonds),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    Ok(FeatureSchema::new(keys, max_bonds.unwrap_or(inferred).max(inferred), provenance))
}
