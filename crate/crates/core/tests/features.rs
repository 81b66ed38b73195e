mod common;

use common::*;
use invdes::chem::*;
use invdes::features::*;
use proptest::prelude::*;

fn sub(s: &str) -> ComponentKey {
    ComponentKey::substructure(canonical_form(&p(s)))
}

#[test]
fn corpus_parses() {
    let smiles = corpus();
    assert!(smiles.len() >= 250);
    let mut codes = std::collections::BTreeSet::new();
    let mut duplicates = Vec::new();
    for s in &smiles {
        let g = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        if !codes.insert(canonical_form(&g)) {
            duplicates.push(s.clone());
        }
    }
    assert!(duplicates.is_empty(), "duplicate molecules: {duplicates:?}");
}

#[test]
fn schema_single_molecule() {
    let schema = build_schema(&[p("CCO")], 1).unwrap();
    assert_eq!(
        schema.components(),
        &[ComponentKey::Atom(Element::C), ComponentKey::Atom(Element::O), sub("CC"), sub("CO")][..]
    );
    assert_eq!(encode(&p("C"), &schema).0, vec![1, 0, 0, 0]);
    assert_eq!(encode(&p("CCO"), &schema).0, vec![2, 1, 1, 1]);
}

#[test]
fn schema_two_molecules_keeps_uncommon_keys() {
    let graphs = [p("CCO"), p("CNC")];
    let schema = build_schema(&graphs, 2).unwrap();
    for key in [sub("CCO"), sub("CNC"), sub("CN"), sub("CO"), sub("CC")] {
        assert!(schema.index_of(&key).is_some(), "{key}");
    }
    // Exactly the brute-force fragment inventory.
    let mut expected = 0;
    for k in 1..=2 {
        let mut all: Vec<MolecularGraph> = Vec::new();
        for g in &graphs {
            for f in brute_force_fragments(g, k) {
                if !all.iter().any(|h| are_isomorphic(h, &f)) {
                    all.push(f);
                }
            }
        }
        expected += all.len();
    }
    assert_eq!(schema.dimension(), 3 + expected);
}

#[test]
fn feature_zero_has_no_substructures() {
    let schema = build_schema(&[p("c1ccccc1"), p("C1CC1O")], 0).unwrap();
    assert_eq!(
        schema.components(),
        &[
            ComponentKey::Atom(Element::C),
            ComponentKey::Atom(Element::O),
            ComponentKey::RingSize(3),
            ComponentKey::RingSize(6),
            ComponentKey::AromaticRingSize(6)
        ][..]
    );
}

#[test]
fn schema_errors() {
    assert!(matches!(build_schema(&[], 1), Err(FeatureError::EmptyDataset)));
    assert!(matches!(build_schema(&[p("C")], 6), Err(FeatureError::MaxBonds(6))));
}

#[test]
fn occurrence_examples() {
    assert_eq!(count_occurrences(&p("CCC"), &sub("CC")), 2);
    assert_eq!(count_occurrences(&p("CCC"), &sub("CCC")), 1);
    assert_eq!(count_occurrences(&p("C1CCCCC1"), &sub("CC")), 6);
    assert_eq!(count_occurrences(&p("c1ccccc1"), &ComponentKey::Atom(Element::C)), 6);
    assert_eq!(count_occurrences(&p("CC(C)(C)C"), &sub("CCC")), 6);
    assert_eq!(brute_force_count(&p("CC(C)(C)C"), &p("CCC")), 6);
    assert_eq!(count_occurrences(&p("C1CC1"), &ComponentKey::RingSize(3)), 1);
    assert_eq!(count_occurrences(&p("c1ccoc1"), &ComponentKey::AromaticRingSize(5)), 1);
    assert_eq!(count_occurrences(&p("C1CCCC1"), &ComponentKey::AromaticRingSize(5)), 0);
}

#[test]
fn conditions_concatenate() {
    let v = FeatureVector(vec![1, 2, 3, 4]);
    let empty = concat_conditions(&v, &[], 0).unwrap();
    assert_eq!(empty.to_vec(), v.as_f64());
    let aug = concat_conditions(&v, &[300.5, -1.25], 2).unwrap();
    let row = aug.to_vec();
    assert_eq!(row.len(), 6);
    assert_eq!(AugmentedVector::conditions_of(&row, 2), &[300.5, -1.25]);
    assert!(matches!(concat_conditions(&v, &[1.0], 2), Err(FeatureError::ConditionArity { expected: 2, got: 1 })));
}

#[test]
fn corpus_counts_match_brute_force() {
    let graphs = corpus_graphs();
    let schema = build_schema(&graphs, 3).unwrap();
    let fragments: Vec<(usize, MolecularGraph)> = schema
        .components()
        .iter()
        .enumerate()
        .filter_map(|(i, k)| k.fragment().map(|f| (i, f)))
        .collect();
    for g in graphs.iter().step_by(3) {
        let v = encode(g, &schema);
        for (i, f) in &fragments {
            assert_eq!(v.0[*i], brute_force_count(g, f), "{} / {}", write_smiles(g), write_smiles(f));
        }
        // Every substructure of g is in the schema and counted at least once.
        for k in 1..=3 {
            for f in brute_force_fragments(g, k) {
                let idx = schema.index_of(&ComponentKey::substructure(canonical_form(&f))).unwrap();
                assert!(v.0[idx] >= 1);
            }
        }
    }
}

#[test]
fn dimensions_grow_with_max_bonds() {
    let graphs = corpus_graphs();
    let mut prev: Option<FeatureSchema> = None;
    let mut dims = Vec::new();
    for k in 0..=4 {
        let schema = build_schema(&graphs, k).unwrap();
        if let Some(prev) = &prev {
            assert!(schema.dimension() > prev.dimension());
            for key in prev.components() {
                assert!(schema.index_of(key).is_some());
            }
        }
        dims.push(schema.dimension());
        prev = Some(schema);
    }
    println!("corpus schema dimensions for max_bonds 0..=4: {dims:?}");
}

#[test]
fn schema_file_round_trip() {
    let graphs = corpus_graphs();
    let schema = invdes::features::build_schema_with_provenance(&graphs, 2, "corpus").unwrap();
    let mut buf = Vec::new();
    write_schema(&schema, &mut buf).unwrap();
    let back = read_schema(&buf[..]).unwrap();
    assert_eq!(back, schema);

    // Hand-written rows with derived codes.
    let text = "# max_bonds=2\natom\tC\tC\nsubstructure\t*\tC=O\nsubstructure\t*\tO=CC\nring\t5\tC1CCCC1\n";
    let edited = read_schema(text.as_bytes()).unwrap();
    assert_eq!(edited.dimension(), 4);
    assert!(edited.index_of(&sub("CC=O")).is_some());
    let v = encode(&p("CC(C)=O"), &edited);
    assert_eq!(v.0, vec![3, 0, 1, 2]);

    let bad = read_schema("nonsense\tX\n".as_bytes());
    assert!(matches!(bad, Err(FeatureError::SchemaFormat { line: 1, .. })));
}

proptest! {
    #[test]
    fn encode_is_permutation_invariant(idx in 0usize..300, seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let graphs = corpus_graphs();
        let schema = build_schema(&graphs[..60], 3).unwrap();
        let g = &graphs[idx % graphs.len()];
        let mut perm: Vec<usize> = (0..g.atom_count()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(encode(g, &schema), encode(&g.permuted(&perm), &schema));
    }
}
