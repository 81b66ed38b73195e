use invdes::chem::rings::minimum_cycle_basis;
use invdes::chem::*;
use proptest::prelude::*;

fn p(s: &str) -> MolecularGraph {
    parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

#[test]
fn parses_basic_examples() {
    let m = p("C");
    assert_eq!((m.atom_count(), m.bond_count(), m.implicit_hydrogens(0)), (1, 0, 4));

    let cp = p("C1CC1");
    assert_eq!((cp.atom_count(), cp.bond_count()), (3, 3));
    assert_eq!(ring_profile(&cp).rings.get(&3), Some(&1));

    let bz = p("c1ccccc1");
    assert_eq!(bz.atom_count(), 6);
    assert!(bz.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    assert!(bz.atoms().iter().all(|a| a.aromatic));
    assert!((0..6).all(|i| bz.implicit_hydrogens(i) == 1));
}

#[test]
fn parse_errors_are_distinct_with_offsets() {
    assert!(matches!(parse_smiles("C1CC"), Err(SmilesError::UnclosedRing { digit: 1, offset: 1 })));
    assert!(matches!(parse_smiles("C(C"), Err(SmilesError::UnbalancedParenthesis { offset: 1 })));
    assert!(matches!(parse_smiles("CC)C"), Err(SmilesError::UnbalancedParenthesis { offset: 2 })));
    assert!(matches!(parse_smiles("CC(C)(C)(C)C"), Err(SmilesError::ValenceOverflow { offset: 1, .. })));
    assert!(matches!(parse_smiles("O=O=C"), Err(SmilesError::ValenceOverflow { offset: 2, .. })));
    assert!(matches!(parse_smiles("C[NH]"), Err(SmilesError::UnsupportedToken { offset: 1, .. })));
    assert!(matches!(parse_smiles("CCl"), Err(SmilesError::UnsupportedToken { offset: 1, .. })));
    assert!(matches!(parse_smiles("XYZ"), Err(SmilesError::UnsupportedToken { offset: 0, .. })));
    assert!(matches!(parse_smiles("C.C"), Err(SmilesError::Disconnected { offset: 1 })));
    assert!(matches!(parse_smiles(""), Err(SmilesError::Empty)));
    assert!(matches!(parse_smiles("CCCCCCCCCC"), Err(SmilesError::TooManyAtoms { offset: 9, max: 9 })));
    assert!(parse_smiles_with("CCCCCCCCCC", &ParseOptions { max_atoms: 10 }).is_ok());
}

#[test]
fn canonical_examples() {
    assert_eq!(canonical_form(&p("CCO")), canonical_form(&p("OCC")));
    assert_ne!(canonical_form(&p("CCO")), canonical_form(&p("COC")));
    assert_ne!(canonical_form(&p("CC")), canonical_form(&p("C=C")));
    assert_ne!(canonical_form(&p("c1ccccc1")), canonical_form(&p("C1CCCCC1")));
    assert!(are_isomorphic(&p("C"), &p("C")));
    assert!(!are_isomorphic(&p("CCO"), &p("COC")));
    let code = canonical_form(&p("CC(=O)N"));
    assert_eq!(CanonicalCode::from_hex(&code.to_hex()), Some(code.clone()));
    assert!(are_isomorphic(&code.to_graph().unwrap(), &p("NC(C)=O")));
}

#[test]
fn degree_frequency_examples() {
    assert_eq!(degree_frequency(&p("C1CC1")), DegreeFrequency::new(0, 3, 0, 0));
    assert_eq!(degree_frequency(&p("CC(C)(C)C")), DegreeFrequency::new(4, 0, 0, 1));
    assert_eq!(degree_frequency(&p("CCO")), DegreeFrequency::new(2, 1, 0, 0));
}

#[test]
fn ring_profile_examples() {
    let bz = ring_profile(&p("c1ccccc1"));
    assert_eq!(bz.rings.into_iter().collect::<Vec<_>>(), vec![(6, 1)]);
    assert_eq!(bz.aromatic.into_iter().collect::<Vec<_>>(), vec![(6, 1)]);
    let cb = ring_profile(&p("C1CCC1"));
    assert_eq!(cb.rings.into_iter().collect::<Vec<_>>(), vec![(4, 1)]);
    assert!(cb.aromatic.is_empty());
    let furan = ring_profile(&p("c1ccoc1"));
    assert_eq!(furan.aromatic.get(&5), Some(&1));
}

/// Naphthalene needs ten atoms, beyond the default parse cap.
#[test]
fn fused_six_six_basis() {
    let g = parse_smiles_with("C1CCC2CCCCC2C1", &ParseOptions { max_atoms: 10 }).unwrap();
    let prof = ring_profile(&g);
    assert_eq!(prof.rings.into_iter().collect::<Vec<_>>(), vec![(6, 2)]);
    // Brute force: the smallest two independent cycles over GF(2) have total length 12.
    let basis = minimum_cycle_basis(&g);
    assert_eq!(basis.iter().map(|c| c.len()).sum::<usize>(), 12);
    let aro = parse_smiles_with("c1ccc2ccccc2c1", &ParseOptions { max_atoms: 10 }).unwrap();
    assert_eq!(ring_profile(&aro).aromatic.get(&6), Some(&2));
}

#[test]
fn writer_round_trips() {
    for s in ["CCO", "c1ccccc1", "C#N", "C1CC1", "CC(C)(C)C", "O=C1CCC1", "c1ccoc1", "C1=CC2CC1C2", "Cc1ccncc1", "C12C3C1C23"] {
        let g = p(s);
        let w = write_smiles(&g);
        let back = p(&w);
        assert!(are_isomorphic(&g, &back), "{s} -> {w}");
        assert_eq!(w, write_smiles(&back), "writer not canonical for {s}");
    }
}

fn random_graph() -> impl Strategy<Value = MolecularGraph> {
    // Random tree plus extra edges, then filtered for validity.
    (1usize..=7, proptest::collection::vec((0u8..8, 0usize..100, 0u8..4), 0..12)).prop_filter_map(
        "valence-valid",
        |(n, spec)| {
            let mut atoms = Vec::new();
            let mut bonds = Vec::new();
            for (i, &(el, parent, ord)) in spec.iter().cycle().take(n.max(1) + spec.len()).enumerate() {
                if i < n {
                    atoms.push(Atom::new(Element::from_index((el % 4) as usize)?));
                    if i > 0 {
                        bonds.push(Bond::new(parent % i, i, BondOrder::from_code(ord % 3 + 1)?));
                    }
                } else if n >= 3 {
                    let a = el as usize % n;
                    let b = parent % n;
                    if a != b && !bonds.iter().any(|x: &Bond| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
                        bonds.push(Bond::new(a, b, BondOrder::Single));
                    }
                }
            }
            if atoms.is_empty() {
                atoms.push(Atom::new(Element::C));
            }
            MolecularGraph::new(atoms, bonds).ok()
        },
    )
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

proptest! {
    #[test]
    fn round_trip_through_writer(g in random_graph()) {
        let back = parse_smiles(&write_smiles(&g)).unwrap();
        prop_assert!(are_isomorphic(&g, &back));
    }

    #[test]
    fn canonical_code_agrees_with_isomorphism(a in random_graph(), b in random_graph()) {
        prop_assert_eq!(canonical_form(&a) == canonical_form(&b), are_isomorphic(&a, &b));
    }

    #[test]
    fn canonical_code_permutation_invariant(g in random_graph(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut perm: Vec<usize> = (0..g.atom_count()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let h = g.permuted(&perm);
        prop_assert_eq!(canonical_form(&g), canonical_form(&h));
        prop_assert_eq!(write_smiles(&g), write_smiles(&h));
        prop_assert!(are_isomorphic(&g, &h));
        prop_assert_eq!(g.degree_frequency(), h.degree_frequency());
    }

    #[test]
    fn valence_never_exceeded(g in random_graph()) {
        for i in 0..g.atom_count() {
            prop_assert!(g.valence_used(i) <= g.atom(i).element.valence_cap());
            prop_assert_eq!(g.implicit_hydrogens(i) + g.valence_used(i), g.atom(i).element.valence_cap());
        }
    }
}

#[test]
fn all_permutations_small_graphs() {
    for s in ["CC(C)C", "C1CC1O", "C1CCC1", "CC(=O)N", "C1C2CC12", "OC(F)N", "C12C3C1C23", "C1CC2CC12"] {
        let g = p(s);
        let code = canonical_form(&g);
        let text = write_smiles(&g);
        for perm in all_permutations(g.atom_count()) {
            let h = g.permuted(&perm);
            assert_eq!(canonical_form(&h), code, "{s} {perm:?}");
            assert_eq!(write_smiles(&h), text, "{s} {perm:?}");
        }
    }
}
