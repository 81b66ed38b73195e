//! SMILES subset used by the toolkit.
//!
//! Supported: organic-subset atoms `C N O F` and aromatic `c n o`, bonds
//! `- = #`, branches, and ring-closure digits `1`-`9`. Anything else
//! (brackets, charges, stereo, `.`, `%nn`, other elements) is rejected with
//! the byte offset of the offending token.

use thiserror::Error;

use super::canon::canonical_labeling;
use super::graph::{Atom, Bond, BondOrder, Element, GraphError, MolecularGraph, DEFAULT_MAX_ATOMS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unsupported token {token:?} at byte {offset}")]
    UnsupportedToken { offset: usize, token: String },
    #[error("ring closure {digit} opened at byte {offset} is never closed")]
    UnclosedRing { offset: usize, digit: u8 },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParenthesis { offset: usize },
    #[error("bond symbol at byte {offset} is not followed by an atom")]
    DanglingBond { offset: usize },
    #[error("conflicting bond symbols for ring closure {digit} at byte {offset}")]
    RingBondConflict { offset: usize, digit: u8 },
    #[error("atom at byte {offset} exceeds its valence ({element}, bond-order sum {used} > {cap})")]
    ValenceOverflow { offset: usize, element: Element, used: u8, cap: u8 },
    #[error("disconnected input: '.' at byte {offset}")]
    Disconnected { offset: usize },
    #[error("duplicate bond between atoms at bytes {offset_a} and {offset_b}")]
    DuplicateBond { offset_a: usize, offset_b: usize },
    #[error("invalid aromatic bond at byte {offset}")]
    AromaticMismatch { offset: usize },
    #[error("more than {max} heavy atoms (atom at byte {offset})")]
    TooManyAtoms { offset: usize, max: usize },
}

impl SmilesError {
    pub fn offset(&self) -> Option<usize> {
        match *self {
            SmilesError::Empty => None,
            SmilesError::UnsupportedToken { offset, .. }
            | SmilesError::UnclosedRing { offset, .. }
            | SmilesError::UnbalancedParenthesis { offset }
            | SmilesError::DanglingBond { offset }
            | SmilesError::RingBondConflict { offset, .. }
            | SmilesError::ValenceOverflow { offset, .. }
            | SmilesError::Disconnected { offset }
            | SmilesError::AromaticMismatch { offset }
            | SmilesError::TooManyAtoms { offset, .. } => Some(offset),
            SmilesError::DuplicateBond { offset_b, .. } => Some(offset_b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub max_atoms: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { max_atoms: DEFAULT_MAX_ATOMS }
    }
}

/// Parses with the default atom cap.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    parse_smiles_with(text, &ParseOptions::default())
}

struct OpenRing {
    atom: usize,
    order: Option<BondOrder>,
    offset: usize,
}

pub fn parse_smiles_with(text: &str, options: &ParseOptions) -> Result<MolecularGraph, SmilesError> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut atoms: Vec<Atom> = Vec::new();
    let mut offsets: Vec<usize> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut bond_offsets: Vec<usize> = Vec::new();
    let mut branch_stack: Vec<(usize, usize)> = Vec::new();
    let mut rings: [Option<OpenRing>; 10] = Default::default();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondOrder, usize)> = None;

    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let atom = match c {
            b'C' if bytes.get(i + 1) == Some(&b'l') => {
                return Err(SmilesError::UnsupportedToken { offset: i, token: "Cl".into() })
            }
            b'C' => Some(Atom::new(Element::C)),
            b'N' => Some(Atom::new(Element::N)),
            b'O' => Some(Atom::new(Element::O)),
            b'F' => Some(Atom::new(Element::F)),
            b'c' => Some(Atom::aromatic(Element::C)),
            b'n' => Some(Atom::aromatic(Element::N)),
            b'o' => Some(Atom::aromatic(Element::O)),
            _ => None,
        };
        if let Some(atom) = atom {
            if atoms.len() == options.max_atoms {
                return Err(SmilesError::TooManyAtoms { offset: i, max: options.max_atoms });
            }
            let idx = atoms.len();
            atoms.push(atom);
            offsets.push(i);
            if let Some(p) = prev {
                let order = match pending.take() {
                    Some((o, _)) => o,
                    None => implicit_order(atoms[p], atom),
                };
                bonds.push(Bond::new(p, idx, order));
                bond_offsets.push(i);
            } else if let Some((_, off)) = pending {
                return Err(SmilesError::DanglingBond { offset: off });
            }
            prev = Some(idx);
            i += 1;
            continue;
        }
        match c {
            b'-' | b'=' | b'#' => {
                if pending.is_some() || prev.is_none() {
                    return Err(SmilesError::DanglingBond { offset: i });
                }
                let order = match c {
                    b'-' => BondOrder::Single,
                    b'=' => BondOrder::Double,
                    _ => BondOrder::Triple,
                };
                pending = Some((order, i));
            }
            b'(' => {
                let Some(p) = prev else {
                    return Err(SmilesError::UnbalancedParenthesis { offset: i });
                };
                if pending.is_some() {
                    return Err(SmilesError::DanglingBond { offset: pending.expect("checked").1 });
                }
                branch_stack.push((p, i));
            }
            b')' => {
                if let Some((_, off)) = pending {
                    return Err(SmilesError::DanglingBond { offset: off });
                }
                let Some((p, _)) = branch_stack.pop() else {
                    return Err(SmilesError::UnbalancedParenthesis { offset: i });
                };
                if i > 0 && bytes[i - 1] == b'(' {
                    return Err(SmilesError::UnsupportedToken { offset: i - 1, token: "()".into() });
                }
                prev = Some(p);
            }
            b'1'..=b'9' => {
                let digit = c - b'0';
                let Some(cur) = prev else {
                    return Err(SmilesError::UnsupportedToken { offset: i, token: (c as char).to_string() });
                };
                let here = pending.take();
                match rings[digit as usize].take() {
                    None => {
                        rings[digit as usize] =
                            Some(OpenRing { atom: cur, order: here.map(|(o, _)| o), offset: i });
                    }
                    Some(open) => {
                        let order = match (open.order, here.map(|(o, _)| o)) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(SmilesError::RingBondConflict { offset: i, digit })
                            }
                            (Some(a), _) | (None, Some(a)) => a,
                            (None, None) => implicit_order(atoms[open.atom], atoms[cur]),
                        };
                        bonds.push(Bond::new(open.atom, cur, order));
                        bond_offsets.push(i);
                    }
                }
            }
            b'.' => return Err(SmilesError::Disconnected { offset: i }),
            _ => {
                let token = text[i..].chars().next().map(|ch| ch.to_string()).unwrap_or_default();
                return Err(SmilesError::UnsupportedToken { offset: i, token });
            }
        }
        i += 1;
    }
    if let Some((_, off)) = pending {
        return Err(SmilesError::DanglingBond { offset: off });
    }
    if let Some(&(_, off)) = branch_stack.last() {
        return Err(SmilesError::UnbalancedParenthesis { offset: off });
    }
    if let Some((digit, open)) = rings.iter().enumerate().find_map(|(d, r)| r.as_ref().map(|r| (d, r))) {
        return Err(SmilesError::UnclosedRing { offset: open.offset, digit: digit as u8 });
    }
    if atoms.is_empty() {
        return Err(SmilesError::Empty);
    }
    MolecularGraph::new(atoms, bonds).map_err(|e| match e {
        GraphError::ValenceExceeded { atom, element, used, cap } => {
            SmilesError::ValenceOverflow { offset: offsets[atom], element, used, cap }
        }
        GraphError::DuplicateBond { a, b } => SmilesError::DuplicateBond { offset_a: offsets[a], offset_b: offsets[b] },
        GraphError::SelfLoop { bond, .. } => SmilesError::DuplicateBond {
            offset_a: bond_offsets[bond],
            offset_b: bond_offsets[bond],
        },
        GraphError::AromaticBondOnAliphaticAtom { bond } => SmilesError::AromaticMismatch { offset: bond_offsets[bond] },
        GraphError::AromaticElement { atom, .. } => SmilesError::AromaticMismatch { offset: offsets[atom] },
        GraphError::Disconnected { atom } => SmilesError::Disconnected { offset: offsets[atom] },
        GraphError::Empty | GraphError::AtomIndex { .. } => SmilesError::Empty,
    })
}

fn implicit_order(a: Atom, b: Atom) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

/// Writes a SMILES string that re-parses to a graph isomorphic to `g`.
///
/// Traversal starts at canonical position 0 and visits neighbors in
/// canonical order, so the output depends only on the isomorphism class.
pub fn write_smiles(g: &MolecularGraph) -> String {
    let labeling = canonical_labeling(g);
    let pos = labeling.positions();
    let n = g.atom_count();
    let mut sorted_nb: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            let mut nb = g.neighbors(v).to_vec();
            nb.sort_by_key(|&(u, _)| pos[u]);
            nb
        })
        .collect();

    // Pass 1: DFS tree and ring-closure bonds.
    let start = labeling.order[0];
    let mut visited = vec![false; n];
    let mut visit_rank = vec![usize::MAX; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut is_tree_bond = vec![false; g.bond_count()];
    let mut counter = 0;
    dfs_tree(start, &sorted_nb, &mut visited, &mut visit_rank, &mut counter, &mut children, &mut is_tree_bond);

    // Ring closures: opened at the earlier-visited atom, closed at the later one.
    let mut opens: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, b) in g.bonds().iter().enumerate() {
        if is_tree_bond[bi] {
            continue;
        }
        let (first, second) = if visit_rank[b.a] < visit_rank[b.b] { (b.a, b.b) } else { (b.b, b.a) };
        opens[first].push((second, bi));
        closes[second].push(bi);
    }
    for list in &mut opens {
        list.sort_by_key(|&(u, _)| pos[u]);
    }
    // Close in the order the digits were opened, independent of bond indices.
    for list in &mut closes {
        list.sort_by_key(|&bi| {
            let b = g.bonds()[bi];
            visit_rank[b.a].min(visit_rank[b.b])
        });
    }
    for list in sorted_nb.iter_mut() {
        list.clear();
    }

    let mut out = String::new();
    let mut digit_of_bond = vec![0u8; g.bond_count()];
    let mut free_digits: Vec<u8> = (1..=9).rev().collect();
    write_atom(
        g,
        start,
        None,
        &children,
        &opens,
        &closes,
        &mut digit_of_bond,
        &mut free_digits,
        &mut out,
    );
    out
}

fn dfs_tree(
    v: usize,
    nb: &[Vec<(usize, usize)>],
    visited: &mut [bool],
    visit_rank: &mut [usize],
    counter: &mut usize,
    children: &mut [Vec<(usize, usize)>],
    is_tree_bond: &mut [bool],
) {
    visited[v] = true;
    visit_rank[v] = *counter;
    *counter += 1;
    for &(u, bi) in &nb[v] {
        if !visited[u] {
            is_tree_bond[bi] = true;
            children[v].push((u, bi));
            dfs_tree(u, nb, visited, visit_rank, counter, children, is_tree_bond);
        }
    }
}

fn bond_symbol(g: &MolecularGraph, bi: usize) -> &'static str {
    let b = g.bonds()[bi];
    match b.order {
        BondOrder::Single if g.atom(b.a).aromatic && g.atom(b.b).aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

#[allow(clippy::too_many_arguments)]
fn write_atom(
    g: &MolecularGraph,
    v: usize,
    via: Option<usize>,
    children: &[Vec<(usize, usize)>],
    opens: &[Vec<(usize, usize)>],
    closes: &[Vec<usize>],
    digit_of_bond: &mut [u8],
    free_digits: &mut Vec<u8>,
    out: &mut String,
) {
    if let Some(bi) = via {
        out.push_str(bond_symbol(g, bi));
    }
    let atom = g.atom(v);
    if atom.aromatic {
        out.push_str(atom.element.aromatic_symbol().expect("aromatic element"));
    } else {
        out.push_str(atom.element.symbol());
    }
    for &bi in &closes[v] {
        let d = digit_of_bond[bi];
        out.push((b'0' + d) as char);
        free_digits.push(d);
        free_digits.sort_unstable_by(|a, b| b.cmp(a));
    }
    for &(_, bi) in &opens[v] {
        let d = free_digits.pop().expect("at most nine ring closures open at once");
        digit_of_bond[bi] = d;
        out.push_str(bond_symbol(g, bi));
        out.push((b'0' + d) as char);
    }
    let kids = &children[v];
    for (k, &(u, bi)) in kids.iter().enumerate() {
        let branch = k + 1 < kids.len();
        if branch {
            out.push('(');
        }
        write_atom(g, u, Some(bi), children, opens, closes, digit_of_bond, free_digits, out);
        if branch {
            out.push(')');
        }
    }
}
