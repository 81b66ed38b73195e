//! Exact per-element neighborhood decomposition.
//!
//! The bonds, 2-bond paths and 3-bond stars of a molecule are determined by
//! the neighborhood of each atom: the multiset of (bond order, neighbor
//! label) pairs around it. An atom contributes one bond end per neighbor,
//! one path per neighbor pair and one star per neighbor triple, all centered
//! on itself. So a count vector is only realizable if, for every element,
//! its atom count can be split into neighborhoods whose contributions add up
//! to exactly the counted keys centered on that element.
//!
//! Neighborhoods are restricted to the schema's closed world: every bond,
//! pair and triple they contain must be a schema key.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::chem::{Atom, BondOrder, Element, MolecularGraph};
use crate::features::{ComponentKey, FeatureSchema};

/// Search nodes per element before the check gives up and passes.
const NODE_LIMIT: usize = 20_000;

/// (bond code, neighbor label)
type Arm = (u8, u8);

#[derive(Debug, Clone)]
struct Neighborhood {
    /// (local slot, amount), sorted by slot.
    contrib: Vec<(usize, u32)>,
    degree: u32,
    /// Neighbor pairs and triples (paths and stars centered here).
    pairs: u32,
    triples: u32,
}

#[derive(Debug, Clone)]
struct ElementModel {
    /// Per local slot: schema index and multiplier (2 for bonds between
    /// equal labels, whose both ends are centered on this element).
    slots: Vec<(usize, u32)>,
    /// Local slots that count bond ends, paths and stars.
    end_slots: Vec<usize>,
    path_slots: Vec<usize>,
    star_slots: Vec<usize>,
    neighborhoods: Vec<Neighborhood>,
    max_degree: u32,
    /// Whether star keys are counted.
    stars: bool,
}

#[derive(Debug, Clone)]
pub(super) struct NeighborhoodModel {
    atoms: [Option<usize>; 4],
    elements: Vec<ElementModel>,
}

fn center_and_arms(g: &MolecularGraph, degree: usize) -> Option<(u8, Vec<Arm>)> {
    let c = (0..g.atom_count()).find(|&v| g.degree(v) == degree)?;
    let mut arms: Vec<Arm> =
        g.neighbors(c).iter().map(|&(nb, bi)| (g.bonds()[bi].order.code(), g.atom(nb).label())).collect();
    arms.sort_unstable();
    Some((g.atom(c).label(), arms))
}

impl NeighborhoodModel {
    /// `None` when the schema has no 2-bond keys, where the check says
    /// nothing the incidence and valence rules do not.
    pub(super) fn new(schema: &FeatureSchema) -> Option<Self> {
        let max_bonds = schema.max_bonds();
        if max_bonds < 2 {
            return None;
        }
        let mut atoms = [None; 4];
        // center label -> arms available, with their bond slot (schema index, multiplier)
        let mut arms: BTreeMap<u8, Vec<(Arm, usize, u32)>> = BTreeMap::new();
        let mut paths: BTreeMap<(u8, Vec<Arm>), usize> = BTreeMap::new();
        for (i, key) in schema.components().iter().enumerate() {
            match key {
                ComponentKey::Atom(e) => atoms[e.index()] = Some(i),
                ComponentKey::Substructure { bonds, .. } => {
                    let Some(g) = key.fragment() else { continue };
                    match bonds {
                        1 => {
                            let b = g.bonds()[0];
                            let (la, lb) = (g.atom(b.a).label(), g.atom(b.b).label());
                            let code = b.order.code();
                            if la == lb {
                                arms.entry(la).or_default().push(((code, lb), i, 2));
                            } else {
                                arms.entry(la).or_default().push(((code, lb), i, 1));
                                arms.entry(lb).or_default().push(((code, la), i, 1));
                            }
                        }
                        2 | 3 => {
                            if let Some(ca) = center_and_arms(&g, *bonds) {
                                paths.insert(ca, i);
                            }
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }

        let mut elements = Vec::with_capacity(4);
        for e in 0..4 {
            let element = Element::from_index(e).expect("element index");
            let mut slots: Vec<(usize, u32)> = Vec::new();
            // Bond slots are per (center label, key); path and star slots per key.
            let mut slot_of: BTreeMap<(Option<u8>, usize), usize> = BTreeMap::new();
            let mut local = |label: Option<u8>, index: usize, mult: u32, slots: &mut Vec<(usize, u32)>| {
                *slot_of.entry((label, index)).or_insert_with(|| {
                    slots.push((index, mult));
                    slots.len() - 1
                })
            };
            let mut end_slots = Vec::new();
            let mut path_slots = BTreeSet::new();
            let mut star_slots = BTreeSet::new();
            let mut neighborhoods = Vec::new();
            for aromatic in [false, true] {
                if aromatic && element.aromatic_cap().is_none() {
                    continue;
                }
                let center = Atom { element, aromatic };
                let label = center.label();
                let Some(types) = arms.get(&label) else { continue };
                let bond_slots: Vec<usize> =
                    types.iter().map(|&(_, index, mult)| local(Some(label), index, mult, &mut slots)).collect();
                end_slots.extend(bond_slots.iter().copied());
                let mut multisets = Vec::new();
                arm_multisets(0, &mut Vec::new(), types, center.capacity() as u32, element.max_degree() as usize, &mut multisets);
                'sets: for set in multisets {
                    let mut contrib: BTreeMap<usize, u32> = BTreeMap::new();
                    for &t in &set {
                        *contrib.entry(bond_slots[t]).or_default() += 1;
                    }
                    let arm = |t: usize| types[t].0;
                    for i in 0..set.len() {
                        for j in i + 1..set.len() {
                            let mut pair = vec![arm(set[i]), arm(set[j])];
                            pair.sort_unstable();
                            let Some(&index) = paths.get(&(label, pair)) else { continue 'sets };
                            let slot = local(None, index, 1, &mut slots);
                            path_slots.insert(slot);
                            *contrib.entry(slot).or_default() += 1;
                            if max_bonds < 3 {
                                continue;
                            }
                            for k in j + 1..set.len() {
                                let mut triple = vec![arm(set[i]), arm(set[j]), arm(set[k])];
                                triple.sort_unstable();
                                let Some(&index) = paths.get(&(label, triple)) else { continue 'sets };
                                let slot = local(None, index, 1, &mut slots);
                                star_slots.insert(slot);
                                *contrib.entry(slot).or_default() += 1;
                            }
                        }
                    }
                    let d = set.len() as u32;
                    let triples = if max_bonds >= 3 { choose(d, 3) } else { 0 };
                    neighborhoods.push(Neighborhood { contrib: contrib.into_iter().collect(), degree: d, pairs: choose(d, 2), triples });
                }
            }
            // Path and star keys centered on this element that no
            // neighborhood produces still get a slot, so nonzero counts fail.
            for ((center, arms), &index) in &paths {
                if Atom::from_label(*center).is_some_and(|a| a.element == element) {
                    let slot = local(None, index, 1, &mut slots);
                    if arms.len() == 2 {
                        path_slots.insert(slot);
                    } else {
                        star_slots.insert(slot);
                    }
                }
            }
            elements.push(ElementModel {
                slots,
                end_slots,
                path_slots: path_slots.into_iter().collect(),
                star_slots: star_slots.into_iter().collect(),
                neighborhoods,
                max_degree: element.max_degree() as u32,
                stars: max_bonds >= 3,
            });
        }
        Some(NeighborhoodModel { atoms, elements })
    }

    /// Elements whose counts admit no neighborhood decomposition. Only
    /// meaningful for molecules with at least two atoms.
    pub(super) fn failing_elements(&self, v: &[u32]) -> Vec<usize> {
        (0..4).filter(|&e| !self.decomposes(e, v)).collect()
    }

    fn decomposes(&self, e: usize, v: &[u32]) -> bool {
        let model = &self.elements[e];
        let count = self.atoms[e].map_or(0, |i| v[i]);
        let target: Vec<u32> = model.slots.iter().map(|&(i, m)| v[i] * m).collect();
        if count == 0 {
            return target.iter().all(|&t| t == 0);
        }
        let usable: Vec<&Neighborhood> =
            model.neighborhoods.iter().filter(|n| n.contrib.iter().all(|&(s, a)| a <= target[s])).collect();
        // suffix[k][s]: most any of usable[k..] adds to slot s.
        let mut suffix = vec![vec![0u32; target.len()]; usable.len() + 1];
        for k in (0..usable.len()).rev() {
            let (head, tail) = suffix.split_at_mut(k + 1);
            head[k].copy_from_slice(&tail[0]);
            for &(s, a) in &usable[k].contrib {
                head[k][s] = head[k][s].max(a);
            }
        }
        let total = |slots: &[usize]| slots.iter().map(|&s| target[s]).sum::<u32>();
        let totals = Totals {
            ends: total(&model.end_slots),
            pairs: total(&model.path_slots),
            triples: if model.stars { total(&model.star_slots) } else { 0 },
        };
        let mut search = Search {
            usable: &usable,
            suffix: &suffix,
            max_degree: model.max_degree,
            stars: model.stars,
            failed: HashSet::new(),
            nodes: 0,
        };
        let mut residual = target;
        search.run(0, count, totals, &mut residual)
    }
}

fn choose(n: u32, k: u32) -> u32 {
    match k {
        2 => n * n.saturating_sub(1) / 2,
        3 => n * n.saturating_sub(1) * n.saturating_sub(2) / 6,
        _ => unreachable!("only pairs and triples"),
    }
}

#[derive(Debug, Clone, Copy)]
struct Totals {
    ends: u32,
    pairs: u32,
    triples: u32,
}

/// Smallest and largest Σ C(d, k) over `r` degrees in `1..=max` summing to
/// `ends`: balanced degrees minimize a convex sum, extreme ones maximize it.
fn centered_range(r: u32, ends: u32, max: u32, k: u32) -> (u32, u32) {
    let (q, rem) = (ends / r, ends % r);
    let low = rem * choose(q + 1, k) + (r - rem) * choose(q, k);
    let extra = ends - r;
    let (full, part) = if max > 1 { (extra / (max - 1), extra % (max - 1)) } else { (0, 0) };
    let high = if full >= r {
        r * choose(max, k)
    } else {
        full * choose(max, k) + choose(1 + part, k) + (r - full - 1) * choose(1, k)
    };
    (low, high)
}

/// Multisets of arm indices (non-decreasing) within the valence cap.
fn arm_multisets(
    start: usize,
    chosen: &mut Vec<usize>,
    types: &[(Arm, usize, u32)],
    cap: u32,
    max_degree: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if !chosen.is_empty() {
        out.push(chosen.clone());
    }
    if chosen.len() == max_degree {
        return;
    }
    let used: u32 = chosen.iter().map(|&t| bond_valence(types[t].0 .0)).sum();
    for t in start..types.len() {
        if used + bond_valence(types[t].0 .0) <= cap {
            chosen.push(t);
            arm_multisets(t, chosen, types, cap, max_degree, out);
            chosen.pop();
        }
    }
}

fn bond_valence(code: u8) -> u32 {
    BondOrder::from_code(code).map_or(u32::MAX / 8, |o| o.valence() as u32)
}

struct Search<'a> {
    usable: &'a [&'a Neighborhood],
    suffix: &'a [Vec<u32>],
    max_degree: u32,
    stars: bool,
    failed: HashSet<(usize, u32, Vec<u32>)>,
    nodes: usize,
}

impl Search<'_> {
    /// Whether `remaining` neighborhoods from `usable[start..]` sum to
    /// `residual`. Passes once the node limit is hit.
    fn run(&mut self, start: usize, remaining: u32, left: Totals, residual: &mut Vec<u32>) -> bool {
        if remaining == 0 {
            return residual.iter().all(|&r| r == 0);
        }
        if left.ends < remaining || left.ends > remaining * self.max_degree {
            return false;
        }
        let (lo, hi) = centered_range(remaining, left.ends, self.max_degree, 2);
        if left.pairs < lo || left.pairs > hi {
            return false;
        }
        if self.stars {
            let (lo, hi) = centered_range(remaining, left.ends, self.max_degree, 3);
            if left.triples < lo || left.triples > hi {
                return false;
            }
        }
        if residual.iter().zip(&self.suffix[start]).any(|(&r, &m)| r > remaining * m) {
            return false;
        }
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return true;
        }
        let state = (start, remaining, residual.clone());
        if self.failed.contains(&state) {
            return false;
        }
        for k in start..self.usable.len() {
            let n = self.usable[k];
            if n.contrib.iter().any(|&(s, a)| a > residual[s]) {
                continue;
            }
            for &(s, a) in &n.contrib {
                residual[s] -= a;
            }
            let next = Totals {
                ends: left.ends - n.degree,
                pairs: left.pairs.wrapping_sub(n.pairs),
                triples: left.triples.wrapping_sub(n.triples),
            };
            let ok = self.run(k, remaining - 1, next, residual);
            for &(s, a) in &n.contrib {
                residual[s] += a;
            }
            if ok {
                return true;
            }
        }
        self.failed.insert(state);
        false
    }
}
