//! Ring and fused-ring skeletons used as generation roots.
//!
//! Text format, one block per template:
//!
//! ```text
//! template c6
//! vertices 6
//! edges 0-1,1-2,2-3,3-4,4-5,5-0
//! slots 0,1,2,3,4,5
//! ```
//!
//! Slots are the vertices that may receive attachments.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::chem::rings::AROMATIC_RING_SIZES;
use crate::chem::{Atom, Bond, BondOrder, Element, MolecularGraph};

use super::GenerationError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTemplate {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub slots: Vec<usize>,
}

impl RingTemplate {
    /// Plain cycle 0-1-…-(n-1)-0; every vertex is a slot.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a ring needs at least three vertices");
        RingTemplate {
            name: format!("ring{n}"),
            vertices: n,
            edges: (0..n).map(|i| (i, (i + 1) % n)).collect(),
            slots: (0..n).collect(),
        }
    }

    /// Two cycles of sizes `a` and `b` sharing the edge 0-1. The two shared
    /// vertices are not slots.
    pub fn fused(a: usize, b: usize) -> Self {
        assert!(a >= 3 && b >= 3, "rings need at least three vertices");
        let n = a + b - 2;
        let mut edges: Vec<(usize, usize)> = (0..a).map(|i| (i, (i + 1) % a)).collect();
        // Second ring: 1 - a - a+1 - … - n-1 - 0.
        let mut prev = 1;
        for v in a..n {
            edges.push((prev, v));
            prev = v;
        }
        edges.push((prev, 0));
        RingTemplate { name: format!("fused{a}_{b}"), vertices: n, edges, slots: (2..n).collect() }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.vertices]; self.vertices];
        for &(a, b) in &self.edges {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        adj
    }

    /// Ring sizes of the skeleton's minimum cycle basis.
    pub fn ring_sizes(&self) -> Vec<usize> {
        let g = self.skeleton(&vec![Element::C; self.vertices], BondOrder::Single).expect("carbon skeleton is valid");
        let mut sizes: Vec<usize> = crate::chem::rings::minimum_cycle_basis(&g).iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        sizes
    }

    /// Whether every ring is an aromatic ring size.
    pub fn aromatic_eligible(&self) -> bool {
        let sizes = self.ring_sizes();
        !sizes.is_empty() && sizes.iter().all(|s| AROMATIC_RING_SIZES.contains(s))
    }

    /// All permutations preserving adjacency and the slot set.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let is_slot: Vec<bool> = (0..self.vertices).map(|v| self.slots.contains(&v)).collect();
        let deg: Vec<usize> = (0..self.vertices).map(|v| self.degree(v)).collect();
        let mut out = Vec::new();
        let mut perm = vec![usize::MAX; self.vertices];
        let mut used = vec![false; self.vertices];
        fn go(
            i: usize,
            adj: &[Vec<bool>],
            is_slot: &[bool],
            deg: &[usize],
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let n = adj.len();
            if i == n {
                out.push(perm.clone());
                return;
            }
            for t in 0..n {
                if used[t] || deg[t] != deg[i] || is_slot[t] != is_slot[i] {
                    continue;
                }
                if (0..i).any(|j| adj[i][j] != adj[t][perm[j]]) {
                    continue;
                }
                perm[i] = t;
                used[t] = true;
                go(i + 1, adj, is_slot, deg, perm, used, out);
                used[t] = false;
            }
            perm[i] = usize::MAX;
        }
        go(0, &adj, &is_slot, &deg, &mut perm, &mut used, &mut out);
        out
    }

    /// The skeleton with the given elements and one bond order throughout.
    /// Aromatic order makes every atom aromatic.
    pub fn skeleton(&self, elements: &[Element], order: BondOrder) -> Option<MolecularGraph> {
        assert_eq!(elements.len(), self.vertices, "one element per vertex");
        let aromatic = order == BondOrder::Aromatic;
        let atoms = elements.iter().map(|&e| Atom { element: e, aromatic }).collect();
        let bonds = self.edges.iter().map(|&(a, b)| Bond::new(a, b, order)).collect();
        MolecularGraph::new(atoms, bonds).ok()
    }
}

/// Plain cycles of sizes 3..=max_ring_size plus every pair of them fused
/// along one edge.
pub fn ring_library(max_ring_size: usize) -> Vec<RingTemplate> {
    assert!(max_ring_size >= 3, "max_ring_size must be at least 3");
    let mut out: Vec<RingTemplate> = (3..=max_ring_size).map(RingTemplate::cycle).collect();
    for a in 3..=max_ring_size {
        for b in a..=max_ring_size {
            out.push(RingTemplate::fused(a, b));
        }
    }
    out
}

/// Library entries whose rings all have aromatic sizes.
pub fn aromatic_templates() -> Vec<RingTemplate> {
    ring_library(*AROMATIC_RING_SIZES.end()).into_iter().filter(RingTemplate::aromatic_eligible).collect()
}

/// One representative per orbit of vertex colorings under `automorphisms`:
/// the lexicographically smallest member.
pub fn colorings(vertices: usize, elements: &[Element], automorphisms: &[Vec<usize>]) -> Vec<Vec<Element>> {
    colorings_where(vertices, elements, automorphisms, |_, _| true)
}

/// Orbit representatives among colorings whose vertex `v` may take element
/// `e` only when `allowed(v, e)`. `allowed` must be invariant under the
/// automorphisms.
pub fn colorings_where(
    vertices: usize,
    elements: &[Element],
    automorphisms: &[Vec<usize>],
    allowed: impl Fn(usize, Element) -> bool,
) -> Vec<Vec<Element>> {
    let mut elements = elements.to_vec();
    elements.sort();
    elements.dedup();
    let mut out = Vec::new();
    if elements.is_empty() {
        return out;
    }
    let mut idx = vec![0usize; vertices];
    loop {
        let c: Vec<Element> = idx.iter().map(|&i| elements[i]).collect();
        if (0..vertices).all(|v| allowed(v, c[v])) && is_orbit_minimum(&c, automorphisms) {
            out.push(c);
        }
        // Odometer increment, last position fastest.
        let mut pos = vertices;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < elements.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn is_orbit_minimum(c: &[Element], automorphisms: &[Vec<usize>]) -> bool {
    automorphisms.iter().all(|p| {
        // Image coloring: vertex p[v] gets c[v].
        let mut img = c.to_vec();
        for (v, &t) in p.iter().enumerate() {
            img[t] = c[v];
        }
        c <= img.as_slice()
    })
}

/// Slots grouped into orbits under the automorphisms that preserve
/// `elements`. Orbits are listed by smallest member.
pub fn slot_orbits(template: &RingTemplate, elements: &[Element]) -> Vec<Vec<usize>> {
    let autos: Vec<Vec<usize>> = template
        .automorphisms()
        .into_iter()
        .filter(|p| p.iter().enumerate().all(|(v, &t)| elements[v] == elements[t]))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut slots = template.slots.clone();
    slots.sort_unstable();
    for &s in &slots {
        if seen.contains(&s) {
            continue;
        }
        let orbit: BTreeSet<usize> = autos.iter().map(|p| p[s]).collect();
        seen.extend(orbit.iter().copied());
        out.push(orbit.into_iter().collect());
    }
    out
}

pub fn write_templates(templates: &[RingTemplate], mut out: impl Write) -> std::io::Result<()> {
    for t in templates {
        writeln!(out, "template {}", t.name)?;
        writeln!(out, "vertices {}", t.vertices)?;
        let edges: Vec<String> = t.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        writeln!(out, "edges {}", edges.join(","))?;
        let slots: Vec<String> = t.slots.iter().map(usize::to_string).collect();
        writeln!(out, "slots {}", slots.join(","))?;
    }
    Ok(())
}

pub fn read_templates(input: impl BufRead) -> Result<Vec<RingTemplate>, GenerationError> {
    let mut out: Vec<RingTemplate> = Vec::new();
    let bad = |line: usize, message: String| GenerationError::TemplateFormat { line, message };
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if key == "template" {
            if rest.is_empty() {
                return Err(bad(lineno, "template needs a name".into()));
            }
            out.push(RingTemplate { name: rest.to_string(), vertices: 0, edges: Vec::new(), slots: Vec::new() });
            continue;
        }
        let Some(t) = out.last_mut() else {
            return Err(bad(lineno, format!("`{key}` before any `template` line")));
        };
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(lineno, format!("bad number `{s}`")));
        match key {
            "vertices" => t.vertices = num(rest)?,
            "edges" => {
                for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
                    let (a, b) = item.split_once('-').ok_or_else(|| bad(lineno, format!("bad edge `{item}`")))?;
                    t.edges.push((num(a)?, num(b)?));
                }
            }
            "slots" => {
                for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
                    t.slots.push(num(item)?);
                }
            }
            other => return Err(bad(lineno, format!("unknown key `{other}`"))),
        }
    }
    for t in &out {
        let check = |ok: bool, message: &str| if ok { Ok(()) } else { Err(GenerationError::InvalidTemplate(t.name.clone(), message.to_string())) };
        check(t.vertices >= 3, "needs at least three vertices")?;
        check(t.edges.iter().all(|&(a, b)| a < t.vertices && b < t.vertices && a != b), "edge endpoint out of range")?;
        check(t.slots.iter().all(|&s| s < t.vertices), "slot out of range")?;
        check(t.skeleton(&vec![Element::C; t.vertices], BondOrder::Single).is_some(), "skeleton must be connected with degree at most 4")?;
    }
    Ok(out)
}
