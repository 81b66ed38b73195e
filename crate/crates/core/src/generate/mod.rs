//! Decoding count vectors back into molecules.
//!
//! Structures grow one atom at a time by canonical augmentation: a child is
//! kept only when its new atom is the one a canonical deletion rule would
//! remove again, so every isomorphism class is reached along exactly one
//! path. The deletion rule picks, among non-aromatic atoms whose removal
//! keeps the graph connected, the one with the highest canonical position.
//!
//! A new atom may bond to several existing atoms at once; that is how
//! non-aromatic rings close. Aromatic systems are never grown atom by atom:
//! they enter as colored ring templates at the root, collapsed until the
//! first attachment.
//!
//! The structure space is the closed world of the schema: elements, ring
//! sizes and every connected substructure of up to `max_bonds` bonds must be
//! schema components. All pruning bounds are monotone under atom addition,
//! so they never cut a branch leading to a solution.

pub mod templates;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::chem::canon::{canonical_form_dense, canonical_labeling_dense, CanonicalCode, DenseGraph};
use crate::chem::{ring_profile, Atom, BondOrder, Element, MolecularGraph, DEFAULT_MAX_ATOMS};
use crate::features::enumerate::{subset_code, EdgeSet};
use crate::features::{encode, ComponentKey, FeatureSchema, FeatureVector};

pub use templates::{
    aromatic_templates, colorings, colorings_where, read_templates, ring_library, slot_orbits, write_templates, RingTemplate,
};

/// Default number of expanded states per vector before giving up.
pub const DEFAULT_NODE_BUDGET: u64 = 200_000;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("vector has {got} entries but the schema has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("template line {line}: {message}")]
    TemplateFormat { line: usize, message: String },
    #[error("template {0}: {1}")]
    InvalidTemplate(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    /// Stop after this many structures; `None` for no cap.
    pub max_structures: Option<usize>,
    /// Maximum number of expanded search states.
    pub node_budget: Option<u64>,
    /// Wall-clock limit. Results under a time limit depend on machine speed.
    pub time_budget: Option<Duration>,
    /// Skeletons available for aromatic systems.
    pub templates: Vec<RingTemplate>,
    pub max_atoms: usize,
    /// Test hook: when false every child is kept and duplicates are removed
    /// at the end instead.
    #[doc(hidden)]
    pub canonical_pruning: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_structures: Some(10),
            node_budget: Some(DEFAULT_NODE_BUDGET),
            time_budget: None,
            templates: aromatic_templates(),
            max_atoms: DEFAULT_MAX_ATOMS,
            canonical_pruning: true,
        }
    }
}

impl GenerationConfig {
    /// No structure cap and no budgets.
    pub fn exhaustive() -> Self {
        GenerationConfig { max_structures: None, node_budget: None, time_budget: None, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    /// Pairwise non-isomorphic, sorted by canonical code.
    pub structures: Vec<MolecularGraph>,
    /// Search states expanded.
    pub nodes: u64,
    /// A node or time budget stopped the search; results may be partial.
    pub budget_exhausted: bool,
    /// The structure cap stopped the search.
    pub capped: bool,
    /// Structures reached more than once before the final deduplication.
    pub duplicates: u64,
}

impl GenerationResult {
    /// No structure was found.
    pub fn failed(&self) -> bool {
        self.structures.is_empty()
    }

    /// Search ran to completion, so the result is the full structure set.
    pub fn exhaustive(&self) -> bool {
        !self.budget_exhausted && !self.capped
    }
}

/// A partial structure on the construction path.
#[derive(Debug, Clone)]
pub struct GenerationState {
    graph: DenseGraph,
    ends: Vec<(usize, usize)>,
    codes: Vec<u8>,
    elements: [u32; 4],
    /// Substructure counts, indexed like the schema.
    subs: Vec<u32>,
    code: CanonicalCode,
    order: Vec<usize>,
    /// Template vertices that take no attachments.
    sealed: Vec<bool>,
    /// Root template (config index and coloring) while still collapsed.
    collapsed: Option<(usize, Vec<Element>)>,
}

impl GenerationState {
    pub fn molecule(&self) -> MolecularGraph {
        self.graph.to_molecular().expect("states are valid graphs")
    }

    pub fn atom_count(&self) -> usize {
        self.graph.len()
    }

    pub fn bond_count(&self) -> usize {
        self.ends.len()
    }

    pub fn code(&self) -> &CanonicalCode {
        &self.code
    }

    /// Vertex indices in the order they were added; template vertices first.
    pub fn construction_order(&self) -> &[usize] {
        &self.order
    }

    /// True while the root ring template has received no attachment.
    pub fn is_collapsed(&self) -> bool {
        self.collapsed.is_some()
    }

    fn cycle_rank(&self) -> usize {
        self.ends.len() + 1 - self.graph.len()
    }

    fn free_valence(&self, v: usize) -> u8 {
        let atom = Atom::from_label(self.graph.label(v)).expect("valid label");
        let used: u8 = self.graph.neighbors(v).map(|(_, c)| BondOrder::from_code(c).expect("bond code").valence()).sum();
        atom.capacity().saturating_sub(used)
    }
}

/// What the vector asks for, digested against the schema.
#[derive(Debug, Clone)]
struct Target {
    v: Vec<u32>,
    elements: [u32; 4],
    atoms: u32,
    rings: u32,
    /// Ring size -> required count (sizes absent from the schema need 0).
    ring_sizes: BTreeMap<usize, u32>,
    aromatic: BTreeMap<usize, u32>,
    edges: u32,
    max_bonds: usize,
    sub_index: HashMap<CanonicalCode, usize>,
    /// (schema index, element mask) per substructure key.
    sub_elements: Vec<(usize, [bool; 4])>,
    /// Allowed (smaller label, larger label, bond code); `None` = anything.
    bond_types: Option<HashSet<(u8, u8, u8)>>,
}

impl Target {
    fn new(v: &FeatureVector, schema: &FeatureSchema) -> Self {
        let mut t = Target {
            v: v.0.clone(),
            elements: [0; 4],
            atoms: 0,
            rings: 0,
            ring_sizes: BTreeMap::new(),
            aromatic: BTreeMap::new(),
            edges: 0,
            max_bonds: schema.max_bonds(),
            sub_index: HashMap::new(),
            sub_elements: Vec::new(),
            bond_types: None,
        };
        let mut bond_types = HashSet::new();
        for (i, key) in schema.components().iter().enumerate() {
            let count = v.0[i];
            match key {
                ComponentKey::Atom(e) => t.elements[e.index()] = count,
                ComponentKey::RingSize(s) => {
                    t.ring_sizes.insert(*s, count);
                }
                ComponentKey::AromaticRingSize(s) => {
                    if count > 0 {
                        t.aromatic.insert(*s, count);
                    }
                }
                ComponentKey::Substructure { bonds, code } => {
                    t.sub_index.insert(code.clone(), i);
                    let Some(g) = code.to_graph() else { continue };
                    let mut mask = [false; 4];
                    for a in g.atoms() {
                        mask[a.element.index()] = true;
                    }
                    t.sub_elements.push((i, mask));
                    if *bonds == 1 {
                        let b = g.bonds()[0];
                        let (la, lb) = (g.atom(b.a).label(), g.atom(b.b).label());
                        bond_types.insert((la.min(lb), la.max(lb), b.order.code()));
                    }
                }
            }
        }
        t.atoms = t.elements.iter().sum();
        t.rings = t.ring_sizes.values().sum();
        t.edges = (t.atoms + t.rings).saturating_sub(1);
        if t.max_bonds >= 1 {
            t.bond_types = Some(bond_types);
        }
        t
    }

    fn bond_allowed(&self, a: u8, b: u8, code: u8) -> bool {
        self.bond_types.as_ref().is_none_or(|set| set.contains(&(a.min(b), a.max(b), code)))
    }

    fn remaining(&self, elements: &[u32; 4], e: usize) -> u32 {
        self.elements[e].saturating_sub(elements[e])
    }

    /// Cumulative ring counts by size of a partial graph never exceed the
    /// target's: the span of short cycles only grows as atoms are added.
    fn rings_ok(&self, g: &MolecularGraph) -> bool {
        let profile = ring_profile(g);
        let mut have = 0;
        for (&size, &c) in &profile.rings {
            have += c;
            let allowed: u32 = self.ring_sizes.range(..=size).map(|(_, &c)| c).sum();
            if have > allowed {
                return false;
            }
        }
        true
    }
}

/// Search driver for one vector.
pub struct Generator<'a> {
    schema: &'a FeatureSchema,
    config: &'a GenerationConfig,
    target: Target,
}

impl<'a> Generator<'a> {
    pub fn new(v: &FeatureVector, schema: &'a FeatureSchema, config: &'a GenerationConfig) -> Result<Self, GenerationError> {
        if v.len() != schema.dimension() {
            return Err(GenerationError::Dimension { expected: schema.dimension(), got: v.len() });
        }
        Ok(Generator { schema, config, target: Target::new(v, schema) })
    }

    /// Starting states: one atom per available element, or, when aromatic
    /// rings are requested, every colored template with exactly that
    /// aromatic ring profile.
    pub fn roots(&self) -> Vec<GenerationState> {
        let t = &self.target;
        if t.atoms == 0 || t.atoms as usize > self.config.max_atoms {
            return Vec::new();
        }
        let mut roots = BTreeMap::new();
        if t.aromatic.is_empty() {
            for e in Element::ALL {
                if t.elements[e.index()] > 0 {
                    let g = MolecularGraph::new(vec![Atom::new(e)], Vec::new()).expect("single atom");
                    if let Some(s) = self.state_of(&g) {
                        roots.insert(s.code.clone(), s);
                    }
                }
            }
        } else {
            let elements: Vec<Element> =
                Element::ALL.into_iter().filter(|e| e.aromatic_cap().is_some() && t.elements[e.index()] > 0).collect();
            for (ti, template) in self.config.templates.iter().enumerate() {
                if template.vertices > t.atoms as usize || !template.aromatic_eligible() {
                    continue;
                }
                let mut profile = BTreeMap::new();
                for s in template.ring_sizes() {
                    *profile.entry(s).or_insert(0u32) += 1;
                }
                if profile != t.aromatic {
                    continue;
                }
                let autos = template.automorphisms();
                let allowed = |v: usize, e: Element| template.degree(v) <= e.aromatic_cap().unwrap_or(0) as usize;
                for coloring in colorings_where(template.vertices, &elements, &autos, allowed) {
                    let mut counts = [0u32; 4];
                    for e in &coloring {
                        counts[e.index()] += 1;
                    }
                    if (0..4).any(|e| counts[e] > t.elements[e]) {
                        continue;
                    }
                    let Some(g) = template.skeleton(&coloring, BondOrder::Aromatic) else { continue };
                    let Some(mut s) = self.state_of(&g) else { continue };
                    s.sealed = (0..template.vertices).map(|v| !template.slots.contains(&v)).collect();
                    s.collapsed = Some((ti, coloring));
                    if self.satisfiable(&s) {
                        roots.insert(s.code.clone(), s);
                    }
                }
            }
        }
        roots.into_values().collect()
    }

    /// Full state for an existing graph, or `None` when the graph leaves
    /// the schema's closed world.
    pub fn state_of(&self, g: &MolecularGraph) -> Option<GenerationState> {
        let edges = EdgeSet::from_graph(g);
        let labels: Vec<u8> = g.atoms().iter().map(|a| a.label()).collect();
        let codes: Vec<u8> = g.bonds().iter().map(|b| b.order.code()).collect();
        let mut subs = vec![0u32; self.schema.dimension()];
        let complete = edges.try_for_each_connected(self.target.max_bonds, 0..edges.len(), |sub| {
            match self.target.sub_index.get(&subset_code(edges.ends(), &labels, &codes, sub)) {
                Some(&i) => {
                    subs[i] += 1;
                    true
                }
                None => false,
            }
        });
        let mut elements = [0u32; 4];
        for a in g.atoms() {
            if self.schema.atom_index(a.element).is_none() {
                return None;
            }
            elements[a.element.index()] += 1;
        }
        let bonds_ok = g.bonds().iter().all(|b| self.target.bond_allowed(labels[b.a], labels[b.b], b.order.code()));
        if !complete || !bonds_ok {
            return None;
        }
        let dense = g.to_dense();
        Some(GenerationState {
            code: canonical_form_dense(&dense),
            graph: dense,
            ends: edges.ends().to_vec(),
            codes,
            elements,
            subs,
            order: (0..g.atom_count()).collect(),
            sealed: vec![false; g.atom_count()],
            collapsed: None,
        })
    }

    /// Conservative test that some completion of `state` can match the
    /// vector; false means the branch is provably dead.
    pub fn satisfiable(&self, state: &GenerationState) -> bool {
        let t = &self.target;
        (0..4).all(|e| state.elements[e] <= t.elements[e])
            && state.ends.len() as u32 <= t.edges
            && state.cycle_rank() as u32 <= t.rings
            && t.sub_elements.iter().all(|&(i, _)| state.subs[i] <= t.v[i])
            && (state.cycle_rank() == 0 || t.rings_ok(&state.molecule()))
            && self.bounds_ok(state)
    }

    /// Bounds that look at what is still missing.
    fn bounds_ok(&self, s: &GenerationState) -> bool {
        let t = &self.target;
        let atoms_left: u32 = (0..4).map(|e| t.remaining(&s.elements, e)).sum();
        let edges_left = t.edges.saturating_sub(s.ends.len() as u32);
        // Each new atom brings at least one bond and at most its valence.
        let reach: u32 = (0..4)
            .map(|e| t.remaining(&s.elements, e) * Element::from_index(e).expect("index").valence_cap() as u32)
            .sum();
        if edges_left < atoms_left || edges_left > reach {
            return false;
        }
        if atoms_left > 0 && !(0..s.atom_count()).any(|v| !s.sealed[v] && s.free_valence(v) > 0) {
            return false;
        }
        // Every missing occurrence needs a new atom of one of its elements.
        t.sub_elements.iter().all(|&(i, mask)| {
            s.subs[i] >= t.v[i] || (0..4).any(|e| mask[e] && t.remaining(&s.elements, e) > 0)
        })
    }

    /// Whether `state` is a finished structure encoding exactly to the vector.
    pub fn is_solution(&self, state: &GenerationState) -> bool {
        state.atom_count() as u32 == self.target.atoms && encode(&state.molecule(), self.schema).0 == self.target.v
    }

    /// Children of `state` that pass the canonical test and the bounds,
    /// sorted by canonical code.
    pub fn extend(&self, state: &GenerationState) -> Vec<GenerationState> {
        let t = &self.target;
        if state.atom_count() as u32 >= t.atoms {
            return Vec::new();
        }
        let mut children = BTreeMap::new();
        let rings_left = t.rings.saturating_sub(state.cycle_rank() as u32) as usize;
        let single_slots: Option<Vec<usize>> = state.collapsed.as_ref().map(|(ti, coloring)| {
            slot_orbits(&self.config.templates[*ti], coloring).into_iter().map(|o| o[0]).collect()
        });
        for e in Element::ALL {
            if t.remaining(&state.elements, e.index()) == 0 {
                continue;
            }
            let label = Atom::new(e).label();
            let max_attach = (e.max_degree() as usize).min(rings_left + 1);
            let mut attach = Vec::new();
            self.attachments(state, label, e.valence_cap(), max_attach, 0, &mut attach, &mut |attach| {
                if attach.len() == 1 {
                    if let Some(reps) = &single_slots {
                        if !reps.contains(&attach[0].0) {
                            return;
                        }
                    }
                }
                if let Some(child) = self.make_child(state, e, attach) {
                    children.entry(child.code.clone()).or_insert(child);
                }
            });
        }
        children.into_values().collect()
    }

    /// Enumerates non-empty sets of (existing vertex, bond code) with
    /// increasing vertices.
    #[allow(clippy::too_many_arguments)]
    fn attachments(
        &self,
        state: &GenerationState,
        label: u8,
        budget: u8,
        max_attach: usize,
        start: usize,
        attach: &mut Vec<(usize, u8)>,
        f: &mut impl FnMut(&[(usize, u8)]),
    ) {
        if !attach.is_empty() {
            f(attach);
        }
        if attach.len() == max_attach {
            return;
        }
        for v in start..state.atom_count() {
            if state.sealed[v] {
                continue;
            }
            let free = state.free_valence(v).min(budget);
            for order in [BondOrder::Single, BondOrder::Double, BondOrder::Triple] {
                let o = order.valence();
                if o > free || !self.target.bond_allowed(state.graph.label(v), label, order.code()) {
                    continue;
                }
                attach.push((v, order.code()));
                self.attachments(state, label, budget - o, max_attach, v + 1, attach, f);
                attach.pop();
            }
        }
    }

    /// Adds one atom of `element` bonded as listed, then applies counting,
    /// bounds and the canonical test.
    fn make_child(&self, parent: &GenerationState, element: Element, attach: &[(usize, u8)]) -> Option<GenerationState> {
        let t = &self.target;
        if parent.ends.len() as u32 + attach.len() as u32 > t.edges
            || (parent.cycle_rank() + attach.len() - 1) as u32 > t.rings
        {
            return None;
        }
        let mut graph = parent.graph.clone();
        let new = graph.push_vertex(Atom::new(element).label());
        for &(v, c) in attach {
            graph.set_bond(v, new, c);
        }
        // New edges first, so rooted enumeration over 0..k visits exactly
        // the subsets that contain one of them.
        let mut ends: Vec<(usize, usize)> = attach.iter().map(|&(v, _)| (v, new)).collect();
        ends.extend_from_slice(&parent.ends);
        let mut codes: Vec<u8> = attach.iter().map(|&(_, c)| c).collect();
        codes.extend_from_slice(&parent.codes);
        let mut subs = parent.subs.clone();
        let edge_set = EdgeSet::new(ends.clone());
        let ok = edge_set.try_for_each_connected(t.max_bonds, 0..attach.len(), |sub| {
            match t.sub_index.get(&subset_code(&ends, graph.labels(), &codes, sub)) {
                Some(&i) => {
                    subs[i] += 1;
                    subs[i] <= t.v[i]
                }
                None => false,
            }
        });
        if !ok {
            return None;
        }
        let mut elements = parent.elements;
        elements[element.index()] += 1;
        let mut order = parent.order.clone();
        order.push(new);
        let mut sealed = parent.sealed.clone();
        sealed.push(false);
        let mut child = GenerationState {
            graph,
            ends,
            codes,
            elements,
            subs,
            code: parent.code.clone(),
            order,
            sealed,
            collapsed: None,
        };
        if attach.len() >= 2 && !t.rings_ok(&child.molecule()) {
            return None;
        }
        if !self.bounds_ok(&child) {
            return None;
        }
        let labeling = canonical_labeling_dense(&child.graph);
        if self.config.canonical_pruning {
            let d = deletion_vertex(&child.graph, &labeling.order)?;
            if d != new && canonical_form_dense(&child.graph.without_vertex(d)) != parent.code {
                return None;
            }
        }
        child.code = labeling.code;
        Some(child)
    }

    /// Attaches one atom of `element` to a collapsed template by a bond of
    /// `order`, once per slot orbit of the colored template. Other states
    /// yield nothing.
    pub fn expand_ring_vertex(&self, state: &GenerationState, element: Element, order: BondOrder) -> Vec<GenerationState> {
        let Some((ti, coloring)) = &state.collapsed else { return Vec::new() };
        let label = Atom::new(element).label();
        let mut out = BTreeMap::new();
        for orbit in slot_orbits(&self.config.templates[*ti], coloring) {
            let v = orbit[0];
            if state.free_valence(v) < order.valence() || !self.target.bond_allowed(state.graph.label(v), label, order.code()) {
                continue;
            }
            if let Some(child) = self.make_child(state, element, &[(v, order.code())]) {
                out.entry(child.code.clone()).or_insert(child);
            }
        }
        out.into_values().collect()
    }

    /// Depth-first search from every root, children in canonical-code order.
    pub fn run(&self) -> GenerationResult {
        let start = Instant::now();
        let mut sink: BTreeMap<CanonicalCode, MolecularGraph> = BTreeMap::new();
        let mut result = GenerationResult { structures: Vec::new(), nodes: 0, budget_exhausted: false, capped: false, duplicates: 0 };
        let cap = self.config.max_structures;
        'roots: for root in self.roots() {
            let mut stack = vec![root];
            while let Some(state) = stack.pop() {
                if state.atom_count() as u32 == self.target.atoms {
                    if self.is_solution(&state) {
                        if sink.contains_key(&state.code) {
                            result.duplicates += 1;
                        } else {
                            sink.insert(state.code.clone(), state.molecule());
                            if cap.is_some_and(|c| sink.len() >= c) {
                                result.capped = true;
                                break 'roots;
                            }
                        }
                    }
                    continue;
                }
                if self.config.node_budget.is_some_and(|b| result.nodes >= b)
                    || self.config.time_budget.is_some_and(|b| start.elapsed() >= b)
                {
                    result.budget_exhausted = true;
                    break 'roots;
                }
                result.nodes += 1;
                let children = self.extend(&state);
                stack.extend(children.into_iter().rev());
            }
        }
        result.structures = sink.into_values().collect();
        result
    }
}

/// Whether removing `v` disconnects the graph.
fn is_cut_vertex(g: &DenseGraph, v: usize) -> bool {
    let n = g.len();
    if n <= 2 {
        return false;
    }
    let start = if v == 0 { 1 } else { 0 };
    let mut seen = vec![false; n];
    seen[v] = true;
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for (w, _) in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                reached += 1;
                stack.push(w);
            }
        }
    }
    reached < n - 1
}

/// The canonical deletion vertex: the non-aromatic non-cut vertex with the
/// highest canonical position. `None` for single atoms and bare templates.
fn deletion_vertex(g: &DenseGraph, canonical_order: &[usize]) -> Option<usize> {
    if g.len() < 2 {
        return None;
    }
    canonical_order
        .iter()
        .rev()
        .copied()
        .find(|&v| g.label(v) % 2 == 0 && !is_cut_vertex(g, v))
}

/// The canonical deletion sequence from `g` down to its root (a single atom
/// or a bare aromatic system), starting with `g` itself.
pub fn construction_path(g: &MolecularGraph) -> Vec<MolecularGraph> {
    let mut out = vec![g.clone()];
    let mut dense = g.to_dense();
    while let Some(d) = deletion_vertex(&dense, &canonical_labeling_dense(&dense).order) {
        dense = dense.without_vertex(d);
        out.push(dense.to_molecular().expect("deleting a non-cut vertex keeps a valid graph"));
    }
    out
}

/// All non-isomorphic structures encoding to `v`, up to the configured cap
/// and budgets.
pub fn generate(v: &FeatureVector, schema: &FeatureSchema, config: &GenerationConfig) -> Result<GenerationResult, GenerationError> {
    Ok(Generator::new(v, schema, config)?.run())
}

/// [`generate`] over many vectors in parallel; output order follows input.
pub fn generate_all(
    vectors: &[FeatureVector],
    schema: &FeatureSchema,
    config: &GenerationConfig,
) -> Vec<Result<GenerationResult, GenerationError>> {
    vectors.par_iter().map(|v| generate(v, schema, config)).collect()
}

/// One generation step under the default configuration.
pub fn extend(state: &GenerationState, v: &FeatureVector, schema: &FeatureSchema) -> Vec<GenerationState> {
    let config = GenerationConfig::default();
    Generator::new(v, schema, &config).map(|g| g.extend(state)).unwrap_or_default()
}

pub fn satisfiable(state: &GenerationState, v: &FeatureVector, schema: &FeatureSchema) -> bool {
    let config = GenerationConfig::default();
    Generator::new(v, schema, &config).is_ok_and(|g| g.satisfiable(state))
}
