//! Transition systems, labelings and the sufficiency predicate.
//!
//! A [`TransitionSystem`] is a triple of a state set, an edge-label set and a
//! ternary transition relation. States and labels are opaque strings kept in
//! sorted order, so a state's index doubles as its rank under lexicographic
//! order. All algorithms work on indices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::TsError;
use crate::partition::Partition;

/// One transition `(from, label, to)` by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub label: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    states: Vec<String>,
    labels: Vec<String>,
    /// Sorted by `(from, label, to)`, no duplicates.
    edges: Vec<Edge>,
    /// `offsets[s]..offsets[s + 1]` is the slice of `edges` leaving `s`.
    offsets: Vec<usize>,
    initial: Option<usize>,
}

impl TransitionSystem {
    /// Builds a system from named parts. Duplicate transitions are collapsed.
    pub fn new<S, L, T>(states: S, labels: L, transitions: T) -> Result<Self, TsError>
    where
        S: IntoIterator,
        S::Item: Into<String>,
        L: IntoIterator,
        L::Item: Into<String>,
        T: IntoIterator,
        T::Item: TransitionTriple,
    {
        let mut b = TsBuilder::new();
        for s in states {
            let s = s.into();
            if b.has_state(&s) {
                return Err(TsError::DuplicateState(s));
            }
            b.state(s);
        }
        for l in labels {
            let l = l.into();
            if b.has_label(&l) {
                return Err(TsError::DuplicateLabel(l));
            }
            b.label(l);
        }
        for t in transitions {
            let (s, l, d) = t.parts();
            let s = b.state_id(s).ok_or_else(|| TsError::UnknownState(s.to_string()))?;
            let l = b.label_id(l).ok_or_else(|| TsError::UnknownLabel(l.to_string()))?;
            let d = b.state_id(d).ok_or_else(|| TsError::UnknownState(d.to_string()))?;
            b.edge_ids(s, l, d);
        }
        Ok(b.build())
    }

    pub fn with_initial(mut self, state: &str) -> Result<Self, TsError> {
        let id = self
            .state_index(state)
            .ok_or_else(|| TsError::UnknownState(state.to_string()))?;
        self.initial = Some(id);
        Ok(self)
    }

    pub fn with_initial_index(mut self, state: Option<usize>) -> Self {
        self.initial = state;
        self
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> Option<usize> {
        self.initial
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn label_name(&self, l: usize) -> &str {
        &self.labels[l]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    /// Transitions leaving `s`, sorted by label then target.
    pub fn out_edges(&self, s: usize) -> &[Edge] {
        &self.edges[self.offsets[s]..self.offsets[s + 1]]
    }

    pub fn successors(&self, s: usize, label: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges(s)
            .iter()
            .filter(move |e| e.label == label)
            .map(|e| e.to)
    }

    /// The first (smallest) `label`-successor of `s`, if any.
    pub fn successor(&self, s: usize, label: usize) -> Option<usize> {
        self.successors(s, label).next()
    }

    pub fn has_edge(&self, from: usize, label: usize, to: usize) -> bool {
        self.out_edges(from)
            .binary_search(&Edge { from, label, to })
            .is_ok()
    }

    /// Successor by names; `None` when any name is unknown or no edge exists.
    pub fn successor_by_name(&self, s: &str, label: &str) -> Option<&str> {
        let s = self.state_index(s)?;
        let l = self.label_index(label)?;
        self.successor(s, l).map(|t| self.state_name(t))
    }

    pub fn named_edges(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.edges.iter().map(move |e| {
            (
                self.state_name(e.from),
                self.label_name(e.label),
                self.state_name(e.to),
            )
        })
    }

    /// Dense successor table for deterministic systems: `table[s][l]`.
    pub fn successor_table(&self) -> Result<Vec<Vec<Option<usize>>>, TsError> {
        let mut table = alloc::vec![alloc::vec![None; self.labels.len()]; self.states.len()];
        for e in &self.edges {
            let slot = &mut table[e.from][e.label];
            if slot.is_some() {
                return Err(TsError::Nondeterministic {
                    state: self.states[e.from].clone(),
                    label: self.labels[e.label].clone(),
                });
            }
            *slot = Some(e.to);
        }
        Ok(table)
    }

    /// States reachable from `roots`, as a sorted list of indices.
    pub fn reachable_from(&self, roots: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut seen = alloc::vec![false; self.states.len()];
        let mut stack: Vec<usize> = Vec::new();
        for r in roots {
            if !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
        while let Some(s) = stack.pop() {
            for e in self.out_edges(s) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        (0..self.states.len()).filter(|&s| seen[s]).collect()
    }

    /// The subsystem induced by `keep` (state indices). Labels are kept as is.
    pub fn induced(&self, keep: &[usize]) -> TransitionSystem {
        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let mut b = TsBuilder::new();
        for &s in &keep_set {
            b.state(self.states[s].clone());
        }
        for l in &self.labels {
            b.label(l.clone());
        }
        for e in &self.edges {
            if keep_set.contains(&e.from) && keep_set.contains(&e.to) {
                b.edge(&self.states[e.from], &self.labels[e.label], &self.states[e.to]);
            }
        }
        let mut ts = b.build();
        if let Some(i) = self.initial {
            if keep_set.contains(&i) {
                ts.initial = ts.state_index(&self.states[i]);
            }
        }
        ts
    }
}

/// Anything that names a transition `(from, label, to)`.
pub trait TransitionTriple {
    fn parts(&self) -> (&str, &str, &str);
}

impl<A: AsRef<str>, B: AsRef<str>, C: AsRef<str>> TransitionTriple for (A, B, C) {
    fn parts(&self) -> (&str, &str, &str) {
        (self.0.as_ref(), self.1.as_ref(), self.2.as_ref())
    }
}

impl<A: AsRef<str>> TransitionTriple for [A; 3] {
    fn parts(&self) -> (&str, &str, &str) {
        (self[0].as_ref(), self[1].as_ref(), self[2].as_ref())
    }
}

/// Incremental construction by name. Unknown names are added on the fly by
/// [`TsBuilder::edge`]; `build` sorts everything and renumbers.
#[derive(Default, Debug, Clone)]
pub struct TsBuilder {
    states: BTreeMap<String, usize>,
    state_names: Vec<String>,
    labels: BTreeMap<String, usize>,
    label_names: Vec<String>,
    edges: Vec<(usize, usize, usize)>,
    initial: Option<usize>,
}

impl TsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_state(&self, name: &str) -> bool {
        self.states.contains_key(name)
    }

    pub fn has_label(&self, name: &str) -> bool {
        self.labels.contains_key(name)
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.states.get(name).copied()
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.labels.get(name).copied()
    }

    /// Adds (or finds) a state and returns its provisional id.
    pub fn state(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        if let Some(&id) = self.states.get(&name) {
            return id;
        }
        let id = self.state_names.len();
        self.state_names.push(name.clone());
        self.states.insert(name, id);
        id
    }

    pub fn label(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        if let Some(&id) = self.labels.get(&name) {
            return id;
        }
        let id = self.label_names.len();
        self.label_names.push(name.clone());
        self.labels.insert(name, id);
        id
    }

    pub fn edge(&mut self, from: &str, label: &str, to: &str) {
        let f = self.state(from);
        let l = self.label(label);
        let t = self.state(to);
        self.edges.push((f, l, t));
    }

    pub fn edge_ids(&mut self, from: usize, label: usize, to: usize) {
        self.edges.push((from, label, to));
    }

    pub fn initial(&mut self, name: &str) {
        let id = self.state(name);
        self.initial = Some(id);
    }

    pub fn build(self) -> TransitionSystem {
        self.build_with_ranks().0
    }

    /// Builds and also returns the final index of every provisional state
    /// id and label id.
    pub fn build_with_ranks(self) -> (TransitionSystem, Vec<usize>, Vec<usize>) {
        // BTreeMap iteration is sorted, so the final index is the rank.
        let mut state_rank = alloc::vec![0; self.state_names.len()];
        let states: Vec<String> = self
            .states
            .iter()
            .enumerate()
            .map(|(rank, (name, &id))| {
                state_rank[id] = rank;
                name.clone()
            })
            .collect();
        let mut label_rank = alloc::vec![0; self.label_names.len()];
        let labels: Vec<String> = self
            .labels
            .iter()
            .enumerate()
            .map(|(rank, (name, &id))| {
                label_rank[id] = rank;
                name.clone()
            })
            .collect();
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(f, l, t)| Edge {
                from: state_rank[f],
                label: label_rank[l],
                to: state_rank[t],
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let offsets = offsets_for(states.len(), &edges);
        let ts = TransitionSystem {
            states,
            labels,
            edges,
            offsets,
            initial: self.initial.map(|i| state_rank[i]),
        };
        (ts, state_rank, label_rank)
    }
}

fn offsets_for(n: usize, edges: &[Edge]) -> Vec<usize> {
    let mut offsets = alloc::vec![0; n + 1];
    for e in edges {
        offsets[e.from + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

/// True iff every `(s, λ)` has at most one successor.
pub fn is_deterministic(ts: &TransitionSystem) -> bool {
    ts.edges
        .windows(2)
        .all(|w| !(w[0].from == w[1].from && w[0].label == w[1].label))
}

/// True iff every `(s, λ)` has at least one successor.
pub fn is_full(ts: &TransitionSystem) -> bool {
    (0..ts.num_states()).all(|s| {
        let mut seen = alloc::vec![false; ts.num_labels()];
        for e in ts.out_edges(s) {
            seen[e.label] = true;
        }
        seen.into_iter().all(|b| b)
    })
}

/// A total map from the states of one system to string labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    values: Vec<String>,
}

impl Labeling {
    /// Labels aligned with state indices.
    pub fn from_values(values: Vec<String>) -> Self {
        Labeling { values }
    }

    /// Builds a labeling from a `state name -> label` map, which must cover
    /// every state of `ts`. Extra keys are rejected.
    pub fn from_map(ts: &TransitionSystem, map: &BTreeMap<String, String>) -> Result<Self, TsError> {
        for k in map.keys() {
            if ts.state_index(k).is_none() {
                return Err(TsError::UnknownState(k.clone()));
            }
        }
        let values = ts
            .states()
            .iter()
            .map(|s| map.get(s).cloned().ok_or_else(|| TsError::Unlabeled(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Labeling { values })
    }

    pub fn from_fn(ts: &TransitionSystem, mut f: impl FnMut(usize, &str) -> String) -> Self {
        Labeling {
            values: ts.states().iter().enumerate().map(|(i, s)| f(i, s)).collect(),
        }
    }

    /// Each state labeled by its own name.
    pub fn identity(ts: &TransitionSystem) -> Self {
        Labeling {
            values: ts.states().to_vec(),
        }
    }

    pub fn constant(ts: &TransitionSystem, label: &str) -> Self {
        Labeling {
            values: alloc::vec![label.to_string(); ts.num_states()],
        }
    }

    /// Labels blocks of `p` by the name of their lexicographically least state.
    pub fn from_partition(ts: &TransitionSystem, p: &Partition) -> Self {
        let reps: Vec<usize> = p.blocks().iter().map(|b| b[0]).collect();
        Labeling {
            values: (0..ts.num_states())
                .map(|s| ts.state_name(reps[p.block_of(s)]).to_string())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, s: usize) -> &str {
        &self.values[s]
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn partition(&self) -> Partition {
        Partition::from_keys(&self.values)
    }

    /// Distinct label values, sorted.
    pub fn codomain(&self) -> BTreeSet<&str> {
        self.values.iter().map(String::as_str).collect()
    }
}

/// A transition system with a state labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateRelabeledTS {
    pub system: TransitionSystem,
    pub labeling: Labeling,
}

impl StateRelabeledTS {
    pub fn new(system: TransitionSystem, labeling: Labeling) -> Result<Self, TsError> {
        if labeling.len() != system.num_states() {
            return Err(TsError::LabelingSize {
                expected: system.num_states(),
                found: labeling.len(),
            });
        }
        Ok(StateRelabeledTS { system, labeling })
    }

    pub fn label_of(&self, s: usize) -> &str {
        self.labeling.get(s)
    }

    /// Same system, relabeled with the blocks of `p` (least-member names).
    pub fn relabel_by(&self, p: &Partition) -> StateRelabeledTS {
        StateRelabeledTS {
            system: self.system.clone(),
            labeling: Labeling::from_partition(&self.system, p),
        }
    }
}

/// A violation of sufficiency: `σ(s) = σ(t)` and `(s,λ,s')`, `(t,λ,t')`
/// are transitions with `σ(s') ≠ σ(t')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SufficiencyWitness {
    pub s: usize,
    pub t: usize,
    pub label: usize,
    pub s_next: usize,
    pub t_next: usize,
}

impl SufficiencyWitness {
    pub fn names<'a>(&self, ts: &'a TransitionSystem) -> [&'a str; 5] {
        [
            ts.state_name(self.s),
            ts.state_name(self.t),
            ts.label_name(self.label),
            ts.state_name(self.s_next),
            ts.state_name(self.t_next),
        ]
    }

    /// Re-checks the witness against the system and labeling.
    pub fn is_violation(&self, srts: &StateRelabeledTS) -> bool {
        let ts = &srts.system;
        srts.label_of(self.s) == srts.label_of(self.t)
            && ts.has_edge(self.s, self.label, self.s_next)
            && ts.has_edge(self.t, self.label, self.t_next)
            && srts.label_of(self.s_next) != srts.label_of(self.t_next)
    }
}

/// Sufficiency check. On failure returns the lexicographically smallest
/// witness `(s, t, λ, s', t')` under sorted identifiers.
///
/// Only transitions that exist are compared, so a missing `(s, λ)` never
/// violates sufficiency.
pub fn is_sufficient(srts: &StateRelabeledTS) -> Result<(), SufficiencyWitness> {
    let ts = &srts.system;
    let part = srts.labeling.partition();
    let blocks = part.blocks();
    let mut best: Option<SufficiencyWitness> = None;
    // For each (block, λ) collect the successor blocks; a conflict needs two
    // distinct successor blocks.
    for block in &blocks {
        for label in 0..ts.num_labels() {
            let mut succ_blocks: BTreeSet<usize> = BTreeSet::new();
            for &s in block {
                for to in ts.successors(s, label) {
                    succ_blocks.insert(part.block_of(to));
                }
            }
            if succ_blocks.len() < 2 {
                continue;
            }
            // Smallest s, then smallest t, then smallest successors.
            let candidate = smallest_witness(ts, &part, block, label);
            if let Some(c) = candidate {
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            }
        }
    }
    match best {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

fn smallest_witness(
    ts: &TransitionSystem,
    part: &Partition,
    block: &[usize],
    label: usize,
) -> Option<SufficiencyWitness> {
    // block is sorted ascending.
    for &s in block {
        for &t in block {
            for s_next in ts.successors(s, label) {
                for t_next in ts.successors(t, label) {
                    if part.block_of(s_next) != part.block_of(t_next) {
                        return Some(SufficiencyWitness {
                            s,
                            t,
                            label,
                            s_next,
                            t_next,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Checks one specific candidate pair `(s, t, λ)` for a violation.
pub fn violation_between(
    srts: &StateRelabeledTS,
    s: usize,
    t: usize,
    label: usize,
) -> Option<SufficiencyWitness> {
    if srts.label_of(s) != srts.label_of(t) {
        return None;
    }
    let ts = &srts.system;
    for s_next in ts.successors(s, label) {
        for t_next in ts.successors(t, label) {
            if srts.label_of(s_next) != srts.label_of(t_next) {
                return Some(SufficiencyWitness {
                    s,
                    t,
                    label,
                    s_next,
                    t_next,
                });
            }
        }
    }
    None
}

/// Quotient by the labeling: one state per label value, and a transition
/// `([s], λ, [s'])` for every `(s, λ, s')`. States of the result are named by
/// label values.
pub fn quotient(srts: &StateRelabeledTS) -> TransitionSystem {
    let ts = &srts.system;
    let mut b = TsBuilder::new();
    for v in srts.labeling.values() {
        b.state(v.clone());
    }
    for l in ts.labels() {
        b.label(l.clone());
    }
    for e in ts.edges() {
        b.edge(srts.label_of(e.from), ts.label_name(e.label), srts.label_of(e.to));
    }
    if let Some(i) = ts.initial() {
        b.initial(srts.label_of(i));
    }
    b.build()
}

/// The quotient together with its identity labeling.
pub fn quotient_srts(srts: &StateRelabeledTS) -> StateRelabeledTS {
    let q = quotient(srts);
    let labeling = Labeling::identity(&q);
    StateRelabeledTS {
        system: q,
        labeling,
    }
}

/// The quotient by `classes`, each class labeled by the `outer` value its
/// members share. Fails unless `classes` refines `outer`.
pub fn quotient_labeled(classes: &StateRelabeledTS, outer: &Labeling) -> Result<StateRelabeledTS, TsError> {
    if outer.len() != classes.labeling.len() {
        return Err(TsError::LabelingSize {
            expected: classes.labeling.len(),
            found: outer.len(),
        });
    }
    let mut value: BTreeMap<&str, &str> = BTreeMap::new();
    for s in 0..outer.len() {
        let v = value.entry(classes.label_of(s)).or_insert(outer.get(s));
        if *v != outer.get(s) {
            return Err(TsError::InvalidPartition("classes do not refine the outer labeling"));
        }
    }
    let q = quotient(classes);
    let labeling = Labeling::from_fn(&q, |_, n| value[n].to_string());
    Ok(StateRelabeledTS {
        system: q,
        labeling,
    })
}
