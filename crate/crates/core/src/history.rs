//! History information spaces, I-maps and restriction by a policy.
//!
//! A history is an initial-condition identifier followed by
//! `(action, observation)` pairs. The first pair carries [`NO_ACTION`]: no
//! action is issued before the first observation. Systems over histories use
//! letters `"(u,y)"` as edge labels.
//!
//! History names: the model-free root is `()`, other histories join their
//! segments with `.`, a segment being `y` after [`NO_ACTION`] and `u:y`
//! otherwise. A named initial condition `X0` is written as the prefix `X0|`
//! (its root is `X0|`).

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::HistError;
use crate::partition::Partition;
use crate::refine::round_sequence;
use crate::ts::{is_deterministic, quotient, Labeling, StateRelabeledTS, TransitionSystem, TsBuilder};

/// The placeholder action of the first pair, and the only action of
/// observation-only settings.
pub const NO_ACTION: &str = "()";

/// Edge label for the pair `(u, y)`.
pub fn letter(u: &str, y: &str) -> String {
    format!("({u},{y})")
}

/// Splits `"(u,y)"` at its last comma.
pub fn parse_letter(l: &str) -> Option<(&str, &str)> {
    l.strip_prefix('(')?.strip_suffix(')')?.rsplit_once(',')
}

pub(crate) fn check_name(n: &str) -> Result<(), HistError> {
    if n.is_empty() || n.contains([',', '.', ':', '|', '(', ')']) {
        Err(HistError::BadName(n.to_string()))
    } else {
        Ok(())
    }
}

fn check_action(u: &str) -> Result<(), HistError> {
    if u == NO_ACTION {
        Ok(())
    } else {
        check_name(u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HistoryState {
    pub initial: String,
    /// `(u, y)` pairs; the first action is always [`NO_ACTION`].
    pub pairs: Vec<(String, String)>,
}

impl HistoryState {
    pub fn root(initial: &str) -> Self {
        HistoryState {
            initial: initial.to_string(),
            pairs: Vec::new(),
        }
    }

    pub fn model_free() -> Self {
        HistoryState::root(NO_ACTION)
    }

    /// Number of observations.
    pub fn stage(&self) -> usize {
        self.pairs.len()
    }

    pub fn extended(&self, u: &str, y: &str) -> Self {
        let mut h = self.clone();
        h.pairs.push((u.to_string(), y.to_string()));
        h
    }

    pub fn observations(&self) -> impl Iterator<Item = &str> + '_ {
        self.pairs.iter().map(|(_, y)| y.as_str())
    }

    /// Actions `u_1 .. u_{k-1}` (the placeholder is skipped).
    pub fn actions(&self) -> impl Iterator<Item = &str> + '_ {
        self.pairs.iter().skip(1).map(|(u, _)| u.as_str())
    }

    pub fn last_observation(&self) -> Option<&str> {
        self.pairs.last().map(|(_, y)| y.as_str())
    }

    pub fn name(&self) -> String {
        let body: Vec<String> = self
            .pairs
            .iter()
            .map(|(u, y)| {
                if u == NO_ACTION {
                    y.clone()
                } else {
                    format!("{u}:{y}")
                }
            })
            .collect();
        let body = body.join(".");
        if self.initial == NO_ACTION {
            if body.is_empty() {
                NO_ACTION.to_string()
            } else {
                body
            }
        } else {
            format!("{}|{}", self.initial, body)
        }
    }

    pub fn parse(name: &str) -> Result<Self, HistError> {
        let (initial, body) = match name.split_once('|') {
            Some((i, b)) => {
                check_name(i)?;
                (i, b)
            }
            None if name == NO_ACTION => (NO_ACTION, ""),
            None => (NO_ACTION, name),
        };
        let mut h = HistoryState::root(initial);
        if body.is_empty() {
            return Ok(h);
        }
        for seg in body.split('.') {
            let (u, y) = match seg.split_once(':') {
                Some((u, y)) => {
                    check_name(u)?;
                    (u, y)
                }
                None => (NO_ACTION, seg),
            };
            check_name(y)?;
            h.pairs.push((u.to_string(), y.to_string()));
        }
        Ok(h)
    }
}

/// Per-node data of an unrolled tree, indexed like the tree's system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeInfo {
    pub parent: Option<usize>,
    pub stage: usize,
    /// Label index of the incoming edge.
    pub letter: Option<usize>,
}

/// All histories up to a depth bound, as an explicit tree.
#[derive(Clone, Debug)]
pub struct HistoryTree {
    actions: Vec<String>,
    observations: Vec<String>,
    initials: Vec<String>,
    depth: usize,
    system: TransitionSystem,
    info: Vec<NodeInfo>,
    /// Node indices sorted by stage, parents before children.
    order: Vec<usize>,
}

/// Nodes of a tree with `u` actions, `y` observations, `i0` roots and
/// depth `d`: `i0 * (1 + y * sum_{k<d} (u*y)^k)`.
pub fn tree_size(u: usize, y: usize, i0: usize, d: usize) -> u128 {
    let uy = (u as u128).saturating_mul(y as u128);
    let mut level = y as u128;
    let mut total: u128 = 1;
    for _ in 0..d {
        total = total.saturating_add(level);
        level = level.saturating_mul(uy);
    }
    total.saturating_mul(i0 as u128)
}

fn sorted_unique<A: AsRef<str>>(xs: &[A]) -> Vec<String> {
    let set: BTreeSet<String> = xs.iter().map(|x| x.as_ref().to_string()).collect();
    set.into_iter().collect()
}

/// Unrolls all histories of length at most `depth`. Observation-only
/// settings pass `[NO_ACTION]` as the action set.
pub fn unroll<A: AsRef<str>, B: AsRef<str>, C: AsRef<str>>(
    actions: &[A],
    observations: &[B],
    initials: &[C],
    depth: usize,
    limit: usize,
) -> Result<HistoryTree, HistError> {
    if depth == 0 {
        return Err(HistError::ZeroDepth);
    }
    let actions = sorted_unique(actions);
    let observations = sorted_unique(observations);
    let initials = sorted_unique(initials);
    if actions.is_empty() || observations.is_empty() || initials.is_empty() {
        return Err(HistError::EmptyAlphabet);
    }
    for u in &actions {
        check_action(u)?;
    }
    for y in &observations {
        check_name(y)?;
    }
    for i in &initials {
        check_action(i)?;
    }
    let nodes = tree_size(actions.len(), observations.len(), initials.len(), depth);
    if nodes > limit as u128 {
        return Err(HistError::SizeLimit { nodes, limit });
    }

    let mut b = TsBuilder::new();
    let mut first_letters = Vec::new();
    for y in &observations {
        let l = letter(NO_ACTION, y);
        first_letters.push((b.label(l.clone()), y.as_str()));
    }
    let mut later_letters = Vec::new();
    for u in &actions {
        for y in &observations {
            let l = letter(u, y);
            later_letters.push((b.label(l.clone()), u.as_str(), y.as_str()));
        }
    }
    // Builder ids, parent builder id, stage, builder label id.
    let mut raw: Vec<(usize, Option<usize>, usize, Option<usize>)> = Vec::new();
    let mut queue: VecDeque<(usize, String, usize)> = VecDeque::new();
    for i in &initials {
        let h = HistoryState::root(i);
        let name = h.name();
        let id = b.state(name.clone());
        raw.push((id, None, 0, None));
        queue.push_back((id, name, 0));
    }
    while let Some((id, name, stage)) = queue.pop_front() {
        if stage == depth {
            continue;
        }
        let mut children: Vec<(usize, String)> = Vec::new();
        if stage == 0 {
            for &(l, y) in &first_letters {
                let child = if name == NO_ACTION {
                    y.to_string()
                } else {
                    format!("{name}{y}")
                };
                children.push((l, child));
            }
        } else {
            for &(l, u, y) in &later_letters {
                let seg = if u == NO_ACTION {
                    y.to_string()
                } else {
                    format!("{u}:{y}")
                };
                children.push((l, format!("{name}.{seg}")));
            }
        }
        for (l, child) in children {
            let cid = b.state(child.clone());
            b.edge_ids(id, l, cid);
            raw.push((cid, Some(id), stage + 1, Some(l)));
            queue.push_back((cid, child, stage + 1));
        }
    }
    let (mut system, state_rank, label_rank) = b.build_with_ranks();
    let mut info = alloc::vec![
        NodeInfo {
            parent: None,
            stage: 0,
            letter: None
        };
        system.num_states()
    ];
    let mut order = Vec::with_capacity(raw.len());
    for &(id, parent, stage, l) in &raw {
        let s = state_rank[id];
        info[s] = NodeInfo {
            parent: parent.map(|p| state_rank[p]),
            stage,
            letter: l.map(|l| label_rank[l]),
        };
        order.push(s);
    }
    if initials.len() == 1 {
        system = system.with_initial_index(Some(order[0]));
    }
    Ok(HistoryTree {
        actions,
        observations,
        initials,
        depth,
        system,
        info,
        order,
    })
}

impl HistoryTree {
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn initials(&self) -> &[String] {
        &self.initials
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }

    /// The tree as a transition system; states are history names.
    pub fn system(&self) -> &TransitionSystem {
        &self.system
    }

    pub fn node(&self, s: usize) -> NodeInfo {
        self.info[s]
    }

    /// Node indices, parents before children.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn history(&self, s: usize) -> HistoryState {
        let mut pairs = Vec::new();
        let mut cur = s;
        while let NodeInfo {
            parent: Some(p),
            letter: Some(l),
            ..
        } = self.info[cur]
        {
            let (u, y) = parse_letter(self.system.label_name(l)).unwrap();
            pairs.push((u.to_string(), y.to_string()));
            cur = p;
        }
        pairs.reverse();
        let initial = match self.system.state_name(cur).strip_suffix('|') {
            Some(i) => i.to_string(),
            None => NO_ACTION.to_string(),
        };
        HistoryState { initial, pairs }
    }

    pub fn node_of(&self, h: &HistoryState) -> Option<usize> {
        self.system.state_index(&h.name())
    }

    /// Labels every node by folding `step` from each root, so the cost is one
    /// step per node.
    pub fn fold<K: Clone>(
        &self,
        root: impl Fn(&str) -> K,
        step: impl Fn(&K, &str, &str) -> K,
    ) -> Vec<K> {
        let mut out: Vec<Option<K>> = alloc::vec![None; self.len()];
        for &s in &self.order {
            let v = match self.info[s] {
                NodeInfo {
                    parent: Some(p),
                    letter: Some(l),
                    ..
                } => {
                    let (u, y) = parse_letter(self.system.label_name(l)).unwrap();
                    step(out[p].as_ref().unwrap(), u, y)
                }
                _ => {
                    let name = self.system.state_name(s);
                    root(name.strip_suffix('|').unwrap_or(NO_ACTION))
                }
            };
            out[s] = Some(v);
        }
        out.into_iter().map(Option::unwrap).collect()
    }
}

/// A map from histories to derived information states.
pub trait IMap {
    fn label(&self, h: &HistoryState) -> Option<String>;

    /// Labels every node of `tree`.
    fn label_tree(&self, tree: &HistoryTree) -> Result<Labeling, HistError> {
        let values = (0..tree.len())
            .map(|s| {
                let h = tree.history(s);
                self.label(&h).ok_or_else(|| HistError::PartialMap(h.name()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Labeling::from_values(values))
    }
}

impl<F: Fn(&HistoryState) -> Option<String>> IMap for F {
    fn label(&self, h: &HistoryState) -> Option<String> {
        self(h)
    }
}

/// An I-map given extensionally, keyed by history name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableMap(pub BTreeMap<String, String>);

impl IMap for TableMap {
    fn label(&self, h: &HistoryState) -> Option<String> {
        self.0.get(&h.name()).cloned()
    }
}

/// The tree labeled by `m`.
pub fn apply_imap<M: IMap + ?Sized>(tree: &HistoryTree, m: &M) -> Result<StateRelabeledTS, HistError> {
    let labeling = m.label_tree(tree)?;
    Ok(StateRelabeledTS::new(tree.system.clone(), labeling)?)
}

/// The quotient of the tree by `m`; it may be nondeterministic.
pub fn derive_its<M: IMap + ?Sized>(tree: &HistoryTree, m: &M) -> Result<TransitionSystem, HistError> {
    Ok(quotient(&apply_imap(tree, m)?))
}

fn letters_of(its: &TransitionSystem) -> Result<Vec<(&str, &str)>, HistError> {
    its.labels()
        .iter()
        .map(|l| parse_letter(l).ok_or_else(|| HistError::NotALetter(l.clone())))
        .collect()
}

fn with_edges(
    its: &TransitionSystem,
    labels: impl IntoIterator<Item = String>,
    edges: impl IntoIterator<Item = (usize, String, usize)>,
) -> TransitionSystem {
    let mut b = TsBuilder::new();
    for s in its.states() {
        b.state(s.clone());
    }
    for l in labels {
        b.label(l);
    }
    for (f, l, t) in edges {
        b.edge(its.state_name(f), &l, its.state_name(t));
    }
    if let Some(i) = its.initial() {
        b.initial(its.state_name(i));
    }
    b.build()
}

/// Keeps the transitions `(ι, (u,y), ι')` with `u = π(ι)`. States and
/// labels are unchanged.
pub fn restrict(its: &TransitionSystem, pi: &Labeling) -> Result<TransitionSystem, HistError> {
    if pi.len() != its.num_states() {
        return Err(crate::error::TsError::LabelingSize {
            expected: its.num_states(),
            found: pi.len(),
        }
        .into());
    }
    let letters = letters_of(its)?;
    let edges = its
        .edges()
        .iter()
        .filter(|e| letters[e.label].0 == pi.get(e.from))
        .map(|e| (e.from, its.label_name(e.label).to_string(), e.to));
    Ok(with_edges(its, its.labels().iter().cloned(), edges))
}

/// Replaces every letter `(u,y)` by `y`.
pub fn project_observations(its: &TransitionSystem) -> Result<TransitionSystem, HistError> {
    let letters = letters_of(its)?;
    let ys: BTreeSet<String> = letters.iter().map(|(_, y)| y.to_string()).collect();
    let edges = its
        .edges()
        .iter()
        .map(|e| (e.from, letters[e.label].1.to_string(), e.to));
    Ok(with_edges(its, ys, edges))
}

/// Strong restriction: `φ_π(ι, y) = φ(ι, π(ι), y)`, labels projected to `Y`.
pub fn strong_restrict(dits: &TransitionSystem, pi: &Labeling) -> Result<TransitionSystem, HistError> {
    if !is_deterministic(dits) {
        dits.successor_table()?;
    }
    project_observations(&restrict(dits, pi)?)
}

/// Depth of every state below the states without predecessors.
pub fn source_depths(ts: &TransitionSystem) -> Vec<Option<usize>> {
    let mut has_pred = alloc::vec![false; ts.num_states()];
    for e in ts.edges() {
        if e.from != e.to {
            has_pred[e.to] = true;
        }
    }
    let mut depth = alloc::vec![None; ts.num_states()];
    let mut queue = VecDeque::new();
    for s in 0..ts.num_states() {
        if !has_pred[s] {
            depth[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = depth[s].unwrap();
        for e in ts.out_edges(s) {
            if depth[e.to].is_none() {
                depth[e.to] = Some(d + 1);
                queue.push_back(e.to);
            }
        }
    }
    depth
}

/// Sufficient refinement of a labeled tree truncated at `depth`.
#[derive(Clone, Debug)]
pub struct TreeRefinement {
    /// Rounds of lookahead used to classify the core.
    pub lookahead: usize,
    /// States of stage at most `depth - lookahead`, ascending.
    pub core: Vec<usize>,
    /// Classes of the core states, aligned with `core`.
    pub partition: Partition,
    /// The subtree on `core`, labeled by class.
    pub labeled: StateRelabeledTS,
    /// Quotient of `labeled`: the derived ITS.
    pub quotient: TransitionSystem,
}

/// Minimal sufficient refinement on a truncated tree.
///
/// Leaves have no successors, so the plain refinement would separate every
/// stage from the next. Instead a node of stage `≤ D - L` is classified by
/// its labels along all words of length `≤ L`, which its subtree contains in
/// full. `L` is the least value for which one more round changes nothing on
/// stages `≤ D - L - 1`; that makes the classes sufficient on the core. For a
/// regular labeling and a deep enough tree they are the classes of the
/// infinite tree.
pub fn tree_msr(srts: &StateRelabeledTS, depth: usize) -> Result<TreeRefinement, HistError> {
    let ts = &srts.system;
    let stage = source_depths(ts);
    let seq = round_sequence(srts, depth)?;
    let upto = |bound: usize| -> Vec<usize> {
        (0..ts.num_states())
            .filter(|&s| stage[s].is_some_and(|k| k <= bound))
            .collect()
    };
    let lookahead = (0..depth)
        .find(|&l| {
            let keep = upto(depth - l - 1);
            seq[l].restrict(&keep) == seq[l + 1].restrict(&keep)
        })
        .ok_or(HistError::TooShallow(depth))?;
    let core = upto(depth - lookahead);
    let partition = seq[lookahead].restrict(&core);
    let sub = ts.induced(&core);
    let labeling = Labeling::from_partition(&sub, &partition);
    let labeled = StateRelabeledTS::new(sub, labeling)?;
    let quotient = quotient(&labeled);
    Ok(TreeRefinement {
        lookahead,
        core,
        partition,
        labeled,
        quotient,
    })
}
