//! Minimal sufficient refinement of a labeling over a deterministic system.
//!
//! Moore-style splitting: start from the labeling's partition and split any
//! block whose members disagree, for some edge label, on the block of their
//! successor. A state with a successor and a state without one also
//! disagree. The fixpoint is the coarsest sufficient refinement, and it does
//! not depend on the order in which blocks are visited.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::RefineError;
use crate::partition::{refines, Partition};
use crate::ts::{is_sufficient, Labeling, StateRelabeledTS, TransitionSystem};

/// Order in which blocks are visited during a splitting pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlockOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementResult {
    pub partition: Partition,
    /// Each state labeled by the lexicographically least member of its block.
    pub labeling: Labeling,
    /// Number of passes that split at least one block.
    pub iterations: usize,
}

pub fn minimal_sufficient_refinement(
    srts: &StateRelabeledTS,
) -> Result<RefinementResult, RefineError> {
    minimal_sufficient_refinement_ordered(srts, BlockOrder::Ascending)
}

pub fn minimal_sufficient_refinement_ordered(
    srts: &StateRelabeledTS,
    order: BlockOrder,
) -> Result<RefinementResult, RefineError> {
    let table = successor_table(&srts.system)?;
    let (partition, iterations) = split_until(&table, srts.labeling.partition(), order);
    Ok(RefinementResult {
        labeling: Labeling::from_partition(&srts.system, &partition),
        partition,
        iterations,
    })
}

/// At most `rounds` synchronous splitting rounds. After `r` rounds two states
/// share a block iff their labels agree along every word of length `≤ r`
/// (a missing successor counting as its own value).
pub fn refine_rounds(srts: &StateRelabeledTS, rounds: usize) -> Result<Partition, RefineError> {
    let table = successor_table(&srts.system)?;
    let mut p = srts.labeling.partition();
    for _ in 0..rounds {
        let next = synchronous_round(&table, &p);
        if next == p {
            break;
        }
        p = next;
    }
    Ok(p)
}

/// The partitions after `0, 1, ..., max_rounds` synchronous rounds.
pub fn round_sequence(
    srts: &StateRelabeledTS,
    max_rounds: usize,
) -> Result<Vec<Partition>, RefineError> {
    let table = successor_table(&srts.system)?;
    let mut seq = alloc::vec![srts.labeling.partition()];
    for _ in 0..max_rounds {
        let last = seq.last().unwrap();
        let next = synchronous_round(&table, last);
        seq.push(next);
    }
    Ok(seq)
}

/// Checks that `result` is sufficient, refines the input labeling, and that
/// no strictly coarser sufficient refinement exists.
///
/// The last condition is tested pair by pair: merge two blocks, close the
/// merge under successors (states identified must have identified
/// successors), and require the closure to mix two input labels. Merging
/// just the pair is not enough: on a 4-cycle labeled by parity the discrete
/// partition survives every single pairwise merge yet is not minimal.
pub fn verify_minimality(srts: &StateRelabeledTS, result: &Partition) -> bool {
    let base = srts.labeling.partition();
    if result.len() != base.len() {
        return false;
    }
    if is_sufficient(&srts.relabel_by(result)).is_err() || !refines(result, &base).unwrap_or(false)
    {
        return false;
    }
    let ts = &srts.system;
    let blocks = result.blocks();
    for a in 0..blocks.len() {
        for b in a + 1..blocks.len() {
            if base.block_of(blocks[a][0]) != base.block_of(blocks[b][0]) {
                continue;
            }
            if merge_closure_respects(ts, result, &base, blocks[a][0], blocks[b][0]) {
                return false;
            }
        }
    }
    true
}

/// Identifies `x` and `y` on top of `p`, closes under successors, and
/// reports whether the closure still refines `base`.
fn merge_closure_respects(
    ts: &TransitionSystem,
    p: &Partition,
    base: &Partition,
    x: usize,
    y: usize,
) -> bool {
    let n = ts.num_states();
    let mut uf = UnionFind::new(n);
    for block in p.blocks() {
        for w in block.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut pending = alloc::vec![(x, y)];
    while let Some((s, t)) = pending.pop() {
        let (rs, rt) = (uf.find(s), uf.find(t));
        if rs == rt {
            continue;
        }
        // Representatives' successors stand for their whole class because
        // the classes were closed before this merge.
        for l in 0..ts.num_labels() {
            if let (Some(a), Some(b)) = (first_succ(ts, &mut uf, rs, l), first_succ(ts, &mut uf, rt, l)) {
                pending.push((a, b));
            }
        }
        uf.union_members(rs, rt);
    }
    (0..n).all(|s| base.block_of(s) == base.block_of(uf.find(s)))
}

fn first_succ(ts: &TransitionSystem, uf: &mut UnionFind, root: usize, label: usize) -> Option<usize> {
    let members = uf.members(root).to_vec();
    members.into_iter().find_map(|m| ts.successor(m, label))
}

struct UnionFind {
    parent: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            members: (0..n).map(|i| alloc::vec![i]).collect(),
        }
    }

    fn find(&mut self, mut s: usize) -> usize {
        while self.parent[s] != s {
            self.parent[s] = self.parent[self.parent[s]];
            s = self.parent[s];
        }
        s
    }

    fn members(&mut self, root: usize) -> &[usize] {
        &self.members[root]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.union_members(ra, rb);
        }
    }

    /// Both arguments must be roots.
    fn union_members(&mut self, ra: usize, rb: usize) {
        let (keep, gone) = if self.members[ra].len() >= self.members[rb].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[gone] = keep;
        let moved = core::mem::take(&mut self.members[gone]);
        self.members[keep].extend(moved);
    }
}

fn successor_table(ts: &TransitionSystem) -> Result<Vec<Vec<Option<usize>>>, RefineError> {
    ts.successor_table().map_err(|e| match e {
        crate::error::TsError::Nondeterministic { state, label } => {
            RefineError::NondeterministicInput { state, label }
        }
        other => RefineError::NondeterministicInput {
            state: other.to_string(),
            label: alloc::string::String::new(),
        },
    })
}

type Signature = (usize, Vec<Option<usize>>);

fn signature(table: &[Vec<Option<usize>>], p: &Partition, s: usize) -> Signature {
    (
        p.block_of(s),
        table[s].iter().map(|t| t.map(|t| p.block_of(t))).collect(),
    )
}

fn synchronous_round(table: &[Vec<Option<usize>>], p: &Partition) -> Partition {
    let sigs: Vec<Signature> = (0..table.len()).map(|s| signature(table, p, s)).collect();
    Partition::from_keys(&sigs)
}

/// Splits one block at a time, in `order`, against the live partition.
fn split_until(
    table: &[Vec<Option<usize>>],
    start: Partition,
    order: BlockOrder,
) -> (Partition, usize) {
    let n = table.len();
    // Working block ids; renumbered to canonical form at the end.
    let mut block_of: Vec<usize> = start.block_ids().to_vec();
    let mut num_blocks = start.num_blocks();
    let mut passes = 0;
    loop {
        let mut ids: Vec<usize> = (0..num_blocks).collect();
        if order == BlockOrder::Descending {
            ids.reverse();
        }
        let mut members_of: Vec<Vec<usize>> = alloc::vec![Vec::new(); num_blocks];
        for s in 0..n {
            members_of[block_of[s]].push(s);
        }
        let mut changed = false;
        for b in ids {
            // Only block `b` itself changes while `b` is processed.
            let members = core::mem::take(&mut members_of[b]);
            if members.len() < 2 {
                continue;
            }
            let mut groups: BTreeMap<Vec<Option<usize>>, Vec<usize>> = BTreeMap::new();
            for &s in &members {
                let sig: Vec<Option<usize>> =
                    table[s].iter().map(|t| t.map(|t| block_of[t])).collect();
                groups.entry(sig).or_default().push(s);
            }
            if groups.len() < 2 {
                continue;
            }
            changed = true;
            // The group holding the least member keeps the old id.
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.sort_by_key(|g| g[0]);
            for g in groups.into_iter().skip(1) {
                for s in g {
                    block_of[s] = num_blocks;
                }
                num_blocks += 1;
            }
        }
        if !changed {
            break;
        }
        passes += 1;
    }
    (Partition::from_keys(&block_of), passes)
}
