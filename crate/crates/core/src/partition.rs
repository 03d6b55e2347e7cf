//! Partitions of `0..n` in canonical form, and the refinement order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::TsError;

/// A partition of the index set `0..n`.
///
/// Blocks are numbered in order of their least member, so two partitions are
/// equal as sets of blocks iff they are equal as values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    block_of: Vec<usize>,
    num_blocks: usize,
}

impl Partition {
    /// Groups indices with equal keys.
    pub fn from_keys<K: Ord>(keys: &[K]) -> Self {
        let mut ids: BTreeMap<&K, usize> = BTreeMap::new();
        let mut block_of = Vec::with_capacity(keys.len());
        for k in keys {
            let next = ids.len();
            block_of.push(*ids.entry(k).or_insert(next));
        }
        Partition {
            block_of,
            num_blocks: ids.len(),
        }
    }

    /// Every index in its own block.
    pub fn discrete(n: usize) -> Self {
        Partition {
            block_of: (0..n).collect(),
            num_blocks: n,
        }
    }

    /// A single block (empty partition when `n == 0`).
    pub fn single(n: usize) -> Self {
        Partition {
            block_of: alloc::vec![0; n],
            num_blocks: usize::from(n > 0),
        }
    }

    /// From explicit blocks; they must be disjoint, nonempty and cover `0..n`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self, TsError> {
        let mut key = alloc::vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(TsError::InvalidPartition("empty block"));
            }
            for &s in block {
                if s >= n {
                    return Err(TsError::InvalidPartition("index out of range"));
                }
                if key[s] != usize::MAX {
                    return Err(TsError::InvalidPartition("blocks overlap"));
                }
                key[s] = b;
            }
        }
        if key.contains(&usize::MAX) {
            return Err(TsError::InvalidPartition("blocks do not cover the domain"));
        }
        Ok(Partition::from_keys(&key))
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_of(&self, s: usize) -> usize {
        self.block_of[s]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.block_of
    }

    /// Blocks as sorted index lists, ordered by least member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = alloc::vec![Vec::new(); self.num_blocks];
        for (s, &b) in self.block_of.iter().enumerate() {
            blocks[b].push(s);
        }
        blocks
    }

    pub fn same_block(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    /// Restriction to a subset of indices, renumbered `0..keep.len()` in the
    /// order given.
    pub fn restrict(&self, keep: &[usize]) -> Partition {
        let keys: Vec<usize> = keep.iter().map(|&s| self.block_of[s]).collect();
        Partition::from_keys(&keys)
    }

    /// Merges two blocks (by block id).
    pub fn merge(&self, a: usize, b: usize) -> Partition {
        let keys: Vec<usize> = self
            .block_of
            .iter()
            .map(|&x| if x == b { a } else { x })
            .collect();
        Partition::from_keys(&keys)
    }
}

/// True iff every block of `p` lies inside some block of `q`.
pub fn refines(p: &Partition, q: &Partition) -> Result<bool, TsError> {
    if p.len() != q.len() {
        return Err(TsError::DomainMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut image: Vec<Option<usize>> = alloc::vec![None; p.num_blocks()];
    for s in 0..p.len() {
        let slot = &mut image[p.block_of(s)];
        match *slot {
            None => *slot = Some(q.block_of(s)),
            Some(b) if b != q.block_of(s) => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// Coarsest partition refining every input: the intersection of the
/// equivalence relations. An empty list has no domain and is rejected.
pub fn common_refinement(ps: &[Partition]) -> Result<Partition, TsError> {
    let first = ps.first().ok_or(TsError::InvalidPartition("no partitions given"))?;
    let n = first.len();
    for p in ps {
        if p.len() != n {
            return Err(TsError::DomainMismatch {
                left: n,
                right: p.len(),
            });
        }
    }
    let keys: Vec<Vec<usize>> = (0..n)
        .map(|s| ps.iter().map(|p| p.block_of(s)).collect())
        .collect();
    Ok(Partition::from_keys(&keys))
}
