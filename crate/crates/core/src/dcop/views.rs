//! Partial knowledge of a DCOP agent: which utility-table entries it knows and
//! which neighbors' assignments it can see. Both are fixed per run and derived
//! from the run seed by hashing, so they do not depend on stepping order.

use std::collections::BTreeSet;

use super::ConstraintId;
use crate::model::ProviderId;

const TAG_CONSTRAINT: u64 = 0x636f_6e73;
const TAG_NEIGHBOR: u64 = 0x6e65_6967;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)`, a pure function of `parts`.
pub(crate) fn unit_hash(parts: &[u64]) -> f64 {
    let h = parts.iter().fold(0u64, |acc, &x| splitmix(acc ^ splitmix(x)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Which entries of its utility tables an agent knows; unknown entries are
/// valued at the unwanted outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedUtilityView {
    pub owner: ProviderId,
    p_c: f64,
    seed: u64,
    unwanted: f64,
}

impl MaskedUtilityView {
    pub fn new(owner: ProviderId, p_c: f64, seed: u64, unwanted: f64) -> Self {
        Self { owner, p_c, seed, unwanted }
    }

    /// Whether the entry for `value` of variable `slot` in constraint `c` is known.
    pub fn known(&self, c: ConstraintId, slot: usize, value: usize) -> bool {
        if self.p_c >= 1.0 {
            return true;
        }
        unit_hash(&[
            self.seed,
            TAG_CONSTRAINT,
            self.owner.0 as u64,
            c.0 as u64,
            slot as u64,
            value as u64,
        ]) < self.p_c
    }

    /// `actual` when the entry is known, the unwanted outcome otherwise.
    pub fn entry(&self, c: ConstraintId, slot: usize, value: usize, actual: f64) -> f64 {
        if self.known(c, slot, value) {
            actual
        } else {
            self.unwanted
        }
    }
}

/// Neighbors whose assignments the owner can see. Invisible neighbors are
/// treated as absent: constraints they take part in are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborAssignmentView {
    pub owner: ProviderId,
    visible: BTreeSet<ProviderId>,
    hidden: BTreeSet<ProviderId>,
}

impl NeighborAssignmentView {
    pub fn new(owner: ProviderId, neighbors: &[ProviderId], p_a: f64, seed: u64) -> Self {
        let (visible, hidden) = neighbors.iter().partition(|n| {
            p_a >= 1.0 || unit_hash(&[seed, TAG_NEIGHBOR, owner.0 as u64, n.0 as u64]) < p_a
        });
        Self { owner, visible, hidden }
    }

    pub fn sees(&self, n: ProviderId) -> bool {
        self.visible.contains(&n)
    }

    pub fn visible(&self) -> impl Iterator<Item = ProviderId> + '_ {
        self.visible.iter().copied()
    }

    pub fn hidden(&self) -> impl Iterator<Item = ProviderId> + '_ {
        self.hidden.iter().copied()
    }

    pub fn is_full(&self) -> bool {
        self.hidden.is_empty()
    }
}
