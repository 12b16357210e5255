//! Synchronous-round message passing over the provider/requester graph, with
//! Lamport-merged counters of non-concurrent logic operations (NCLO).
//!
//! Cost model: one comparison or arithmetic step inside decision logic is one
//! op, sorting `n` items costs `n * ceil(log2 n)`, and parsing a received
//! message costs one op (charged by the receiving agent).

mod graph;
mod network;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ProviderId, RequesterId};

pub use graph::{build_graph, BipartiteGraph, PeerGraph, Topology};
pub use network::{Agent, LogRecord, Network, RoundReport, StepContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentId {
    Provider(ProviderId),
    Requester(RequesterId),
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Provider(p) => p.fmt(f),
            AgentId::Requester(r) => r.fmt(f),
        }
    }
}

impl From<ProviderId> for AgentId {
    fn from(p: ProviderId) -> Self {
        AgentId::Provider(p)
    }
}

impl From<RequesterId> for AgentId {
    fn from(r: RequesterId) -> Self {
        AgentId::Requester(r)
    }
}

/// Message body; `kind` names the variant in message logs.
pub trait Payload: Clone + fmt::Debug {
    fn kind(&self) -> &'static str;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message<P> {
    pub from: AgentId,
    pub to: AgentId,
    pub payload: P,
    /// Sender's counter at the moment of sending.
    pub sender_nclo: u64,
}

/// Per-agent inbound queue plus its op counter.
#[derive(Debug, Clone)]
pub struct MeteredMailbox<P> {
    queue: Vec<Message<P>>,
    nclo: u64,
}

impl<P> Default for MeteredMailbox<P> {
    fn default() -> Self {
        Self { queue: Vec::new(), nclo: 0 }
    }
}

impl<P> MeteredMailbox<P> {
    pub fn nclo(&self) -> u64 {
        self.nclo
    }

    pub fn charge(&mut self, ops: u64) {
        self.nclo += ops;
    }

    /// Lamport merge: never moves the counter backwards.
    pub fn merge(&mut self, incoming: u64) {
        self.nclo = self.nclo.max(incoming);
    }

    pub fn push(&mut self, m: Message<P>) {
        self.queue.push(m);
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    fn take(&mut self) -> Vec<Message<P>> {
        std::mem::take(&mut self.queue)
    }
}

/// Cost of sorting `n` items.
pub fn sort_cost(n: usize) -> u64 {
    if n < 2 {
        return n as u64;
    }
    let log = usize::BITS - (n - 1).leading_zeros();
    (n as u64) * log as u64
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("{from} sent a message to non-neighbor {to}")]
    NotNeighbor { from: AgentId, to: AgentId },
    #[error("{0} is not registered")]
    UnknownAgent(AgentId),
    #[error("{0} registered twice")]
    DuplicateAgent(AgentId),
}

/// One observation of a run: global counter and utility of the current solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub nclo: u64,
    pub utility: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<Sample>,
}

impl Trace {
    pub fn push(&mut self, nclo: u64, utility: f64) {
        self.samples.push(Sample { nclo, utility });
    }

    pub fn last(&self) -> Option<Sample> {
        self.samples.last().copied()
    }

    pub fn final_utility(&self) -> f64 {
        self.last().map_or(0.0, |s| s.utility)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First counter value at which the utility reaches `frac` of the final value.
    pub fn nclo_to_reach(&self, frac: f64) -> Option<u64> {
        let target = frac * self.final_utility();
        self.samples
            .iter()
            .find(|s| s.utility >= target - 1e-12 * target.abs())
            .map(|s| s.nclo)
    }
}
