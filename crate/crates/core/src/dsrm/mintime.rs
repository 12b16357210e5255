//! Minimum computation by revision-triggered flooding: every agent rebroadcasts
//! its value whenever it decreases, so each connected component agrees on its
//! minimum after at most diameter hops.

use std::collections::BTreeMap;

use crate::engine::{Agent, AgentId, BipartiteGraph, EngineError, Message, Network, Payload, StepContext};

/// Per-agent flooding state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinFlood {
    value: f64,
    dirty: bool,
}

impl MinFlood {
    /// Agents without a candidate start at `+inf` and announce nothing.
    pub fn new(value: f64) -> Self {
        Self { value, dirty: value.is_finite() }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Returns whether the held value decreased.
    pub fn absorb(&mut self, v: f64) -> bool {
        if v < self.value {
            self.value = v;
            self.dirty = true;
            true
        } else {
            false
        }
    }

    /// Value to announce this round, if it changed since the last announcement.
    pub fn announcement(&mut self) -> Option<f64> {
        std::mem::take(&mut self.dirty).then_some(self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinTime(pub f64);

impl Payload for MinTime {
    fn kind(&self) -> &'static str {
        "min_time"
    }
}

struct FloodAgent {
    id: AgentId,
    state: MinFlood,
    changed_at: u64,
}

impl Agent for FloodAgent {
    type Msg = MinTime;
    type Error = EngineError;

    fn id(&self) -> AgentId {
        self.id
    }

    fn step(&mut self, inbox: &[Message<MinTime>], ctx: &mut StepContext<'_, MinTime>) -> Result<(), EngineError> {
        ctx.charge(inbox.len().max(1) as u64);
        for m in inbox {
            if self.state.absorb(m.payload.0) {
                self.changed_at = ctx.round();
            }
        }
        if let Some(v) = self.state.announcement() {
            ctx.broadcast(MinTime(v))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinTimeOutcome {
    pub values: BTreeMap<AgentId, f64>,
    /// Hops the minimum travelled: rounds after the initial announcement in
    /// which some agent still lowered its value.
    pub rounds: u64,
    pub nclo: u64,
}

/// Floods the minimum of `initial` over `graph`; agents absent from `initial`
/// start at `+inf`.
pub fn min_finish_time(
    graph: &BipartiteGraph,
    initial: &BTreeMap<AgentId, f64>,
) -> Result<MinTimeOutcome, EngineError> {
    let agents = graph
        .agents()
        .map(|id| FloodAgent {
            id,
            state: MinFlood::new(initial.get(&id).copied().unwrap_or(f64::INFINITY)),
            changed_at: 1,
        })
        .collect();
    let mut net = Network::new(graph.clone(), agents)?;
    net.run_until_quiet(u64::MAX)?;
    let rounds = net
        .agents()
        .iter()
        .map(|a| a.changed_at.saturating_sub(1))
        .max()
        .unwrap_or(0);
    Ok(MinTimeOutcome {
        values: net.agents().iter().map(|a| (a.id, a.state.value())).collect(),
        rounds,
        nclo: net.global_nclo(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProviderId, RequesterId};

    #[test]
    fn path_graph_agrees_on_minimum() {
        // SP0 - SR0 - SP1
        let g = BipartiteGraph::from_edges(2, 1, [(ProviderId(0), RequesterId(0)), (ProviderId(1), RequesterId(0))]);
        let init = BTreeMap::from([
            (AgentId::Provider(ProviderId(0)), 5.0),
            (AgentId::Requester(RequesterId(0)), 3.0),
            (AgentId::Provider(ProviderId(1)), 7.0),
        ]);
        let out = min_finish_time(&g, &init).unwrap();
        assert!(out.values.values().all(|&v| v == 3.0));
        assert!(out.rounds <= 2);
    }

    #[test]
    fn single_agent_keeps_its_value() {
        let g = BipartiteGraph::from_edges(1, 0, []);
        let init = BTreeMap::from([(AgentId::Provider(ProviderId(0)), 4.5)]);
        let out = min_finish_time(&g, &init).unwrap();
        assert_eq!(out.values[&AgentId::Provider(ProviderId(0))], 4.5);
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn all_infinite_is_quiet() {
        let g = BipartiteGraph::from_edges(1, 1, [(ProviderId(0), RequesterId(0))]);
        let out = min_finish_time(&g, &BTreeMap::new()).unwrap();
        assert!(out.values.values().all(|v| v.is_infinite()));
    }

    #[test]
    fn far_end_takes_diameter_hops() {
        // SP0 - SR0 - SP1 - SR1 - SP2, minimum at SP0
        let g = BipartiteGraph::from_edges(
            3,
            2,
            [
                (ProviderId(0), RequesterId(0)),
                (ProviderId(1), RequesterId(0)),
                (ProviderId(1), RequesterId(1)),
                (ProviderId(2), RequesterId(1)),
            ],
        );
        let init = BTreeMap::from([
            (AgentId::Provider(ProviderId(0)), 1.0),
            (AgentId::Provider(ProviderId(2)), 9.0),
        ]);
        let out = min_finish_time(&g, &init).unwrap();
        assert!(out.values.values().all(|&v| v == 1.0));
        assert_eq!(out.rounds, 4);
        assert_eq!(g.diameter(), 4);
    }
}
