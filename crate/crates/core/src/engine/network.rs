use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use super::{
    AgentId, BipartiteGraph, EngineError, Message, MeteredMailbox, Payload, Sample, Topology, Trace,
};

/// A round-driven state machine.
pub trait Agent {
    type Msg: Payload;
    type Error: From<EngineError>;

    fn id(&self) -> AgentId;

    /// Handles the messages delivered this round and queues replies on `ctx`.
    fn step(
        &mut self,
        inbox: &[Message<Self::Msg>],
        ctx: &mut StepContext<'_, Self::Msg>,
    ) -> Result<(), Self::Error>;
}

/// What an agent may do while stepping: charge ops and send to neighbors.
pub struct StepContext<'a, P> {
    me: AgentId,
    round: u64,
    graph: &'a dyn Topology,
    mailbox: &'a mut MeteredMailbox<P>,
    outbox: &'a mut Vec<Message<P>>,
}

impl<P: Payload> StepContext<'_, P> {
    pub fn me(&self) -> AgentId {
        self.me
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn neighbors(&self) -> Vec<AgentId> {
        self.graph.neighbors(self.me)
    }

    pub fn nclo(&self) -> u64 {
        self.mailbox.nclo()
    }

    pub fn charge(&mut self, ops: u64) {
        self.mailbox.charge(ops);
    }

    pub fn charge_sort(&mut self, n: usize) {
        self.mailbox.charge(super::sort_cost(n));
    }

    pub fn send(&mut self, to: impl Into<AgentId>, payload: P) -> Result<(), EngineError> {
        let to = to.into();
        if !self.graph.are_neighbors(self.me, to) {
            return Err(EngineError::NotNeighbor { from: self.me, to });
        }
        self.outbox.push(Message {
            from: self.me,
            to,
            payload,
            sender_nclo: self.mailbox.nclo(),
        });
        Ok(())
    }

    pub fn broadcast(&mut self, payload: P) -> Result<(), EngineError> {
        for n in self.graph.neighbors(self.me) {
            self.send(n, payload.clone())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundReport {
    pub round: u64,
    pub delivered: usize,
    pub sent: usize,
    pub global_nclo: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub round: u64,
    pub from: String,
    pub to: String,
    pub kind: &'static str,
}

/// Agents, their mailboxes and the messages in flight between rounds.
pub struct Network<A: Agent, G: Topology = BipartiteGraph> {
    graph: G,
    agents: Vec<A>,
    index: BTreeMap<AgentId, usize>,
    mailboxes: Vec<MeteredMailbox<A::Msg>>,
    in_flight: Vec<Message<A::Msg>>,
    round: u64,
    log: Option<Vec<LogRecord>>,
}

impl<A: Agent, G: Topology> Network<A, G> {
    /// Agents are stepped in ascending id order regardless of input order.
    pub fn new(graph: G, mut agents: Vec<A>) -> Result<Self, EngineError> {
        agents.sort_by_key(|a| a.id());
        let mut index = BTreeMap::new();
        for (i, a) in agents.iter().enumerate() {
            if !graph.contains(a.id()) {
                return Err(EngineError::UnknownAgent(a.id()));
            }
            if index.insert(a.id(), i).is_some() {
                return Err(EngineError::DuplicateAgent(a.id()));
            }
        }
        let mailboxes = agents.iter().map(|_| MeteredMailbox::default()).collect();
        Ok(Self {
            graph,
            agents,
            index,
            mailboxes,
            in_flight: Vec::new(),
            round: 0,
            log: None,
        })
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn graph(&self) -> &G {
        &self.graph
    }

    pub fn agents(&self) -> &[A] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [A] {
        &mut self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&A> {
        self.index.get(&id).map(|&i| &self.agents[i])
    }

    pub fn nclo_of(&self, id: AgentId) -> Option<u64> {
        self.index.get(&id).map(|&i| self.mailboxes[i].nclo())
    }

    /// Charges ops to an agent outside a round (setup work done locally).
    pub fn charge(&mut self, id: AgentId, ops: u64) {
        if let Some(&i) = self.index.get(&id) {
            self.mailboxes[i].charge(ops);
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn global_nclo(&self) -> u64 {
        self.mailboxes.iter().map(MeteredMailbox::nclo).max().unwrap_or(0)
    }

    /// Messages sent in the last round, to be delivered in the next one.
    pub fn in_flight(&self) -> &[Message<A::Msg>] {
        &self.in_flight
    }

    pub fn is_quiescent(&self) -> bool {
        self.in_flight.is_empty()
    }

    pub fn log(&self) -> Option<&[LogRecord]> {
        self.log.as_deref()
    }

    /// Writes the message log as one JSON object per line.
    pub fn write_log(&self, mut out: impl Write) -> io::Result<()> {
        for rec in self.log.iter().flatten() {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Delivers last round's messages, steps every agent once in id order and
    /// buffers what they send until the next round.
    pub fn run_round(&mut self) -> Result<RoundReport, A::Error> {
        self.round += 1;
        let mut delivered = 0;
        for m in std::mem::take(&mut self.in_flight) {
            let &i = self.index.get(&m.to).ok_or(EngineError::UnknownAgent(m.to))?;
            self.mailboxes[i].push(m);
        }
        let mut outbox = Vec::new();
        for (agent, mailbox) in self.agents.iter_mut().zip(self.mailboxes.iter_mut()) {
            let inbox = mailbox.take();
            delivered += inbox.len();
            if let Some(max) = inbox.iter().map(|m| m.sender_nclo).max() {
                mailbox.merge(max);
            }
            let mut ctx = StepContext {
                me: agent.id(),
                round: self.round,
                graph: &self.graph,
                mailbox,
                outbox: &mut outbox,
            };
            agent.step(&inbox, &mut ctx)?;
        }
        if let Some(log) = self.log.as_mut() {
            log.extend(outbox.iter().map(|m| LogRecord {
                round: self.round,
                from: m.from.to_string(),
                to: m.to.to_string(),
                kind: m.payload.kind(),
            }));
        }
        let sent = outbox.len();
        self.in_flight = outbox;
        Ok(RoundReport {
            round: self.round,
            delivered,
            sent,
            global_nclo: self.global_nclo(),
        })
    }

    /// Runs rounds until `stop` holds or `max_rounds` have run, sampling the
    /// global counter and `utility` after every round.
    pub fn run_until(
        &mut self,
        max_rounds: u64,
        mut stop: impl FnMut(&RoundReport, &Self) -> bool,
        utility: impl Fn(&Self) -> f64,
    ) -> Result<Trace, A::Error> {
        let mut trace = Trace::default();
        for _ in 0..max_rounds.max(1) {
            let report = self.run_round()?;
            trace.samples.push(Sample { nclo: report.global_nclo, utility: utility(self) });
            if stop(&report, self) {
                break;
            }
        }
        Ok(trace)
    }

    /// Runs rounds until no message is in flight; returns the rounds used.
    pub fn run_until_quiet(&mut self, max_rounds: u64) -> Result<u64, A::Error> {
        let mut used = 0;
        loop {
            self.run_round()?;
            used += 1;
            if self.is_quiescent() || used >= max_rounds {
                return Ok(used);
            }
        }
    }
}
