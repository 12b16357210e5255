//! Many-to-one deferred acceptance run by message passing. Providers propose to
//! `(requester, skill)` slots in descending bid order; each slot holds its best
//! proposers up to its quota and rejects the rest.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{
    Agent, AgentId, BipartiteGraph, EngineError, Message, Network, Payload, StepContext,
};
use crate::model::{ProviderId, RequesterId, SkillId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId {
    pub requester: RequesterId,
    pub skill: SkillId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSlot {
    pub requester: RequesterId,
    pub skill: SkillId,
    pub quota: usize,
}

impl MatchSlot {
    pub fn id(&self) -> SlotId {
        SlotId { requester: self.requester, skill: self.skill }
    }
}

/// Bid of each slot for each provider. Missing entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BidTable {
    bids: BTreeMap<(SlotId, ProviderId), f64>,
}

impl BidTable {
    pub fn insert(&mut self, slot: SlotId, p: ProviderId, bid: f64) {
        self.bids.insert((slot, p), bid);
    }

    pub fn get(&self, slot: SlotId, p: ProviderId) -> f64 {
        self.bids.get(&(slot, p)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SlotId, ProviderId, f64)> + '_ {
        self.bids.iter().map(|(&(s, p), &b)| (s, p, b))
    }

    /// Slots with a positive bid for `p`, most preferred first.
    pub fn preferences_of(&self, p: ProviderId) -> Vec<SlotId> {
        let mut v: Vec<(SlotId, f64)> = self
            .bids
            .iter()
            .filter(|(&(_, q), &b)| q == p && b > 0.0)
            .map(|(&(s, _), &b)| (s, b))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(s, _)| s).collect()
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }
}

/// Provider to slot.
pub type Matching = BTreeMap<ProviderId, SlotId>;

/// Whether a slot ranks `a` (bid `ba`) above `b` (bid `bb`).
pub fn slot_prefers(ba: f64, a: ProviderId, bb: f64, b: ProviderId) -> bool {
    ba > bb || (ba == bb && a < b)
}

/// Provider half of the protocol.
#[derive(Debug, Clone, Default)]
pub struct DgsProposer {
    prefs: Vec<SlotId>,
    next: usize,
    held_by: Option<SlotId>,
    pending: Option<SlotId>,
}

impl DgsProposer {
    pub fn new(prefs: Vec<SlotId>) -> Self {
        Self { prefs, ..Self::default() }
    }

    pub fn matched(&self) -> Option<SlotId> {
        self.held_by
    }

    /// Next slot to propose to, if unmatched and not waiting for an answer.
    pub fn propose(&mut self) -> Option<SlotId> {
        if self.held_by.is_some() || self.pending.is_some() {
            return None;
        }
        let s = *self.prefs.get(self.next)?;
        self.pending = Some(s);
        Some(s)
    }

    pub fn on_accept(&mut self, slot: SlotId) {
        if self.pending == Some(slot) {
            self.pending = None;
        }
        self.held_by = Some(slot);
    }

    pub fn on_reject(&mut self, slot: SlotId) {
        if self.pending == Some(slot) {
            self.pending = None;
            self.next += 1;
        } else if self.held_by == Some(slot) {
            self.held_by = None;
            self.next += 1;
        }
    }
}

/// Outcome of one slot handling the proposals it received in a round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotResponse {
    pub accepted: Vec<ProviderId>,
    pub rejected: Vec<ProviderId>,
}

/// Requester half of the protocol for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DgsSlot {
    pub quota: usize,
    pub held: Vec<ProviderId>,
    bids: BTreeMap<ProviderId, f64>,
}

impl DgsSlot {
    pub fn new(quota: usize, bids: BTreeMap<ProviderId, f64>) -> Self {
        Self { quota, held: Vec::new(), bids }
    }

    pub fn bid(&self, p: ProviderId) -> f64 {
        self.bids.get(&p).copied().unwrap_or(0.0)
    }

    /// Keeps the best `quota` of held plus new proposers, rejecting the rest.
    pub fn receive(&mut self, proposers: &[ProviderId]) -> SlotResponse {
        let mut pool: Vec<ProviderId> = self.held.clone();
        pool.extend(proposers.iter().copied().filter(|p| self.bid(*p) > 0.0));
        pool.sort_by(|&a, &b| {
            self.bid(b).total_cmp(&self.bid(a)).then(a.cmp(&b))
        });
        pool.dedup();
        let keep: Vec<ProviderId> = pool.iter().copied().take(self.quota).collect();
        let mut resp = SlotResponse::default();
        for &p in proposers {
            if keep.contains(&p) {
                resp.accepted.push(p);
            } else {
                resp.rejected.push(p);
            }
        }
        for &p in &self.held {
            if !keep.contains(&p) {
                resp.rejected.push(p);
            }
        }
        self.held = keep;
        resp
    }
}

/// One propose/respond exchange computed in place: every free provider proposes
/// to its best remaining slot and each slot keeps its best up to quota. Returns
/// whether anything was proposed.
pub fn dgs_round(
    proposers: &mut BTreeMap<ProviderId, DgsProposer>,
    slots: &mut BTreeMap<SlotId, DgsSlot>,
) -> bool {
    let mut incoming: BTreeMap<SlotId, Vec<ProviderId>> = BTreeMap::new();
    for (&p, st) in proposers.iter_mut() {
        if let Some(s) = st.propose() {
            incoming.entry(s).or_default().push(p);
        }
    }
    let any = !incoming.is_empty();
    for (s, ps) in incoming {
        let resp = match slots.get_mut(&s) {
            Some(slot) => slot.receive(&ps),
            None => SlotResponse { accepted: vec![], rejected: ps },
        };
        for p in resp.accepted {
            if let Some(x) = proposers.get_mut(&p) {
                x.on_accept(s);
            }
        }
        for p in resp.rejected {
            if let Some(x) = proposers.get_mut(&p) {
                x.on_reject(s);
            }
        }
    }
    any
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsMsg {
    Propose(SkillId),
    Accept(SkillId),
    Reject(SkillId),
}

impl Payload for GsMsg {
    fn kind(&self) -> &'static str {
        match self {
            GsMsg::Propose(_) => "gs_propose",
            GsMsg::Accept(_) => "gs_accept",
            GsMsg::Reject(_) => "gs_reject",
        }
    }
}

enum DgsAgent {
    Sp(ProviderId, DgsProposer),
    Sr(RequesterId, BTreeMap<SkillId, DgsSlot>),
}

impl Agent for DgsAgent {
    type Msg = GsMsg;
    type Error = EngineError;

    fn id(&self) -> AgentId {
        match self {
            DgsAgent::Sp(p, _) => (*p).into(),
            DgsAgent::Sr(r, _) => (*r).into(),
        }
    }

    fn step(&mut self, inbox: &[Message<GsMsg>], ctx: &mut StepContext<'_, GsMsg>) -> Result<(), EngineError> {
        ctx.charge(inbox.len().max(1) as u64);
        match self {
            DgsAgent::Sp(_, st) => {
                for m in inbox {
                    let AgentId::Requester(r) = m.from else { continue };
                    match m.payload {
                        GsMsg::Accept(s) => st.on_accept(SlotId { requester: r, skill: s }),
                        GsMsg::Reject(s) => st.on_reject(SlotId { requester: r, skill: s }),
                        GsMsg::Propose(_) => {}
                    }
                }
                if let Some(s) = st.propose() {
                    ctx.send(s.requester, GsMsg::Propose(s.skill))?;
                }
            }
            DgsAgent::Sr(_, slots) => {
                let mut incoming: BTreeMap<SkillId, Vec<ProviderId>> = BTreeMap::new();
                for m in inbox {
                    if let (AgentId::Provider(p), GsMsg::Propose(s)) = (m.from, m.payload) {
                        incoming.entry(s).or_default().push(p);
                    }
                }
                for (s, ps) in incoming {
                    let resp = match slots.get_mut(&s) {
                        Some(slot) => {
                            ctx.charge_sort(slot.held.len() + ps.len());
                            slot.receive(&ps)
                        }
                        None => SlotResponse { accepted: vec![], rejected: ps },
                    };
                    for p in resp.accepted {
                        ctx.send(p, GsMsg::Accept(s))?;
                    }
                    for p in resp.rejected {
                        ctx.send(p, GsMsg::Reject(s))?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DgsOutcome {
    pub matching: Matching,
    pub rounds: u64,
    pub nclo: u64,
}

/// Runs the distributed protocol to quiescence on a graph built from the bids.
pub fn run_dgs_matching(
    providers: &[ProviderId],
    slots: &[MatchSlot],
    bids: &BidTable,
) -> Result<DgsOutcome, EngineError> {
    let n_sp = providers.iter().map(|p| p.index() + 1).max().unwrap_or(0);
    let n_sr = slots.iter().map(|s| s.requester.index() + 1).max().unwrap_or(0);
    let slot_ids: BTreeSet<SlotId> = slots.iter().map(MatchSlot::id).collect();
    let edges: Vec<(ProviderId, RequesterId)> = bids
        .iter()
        .filter(|(s, p, b)| *b > 0.0 && slot_ids.contains(s) && providers.contains(p))
        .map(|(s, p, _)| (p, s.requester))
        .collect();
    let graph = BipartiteGraph::from_edges(n_sp, n_sr, edges);

    let mut agents: Vec<DgsAgent> = providers
        .iter()
        .map(|&p| {
            let prefs = bids
                .preferences_of(p)
                .into_iter()
                .filter(|s| slot_ids.contains(s))
                .collect();
            DgsAgent::Sp(p, DgsProposer::new(prefs))
        })
        .collect();
    let mut by_requester: BTreeMap<RequesterId, BTreeMap<SkillId, DgsSlot>> = BTreeMap::new();
    for s in slots {
        let slot_bids = providers
            .iter()
            .map(|&p| (p, bids.get(s.id(), p)))
            .filter(|(_, b)| *b > 0.0)
            .collect();
        by_requester
            .entry(s.requester)
            .or_default()
            .insert(s.skill, DgsSlot::new(s.quota, slot_bids));
    }
    agents.extend(by_requester.into_iter().map(|(r, s)| DgsAgent::Sr(r, s)));

    let mut net = Network::new(graph, agents)?;
    let rounds = net.run_until_quiet(u64::MAX)?;
    let mut matching = Matching::new();
    for a in net.agents() {
        if let DgsAgent::Sr(r, slots) = a {
            for (&s, slot) in slots {
                for &p in &slot.held {
                    matching.insert(p, SlotId { requester: *r, skill: s });
                }
            }
        }
    }
    Ok(DgsOutcome { matching, rounds, nclo: net.global_nclo() })
}

/// Provider/slot pairs that would both rather be matched to each other.
pub fn blocking_pairs(
    providers: &[ProviderId],
    slots: &[MatchSlot],
    bids: &BidTable,
    matching: &Matching,
) -> Vec<(ProviderId, SlotId)> {
    let mut out = Vec::new();
    for &p in providers {
        let current = matching.get(&p).copied();
        for s in slots {
            let sid = s.id();
            let b = bids.get(sid, p);
            if b <= 0.0 || current == Some(sid) {
                continue;
            }
            let provider_wants = match current {
                None => true,
                Some(c) => {
                    let bc = bids.get(c, p);
                    b > bc || (b == bc && sid < c)
                }
            };
            if !provider_wants {
                continue;
            }
            let holders: Vec<ProviderId> = matching
                .iter()
                .filter(|(_, &x)| x == sid)
                .map(|(&q, _)| q)
                .collect();
            let slot_wants = holders.len() < s.quota
                || holders
                    .iter()
                    .any(|&q| slot_prefers(b, p, bids.get(sid, q), q));
            if slot_wants {
                out.push((p, sid));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot(r: u32, s: u16, quota: usize) -> MatchSlot {
        MatchSlot { requester: RequesterId(r), skill: SkillId(s), quota }
    }

    #[test]
    fn single_pair_matches() {
        let sl = slot(0, 0, 1);
        let mut bids = BidTable::default();
        bids.insert(sl.id(), ProviderId(0), 1.0);
        let out = run_dgs_matching(&[ProviderId(0)], &[sl], &bids).unwrap();
        assert_eq!(out.matching.get(&ProviderId(0)), Some(&sl.id()));
    }

    #[test]
    fn higher_bid_is_held() {
        let sl = slot(0, 0, 1);
        let mut bids = BidTable::default();
        bids.insert(sl.id(), ProviderId(0), 5.0);
        bids.insert(sl.id(), ProviderId(1), 9.0);
        let mut proposers: BTreeMap<_, _> = [ProviderId(0), ProviderId(1)]
            .into_iter()
            .map(|p| (p, DgsProposer::new(bids.preferences_of(p))))
            .collect();
        let mut slots = BTreeMap::from([(
            sl.id(),
            DgsSlot::new(1, BTreeMap::from([(ProviderId(0), 5.0), (ProviderId(1), 9.0)])),
        )]);
        assert!(dgs_round(&mut proposers, &mut slots));
        assert_eq!(proposers[&ProviderId(1)].matched(), Some(sl.id()));
        assert_eq!(proposers[&ProviderId(0)].matched(), None);
        assert!(!dgs_round(&mut proposers, &mut slots));
    }

    #[test]
    fn zero_bids_stay_unmatched() {
        let sl = slot(0, 0, 1);
        let mut bids = BidTable::default();
        bids.insert(sl.id(), ProviderId(0), 0.0);
        let out = run_dgs_matching(&[ProviderId(0)], &[sl], &bids).unwrap();
        assert!(out.matching.is_empty());
        let out = run_dgs_matching(&[], &[sl], &bids).unwrap();
        assert!(out.matching.is_empty());
    }

    #[test]
    fn loose_quota_takes_everyone_positive() {
        let sl = slot(0, 0, 5);
        let mut bids = BidTable::default();
        for i in 0..3 {
            bids.insert(sl.id(), ProviderId(i), 1.0 + i as f64);
        }
        bids.insert(sl.id(), ProviderId(3), 0.0);
        let ps: Vec<_> = (0..4).map(ProviderId).collect();
        let out = run_dgs_matching(&ps, &[sl], &bids).unwrap();
        assert_eq!(out.matching.len(), 3);
        assert!(blocking_pairs(&ps, &[sl], &bids, &out.matching).is_empty());
    }

    #[test]
    fn displaced_provider_moves_on() {
        // SP0 prefers A then B; A prefers SP1 who also wants A
        let a = slot(0, 0, 1);
        let b = slot(1, 0, 1);
        let mut bids = BidTable::default();
        bids.insert(a.id(), ProviderId(0), 5.0);
        bids.insert(b.id(), ProviderId(0), 3.0);
        bids.insert(a.id(), ProviderId(1), 8.0);
        let ps = [ProviderId(0), ProviderId(1)];
        let out = run_dgs_matching(&ps, &[a, b], &bids).unwrap();
        assert_eq!(out.matching[&ProviderId(1)], a.id());
        assert_eq!(out.matching[&ProviderId(0)], b.id());
        assert!(blocking_pairs(&ps, &[a, b], &bids, &out.matching).is_empty());
    }
}
