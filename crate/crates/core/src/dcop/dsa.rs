//! Distributed stochastic local search (variant C) over the provider DCOP.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    default_time_grid, translate_to_dcop, Assignment, ConstraintId, Dcop, DcopConfig, DcopError,
    MaskedUtilityView, NeighborAssignmentView,
};
use crate::engine::{
    Agent, AgentId, EngineError, Message, Network, Payload, PeerGraph, StepContext, Trace,
};
use super::translate::RawService;
use crate::model::{global_utility, Problem, ProviderId, SkillId, Solution};

const TIE_TOL: f64 = 1e-9;

/// Constraint values already computed in one decision, keyed by the
/// constraint's position and the agent's own services touching it.
type Memo = HashMap<(usize, Vec<(usize, SkillId, u64, u64)>), f64>;

/// Value chosen by one DSA-C step. Among the values that evaluate at least as
/// well as `current` (other than `current` itself), the best ones are kept and
/// `tie` picks one; the move happens only when `coin < switch_probability`.
pub fn dsa_step(evals: &[f64], current: usize, coin: f64, switch_probability: f64, tie: u64) -> usize {
    let Some(&here) = evals.get(current) else {
        return current;
    };
    let tol = TIE_TOL * (1.0 + here.abs());
    let best = evals
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != current)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if best < here - tol {
        return current;
    }
    let options: Vec<usize> = evals
        .iter()
        .enumerate()
        .filter(|&(i, &v)| i != current && v >= best - tol)
        .map(|(i, _)| i)
        .collect();
    if options.is_empty() || !(coin < switch_probability) {
        return current;
    }
    options[(tie % options.len() as u64) as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub enum DsaMsg {
    /// The sender's value index per slot.
    Value(Vec<usize>),
}

impl Payload for DsaMsg {
    fn kind(&self) -> &'static str {
        "value"
    }
}

pub struct DsaAgent<'a> {
    dcop: &'a Dcop,
    me: ProviderId,
    values: Vec<usize>,
    beliefs: BTreeMap<ProviderId, Vec<usize>>,
    masks: MaskedUtilityView,
    view: NeighborAssignmentView,
    /// Own constraints free of hidden neighbors.
    evaluated: Vec<ConstraintId>,
    rng: ChaCha8Rng,
    switch_probability: f64,
    rounds: usize,
}

impl<'a> DsaAgent<'a> {
    pub fn new(dcop: &'a Dcop, me: ProviderId, config: &DcopConfig, seed: u64) -> Self {
        let masks = MaskedUtilityView::new(me, config.p_c, seed, config.unwanted_utility);
        let view = NeighborAssignmentView::new(me, dcop.neighbors_of(me), config.p_a, seed);
        let evaluated = dcop
            .constraints_of(me)
            .iter()
            .copied()
            .filter(|&c| view.hidden().all(|h| !dcop.constraint(c).scope.contains(&h)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(me.0 as u64 + 1);
        Self {
            dcop,
            me,
            values: vec![0; dcop.variables_of(me).len()],
            beliefs: BTreeMap::new(),
            masks,
            view,
            evaluated,
            rng,
            switch_probability: config.switch_probability,
            rounds: config.rounds,
        }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn set_values(&mut self, values: Vec<usize>) {
        self.values = values;
    }

    pub fn set_belief(&mut self, neighbor: ProviderId, values: Vec<usize>) {
        self.beliefs.insert(neighbor, values);
    }

    /// Untrimmed services of the visible neighbors as believed, split by the
    /// evaluated constraint they touch, with each constraint's value when the
    /// agent itself contributes nothing to it.
    fn neighborhood(&self) -> Vec<(Vec<RawService>, f64)> {
        let mut raw = Vec::new();
        for n in self.view.visible() {
            if let Some(v) = self.beliefs.get(&n) {
                self.dcop.provider_services(n, v, &mut raw);
            }
        }
        self.evaluated
            .iter()
            .map(|&c| {
                let mine: Vec<RawService> =
                    raw.iter().filter(|r| self.dcop.touches(c, &r.tuple)).copied().collect();
                let alone = self.dcop.cluster_value(c, mine.clone());
                (mine, alone)
            })
            .collect()
    }

    fn evaluate(&self, around: &[(Vec<RawService>, f64)], memo: &mut Memo, slot: usize, value: usize) -> f64 {
        let mut values = self.values.clone();
        values[slot] = value;
        let mut own = Vec::new();
        self.dcop.provider_services(self.me, &values, &mut own);
        self.evaluated
            .iter()
            .zip(around)
            .enumerate()
            .map(|(k, (&c, (theirs, alone)))| {
                let touching: Vec<RawService> =
                    own.iter().filter(|r| self.dcop.touches(c, &r.tuple)).copied().collect();
                let v = if touching.is_empty() {
                    *alone
                } else {
                    let key: Vec<_> = touching
                        .iter()
                        .map(|r| (r.slot, r.tuple.skill, r.tuple.workload.to_bits(), r.tuple.start.to_bits()))
                        .collect();
                    *memo.entry((k, key)).or_insert_with(|| {
                        let mut all = theirs.clone();
                        all.extend(touching);
                        self.dcop.cluster_value(c, all)
                    })
                };
                self.masks.entry(c, slot, value, v)
            })
            .sum()
    }

    /// Masked local utility of setting `slot` to `value`.
    pub fn local_evaluation(&self, slot: usize, value: usize) -> f64 {
        self.evaluate(&self.neighborhood(), &mut Memo::new(), slot, value)
    }

    fn randomize(&mut self) {
        let vars = self.dcop.variables_of(self.me);
        self.values = vars
            .iter()
            .map(|v| self.rng.random_range(0..v.domain.len()))
            .collect();
    }

    /// One decision; returns ops spent and whether the assignment changed.
    fn decide(&mut self) -> (u64, bool) {
        if self.values.is_empty() {
            return (0, false);
        }
        let slot = self.rng.random_range(0..self.values.len());
        let size = self.dcop.variables_of(self.me)[slot].domain.len();
        let around = self.neighborhood();
        let mut memo = Memo::new();
        let evals: Vec<f64> = (0..size).map(|v| self.evaluate(&around, &mut memo, slot, v)).collect();
        let coin: f64 = self.rng.random();
        let tie: u64 = self.rng.random();
        let next = dsa_step(&evals, self.values[slot], coin, self.switch_probability, tie);
        let ops = (size * self.evaluated.len().max(1)) as u64;
        let changed = next != self.values[slot];
        self.values[slot] = next;
        (ops, changed)
    }
}

impl Agent for DsaAgent<'_> {
    type Msg = DsaMsg;
    type Error = EngineError;

    fn id(&self) -> AgentId {
        self.me.into()
    }

    fn step(&mut self, inbox: &[Message<DsaMsg>], ctx: &mut StepContext<'_, DsaMsg>) -> Result<(), EngineError> {
        ctx.charge(inbox.len() as u64);
        for m in inbox {
            if let (AgentId::Provider(p), DsaMsg::Value(v)) = (m.from, &m.payload) {
                self.beliefs.insert(p, v.clone());
            }
        }
        if ctx.round() == 1 {
            self.randomize();
            return ctx.broadcast(DsaMsg::Value(self.values.clone()));
        }
        if ctx.round() > self.rounds as u64 + 1 {
            return Ok(());
        }
        let (ops, changed) = self.decide();
        ctx.charge(ops);
        if changed {
            ctx.broadcast(DsaMsg::Value(self.values.clone()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DsaOutcome {
    pub trace: Trace,
    pub solution: Solution,
    pub rounds: usize,
}

pub fn run_dsa(problem: &Problem, config: &DcopConfig, seed: u64) -> Result<DsaOutcome, DcopError> {
    run_dsa_scored(problem, config, seed, |s| global_utility(problem, s))
}

/// Runs `config.rounds` decision rounds after an initial random assignment.
/// Masks shape decisions only: every trace sample is `score` of the true joint
/// schedule.
pub fn run_dsa_scored(
    problem: &Problem,
    config: &DcopConfig,
    seed: u64,
    score: impl Fn(&Solution) -> f64,
) -> Result<DsaOutcome, DcopError> {
    config.validate()?;
    let dcop = translate_to_dcop(problem, &default_time_grid(problem, config.grid_cap), config.slots)?;
    let agents: Vec<DsaAgent<'_>> = problem
        .providers
        .iter()
        .map(|p| DsaAgent::new(&dcop, p.id, config, seed))
        .collect();
    let graph = PeerGraph::new(
        problem.providers.iter().map(|p| AgentId::from(p.id)),
        problem.providers.iter().flat_map(|p| {
            dcop.neighbors_of(p.id)
                .iter()
                .map(move |&n| (AgentId::from(p.id), AgentId::from(n)))
        }),
    );
    let mut net = Network::new(graph, agents)?;
    let joint = |net: &Network<DsaAgent<'_>, PeerGraph>| {
        let a: Assignment = net.agents().iter().map(|x| (x.me, x.values.clone())).collect();
        dcop.materialize(&a)
    };
    let mut trace = Trace::default();
    for _ in 0..=config.rounds {
        net.run_round()?;
        trace.push(net.global_nclo(), score(&joint(&net)));
    }
    let solution = joint(&net);
    Ok(DsaOutcome { trace, solution, rounds: config.rounds })
}
