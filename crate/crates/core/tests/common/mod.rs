//! Reference implementations the distributed code is checked against. None of
//! these call into the library's own evaluation or matching logic.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use somaop::dsrm::{BidTable, MatchSlot, Matching, SlotId};
use somaop::engine::{AgentId, BipartiteGraph};
use somaop::model::{Problem, ProviderId, RequesterId, SkillId, Solution};
use somaop::scenarios::{gen_abstract, AbstractConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random many-to-one market with strictly ordered, distinct bids.
pub struct Market {
    pub providers: Vec<ProviderId>,
    pub slots: Vec<MatchSlot>,
    pub bids: BidTable,
}

pub fn random_market(seed: u64, max_providers: usize, max_slots: usize) -> Market {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_providers);
    let k = r.random_range(1..=max_slots);
    let providers: Vec<ProviderId> = (0..n as u32).map(ProviderId).collect();
    let mut slots = Vec::new();
    let mut used = BTreeSet::new();
    while slots.len() < k {
        let id = SlotId { requester: RequesterId(r.random_range(0..3)), skill: SkillId(r.random_range(0..3)) };
        if used.insert(id) {
            slots.push(MatchSlot { requester: id.requester, skill: id.skill, quota: r.random_range(1..=3) });
        }
    }
    let mut values: Vec<u32> = (1..=(n * k) as u32).collect();
    values.shuffle(&mut r);
    let mut bids = BidTable::default();
    let mut i = 0;
    for s in &slots {
        for &p in &providers {
            if r.random_bool(0.75) {
                bids.insert(s.id(), p, values[i] as f64);
            }
            i += 1;
        }
    }
    Market { providers, slots, bids }
}

/// Centralized provider-proposing deferred acceptance with quotas.
pub fn gale_shapley(m: &Market) -> Matching {
    let bid = |s: SlotId, p: ProviderId| m.bids.iter().find(|&(a, b, _)| a == s && b == p).map_or(0.0, |x| x.2);
    let prefs: BTreeMap<ProviderId, Vec<SlotId>> = m
        .providers
        .iter()
        .map(|&p| {
            let mut l: Vec<SlotId> = m.slots.iter().map(|s| s.id()).filter(|&s| bid(s, p) > 0.0).collect();
            l.sort_by(|&a, &b| bid(b, p).total_cmp(&bid(a, p)));
            (p, l)
        })
        .collect();
    let quota: BTreeMap<SlotId, usize> = m.slots.iter().map(|s| (s.id(), s.quota)).collect();
    let mut next: BTreeMap<ProviderId, usize> = m.providers.iter().map(|&p| (p, 0)).collect();
    let mut held: BTreeMap<SlotId, Vec<ProviderId>> = BTreeMap::new();
    let mut free: VecDeque<ProviderId> = m.providers.iter().copied().collect();
    while let Some(p) = free.pop_front() {
        let i = next[&p];
        let Some(&s) = prefs[&p].get(i) else {
            continue;
        };
        *next.get_mut(&p).unwrap() += 1;
        let h = held.entry(s).or_default();
        h.push(p);
        h.sort_by(|&a, &b| bid(s, b).total_cmp(&bid(s, a)));
        if h.len() > quota[&s] {
            free.push_back(h.pop().unwrap());
        }
    }
    held.into_iter().flat_map(|(s, ps)| ps.into_iter().map(move |p| (p, s))).collect()
}

/// Blocking pairs, computed straight from the definition.
pub fn blocking(m: &Market, matching: &Matching) -> usize {
    let bid = |s: SlotId, p: ProviderId| m.bids.iter().find(|&(a, b, _)| a == s && b == p).map_or(0.0, |x| x.2);
    let mut count = 0;
    for &p in &m.providers {
        let mine = matching.get(&p).map_or(0.0, |&s| bid(s, p));
        for s in &m.slots {
            let b = bid(s.id(), p);
            if b <= mine || b <= 0.0 {
                continue;
            }
            let holders: Vec<f64> = matching.iter().filter(|(_, &x)| x == s.id()).map(|(&q, _)| bid(s.id(), q)).collect();
            if holders.len() < s.quota || holders.iter().any(|&h| h < b) {
                count += 1;
            }
        }
    }
    count
}

/// Random connected bipartite graph with at most `max_nodes` agents.
pub fn random_connected_graph(seed: u64, max_nodes: usize) -> BipartiteGraph {
    let mut r = rng(seed);
    let total = r.random_range(2..=max_nodes);
    let n_sp = r.random_range(1..total);
    let n_sr = total - n_sp;
    let mut nodes: Vec<AgentId> = (0..n_sp as u32)
        .map(|i| AgentId::Provider(ProviderId(i)))
        .chain((0..n_sr as u32).map(|j| AgentId::Requester(RequesterId(j))))
        .collect();
    nodes.shuffle(&mut r);
    // put one of each kind first so every later node has an opposite to attach to
    let first_sr = nodes.iter().position(|a| matches!(a, AgentId::Requester(_))).unwrap();
    let first_sp = nodes.iter().position(|a| matches!(a, AgentId::Provider(_))).unwrap();
    let (a, b) = (nodes[first_sp], nodes[first_sr]);
    nodes.retain(|&x| x != a && x != b);
    nodes.insert(0, b);
    nodes.insert(0, a);

    let mut edges = BTreeSet::new();
    let mut placed: Vec<AgentId> = Vec::new();
    for &x in &nodes {
        let opposite: Vec<AgentId> = placed
            .iter()
            .copied()
            .filter(|y| matches!((x, y), (AgentId::Provider(_), AgentId::Requester(_)) | (AgentId::Requester(_), AgentId::Provider(_))))
            .collect();
        if let Some(&y) = opposite.get(r.random_range(0..opposite.len().max(1))) {
            edges.insert(edge(x, y));
        }
        placed.push(x);
    }
    let extra = r.random_range(0..=total);
    for _ in 0..extra {
        let p = ProviderId(r.random_range(0..n_sp as u32));
        let q = RequesterId(r.random_range(0..n_sr as u32));
        edges.insert((p, q));
    }
    BipartiteGraph::from_edges(n_sp, n_sr, edges)
}

fn edge(a: AgentId, b: AgentId) -> (ProviderId, RequesterId) {
    match (a, b) {
        (AgentId::Provider(p), AgentId::Requester(r)) | (AgentId::Requester(r), AgentId::Provider(p)) => (p, r),
        _ => unreachable!("same-side edge"),
    }
}

/// Start values for a min-time flood: each agent holds one with probability
/// 0.6.
pub fn random_minima(graph: &BipartiteGraph, seed: u64) -> BTreeMap<AgentId, f64> {
    let mut r = rng(seed.wrapping_add(1));
    let mut init = BTreeMap::new();
    for a in graph.agents() {
        if r.random_bool(0.6) {
            init.insert(a, r.random_range(0.0..100.0));
        }
    }
    init
}

/// Hop distances by breadth-first search.
pub fn bfs(graph: &BipartiteGraph, src: AgentId) -> BTreeMap<AgentId, usize> {
    let mut dist = BTreeMap::from([(src, 0)]);
    let mut queue = VecDeque::from([src]);
    while let Some(a) = queue.pop_front() {
        let d = dist[&a];
        for n in graph.neighbors(a) {
            dist.entry(n).or_insert_with(|| {
                queue.push_back(n);
                d + 1
            });
        }
    }
    dist
}

pub fn diameter(graph: &BipartiteGraph) -> usize {
    graph
        .agents()
        .flat_map(|a| bfs(graph, a).into_values().max())
        .max()
        .unwrap_or(0)
}

/// Utility of a solution recomputed from first principles.
pub fn evaluate(problem: &Problem, solution: &Solution) -> f64 {
    const TOL: f64 = 1e-9;
    let mut total = 0.0;
    for r in &problem.requesters {
        for rs in &r.skills {
            let tuples: Vec<(ProviderId, f64, f64, f64)> = solution
                .schedules
                .iter()
                .flat_map(|(&p, s)| s.services().map(move |t| (p, t)))
                .filter(|(_, t)| t.requester == r.id && t.skill == rs.skill)
                .map(|(p, t)| (p, t.workload, t.start, t.finish))
                .collect();
            if tuples.is_empty() || rs.workload <= 0.0 {
                continue;
            }
            let mut frac = 0.0;
            for &(_, w, start, _) in &tuples {
                if start >= rs.deadline {
                    continue;
                }
                let team: BTreeSet<ProviderId> = tuples
                    .iter()
                    .filter(|&&(_, _, s, f)| s <= start + TOL && start < f - TOL)
                    .map(|t| t.0)
                    .collect();
                let q = team.len().max(1) as f64;
                let cap = (q / rs.team_size as f64).min(1.0);
                let decay = (rs.deadline - start.max(0.0)) / rs.deadline;
                frac += w / rs.workload * cap * decay;
            }
            total += (rs.max_utility * frac).min(rs.max_utility);
        }
    }
    total
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Abstract instance small enough for exhaustive search.
pub fn tiny_problem(seed: u64) -> Problem {
    let mut r = rng(seed ^ 0x7419);
    let config = AbstractConfig {
        n_sp: r.random_range(1..=3),
        n_sr: r.random_range(1..=3),
        n_skills: r.random_range(1..=2),
        max_services: Some(2),
        seed,
        ..AbstractConfig::default()
    };
    gen_abstract(&config).expect("valid config")
}

/// Instances for the auction convergence bound: at most five providers and
/// three skills. Returns the problem and the bound `2 |SP|^2 |S|^2`.
pub fn small_auction(seed: u64) -> (Problem, usize) {
    let mut r = rng(seed ^ 0x5eed);
    let n_sp = r.random_range(1..=5);
    let n_skills: u16 = r.random_range(1..=3);
    let config = AbstractConfig { n_sp, n_sr: r.random_range(1..=3), n_skills, seed, ..AbstractConfig::default() };
    (gen_abstract(&config).expect("valid config"), 2 * n_sp * n_sp * (n_skills as usize).pow(2))
}

pub fn nclo_nondecreasing(trace: &somaop::engine::Trace) -> bool {
    trace.samples.windows(2).all(|w| w[0].nclo <= w[1].nclo)
}

/// Whether `count` successes in `n` trials lie within three binomial standard
/// deviations of `n p`.
pub fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let (n, c) = (n as f64, count as f64);
    (c - n * p).abs() <= 3.0 * (n * p * (1.0 - p)).sqrt() + 1e-9
}

/// `(label, observed count, trials, probability)` for every categorical draw
/// of the MCI generator over `n` sites and `n` units.
pub fn mci_frequencies(n: usize) -> Vec<(String, usize, usize, f64)> {
    use somaop::scenarios::{gen_mci, mci_skill, Activity, MciConfig, Triage};
    let config = MciConfig::sized(n, n, 42);
    let inst = gen_mci(&config).expect("valid config");
    let annex = &inst.annex;
    let mut out = Vec::new();
    for (k, st) in config.site_types.iter().enumerate() {
        let c = annex.site_types.iter().filter(|&&t| t == k).count();
        out.push((format!("site type {k}"), c, n, st.probability));
        // casualty triage mix within sites of this type
        let sites: BTreeSet<RequesterId> = annex
            .site_types
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == k)
            .map(|(j, _)| RequesterId(j as u32))
            .collect();
        let cas: Vec<_> = annex.casualties.iter().filter(|c| sites.contains(&c.site)).collect();
        for (ti, t) in Triage::ALL.iter().enumerate() {
            let c = cas.iter().filter(|c| c.triage == *t).count();
            out.push((format!("site type {k} {t}"), c, cas.len(), st.triage_mix[ti]));
        }
    }
    for ut in &config.unit_types {
        let idx: Vec<usize> = (0..n).filter(|&i| annex.unit_kinds[i] == ut.kind).collect();
        out.push((format!("unit {:?}", ut.kind), idx.len(), n, ut.probability));
        for (li, lo) in ut.loadouts.iter().enumerate() {
            let c = idx
                .iter()
                .filter(|&&i| {
                    let p = &inst.problem.providers[i];
                    let got = Triage::ALL.map(|t| p.skill(mci_skill(t, Activity::Treatment)).map_or(0, |s| s.workload as u32));
                    got == *lo
                })
                .count();
            out.push((format!("unit {:?} load-out {li}", ut.kind), c, idx.len(), 1.0 / ut.loadouts.len() as f64));
        }
    }
    out
}

/// Mean of the first `n` requested-skill utility caps drawn by the abstract
/// generator.
pub fn abstract_u_star_mean(n: usize) -> f64 {
    let mut draws = Vec::with_capacity(n);
    let mut seed = 0;
    while draws.len() < n {
        let p = gen_abstract(&AbstractConfig::sized(1, 50, seed)).expect("valid config");
        draws.extend(p.requesters.iter().flat_map(|r| r.skills.iter().map(|s| s.max_utility)));
        seed += 1;
    }
    draws.truncate(n);
    draws.iter().sum::<f64>() / n as f64
}
