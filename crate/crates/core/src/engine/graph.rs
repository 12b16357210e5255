use std::collections::{BTreeMap, VecDeque};

use crate::model::{Problem, ProviderId, RequesterId};

use super::AgentId;

/// Who may message whom.
pub trait Topology {
    fn contains(&self, a: AgentId) -> bool;
    fn are_neighbors(&self, a: AgentId, b: AgentId) -> bool;
    fn neighbors(&self, a: AgentId) -> Vec<AgentId>;
}

impl Topology for BipartiteGraph {
    fn contains(&self, a: AgentId) -> bool {
        BipartiteGraph::contains(self, a)
    }

    fn are_neighbors(&self, a: AgentId, b: AgentId) -> bool {
        BipartiteGraph::are_neighbors(self, a, b)
    }

    fn neighbors(&self, a: AgentId) -> Vec<AgentId> {
        BipartiteGraph::neighbors(self, a)
    }
}

/// Arbitrary undirected adjacency, used when agents of one kind talk among
/// themselves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeerGraph {
    adj: BTreeMap<AgentId, Vec<AgentId>>,
}

impl PeerGraph {
    pub fn new(
        agents: impl IntoIterator<Item = AgentId>,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Self {
        let mut adj: BTreeMap<AgentId, Vec<AgentId>> =
            agents.into_iter().map(|a| (a, Vec::new())).collect();
        for (a, b) in edges {
            if a == b {
                continue;
            }
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for v in adj.values_mut() {
            v.sort();
            v.dedup();
        }
        Self { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

impl Topology for PeerGraph {
    fn contains(&self, a: AgentId) -> bool {
        self.adj.contains_key(&a)
    }

    fn are_neighbors(&self, a: AgentId, b: AgentId) -> bool {
        self.adj.get(&a).is_some_and(|v| v.binary_search(&b).is_ok())
    }

    fn neighbors(&self, a: AgentId) -> Vec<AgentId> {
        self.adj.get(&a).cloned().unwrap_or_default()
    }
}

/// Provider/requester adjacency. Edges only ever join a provider to a requester.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BipartiteGraph {
    sp_adj: Vec<Vec<RequesterId>>,
    sr_adj: Vec<Vec<ProviderId>>,
}

/// Edge between provider `i` and requester `j` iff they share a skill.
pub fn build_graph(problem: &Problem) -> BipartiteGraph {
    let edges = problem.providers.iter().flat_map(|p| {
        problem
            .requesters
            .iter()
            .filter(|r| p.skill_ids().any(|s| r.requests(s)))
            .map(move |r| (p.id, r.id))
    });
    BipartiteGraph::from_edges(problem.providers.len(), problem.requesters.len(), edges)
}

impl BipartiteGraph {
    pub fn from_edges(
        n_sp: usize,
        n_sr: usize,
        edges: impl IntoIterator<Item = (ProviderId, RequesterId)>,
    ) -> Self {
        let mut g = Self {
            sp_adj: vec![Vec::new(); n_sp],
            sr_adj: vec![Vec::new(); n_sr],
        };
        for (p, r) in edges {
            g.sp_adj[p.index()].push(r);
            g.sr_adj[r.index()].push(p);
        }
        g.sp_adj.iter_mut().for_each(|v| {
            v.sort();
            v.dedup();
        });
        g.sr_adj.iter_mut().for_each(|v| {
            v.sort();
            v.dedup();
        });
        g
    }

    pub fn num_providers(&self) -> usize {
        self.sp_adj.len()
    }

    pub fn num_requesters(&self) -> usize {
        self.sr_adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.sp_adj.iter().map(Vec::len).sum()
    }

    /// All agents, providers first, each side by ascending id.
    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.sp_adj.len())
            .map(|i| AgentId::Provider(ProviderId(i as u32)))
            .chain((0..self.sr_adj.len()).map(|j| AgentId::Requester(RequesterId(j as u32))))
    }

    pub fn requesters_of(&self, p: ProviderId) -> &[RequesterId] {
        &self.sp_adj[p.index()]
    }

    pub fn providers_of(&self, r: RequesterId) -> &[ProviderId] {
        &self.sr_adj[r.index()]
    }

    pub fn neighbors(&self, a: AgentId) -> Vec<AgentId> {
        match a {
            AgentId::Provider(p) => self.sp_adj[p.index()]
                .iter()
                .map(|&r| AgentId::Requester(r))
                .collect(),
            AgentId::Requester(r) => self.sr_adj[r.index()]
                .iter()
                .map(|&p| AgentId::Provider(p))
                .collect(),
        }
    }

    pub fn contains(&self, a: AgentId) -> bool {
        match a {
            AgentId::Provider(p) => p.index() < self.sp_adj.len(),
            AgentId::Requester(r) => r.index() < self.sr_adj.len(),
        }
    }

    pub fn are_neighbors(&self, a: AgentId, b: AgentId) -> bool {
        match (a, b) {
            (AgentId::Provider(p), AgentId::Requester(r))
            | (AgentId::Requester(r), AgentId::Provider(p)) => self
                .sp_adj
                .get(p.index())
                .is_some_and(|v| v.binary_search(&r).is_ok()),
            _ => false,
        }
    }

    fn dense(&self, a: AgentId) -> usize {
        match a {
            AgentId::Provider(p) => p.index(),
            AgentId::Requester(r) => self.sp_adj.len() + r.index(),
        }
    }

    /// Hop distances from `src` to every agent in dense order; `None` if unreachable.
    pub fn distances_from(&self, src: AgentId) -> Vec<Option<usize>> {
        let n = self.sp_adj.len() + self.sr_adj.len();
        let mut dist = vec![None; n];
        let mut queue = VecDeque::from([src]);
        dist[self.dense(src)] = Some(0);
        while let Some(a) = queue.pop_front() {
            let d = dist[self.dense(a)].unwrap_or(0);
            for b in self.neighbors(a) {
                let slot = &mut dist[self.dense(b)];
                if slot.is_none() {
                    *slot = Some(d + 1);
                    queue.push_back(b);
                }
            }
        }
        dist
    }

    /// Largest finite hop distance between any two agents.
    pub fn diameter(&self) -> usize {
        self.agents()
            .flat_map(|a| self.distances_from(a).into_iter().flatten())
            .max()
            .unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        match self.agents().next() {
            None => true,
            Some(a) => self.distances_from(a).iter().all(Option::is_some),
        }
    }

    /// Component label per agent in dense order (providers, then requesters).
    pub fn components(&self) -> Vec<usize> {
        let n = self.sp_adj.len() + self.sr_adj.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for a in self.agents() {
            if label[self.dense(a)] != usize::MAX {
                continue;
            }
            for (i, d) in self.distances_from(a).into_iter().enumerate() {
                if d.is_some() {
                    label[i] = next;
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_of(&self, labels: &[usize], a: AgentId) -> usize {
        labels[self.dense(a)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{provider, requester};
    use crate::model::Point;

    fn problem(sp: &[&[u16]], sr: &[&[u16]]) -> Problem {
        let o = Point::default();
        Problem {
            num_skills: 4,
            providers: sp
                .iter()
                .enumerate()
                .map(|(i, ss)| {
                    let skills: Vec<_> = ss.iter().map(|&s| (s, 1.0, 1.0)).collect();
                    provider(i as u32, o, &skills)
                })
                .collect(),
            requesters: sr
                .iter()
                .enumerate()
                .map(|(j, ss)| {
                    let skills: Vec<_> = ss.iter().map(|&s| (s, 1.0, 1, 10.0, 10.0)).collect();
                    requester(j as u32, o, &skills)
                })
                .collect(),
            precedences: vec![],
        }
    }

    #[test]
    fn edges_follow_shared_skills() {
        let g = build_graph(&problem(&[&[0]], &[&[1]]));
        assert_eq!(g.num_edges(), 0);
        let g = build_graph(&problem(&[&[0, 1]], &[&[1]]));
        assert!(g.are_neighbors(
            AgentId::Provider(ProviderId(0)),
            AgentId::Requester(RequesterId(0))
        ));
        let g = build_graph(&problem(&[&[2], &[2], &[2]], &[&[2], &[2]]));
        assert_eq!(g.num_edges(), 6);
        assert_eq!(g.diameter(), 2);
    }

    #[test]
    fn providers_are_never_neighbors_of_providers() {
        let g = build_graph(&problem(&[&[2], &[2]], &[&[2]]));
        assert!(!g.are_neighbors(
            AgentId::Provider(ProviderId(0)),
            AgentId::Provider(ProviderId(1))
        ));
    }

    #[test]
    fn path_diameter_and_components() {
        // SP0 - SR0 - SP1 - SR1, plus isolated SP2
        let g = BipartiteGraph::from_edges(
            3,
            2,
            [
                (ProviderId(0), RequesterId(0)),
                (ProviderId(1), RequesterId(0)),
                (ProviderId(1), RequesterId(1)),
            ],
        );
        assert_eq!(g.diameter(), 3);
        assert!(!g.is_connected());
        let c = g.components();
        assert_eq!(c[0], c[1]);
        assert_ne!(c[0], c[2]);
    }
}
