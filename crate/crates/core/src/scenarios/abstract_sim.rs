//! Random instances of the abstract simulator.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::model::{
    Point, Problem, ProvidedSkill, ProviderId, ProviderProfile, RequestedSkill, RequesterId,
    RequesterProfile, SkillId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbstractConfig {
    pub n_sp: usize,
    pub n_sr: usize,
    pub n_skills: u16,
    /// Side length of the square the agents are placed on. The default keeps
    /// typical travel times on the order of one service duration.
    pub grid: f64,
    pub speed: f64,
    pub u_range: [f64; 2],
    pub q_choices: Vec<u32>,
    /// Location and scale of the half-normal per-skill work time.
    pub rate_mu: f64,
    pub rate_sigma: f64,
    /// Inclusive range of integer workloads per chosen skill.
    pub workload_range: [u32; 2],
    pub horizon: f64,
    /// Requester deadlines are drawn as `U(lo, hi) * horizon`.
    pub deadline_frac: [f64; 2],
    /// Variables per provider; `None` gives every provider one slot per
    /// requested skill in the instance.
    pub max_services: Option<usize>,
    pub seed: u64,
}

impl Default for AbstractConfig {
    fn default() -> Self {
        Self {
            n_sp: 20,
            n_sr: 5,
            n_skills: 4,
            grid: 10.0,
            speed: 1.0,
            u_range: [750.0, 2000.0],
            q_choices: vec![1, 2],
            rate_mu: 1.0,
            rate_sigma: 1.0,
            workload_range: [1, 5],
            horizon: 100.0,
            deadline_frac: [0.5, 1.0],
            max_services: None,
            seed: 0,
        }
    }
}

impl AbstractConfig {
    pub fn sized(n_sp: usize, n_sr: usize, seed: u64) -> Self {
        Self { n_sp, n_sr, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::InvalidConfig(m.to_owned()));
        if self.n_sp == 0 || self.n_sr == 0 {
            return bad("n_sp and n_sr must be at least 1");
        }
        if self.n_skills == 0 {
            return bad("n_skills must be at least 1");
        }
        if self.q_choices.is_empty() || self.q_choices.contains(&0) {
            return bad("q_choices must be nonempty and positive");
        }
        if !(self.u_range[0] > 0.0 && self.u_range[0] <= self.u_range[1]) {
            return bad("u_range must be positive and ordered");
        }
        if self.workload_range[0] == 0 || self.workload_range[0] > self.workload_range[1] {
            return bad("workload_range must be positive and ordered");
        }
        if !(self.deadline_frac[0] > 0.0 && self.deadline_frac[0] <= self.deadline_frac[1]) {
            return bad("deadline_frac must be positive and ordered");
        }
        if !(self.horizon > 0.0 && self.grid >= 0.0 && self.speed > 0.0) {
            return bad("horizon and speed must be positive");
        }
        if !(self.rate_sigma >= 0.0 && self.rate_mu > 0.0) {
            return bad("rate_mu must be positive and rate_sigma nonnegative");
        }
        if self.max_services == Some(0) {
            return bad("max_services must be positive");
        }
        Ok(())
    }
}

fn skill_subset(rng: &mut impl Rng, n_skills: u16) -> Vec<SkillId> {
    let n = n_skills as usize;
    let count = rng.random_range(1..=n);
    let mut picked: Vec<SkillId> = index::sample(rng, n, count)
        .into_iter()
        .map(|i| SkillId(i as u16))
        .collect();
    picked.sort();
    picked
}

fn location(rng: &mut impl Rng, side: f64) -> Point {
    Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

/// Draws an instance. The same config always yields the same instance.
pub fn gen_abstract(config: &AbstractConfig) -> Result<Problem, ScenarioError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::<f64>::new(0.0, 1.0).expect("unit normal");
    let rates: Vec<f64> = (0..config.n_skills)
        .map(|_| config.rate_mu + config.rate_sigma * normal.sample(&mut rng).abs())
        .collect();
    let [w_lo, w_hi] = config.workload_range;

    let mut requesters = Vec::with_capacity(config.n_sr);
    for j in 0..config.n_sr {
        let loc = location(&mut rng, config.grid);
        let frac = rng.random_range(config.deadline_frac[0]..=config.deadline_frac[1]);
        let deadline = frac * config.horizon;
        let skills = skill_subset(&mut rng, config.n_skills)
            .into_iter()
            .map(|skill| {
                let workload = rng.random_range(w_lo..=w_hi) as f64;
                let max_utility = rng.random_range(config.u_range[0]..=config.u_range[1]);
                let team_size = config.q_choices[rng.random_range(0..config.q_choices.len())];
                RequestedSkill { skill, workload, team_size, max_utility, deadline }
            })
            .collect();
        requesters.push(RequesterProfile { id: RequesterId(j as u32), skills, location: loc });
    }
    let total_requested: usize = requesters.iter().map(|r| r.skills.len()).sum();
    let max_services = config.max_services.unwrap_or(total_requested.max(1));

    let mut providers = Vec::with_capacity(config.n_sp);
    for i in 0..config.n_sp {
        let loc = location(&mut rng, config.grid);
        let skills = skill_subset(&mut rng, config.n_skills)
            .into_iter()
            .map(|skill| ProvidedSkill {
                skill,
                workload: rng.random_range(w_lo..=w_hi) as f64,
                rate: rates[skill.0 as usize],
            })
            .collect();
        providers.push(ProviderProfile {
            id: ProviderId(i as u32),
            skills,
            max_services,
            location: loc,
            speed: config.speed,
        });
    }
    Ok(Problem {
        num_skills: config.n_skills,
        providers,
        requesters,
        precedences: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let c = AbstractConfig::sized(20, 5, 7);
        let a = serde_json::to_string(&gen_abstract(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&gen_abstract(&c).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = serde_json::to_string(&gen_abstract(&AbstractConfig::sized(20, 5, 8)).unwrap())
            .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn shape_and_ranges() {
        let p = gen_abstract(&AbstractConfig::sized(20, 5, 1)).unwrap();
        assert!(p.check().is_ok());
        assert_eq!((p.providers.len(), p.requesters.len(), p.num_skills), (20, 5, 4));
        for r in &p.requesters {
            assert!(!r.skills.is_empty() && r.skills.len() <= 4);
            let d = r.skills[0].deadline;
            assert!((50.0..=100.0).contains(&d));
            for s in &r.skills {
                assert_eq!(s.deadline, d);
                assert!((750.0..=2000.0).contains(&s.max_utility));
                assert!(s.team_size == 1 || s.team_size == 2);
                assert!((1.0..=5.0).contains(&s.workload) && s.workload.fract() == 0.0);
            }
        }
        // one rate per skill shared by every provider
        for s in 0..4 {
            let rates: Vec<f64> = p
                .providers
                .iter()
                .filter_map(|x| x.skill(SkillId(s)))
                .map(|x| x.rate)
                .collect();
            assert!(rates.iter().all(|&r| r == rates[0] && r >= 1.0));
        }
    }

    #[test]
    fn rejects_empty_sides() {
        assert!(gen_abstract(&AbstractConfig::sized(0, 5, 1)).is_err());
        assert!(gen_abstract(&AbstractConfig::sized(3, 0, 1)).is_err());
    }
}
