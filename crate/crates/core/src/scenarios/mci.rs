//! Mass-casualty incident instances: disaster sites request treatment, upload
//! and transfer for triaged casualties; medical units provide them.

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::model::{
    travel_time, Point, Problem, ProvidedSkill, ProviderId, ProviderProfile, RequestedSkill,
    RequesterId, RequesterProfile, SkillId, SkillPrecedence, Solution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Triage {
    Urgent,
    Medium,
    NonUrgent,
}

impl Triage {
    pub const ALL: [Triage; 3] = [Triage::Urgent, Triage::Medium, Triage::NonUrgent];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Relative importance used to scale requester utilities.
    pub fn weight(self) -> f64 {
        match self {
            Triage::Urgent => 3.0,
            Triage::Medium => 2.0,
            Triage::NonUrgent => 1.0,
        }
    }
}

impl fmt::Display for Triage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Triage::Urgent => "urgent",
            Triage::Medium => "medium",
            Triage::NonUrgent => "non-urgent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Treatment,
    Upload,
    Transfer,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Treatment, Activity::Upload, Activity::Transfer];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Skill id of an activity for one triage class: `triage * 3 + activity`.
pub fn mci_skill(triage: Triage, activity: Activity) -> SkillId {
    SkillId((triage.index() * 3 + activity.index()) as u16)
}

pub fn skill_parts(skill: SkillId) -> Option<(Triage, Activity)> {
    let i = skill.0 as usize;
    (i < 9).then(|| (Triage::ALL[i / 3], Activity::ALL[i % 3]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Casualty {
    pub triage: Triage,
    pub rpm: u8,
    pub site: RequesterId,
}

/// Piecewise-linear duration in minutes over elapsed hours, clamped at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareCurve {
    pub points: Vec<[f64; 2]>,
}

impl CareCurve {
    pub fn minutes_at(&self, hours: f64) -> f64 {
        interpolate(&self.points, hours)
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    match points {
        [] => 0.0,
        [p] => p[1],
        _ => {
            if x <= points[0][0] {
                return points[0][1];
            }
            for w in points.windows(2) {
                let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                if x <= x1 {
                    let f = if x1 > x0 { (x - x0) / (x1 - x0) } else { 1.0 };
                    return y0 + f * (y1 - y0);
                }
            }
            points[points.len() - 1][1]
        }
    }
}

/// Survival, deterioration and care-duration tables. Defaults approximate the
/// published curves and are meant to be edited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MciCurves {
    /// Survival probability indexed by RPM 0..=12, interpolated in between.
    pub survival: Vec<f64>,
    /// RPM points lost per hour, per triage.
    pub rpm_loss_per_hour: [f64; 3],
    /// Inclusive RPM band per triage.
    pub rpm_bands: [[u8; 2]; 3],
    /// Treatment duration per casualty, per triage.
    pub treatment: [CareCurve; 3],
    /// Upload duration per casualty, per triage.
    pub upload: [CareCurve; 3],
    /// Casualties strictly below this survival are counted.
    pub threshold: f64,
}

impl Default for MciCurves {
    fn default() -> Self {
        let curve = |a: f64, b: f64| CareCurve { points: vec![[0.0, a], [8.0, b]] };
        Self {
            survival: vec![
                0.05, 0.15, 0.30, 0.45, 0.55, 0.62, 0.68, 0.74, 0.80, 0.86, 0.91, 0.95, 0.98,
            ],
            rpm_loss_per_hour: [1.0, 0.5, 0.25],
            rpm_bands: [[0, 4], [5, 8], [9, 12]],
            treatment: [curve(20.0, 40.0), curve(15.0, 30.0), curve(10.0, 20.0)],
            upload: [curve(10.0, 20.0), curve(5.0, 10.0), curve(5.0, 10.0)],
            threshold: 0.40,
        }
    }
}

impl MciCurves {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::InvalidConfig(m.to_owned()));
        if self.survival.len() != 13 {
            return bad("survival table needs 13 entries (RPM 0..=12)");
        }
        if !self.survival.windows(2).all(|w| w[0] <= w[1]) {
            return bad("survival must be nondecreasing in RPM");
        }
        if self.rpm_loss_per_hour.iter().any(|&l| !(l >= 0.0)) {
            return bad("RPM loss rates must be nonnegative");
        }
        if self.rpm_bands.iter().any(|b| b[0] > b[1] || b[1] > 12) {
            return bad("RPM bands must be ordered within 0..=12");
        }
        for c in self.treatment.iter().chain(&self.upload) {
            if c.points.is_empty()
                || !c.points.windows(2).all(|w| w[0][0] < w[1][0] && w[0][1] <= w[1][1])
                || c.points[0][1] <= 0.0
            {
                return bad("care curves must be nonempty, positive and nondecreasing");
            }
        }
        Ok(())
    }

    pub fn survival_at_rpm(&self, rpm: f64) -> f64 {
        let r = rpm.clamp(0.0, 12.0);
        let i = (r.floor() as usize).min(11);
        let f = r - i as f64;
        self.survival[i] + f * (self.survival[i + 1] - self.survival[i])
    }

    pub fn rpm_at(&self, triage: Triage, rpm0: u8, hours: f64) -> f64 {
        (rpm0 as f64 - self.rpm_loss_per_hour[triage.index()] * hours.max(0.0)).max(0.0)
    }

    pub fn survival(&self, triage: Triage, rpm0: u8, hours: f64) -> f64 {
        self.survival_at_rpm(self.rpm_at(triage, rpm0, hours))
    }

    /// Care duration in hours for one casualty at the given elapsed time.
    pub fn care_hours(&self, triage: Triage, activity: Activity, hours: f64) -> Option<f64> {
        let curve = match activity {
            Activity::Treatment => &self.treatment[triage.index()],
            Activity::Upload => &self.upload[triage.index()],
            Activity::Transfer => return None,
        };
        Some(curve.minutes_at(hours) / 60.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteType {
    pub casualties: u32,
    /// Probability of urgent, medium, non-urgent per casualty.
    pub triage_mix: [f64; 3],
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Als,
    Bls,
    Motorcycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitType {
    pub kind: UnitKind,
    pub probability: f64,
    /// Treatment, upload, transfer.
    pub activities: [bool; 3],
    /// Urgent, medium, non-urgent.
    pub triages: [bool; 3],
    /// Alternative casualty capacities per triage; one is drawn per unit.
    pub loadouts: Vec<[u32; 3]>,
}

pub fn default_site_types() -> Vec<SiteType> {
    vec![
        SiteType { casualties: 5, triage_mix: [0.6, 0.2, 0.2], probability: 0.2 },
        SiteType { casualties: 8, triage_mix: [0.2, 0.4, 0.4], probability: 0.2 },
        SiteType { casualties: 10, triage_mix: [0.0, 0.3, 0.7], probability: 0.6 },
    ]
}

pub fn default_unit_types() -> Vec<UnitType> {
    vec![
        UnitType {
            kind: UnitKind::Als,
            probability: 0.2,
            activities: [true, true, true],
            triages: [true, true, true],
            loadouts: vec![[2, 0, 0], [1, 2, 0], [1, 1, 1], [0, 0, 6], [0, 4, 0], [1, 0, 3]],
        },
        UnitType {
            kind: UnitKind::Bls,
            probability: 0.6,
            activities: [true, true, true],
            triages: [false, true, true],
            loadouts: vec![[0, 2, 0], [0, 1, 1], [0, 0, 3]],
        },
        UnitType {
            kind: UnitKind::Motorcycle,
            probability: 0.2,
            activities: [true, false, false],
            triages: [true, true, true],
            loadouts: vec![[0, 0, 2], [0, 2, 0], [0, 1, 1], [1, 0, 0]],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MciConfig {
    pub n_sp: usize,
    pub n_sr: usize,
    /// Side length in km.
    pub grid: f64,
    /// Unit speed in km/h.
    pub speed: f64,
    /// Hospital location; the grid centre when absent.
    pub hospital: Option<Point>,
    /// Scenario length in hours.
    pub horizon: f64,
    /// Latest useful start per triage, in hours.
    pub deadlines: [f64; 3],
    /// Utility per casualty before the triage weight is applied.
    pub utility_scale: f64,
    pub max_services: usize,
    pub site_types: Vec<SiteType>,
    pub unit_types: Vec<UnitType>,
    pub curves: MciCurves,
    pub seed: u64,
}

impl Default for MciConfig {
    fn default() -> Self {
        Self {
            n_sp: 20,
            n_sr: 5,
            grid: 80.0,
            speed: 60.0,
            hospital: None,
            horizon: 8.0,
            deadlines: [2.0, 4.0, 8.0],
            utility_scale: 100.0,
            max_services: 6,
            site_types: default_site_types(),
            unit_types: default_unit_types(),
            curves: MciCurves::default(),
            seed: 0,
        }
    }
}

impl MciConfig {
    pub fn sized(n_sp: usize, n_sr: usize, seed: u64) -> Self {
        Self { n_sp, n_sr, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::InvalidConfig(m.to_owned()));
        if self.n_sp == 0 || self.n_sr == 0 {
            return bad("n_sp and n_sr must be at least 1");
        }
        if !(self.speed > 0.0 && self.horizon > 0.0 && self.grid >= 0.0) {
            return bad("speed and horizon must be positive");
        }
        if self.deadlines.iter().any(|&d| !(d > 0.0)) {
            return bad("deadlines must be positive");
        }
        if self.max_services == 0 || !(self.utility_scale > 0.0) {
            return bad("max_services and utility_scale must be positive");
        }
        if self.site_types.is_empty() || self.unit_types.is_empty() {
            return bad("site and unit type tables must be nonempty");
        }
        if self.unit_types.iter().any(|u| u.loadouts.is_empty()) {
            return bad("every unit type needs at least one load-out");
        }
        self.curves.validate()
    }

    fn hospital_location(&self) -> Point {
        self.hospital.unwrap_or(Point::new(self.grid / 2.0, self.grid / 2.0))
    }
}

/// Everything the MCI objective needs beyond the problem itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MciAnnex {
    /// Sorted by site, triage, then RPM.
    pub casualties: Vec<Casualty>,
    pub hospital: Point,
    pub speed: f64,
    pub horizon: f64,
    pub curves: MciCurves,
    /// Drawn type index per site.
    pub site_types: Vec<usize>,
    /// Drawn unit kind per provider.
    pub unit_kinds: Vec<UnitKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MciInstance {
    pub problem: Problem,
    pub annex: MciAnnex,
}

/// One ordering edge between two activities of the same casualty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasualtyOrdering {
    /// Index into the annex casualty list.
    pub casualty: usize,
    pub before: Activity,
    pub after: Activity,
}

fn weighted(probabilities: impl IntoIterator<Item = f64>) -> Result<WeightedIndex<f64>, ScenarioError> {
    WeightedIndex::new(probabilities)
        .map_err(|e| ScenarioError::InvalidConfig(format!("bad probability table: {e}")))
}

/// Draws an instance. Sites are requesters; medical units are providers.
pub fn gen_mci(config: &MciConfig) -> Result<MciInstance, ScenarioError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hospital = config.hospital_location();
    let site_dist = weighted(config.site_types.iter().map(|s| s.probability))?;
    let unit_dist = weighted(config.unit_types.iter().map(|u| u.probability))?;
    let curves = &config.curves;

    let mut requesters = Vec::with_capacity(config.n_sr);
    let mut precedences = Vec::new();
    let mut casualties = Vec::new();
    let mut site_types = Vec::with_capacity(config.n_sr);
    for j in 0..config.n_sr {
        let id = RequesterId(j as u32);
        let ty = site_dist.sample(&mut rng);
        site_types.push(ty);
        let site = &config.site_types[ty];
        let mix = weighted(site.triage_mix)?;
        let location = Point::new(
            rng.random::<f64>() * config.grid,
            rng.random::<f64>() * config.grid,
        );
        let mut counts = [0u32; 3];
        for _ in 0..site.casualties {
            let triage = Triage::ALL[mix.sample(&mut rng)];
            let [lo, hi] = curves.rpm_bands[triage.index()];
            counts[triage.index()] += 1;
            casualties.push(Casualty { triage, rpm: rng.random_range(lo..=hi), site: id });
        }
        let mut skills = Vec::new();
        for triage in Triage::ALL {
            let c = counts[triage.index()];
            if c == 0 {
                continue;
            }
            for activity in Activity::ALL {
                skills.push(RequestedSkill {
                    skill: mci_skill(triage, activity),
                    workload: c as f64,
                    team_size: 1,
                    max_utility: c as f64 * triage.weight() * config.utility_scale,
                    deadline: config.deadlines[triage.index()],
                });
            }
            let [t, u, x] = Activity::ALL.map(|a| mci_skill(triage, a));
            precedences.push(SkillPrecedence { requester: id, before: t, after: u });
            precedences.push(SkillPrecedence { requester: id, before: u, after: x });
        }
        requesters.push(RequesterProfile { id, skills, location });
    }
    casualties.sort_by_key(|c| (c.site, c.triage, c.rpm));

    // a full load takes one average site-to-hospital drive
    let mean_drive = requesters
        .iter()
        .map(|r| travel_time(r.location, hospital, config.speed))
        .sum::<f64>()
        / requesters.len() as f64;

    let mut providers = Vec::with_capacity(config.n_sp);
    let mut unit_kinds = Vec::with_capacity(config.n_sp);
    for i in 0..config.n_sp {
        let ut = &config.unit_types[unit_dist.sample(&mut rng)];
        unit_kinds.push(ut.kind);
        let loadout = ut.loadouts[rng.random_range(0..ut.loadouts.len())];
        let location = Point::new(
            rng.random::<f64>() * config.grid,
            rng.random::<f64>() * config.grid,
        );
        let mut skills = Vec::new();
        for triage in Triage::ALL {
            let cap = loadout[triage.index()];
            if !ut.triages[triage.index()] || cap == 0 {
                continue;
            }
            for activity in Activity::ALL {
                if !ut.activities[activity.index()] {
                    continue;
                }
                let rate = curves
                    .care_hours(triage, activity, 0.0)
                    .unwrap_or(mean_drive.max(1e-3) / cap as f64);
                skills.push(ProvidedSkill {
                    skill: mci_skill(triage, activity),
                    workload: cap as f64,
                    rate,
                });
            }
        }
        providers.push(ProviderProfile {
            id: ProviderId(i as u32),
            skills,
            max_services: config.max_services,
            location,
            speed: config.speed,
        });
    }

    Ok(MciInstance {
        problem: Problem { num_skills: 9, providers, requesters, precedences },
        annex: MciAnnex {
            casualties,
            hospital,
            speed: config.speed,
            horizon: config.horizon,
            curves: config.curves.clone(),
            site_types,
            unit_kinds,
        },
    })
}

/// Treatment before upload before transfer, for every casualty.
pub fn mci_ordering_constraints(instance: &MciInstance) -> Vec<CasualtyOrdering> {
    (0..instance.annex.casualties.len())
        .flat_map(|casualty| {
            [
                CasualtyOrdering { casualty, before: Activity::Treatment, after: Activity::Upload },
                CasualtyOrdering { casualty, before: Activity::Upload, after: Activity::Transfer },
            ]
        })
        .collect()
}

/// Hospital arrival time per casualty, `None` when never transferred. Within a
/// site and triage class the sickest casualties ride first.
pub fn arrival_times(solution: &Solution, instance: &MciInstance) -> Vec<Option<f64>> {
    let annex = &instance.annex;
    let mut loads: BTreeMap<(RequesterId, Triage), Vec<(f64, f64)>> = BTreeMap::new();
    for (_, t) in solution.services() {
        let Some((triage, Activity::Transfer)) = skill_parts(t.skill) else {
            continue;
        };
        let Some(site) = instance.problem.try_requester(t.requester) else {
            continue;
        };
        let arrive = t.start + travel_time(site.location, annex.hospital, annex.speed);
        loads.entry((t.requester, triage)).or_default().push((arrive, t.workload));
    }
    for v in loads.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    // casualties are sorted by (site, triage, rpm), so each group is contiguous
    let mut out = vec![None; annex.casualties.len()];
    let mut rank: BTreeMap<(RequesterId, Triage), usize> = BTreeMap::new();
    for (i, c) in annex.casualties.iter().enumerate() {
        let k = rank.entry((c.site, c.triage)).or_default();
        let need = *k as f64 + 1.0;
        *k += 1;
        let mut carried = 0.0;
        for &(at, w) in loads.get(&(c.site, c.triage)).into_iter().flatten() {
            carried += w;
            if carried >= need - 1e-6 {
                out[i] = Some(at);
                break;
            }
        }
    }
    out
}

/// Number of casualties whose survival at hospital arrival (or at the horizon
/// when never transferred) is strictly below the threshold.
pub fn mci_objective(solution: &Solution, instance: &MciInstance) -> usize {
    let annex = &instance.annex;
    arrival_times(solution, instance)
        .into_iter()
        .zip(&annex.casualties)
        .filter(|(at, c)| {
            let t = at.map_or(annex.horizon, |a| a.min(annex.horizon));
            annex.curves.survival(c.triage, c.rpm, t) < annex.curves.threshold
        })
        .count()
}

/// Casualties not counted by the objective, so that larger is better.
pub fn mci_utility(solution: &Solution, instance: &MciInstance) -> f64 {
    (instance.annex.casualties.len() - mci_objective(solution, instance)) as f64
}
