use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    decay_factor, segments_of_tuples, skill_value, ProviderId, RequestedSkill, RequesterId,
    ServiceTuple, SkillId, EPS,
};

/// A provider's offer for one skill of one requester: how much it can give, when
/// it could start there, and its per-unit work time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub sp: ProviderId,
    pub skill: SkillId,
    pub workload: f64,
    pub start: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BidMode {
    Simple,
    #[default]
    Truncated,
}

/// Utility of the provider covering as much as it can on its own, ignoring
/// teammates and team-size effects.
pub fn bid_simple(req: &RequestedSkill, remaining: f64, offer: &Offer) -> f64 {
    if remaining <= EPS || req.workload <= 0.0 {
        return 0.0;
    }
    let decay = decay_factor(offer.start, req.deadline).unwrap_or(0.0);
    req.max_utility * (offer.workload.min(remaining) / req.workload) * decay
}

/// Splits `total` as evenly as possible under per-member caps, handing the
/// slack of capped members to the others.
pub fn even_split(total: f64, caps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; caps.len()];
    let mut open: Vec<usize> = (0..caps.len()).filter(|&i| caps[i] > EPS).collect();
    let mut left = total.max(0.0);
    while left > EPS && !open.is_empty() {
        let share = left / open.len() as f64;
        let (capped, free): (Vec<usize>, Vec<usize>) =
            open.iter().partition(|&&i| caps[i] - out[i] <= share + EPS);
        if capped.is_empty() {
            for &i in &free {
                out[i] += share;
            }
            break;
        }
        for &i in &capped {
            left -= caps[i] - out[i];
            out[i] = caps[i];
        }
        open = free;
    }
    out
}

/// Tuples produced by splitting `remaining` evenly over `members`.
pub fn split_tuples(
    requester: RequesterId,
    remaining: f64,
    members: &[Offer],
) -> Vec<(ProviderId, ServiceTuple)> {
    let caps: Vec<f64> = members.iter().map(|o| o.workload).collect();
    even_split(remaining, &caps)
        .into_iter()
        .zip(members)
        .filter(|(w, _)| *w > EPS)
        .map(|(w, o)| (o.sp, ServiceTuple::new(requester, o.skill, w, o.start, o.rate)))
        .collect()
}

/// Utility of the skill if `remaining` were split evenly over `members`.
pub fn split_utility(req: &RequestedSkill, remaining: f64, members: &[Offer]) -> f64 {
    let tuples = split_tuples(RequesterId(0), remaining, members);
    let refs: Vec<(ProviderId, &ServiceTuple)> = tuples.iter().map(|(p, t)| (*p, t)).collect();
    skill_value(req, &segments_of_tuples(&refs))
}

/// Positive bids only for the `q* - |base|` earliest offers; each receives the
/// marginal utility it adds to the base and the offers arriving before it.
/// Offers arriving at the same instant share their joint marginal equally.
pub fn bid_truncated(
    req: &RequestedSkill,
    remaining: f64,
    base: &[Offer],
    offers: &[Offer],
) -> BTreeMap<ProviderId, f64> {
    let mut bids: BTreeMap<ProviderId, f64> = offers.iter().map(|o| (o.sp, 0.0)).collect();
    let slots = (req.team_size as usize).saturating_sub(base.len());
    if remaining <= EPS || slots == 0 {
        return bids;
    }
    let mut order: Vec<&Offer> = offers.iter().filter(|o| o.workload > EPS).collect();
    order.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.sp.cmp(&b.sp)));
    order.truncate(slots);

    let mut members: Vec<Offer> = base.to_vec();
    let mut before = split_utility(req, remaining, &members);
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && (order[j].start - order[i].start).abs() <= EPS {
            j += 1;
        }
        members.extend(order[i..j].iter().copied());
        let after = split_utility(req, remaining, &members);
        let share = (after - before).max(0.0) / (j - i) as f64;
        for o in &order[i..j] {
            bids.insert(o.sp, share);
        }
        before = after;
        i = j;
    }
    bids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(w: f64, q: u32) -> RequestedSkill {
        RequestedSkill { skill: SkillId(0), workload: w, team_size: q, max_utility: 1000.0, deadline: 100.0 }
    }

    fn offer(sp: u32, w: f64, start: f64) -> Offer {
        Offer { sp: ProviderId(sp), skill: SkillId(0), workload: w, start, rate: 1.0 }
    }

    #[test]
    fn simple_bid_examples() {
        assert_eq!(bid_simple(&req(4.0, 1), 4.0, &offer(0, 4.0, 0.0)), 1000.0);
        assert_eq!(bid_simple(&req(4.0, 1), 4.0, &offer(0, 0.0, 0.0)), 0.0);
        assert!((bid_simple(&req(4.0, 1), 4.0, &offer(0, 2.0, 10.0)) - 450.0).abs() < 1e-9);
    }

    #[test]
    fn even_split_examples() {
        assert_eq!(even_split(4.0, &[10.0, 10.0]), vec![2.0, 2.0]);
        assert_eq!(even_split(4.0, &[1.0, 10.0]), vec![1.0, 3.0]);
        assert_eq!(even_split(4.0, &[3.0]), vec![3.0]);
        assert_eq!(even_split(4.0, &[]), Vec::<f64>::new());
        let s = even_split(9.0, &[1.0, 2.0, 10.0]);
        assert_eq!(s, vec![1.0, 2.0, 6.0]);
    }

    #[test]
    fn truncation_keeps_earliest() {
        let b = bid_truncated(&req(4.0, 1), 4.0, &[], &[offer(0, 4.0, 3.0), offer(1, 4.0, 7.0)]);
        assert!(b[&ProviderId(0)] > 0.0);
        assert_eq!(b[&ProviderId(1)], 0.0);
        let b = bid_truncated(&req(4.0, 1), 4.0, &[offer(5, 4.0, 0.0)], &[offer(0, 4.0, 3.0)]);
        assert_eq!(b[&ProviderId(0)], 0.0);
    }

    #[test]
    fn simultaneous_pair_shares_marginal() {
        let b = bid_truncated(&req(4.0, 2), 4.0, &[], &[offer(0, 2.0, 0.0), offer(1, 2.0, 0.0)]);
        assert!((b[&ProviderId(0)] - 500.0).abs() < 1e-9);
        assert!((b[&ProviderId(1)] - 500.0).abs() < 1e-9);
    }

    #[test]
    fn staggered_marginals_sum_to_joint_utility() {
        let r = req(4.0, 2);
        let offers = [offer(0, 4.0, 1.0), offer(1, 4.0, 2.0)];
        let b = bid_truncated(&r, 4.0, &[], &offers);
        let joint = split_utility(&r, 4.0, &offers);
        assert!((b.values().sum::<f64>() - joint).abs() < 1e-9);
    }
}
