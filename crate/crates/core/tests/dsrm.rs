mod common;

use std::collections::BTreeMap;

use common::{close, evaluate, nclo_nondecreasing};
use somaop::dsrm::{run_dsrm, run_dsrm_scored, BidMode, DsrmConfig};
use somaop::model::{validate_solution, Problem, Solution};
use somaop::scenarios::{gen_abstract, gen_mci, mci_utility, AbstractConfig, MciConfig};

fn conserved(p: &Problem, s: &Solution) -> bool {
    let mut given = BTreeMap::new();
    let mut got = BTreeMap::new();
    for (sp, t) in s.services() {
        *given.entry((sp, t.skill)).or_insert(0.0) += t.workload;
        *got.entry((t.requester, t.skill)).or_insert(0.0) += t.workload;
    }
    given.iter().all(|(&(sp, k), &w)| p.provider(sp).skill(k).is_some_and(|x| w <= x.workload + 1e-6))
        && got.iter().all(|(&(r, k), &w)| p.requester(r).skill(k).is_some_and(|x| w <= x.workload + 1e-6))
}

#[test]
fn committed_utility_never_drops_and_time_moves_forward() {
    for mode in [BidMode::Truncated, BidMode::Simple] {
        for seed in 0..30 {
            let p = gen_abstract(&AbstractConfig::sized(20, 5, seed)).unwrap();
            let out = run_dsrm(&p, &DsrmConfig::with_mode(mode)).unwrap();
            let u: Vec<f64> = out.trace.samples.iter().map(|s| s.utility).collect();
            assert!(u.windows(2).all(|w| w[0] <= w[1]), "{mode:?} seed {seed}: {u:?}");
            assert!(out.clock.windows(2).all(|w| w[0] < w[1]), "{mode:?} seed {seed}: {:?}", out.clock);
            assert!(nclo_nondecreasing(&out.trace));
            assert!(validate_solution(&out.solution, &p).is_ok(), "{mode:?} seed {seed}");
            assert!(conserved(&p, &out.solution));
            assert!(close(out.trace.final_utility(), evaluate(&p, &out.solution), 1e-9));
        }
    }
}

#[test]
fn mci_runs_are_monotone_in_survivors() {
    for seed in 0..5 {
        let inst = gen_mci(&MciConfig::sized(20, 5, seed)).unwrap();
        let out = run_dsrm_scored(&inst.problem, &DsrmConfig::default(), |s| mci_utility(s, &inst)).unwrap();
        if let Err(v) = validate_solution(&out.solution, &inst.problem) { panic!("seed {seed}: {v:?}"); }
        assert!(conserved(&inst.problem, &out.solution));
        let u: Vec<f64> = out.trace.samples.iter().map(|s| s.utility).collect();
        assert!(u.windows(2).all(|w| w[0] <= w[1]), "seed {seed}: {u:?}");
        assert_eq!(out.trace.final_utility(), mci_utility(&out.solution, &inst));
    }
}
