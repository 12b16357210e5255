use std::fs;
use std::path::{Path, PathBuf};

use somaop::scenarios::{gen_abstract, gen_mci, AbstractConfig, Instance, MciConfig, SimulatorKind};

use crate::{CliError, ExperimentConfig};

/// A family of instances: `count` draws with seeds `seed, seed + 1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Family {
    pub simulator: SimulatorKind,
    pub n_sp: usize,
    /// Providers per requester.
    pub magnitude: usize,
    pub count: usize,
    pub seed: u64,
}

impl Family {
    pub fn n_sr(&self) -> Result<usize, CliError> {
        let err = CliError::Magnitude { n_sp: self.n_sp, magnitude: self.magnitude };
        if self.magnitude == 0 || !self.n_sp.is_multiple_of(self.magnitude) || self.n_sp < self.magnitude {
            return Err(err);
        }
        Ok(self.n_sp / self.magnitude)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.count as u64).map(|i| self.seed.wrapping_add(i))
    }

    pub fn file_name(&self, seed: u64) -> String {
        let n_sr = self.n_sp / self.magnitude.max(1);
        format!("{}-{}x{}-s{seed}.json", self.simulator, self.n_sp, n_sr)
    }
}

pub fn generate(family: &Family, config: &ExperimentConfig) -> Result<Vec<Instance>, CliError> {
    let n_sr = family.n_sr()?;
    family
        .seeds()
        .map(|seed| {
            let inst = match family.simulator {
                SimulatorKind::Abstract => {
                    let c = config.abstract_sim.clone();
                    let p = gen_abstract(&AbstractConfig { n_sp: family.n_sp, n_sr, seed, ..c })?;
                    Instance::from_abstract(p, seed)
                }
                SimulatorKind::Mci => {
                    let c = config.mci.clone();
                    let m = gen_mci(&MciConfig { n_sp: family.n_sp, n_sr, seed, ..c })?;
                    Instance::from_mci(m, seed)
                }
            };
            Ok(inst)
        })
        .collect()
}

/// Writes one JSON file per instance into `dir` and returns the paths.
pub fn cmd_generate(
    family: &Family,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let instances = generate(family, config)?;
    fs::create_dir_all(dir)?;
    instances
        .iter()
        .map(|inst| {
            let path = dir.join(family.file_name(inst.meta.seed));
            inst.save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Loads instance files. A directory contributes its `.json` files ordered
/// by instance seed.
pub fn load_instances(paths: &[PathBuf]) -> Result<Vec<Instance>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        if !path.is_dir() {
            out.push(Instance::load(path)?);
            continue;
        }
        let mut inside = Vec::new();
        for entry in fs::read_dir(path)? {
            let file = entry?.path();
            if file.extension().is_some_and(|e| e == "json") {
                inside.push(Instance::load(&file)?);
            }
        }
        inside.sort_by_key(|i| i.meta.seed);
        out.extend(inside);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(n_sp: usize, magnitude: usize, count: usize) -> Family {
        Family { simulator: SimulatorKind::Abstract, n_sp, magnitude, count, seed: 7 }
    }

    #[test]
    fn requester_count_follows_magnitude() {
        assert_eq!(family(20, 4, 1).n_sr().unwrap(), 5);
        assert_eq!(family(40, 2, 1).n_sr().unwrap(), 20);
        assert!(family(20, 3, 1).n_sr().is_err());
        assert!(family(20, 0, 1).n_sr().is_err());
        assert!(family(2, 4, 1).n_sr().is_err());
    }

    #[test]
    fn seeds_are_consecutive() {
        let got: Vec<u64> = family(20, 4, 3).seeds().collect();
        assert_eq!(got, [7, 8, 9]);
        assert_eq!(family(20, 4, 0).seeds().count(), 0);
    }

    #[test]
    fn sizes_reach_the_instances() {
        let insts = generate(&family(40, 2, 2), &ExperimentConfig::default()).unwrap();
        assert_eq!(insts.len(), 2);
        for inst in &insts {
            assert_eq!(inst.problem.providers.len(), 40);
            assert_eq!(inst.problem.requesters.len(), 20);
        }
        let mut f = family(8, 4, 1);
        f.simulator = SimulatorKind::Mci;
        let m = generate(&f, &ExperimentConfig::default()).unwrap();
        assert!(m[0].mci.is_some());
    }
}
