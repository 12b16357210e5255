use std::fmt;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rpa,
    DsrmSimple,
    DsrmTruncated,
    Dgs,
    Greedy,
    Dsa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Rpa,
        Algorithm::DsrmSimple,
        Algorithm::DsrmTruncated,
        Algorithm::Dgs,
        Algorithm::Greedy,
        Algorithm::Dsa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rpa => "rpa",
            Algorithm::DsrmSimple => "dsrm-simple",
            Algorithm::DsrmTruncated => "dsrm-truncated",
            Algorithm::Dgs => "dgs",
            Algorithm::Greedy => "greedy",
            Algorithm::Dsa => "dsa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            CliError::UnknownAlgorithm {
                name: s.to_owned(),
                valid: Algorithm::ALL.map(Algorithm::name).join(", "),
            }
        })
    }
}

/// Knowledge levels of one DSA configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    pub p_c: f64,
    pub p_a: f64,
}

/// One column of a batch: an algorithm and, for DSA, its knowledge levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub coherence: Option<Coherence>,
}

impl RunSpec {
    /// Name written to the `algorithm` column. DSA runs carry their levels,
    /// e.g. `dsa/p_c=0.25/p_a=1`.
    pub fn label(&self) -> String {
        match self.coherence {
            None => self.algorithm.name().to_owned(),
            Some(c) => format!("{}/p_c={}/p_a={}", self.algorithm, c.p_c, c.p_a),
        }
    }
}

/// Splits a label back into its base name and knowledge levels.
pub fn parse_label(label: &str) -> (&str, Option<Coherence>) {
    let mut parts = label.split('/');
    let base = parts.next().unwrap_or_default();
    let mut level = |key: &str| {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .and_then(|v| v.parse::<f64>().ok())
    };
    match (level("p_c="), level("p_a=")) {
        (Some(p_c), Some(p_a)) => (base, Some(Coherence { p_c, p_a })),
        _ => (label, None),
    }
}

/// Expands the requested algorithms into batch columns, in order. DSA gets
/// one column per pair of `p_c × p_a`; duplicates are dropped.
pub fn plan(algorithms: &[Algorithm], p_c: &[f64], p_a: &[f64]) -> Result<Vec<RunSpec>, CliError> {
    if let Some(&p) = p_c.iter().chain(p_a).find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Probability(p));
    }
    let mut specs: Vec<RunSpec> = Vec::new();
    for &algorithm in algorithms {
        let variants: Vec<Option<Coherence>> = if algorithm == Algorithm::Dsa {
            p_c.iter()
                .flat_map(|&c| p_a.iter().map(move |&a| Some(Coherence { p_c: c, p_a: a })))
                .collect()
        } else {
            vec![None]
        };
        for coherence in variants {
            let spec = RunSpec { algorithm, coherence };
            if !specs.contains(&spec) {
                specs.push(spec);
            }
        }
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
    }

    #[test]
    fn unknown_name_lists_the_valid_ones() {
        let err = "max-sum".parse::<Algorithm>().unwrap_err().to_string();
        assert!(err.contains("max-sum"));
        for a in Algorithm::ALL {
            assert!(err.contains(a.name()), "{err}");
        }
    }

    #[test]
    fn dsa_expands_over_levels() {
        let specs = plan(&[Algorithm::Rpa, Algorithm::Dsa, Algorithm::Rpa], &[0.0, 1.0], &[1.0]).unwrap();
        let labels: Vec<String> = specs.iter().map(RunSpec::label).collect();
        assert_eq!(labels, ["rpa", "dsa/p_c=0/p_a=1", "dsa/p_c=1/p_a=1"]);
        assert!(plan(&[Algorithm::Dsa], &[1.5], &[1.0]).is_err());
    }

    #[test]
    fn labels_parse_back() {
        let spec = RunSpec {
            algorithm: Algorithm::Dsa,
            coherence: Some(Coherence { p_c: 0.25, p_a: 0.75 }),
        };
        let label = spec.label();
        assert_eq!(parse_label(&label), ("dsa", spec.coherence));
        assert_eq!(parse_label("dsrm-truncated"), ("dsrm-truncated", None));
        assert_eq!(parse_label("dsa/junk"), ("dsa/junk", None));
    }
}
