//! Service-oriented multi-agent optimization: a problem model, a metered
//! message-passing engine, distributed auction and matching schedulers,
//! centralized baselines, a DCOP local-search baseline and scenario generators.

// Negated float comparisons are how input checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dcop;
pub mod dsrm;
pub mod engine;
pub mod fixtures;
pub mod model;
pub mod rpa;
pub mod scenarios;
