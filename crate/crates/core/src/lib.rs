//! Incident-aware microscopic traffic simulation and signal-control learning
//! environment: network model, routing, 1 s time-stepped vehicle dynamics,
//! incident injection, driver awareness and rerouting, rule-based and tabular
//! learning controllers, and robustness metrics over learning curves.

pub mod behavior;
pub mod control;
pub mod experiment;
pub mod incidents;
pub mod metrics;
pub mod netmodel;
pub mod rng;
pub mod routing;
pub mod simcore;
