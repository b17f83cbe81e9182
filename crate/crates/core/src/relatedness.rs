//! Relatedness of a topic to each sink.
//!
//! ```text
//! w(T, S_m) = n_p(m) / n_tot * exp(-alpha * (l_p(m) - l_min)) / N_R
//! N_R       = sum over sinks with paths of the same numerator
//! ```
//!
//! Sinks without paths get exactly zero and do not enter `N_R`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::paths::PathStats;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {0} reaches no sink")]
pub struct NoPaths(pub NodeId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatednessVector {
    pub topic: NodeId,
    /// Index-aligned with the sink set; sums to one.
    pub w: Vec<f64>,
    pub n_r: f64,
}

/// Unnormalized terms `n_p/n_tot * exp(-alpha (l_p - l_min))`, zero where
/// there is no path. `alpha` is not range-checked here so the `alpha = 0`
/// limit stays reachable.
pub fn raw_terms(stats: &PathStats, alpha: f64) -> Result<Vec<f64>, NoPaths> {
    let n_tot = stats.n_tot();
    let l_min = match stats.l_min() {
        Some(l) if n_tot > 0 => l,
        _ => return Err(NoPaths(stats.topic)),
    };
    let n_tot = n_tot as f64;
    Ok(stats
        .n_p
        .iter()
        .zip(&stats.l_p)
        .map(|(&n, l)| match l {
            Some(l) if n > 0 => {
                let gap = f64::from(l - l_min);
                n as f64 / n_tot * (-alpha * gap).exp()
            }
            _ => 0.0,
        })
        .collect())
}

pub fn compute_weights(stats: &PathStats, alpha: f64) -> Result<RelatednessVector, NoPaths> {
    let terms = raw_terms(stats, alpha)?;
    let n_r: f64 = terms.iter().sum();
    Ok(RelatednessVector {
        topic: stats.topic,
        w: terms.into_iter().map(|t| t / n_r).collect(),
        n_r,
    })
}
