//! Accuracy of profiles against accounts with a known ground-truth sink.
//!
//! Per account we take the ground-truth score `sc`, its 1-based rank `rk`
//! and the relative gap `delta = (pc_gt - pc_*) / pc_gt` to the strongest
//! competitor. Indices are averaged first within each ground-truth class
//! and then across classes, so every represented sink gets one vote no
//! matter how many accounts it has.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CategoryGraph;
use crate::paths::{PathParams, SinkSet};
use crate::profile::{Profile, Profiler, TopicEntry, TopicMap, TopicMapError};

pub const HIT_KS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth set is empty")]
    Empty,
    #[error("account {account:?} has ground-truth sink {sink:?} which is not in the sink set")]
    UnknownSink { account: String, sink: String },
    #[error("every account with ground truth {0:?} was excluded")]
    EmptyClass(String),
    #[error(transparent)]
    TopicMap(#[from] TopicMapError),
    #[error("invalid ground truth file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub id: String,
    pub gt_sink: String,
    pub topics: TopicMap,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruthSet {
    pub accounts: Vec<Account>,
}

#[derive(Deserialize)]
struct AccountFile {
    id: String,
    gt_sink: String,
    topics: Vec<TopicEntry>,
}

#[derive(Deserialize)]
struct GroundTruthFile {
    accounts: Vec<AccountFile>,
}

impl GroundTruthSet {
    pub fn from_json(text: &str) -> Result<GroundTruthSet, EvalError> {
        let f: GroundTruthFile = serde_json::from_str(text)?;
        let accounts = f
            .accounts
            .into_iter()
            .map(|a| {
                let topics = TopicMap::new(a.id.clone(), a.topics.into_iter().map(|e| (e.title, e.count)))?;
                Ok(Account {
                    id: a.id,
                    gt_sink: a.gt_sink,
                    topics,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(GroundTruthSet { accounts })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("ground-truth score is zero, delta is undefined")]
pub struct UndefinedDelta;

/// `sc`, `rk` and `delta` of one account.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccountScores {
    pub sc: f64,
    pub rk: usize,
    /// `None` when the ground-truth score is zero.
    pub delta: Option<f64>,
}

/// Strongest competitor of the ground-truth sink: the top score when `gt`
/// is not ranked first, the runner-up otherwise. Both equal the best score
/// among the other sinks. Zero when there is no other sink.
pub fn competitor_score(pc: &[f64], gt: usize) -> f64 {
    pc.iter()
        .enumerate()
        .filter(|&(m, _)| m != gt)
        .map(|(_, &v)| v)
        .fold(None, |best: Option<f64>, v| Some(best.map_or(v, |b| b.max(v))))
        .unwrap_or(0.0)
}

pub fn delta(pc: &[f64], gt: usize) -> Result<f64, UndefinedDelta> {
    let own = pc[gt];
    if own == 0.0 {
        return Err(UndefinedDelta);
    }
    Ok((own - competitor_score(pc, gt)) / own)
}

pub fn eval_account(profile: &Profile, gt: usize) -> AccountScores {
    let rk = profile
        .ranking
        .iter()
        .position(|&m| m == gt)
        .expect("ranking is a permutation")
        + 1;
    AccountScores {
        sc: profile.pc[gt],
        rk,
        delta: delta(&profile.pc, gt).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountResult {
    pub id: String,
    pub gt_sink: String,
    /// `None` when the account's profile was empty and it was excluded.
    pub scores: Option<AccountScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkEval {
    pub label: String,
    /// Accounts that entered the averages (`n_i`).
    pub accounts: usize,
    pub excluded_empty: usize,
    pub undefined_delta: usize,
    pub sc: f64,
    pub rk: f64,
    pub delta: Option<f64>,
    /// Fraction of the class with `rk <= k`, for k in [`HIT_KS`].
    pub hit_rate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub sc: f64,
    pub rk: f64,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub params: PathParams,
    pub accounts: Vec<AccountResult>,
    /// Represented sinks only, in sink-set order.
    pub sinks: Vec<SinkEval>,
    pub summary: EvalSummary,
    pub excluded_accounts: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Class means and cross-class means from already computed account scores.
/// `gts` are sink indices aligned with `accounts`.
pub fn aggregate(
    sinks: &SinkSet,
    params: PathParams,
    accounts: Vec<AccountResult>,
    gts: &[usize],
) -> Result<EvalReport, EvalError> {
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); sinks.len()];
    for (i, &gt) in gts.iter().enumerate() {
        classes[gt].push(i);
    }

    let mut per_sink = Vec::new();
    for (m, members) in classes.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let scored: Vec<&AccountScores> = members
            .iter()
            .filter_map(|&i| accounts[i].scores.as_ref())
            .collect();
        if scored.is_empty() {
            return Err(EvalError::EmptyClass(sinks.label(m).to_owned()));
        }
        let n = scored.len() as f64;
        let mut hit_rate = [0.0; 3];
        for (slot, k) in hit_rate.iter_mut().zip(HIT_KS) {
            *slot = scored.iter().filter(|s| s.rk <= k).count() as f64 / n;
        }
        per_sink.push(SinkEval {
            label: sinks.label(m).to_owned(),
            accounts: scored.len(),
            excluded_empty: members.len() - scored.len(),
            undefined_delta: scored.iter().filter(|s| s.delta.is_none()).count(),
            sc: mean(scored.iter().map(|s| s.sc)).unwrap(),
            rk: mean(scored.iter().map(|s| s.rk as f64)).unwrap(),
            delta: mean(scored.iter().filter_map(|s| s.delta)),
            hit_rate,
        });
    }

    let summary = EvalSummary {
        sc: mean(per_sink.iter().map(|s| s.sc)).ok_or(EvalError::Empty)?,
        rk: mean(per_sink.iter().map(|s| s.rk)).ok_or(EvalError::Empty)?,
        delta: mean(per_sink.iter().filter_map(|s| s.delta)),
    };
    let excluded_accounts = accounts.iter().filter(|a| a.scores.is_none()).count();
    Ok(EvalReport {
        params,
        accounts,
        sinks: per_sink,
        summary,
        excluded_accounts,
    })
}

fn gt_indices(ground_truth: &GroundTruthSet, sinks: &SinkSet) -> Result<Vec<usize>, EvalError> {
    if ground_truth.accounts.is_empty() {
        return Err(EvalError::Empty);
    }
    ground_truth
        .accounts
        .iter()
        .map(|a| {
            sinks.index_of_label(&a.gt_sink).ok_or_else(|| EvalError::UnknownSink {
                account: a.id.clone(),
                sink: a.gt_sink.clone(),
            })
        })
        .collect()
}

/// Profile every account and reduce to an [`EvalReport`]. Account
/// evaluation runs on the current rayon pool; the result does not depend
/// on scheduling.
pub fn eval_with(profiler: &Profiler<'_>, ground_truth: &GroundTruthSet) -> Result<EvalReport, EvalError> {
    let sinks = profiler.sinks();
    let gts = gt_indices(ground_truth, sinks)?;
    let accounts: Vec<AccountResult> = ground_truth
        .accounts
        .par_iter()
        .zip(gts.par_iter())
        .map(|(account, &gt)| AccountResult {
            id: account.id.clone(),
            gt_sink: account.gt_sink.clone(),
            scores: profiler
                .profile(&account.topics)
                .ok()
                .map(|p| eval_account(&p, gt)),
        })
        .collect();
    aggregate(sinks, *profiler.params(), accounts, &gts)
}

pub fn eval_set(
    ground_truth: &GroundTruthSet,
    graph: &CategoryGraph,
    sinks: &SinkSet,
    params: PathParams,
) -> Result<EvalReport, EvalError> {
    eval_with(&Profiler::new(graph, sinks, params), ground_truth)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: PathParams,
    pub summary: Option<EvalSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Row with the highest SC (earliest on ties).
    pub best_sc: Option<usize>,
    /// Row with the lowest RK.
    pub best_rk: Option<usize>,
    /// Row with the highest Delta.
    pub best_delta: Option<usize>,
}

fn best_by(rows: &[SweepRow], key: impl Fn(&EvalSummary) -> Option<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(v) = row.summary.as_ref().and_then(&key) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// One evaluation per grid point, in grid order. Failures are recorded in
/// the row and do not stop the sweep.
pub fn sweep(
    ground_truth: &GroundTruthSet,
    graph: &CategoryGraph,
    sinks: &SinkSet,
    grid: &[PathParams],
) -> SweepTable {
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&params| {
            let result = params
                .validate()
                .map_err(|e| e.to_string())
                .and_then(|()| eval_set(ground_truth, graph, sinks, params).map_err(|e| e.to_string()));
            match result {
                Ok(report) => SweepRow {
                    params,
                    summary: Some(report.summary),
                    error: None,
                },
                Err(error) => SweepRow {
                    params,
                    summary: None,
                    error: Some(error),
                },
            }
        })
        .collect();
    SweepTable {
        best_sc: best_by(&rows, |s| Some(s.sc)),
        best_rk: best_by(&rows, |s| Some(-s.rk)),
        best_delta: best_by(&rows, |s| s.delta),
        rows,
    }
}
