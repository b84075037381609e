//! Discrete-event simulation of a master and `N` workers running a plan.
//!
//! Worker `i` draws the durations of its tasks from the delay model using
//! generator `split(seed, i)`; task `k` completes at the running sum of the
//! first `k + 1` durations. Events are processed in `(time, worker, seq)`
//! order and the master decodes at the first event after which the received
//! results determine every unknown.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{decode, system_for_tasks};
use crate::error::{CcmError, Result};
use crate::matrix::{direct_product, Matrix};
use crate::pattern::{real, CompletionPattern};
use crate::rng::{self, CcmRng};
use crate::schemes::{encode, worker_compute, EncodingPlan, TaskResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayModel {
    /// `durations[i][k]` is the duration of worker `i`'s task `k`; `"inf"`
    /// marks a task that never finishes.
    Deterministic {
        #[serde(with = "real::nested")]
        durations: Vec<Vec<f64>>,
    },
    Exponential {
        rate: f64,
    },
    ShiftedExponential {
        shift: f64,
        rate: f64,
    },
    /// With probability `prob` a worker fails before its first task;
    /// otherwise durations come from `inner`.
    Failure {
        prob: f64,
        inner: Box<DelayModel>,
    },
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DelayModel::Deterministic { durations } => {
                if durations.iter().flatten().any(|d| d.is_nan() || *d <= 0.0) {
                    return Err(CcmError::Config("durations must be positive".into()));
                }
            }
            DelayModel::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(CcmError::Config(format!("exponential rate {rate} must be positive")));
                }
            }
            DelayModel::ShiftedExponential { shift, rate } => {
                if !(*rate > 0.0 && rate.is_finite()) || !(*shift >= 0.0 && shift.is_finite()) {
                    return Err(CcmError::Config(format!(
                        "shifted exponential needs shift >= 0 and rate > 0 (shift={shift}, rate={rate})"
                    )));
                }
            }
            DelayModel::Failure { prob, inner } => {
                if !(0.0..=1.0).contains(prob) {
                    return Err(CcmError::Config(format!("failure probability {prob} outside [0,1]")));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Durations of `tasks` consecutive tasks of `worker`.
    pub fn draw(&self, worker: usize, tasks: usize, rng: &mut CcmRng) -> Result<Vec<f64>> {
        match self {
            DelayModel::Deterministic { durations } => {
                let d = durations
                    .get(worker)
                    .ok_or_else(|| CcmError::Config(format!("no durations given for worker {worker}")))?;
                if d.len() < tasks {
                    return Err(CcmError::Config(format!(
                        "worker {worker} has {tasks} tasks but {} durations",
                        d.len()
                    )));
                }
                Ok(d[..tasks].to_vec())
            }
            DelayModel::Exponential { rate } => {
                let e = Exp::new(*rate).map_err(|e| CcmError::Config(e.to_string()))?;
                Ok((0..tasks).map(|_| e.sample(rng)).collect())
            }
            DelayModel::ShiftedExponential { shift, rate } => {
                let e = Exp::new(*rate).map_err(|e| CcmError::Config(e.to_string()))?;
                Ok((0..tasks).map(|_| shift + e.sample(rng)).collect())
            }
            DelayModel::Failure { prob, inner } => {
                let failed = rng.random::<f64>() < *prob;
                let d = inner.draw(worker, tasks, rng)?;
                Ok(if failed { vec![f64::INFINITY; tasks] } else { d })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskEvent {
    pub worker: usize,
    pub seq: usize,
    #[serde(with = "real")]
    pub time: f64,
    /// Received at or before the decode instant.
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Every finite task completion, in processing order.
    pub events: Vec<TaskEvent>,
    #[serde(with = "real::option")]
    pub decode_time: Option<f64>,
    /// Results the master held when it decoded (or all results if it never could).
    pub used_pattern: CompletionPattern,
    /// Workers that contributed no used result.
    pub straggler_set: Vec<usize>,
    pub decoded_ok: bool,
    pub rank: usize,
    pub unknowns: usize,
    pub rank_deficit: usize,
    /// Relative Frobenius error of the decoded product when a payload is given.
    #[serde(with = "real::option")]
    pub residual: Option<f64>,
}

/// Completion time of every task, per worker.
pub fn completion_times(plan: &EncodingPlan, delay: &DelayModel, seed: u64) -> Result<Vec<Vec<f64>>> {
    delay.validate()?;
    plan.assignments
        .iter()
        .enumerate()
        .map(|(w, tasks)| {
            let mut g = rng::split(seed, w as u64);
            let d = delay.draw(w, tasks.len(), &mut g)?;
            Ok(d.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect())
        })
        .collect()
}

/// Simulate from explicit completion times.
pub fn simulate_times(
    plan: &EncodingPlan,
    times: &[Vec<f64>],
    payload: Option<(&Matrix, &Matrix)>,
) -> Result<SimReport> {
    if times.len() != plan.workers() {
        return Err(CcmError::Config(format!(
            "{} timelines for {} workers",
            times.len(),
            plan.workers()
        )));
    }
    let mut events: Vec<TaskEvent> = Vec::new();
    for (w, ts) in times.iter().enumerate() {
        if ts.len() != plan.assignments[w].len() {
            return Err(CcmError::Config(format!("worker {w} timeline has the wrong length")));
        }
        for (seq, &t) in ts.iter().enumerate() {
            if t.is_finite() {
                events.push(TaskEvent {
                    worker: w,
                    seq,
                    time: t,
                    used: false,
                });
            }
        }
    }
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.worker.cmp(&b.worker))
            .then(a.seq.cmp(&b.seq))
    });
    let unknowns = plan.num_unknowns();
    let mut received: Vec<(usize, usize)> = Vec::new();
    let mut decode_at = None;
    let mut rank = 0;
    for (k, e) in events.iter().enumerate() {
        received.push((e.worker, e.seq));
        if received.len() < unknowns {
            continue;
        }
        rank = system_for_tasks(plan, &received)?.rank();
        if rank == unknowns {
            decode_at = Some(k);
            break;
        }
    }
    if decode_at.is_none() && received.len() < unknowns {
        rank = system_for_tasks(plan, &received)?.rank();
    }
    let used_upto = decode_at.map_or(events.len(), |k| k + 1);
    for e in events.iter_mut().take(used_upto) {
        e.used = true;
    }
    let mut counts = vec![0; plan.workers()];
    for e in &events[..used_upto] {
        counts[e.worker] += 1;
    }
    let straggler_set = (0..plan.workers()).filter(|&w| counts[w] == 0).collect();
    let decode_time = decode_at.map(|k| events[k].time);
    let mut decoded_ok = decode_at.is_some();
    let mut residual = None;
    if let (Some(_), Some((a, b))) = (decode_at, payload) {
        let blocks = encode(plan, a, b)?;
        let mut results: Vec<TaskResult> = Vec::new();
        for (w, &c) in counts.iter().enumerate() {
            let (r, _) = worker_compute(&blocks[w], &plan.assignments[w][..c])?;
            results.extend(r);
        }
        match decode(plan, &results) {
            Ok(out) => {
                let (want, _) = direct_product(a, b)?;
                residual = Some(out.relative_error(&want));
            }
            Err(_) => decoded_ok = false,
        }
    }
    Ok(SimReport {
        events,
        decode_time,
        used_pattern: CompletionPattern::prefix(counts),
        straggler_set,
        decoded_ok,
        rank,
        unknowns,
        rank_deficit: unknowns - rank,
        residual,
    })
}

/// Run one simulated execution. `payload` is `(A, B)` (or `(A, x)`); without
/// it only timing and decodability are simulated.
pub fn simulate(
    plan: &EncodingPlan,
    payload: Option<(&Matrix, &Matrix)>,
    delay: &DelayModel,
    seed: u64,
) -> Result<SimReport> {
    let times = completion_times(plan, delay, seed)?;
    simulate_times(plan, &times, payload)
}

/// Seed of trial `k` in a batch.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    rng::derive_seed(seed, k as u64)
}

pub fn batch_reports(plan: &EncodingPlan, delay: &DelayModel, trials: usize, seed: u64) -> Result<Vec<SimReport>> {
    if trials == 0 {
        return Err(CcmError::Config("trials must be at least 1".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|k| simulate(plan, None, delay, trial_seed(seed, k)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub decoded: usize,
    #[serde(with = "real::option")]
    pub mean_decode_time: Option<f64>,
    #[serde(with = "real::option")]
    pub p50: Option<f64>,
    #[serde(with = "real::option")]
    pub p90: Option<f64>,
    #[serde(with = "real::option")]
    pub p99: Option<f64>,
    #[serde(with = "real::option")]
    pub max: Option<f64>,
    pub mean_stragglers: f64,
    /// How often each worker was a straggler.
    pub straggler_counts: Vec<usize>,
}

fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

pub fn summarize(plan: &EncodingPlan, reports: &[SimReport]) -> BatchSummary {
    let mut times: Vec<f64> = reports.iter().filter_map(|r| r.decode_time).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let mut straggler_counts = vec![0; plan.workers()];
    for r in reports {
        for &w in &r.straggler_set {
            straggler_counts[w] += 1;
        }
    }
    let total_stragglers: usize = straggler_counts.iter().sum();
    BatchSummary {
        trials: reports.len(),
        decoded: times.len(),
        mean_decode_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        p50: percentile(&times, 0.5),
        p90: percentile(&times, 0.9),
        p99: percentile(&times, 0.99),
        max: times.last().copied(),
        mean_stragglers: total_stragglers as f64 / reports.len().max(1) as f64,
        straggler_counts,
    }
}

/// `trials` independent runs; trial `k` uses seed `trial_seed(seed, k)`.
pub fn batch_simulate(plan: &EncodingPlan, delay: &DelayModel, trials: usize, seed: u64) -> Result<BatchSummary> {
    Ok(summarize(plan, &batch_reports(plan, delay, trials, seed)?))
}

/// CSV event trace with columns `trial,worker,seq,timestamp,used`.
pub fn write_trace<W: std::io::Write>(reports: &[SimReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "worker", "seq", "timestamp", "used"])?;
    for (trial, r) in reports.iter().enumerate() {
        for e in &r.events {
            out.write_record([
                trial.to_string(),
                e.worker.to_string(),
                e.seq.to_string(),
                format!("{:?}", e.time),
                e.used.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_mds_matvec, build_repetition, MdsGenerator};

    #[test]
    fn equal_delays_decode_at_threshold_event() {
        let plan = build_mds_matvec(3, 5, MdsGenerator::Vandermonde { eval_points: None }).unwrap();
        let delay = DelayModel::Deterministic {
            durations: vec![vec![1.0]; 5],
        };
        let rep = simulate(&plan, None, &delay, 0).unwrap();
        assert_eq!(rep.decode_time, Some(1.0));
        assert_eq!(rep.used_pattern, CompletionPattern::prefix([1, 1, 1, 0, 0]));
        assert_eq!(rep.straggler_set, vec![3, 4]);
    }

    #[test]
    fn all_failed_is_not_decoded() {
        let plan = build_repetition(3).unwrap();
        let delay = DelayModel::Failure {
            prob: 1.0,
            inner: Box::new(DelayModel::Exponential { rate: 1.0 }),
        };
        let rep = simulate(&plan, None, &delay, 9).unwrap();
        assert!(!rep.decoded_ok);
        assert_eq!(rep.decode_time, None);
        assert_eq!(rep.rank_deficit, 3);
        assert!(rep.events.is_empty());
    }

    #[test]
    fn invalid_models() {
        assert!(DelayModel::Exponential { rate: 0.0 }.validate().is_err());
        let bad = DelayModel::Failure {
            prob: 1.5,
            inner: Box::new(DelayModel::Exponential { rate: 1.0 }),
        };
        assert!(bad.validate().is_err());
        let bad = DelayModel::Deterministic {
            durations: vec![vec![0.0]],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_json_writes_infinity_as_string() {
        let d: DelayModel = serde_json::from_str(r#"{"kind":"deterministic","durations":[[1,"inf"]]}"#).unwrap();
        let DelayModel::Deterministic { durations } = &d else {
            unreachable!()
        };
        assert!(durations[0][1].is_infinite());
        assert!(serde_json::to_string(&d).unwrap().contains("\"inf\""));
    }
}
