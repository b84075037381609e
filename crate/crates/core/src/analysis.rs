//! Recovery-threshold certification, conditioning of recovery systems and
//! load accounting.
//!
//! Two kinds of budget are analysed. A worker budget `τ` enumerates every
//! set of `τ` workers that finished all their tasks. A stage budget `τ′`
//! enumerates every per-worker prefix pattern whose stage counts sum to
//! `τ′`; a stage is `plan.tasks_per_stage` consecutive tasks (one task for
//! most schemes).

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::system_for_tasks;
use crate::error::{CcmError, Result};
use crate::field::binomial;
use crate::linalg;
use crate::matrix::Matrix;
use crate::pattern::{real, CompletionPattern};
use crate::rng;
use crate::schemes::{EncodingPlan, Fraction, SchemeKind};

pub use crate::linalg::condition_number;

/// Default cap on the number of enumerated patterns.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 1_000_000;

const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Budget {
    /// Whole workers (recovery threshold).
    Workers(usize),
    /// Prefix stages (recovery threshold II).
    Stages(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub limit: u128,
    /// Draw this many uniform patterns instead of enumerating when the
    /// enumeration would exceed `limit`.
    pub sampling: Option<Sampling>,
    /// Keep one row per pattern in condition reports.
    pub verbose: bool,
    /// Worker threads for the enumeration; 0 uses the global pool.
    pub threads: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            limit: DEFAULT_ENUMERATION_LIMIT,
            sampling: None,
            verbose: false,
            threads: 0,
        }
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CcmError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Number of stages each worker runs.
pub fn stages_per_worker(plan: &EncodingPlan) -> Vec<usize> {
    plan.assignments
        .iter()
        .map(|t| t.len() / plan.tasks_per_stage)
        .collect()
}

/// Number of prefix patterns with stage counts `c_i ≤ caps[i]` summing to `total`.
pub fn count_prefix_patterns(caps: &[usize], total: usize) -> u128 {
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for &cap in caps {
        let mut next = vec![0u128; total + 1];
        for s in 0..=total {
            if ways[s] == 0 {
                continue;
            }
            for c in 0..=cap.min(total - s) {
                next[s + c] = next[s + c].saturating_add(ways[s]);
            }
        }
        ways = next;
    }
    ways[total]
}

pub fn count_patterns(plan: &EncodingPlan, budget: Budget) -> u128 {
    match budget {
        Budget::Workers(t) => binomial(plan.workers() as u64, t as u64),
        Budget::Stages(t) => count_prefix_patterns(&stages_per_worker(plan), t),
    }
}

/// Lexicographic enumeration of `k`-subsets of `0..n`.
struct Subsets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Subsets {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            cur: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let k = out.len();
        let mut c = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if c[i] < self.n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                self.cur = Some(c);
                break;
            }
        }
        Some(out)
    }
}

/// Lexicographic enumeration of count vectors `c ≤ caps` with `Σc = total`.
struct Compositions {
    caps: Vec<usize>,
    /// `suffix[i]` = Σ caps[i..].
    suffix: Vec<usize>,
    cur: Option<Vec<usize>>,
}

impl Compositions {
    fn new(caps: Vec<usize>, total: usize) -> Self {
        let mut suffix = vec![0; caps.len() + 1];
        for i in (0..caps.len()).rev() {
            suffix[i] = suffix[i + 1] + caps[i];
        }
        let cur = Self::fill_min(&caps, &suffix, 0, total, vec![0; caps.len()]);
        Self { caps, suffix, cur }
    }

    /// Smallest completion of positions `from..` summing to `remaining`.
    fn fill_min(
        caps: &[usize],
        suffix: &[usize],
        from: usize,
        remaining: usize,
        mut c: Vec<usize>,
    ) -> Option<Vec<usize>> {
        if suffix[from] < remaining {
            return None;
        }
        let mut rem = remaining;
        for i in from..caps.len() {
            let v = rem.saturating_sub(suffix[i + 1]);
            c[i] = v;
            rem -= v;
        }
        Some(c)
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.take()?;
        let n = out.len();
        // Increase the rightmost position that can grow while the tail can
        // still absorb the reduced remainder.
        let mut rest: usize = 0;
        for i in (0..n).rev() {
            rest += out[i];
            if i + 1 < n && out[i] < self.caps[i] {
                let tail_rest = rest - out[i];
                if tail_rest >= 1 {
                    let mut c = out.clone();
                    c[i] += 1;
                    if let Some(c) = Self::fill_min(&self.caps, &self.suffix, i + 1, tail_rest - 1, c) {
                        self.cur = Some(c);
                        break;
                    }
                }
            }
        }
        Some(out)
    }
}

fn pattern_iter(plan: &EncodingPlan, budget: Budget) -> Box<dyn Iterator<Item = CompletionPattern> + '_> {
    match budget {
        Budget::Workers(t) => Box::new(Subsets::new(plan.workers(), t).map(CompletionPattern::subset)),
        Budget::Stages(t) => {
            let tps = plan.tasks_per_stage;
            Box::new(
                Compositions::new(stages_per_worker(plan), t)
                    .map(move |c| CompletionPattern::prefix(c.into_iter().map(|v| v * tps).collect::<Vec<_>>())),
            )
        }
    }
}

/// Uniformly random pattern for the budget.
fn sample_pattern<R: Rng>(plan: &EncodingPlan, budget: Budget, rng: &mut R) -> CompletionPattern {
    match budget {
        Budget::Workers(t) => {
            let mut w = index::sample(rng, plan.workers(), t).into_vec();
            w.sort_unstable();
            CompletionPattern::subset(w)
        }
        Budget::Stages(t) => {
            let caps = stages_per_worker(plan);
            let n = caps.len();
            // ways[i][s]: patterns of workers i.. summing to s.
            let mut ways = vec![vec![0f64; t + 1]; n + 1];
            ways[n][0] = 1.0;
            for i in (0..n).rev() {
                for s in 0..=t {
                    ways[i][s] = (0..=caps[i].min(s)).map(|c| ways[i + 1][s - c]).sum();
                }
            }
            let mut counts = vec![0; n];
            let mut s = t;
            for i in 0..n {
                let mut u = rng.random::<f64>() * ways[i][s];
                let mut pick = 0;
                for c in 0..=caps[i].min(s) {
                    let w = ways[i + 1][s - c];
                    if w > 0.0 {
                        pick = c;
                        if u < w {
                            break;
                        }
                        u -= w;
                    }
                }
                counts[i] = pick * plan.tasks_per_stage;
                s -= pick;
            }
            CompletionPattern::prefix(counts)
        }
    }
}

fn validate_budget(plan: &EncodingPlan, budget: Budget) -> Result<()> {
    match budget {
        Budget::Workers(t) if t == 0 || t > plan.workers() => Err(CcmError::Config(format!(
            "worker budget {t} outside 1..={}",
            plan.workers()
        ))),
        Budget::Stages(t) => {
            let max: usize = stages_per_worker(plan).iter().sum();
            if t == 0 || t > max {
                Err(CcmError::Config(format!("stage budget {t} outside 1..={max}")))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn pattern_matrix(plan: &EncodingPlan, pattern: &CompletionPattern) -> Result<Option<Matrix>> {
    Ok(system_for_tasks(plan, &pattern.tasks(plan)?)?.matrix())
}

fn pattern_condition(plan: &EncodingPlan, pattern: &CompletionPattern) -> Result<f64> {
    Ok(match pattern_matrix(plan, pattern)? {
        Some(m) => linalg::condition_number(&m).unwrap_or(f64::INFINITY),
        None => f64::INFINITY,
    })
}

fn pattern_rank(plan: &EncodingPlan, pattern: &CompletionPattern) -> Result<usize> {
    Ok(pattern_matrix(plan, pattern)?.map_or(0, |m| linalg::rank(&m)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternCondition {
    pub pattern: CompletionPattern,
    #[serde(with = "real")]
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub scheme: SchemeKind,
    pub budget: Budget,
    #[serde(with = "real")]
    pub worst: f64,
    pub argmax_pattern: CompletionPattern,
    pub patterns_evaluated: u128,
    pub singular_patterns: u128,
    /// True when patterns were sampled rather than enumerated.
    pub sampled: bool,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_pattern: Option<Vec<PatternCondition>>,
}

impl ConditionReport {
    /// One CSV row per pattern (or a single summary row without `per_pattern`).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pattern", "condition", "is_worst"])?;
        let fmt = |p: &CompletionPattern| serde_json::to_string(p).unwrap_or_default();
        match &self.per_pattern {
            Some(rows) => {
                for r in rows {
                    out.write_record([
                        fmt(&r.pattern),
                        format!("{:e}", r.condition),
                        (r.pattern == self.argmax_pattern).to_string(),
                    ])?;
                }
            }
            None => out.write_record([fmt(&self.argmax_pattern), format!("{:e}", self.worst), "true".into()])?,
        }
        out.flush()?;
        Ok(())
    }
}

/// Worst condition number of the recovery system over all patterns with the
/// given budget (`+∞` if any is singular).
pub fn worst_case_condition(plan: &EncodingPlan, budget: Budget, opts: &AnalysisOptions) -> Result<ConditionReport> {
    validate_budget(plan, budget)?;
    let count = count_patterns(plan, budget);
    let (patterns, sampled): (Box<dyn Iterator<Item = CompletionPattern>>, bool) = if count <= opts.limit {
        (pattern_iter(plan, budget), false)
    } else if let Some(s) = opts.sampling {
        let mut g = rng::seeded(s.seed);
        let v: Vec<CompletionPattern> = (0..s.samples).map(|_| sample_pattern(plan, budget, &mut g)).collect();
        (Box::new(v.into_iter()), true)
    } else {
        return Err(CcmError::EnumerationTooLarge {
            count,
            limit: opts.limit,
        });
    };
    let mut worst = f64::NEG_INFINITY;
    let mut argmax = None;
    let mut evaluated = 0u128;
    let mut singular = 0u128;
    let mut rows = opts.verbose.then(Vec::new);
    let mut patterns = patterns.peekable();
    while patterns.peek().is_some() {
        let chunk: Vec<CompletionPattern> = patterns.by_ref().take(CHUNK).collect();
        let conds: Vec<f64> = in_pool(opts.threads, || {
            chunk
                .par_iter()
                .map(|p| pattern_condition(plan, p))
                .collect::<Result<Vec<f64>>>()
        })??;
        for (p, c) in chunk.into_iter().zip(conds) {
            evaluated += 1;
            if c.is_infinite() {
                singular += 1;
            }
            if c > worst {
                worst = c;
                argmax = Some(p.clone());
            }
            if let Some(r) = rows.as_mut() {
                r.push(PatternCondition {
                    pattern: p,
                    condition: c,
                });
            }
        }
    }
    let argmax_pattern = argmax.ok_or_else(|| CcmError::Config("no patterns to evaluate".into()))?;
    Ok(ConditionReport {
        scheme: plan.kind,
        budget,
        worst,
        argmax_pattern,
        patterns_evaluated: evaluated,
        singular_patterns: singular,
        sampled,
        label: if sampled {
            "sampled lower bound on worst case".into()
        } else {
            "exhaustive worst case".into()
        },
        per_pattern: rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub budget: Budget,
    pub holds: bool,
    pub patterns_checked: u128,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CompletionPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample_rank: Option<usize>,
    pub unknowns: usize,
}

fn verify(plan: &EncodingPlan, budget: Budget, opts: &AnalysisOptions) -> Result<ThresholdReport> {
    validate_budget(plan, budget)?;
    let count = count_patterns(plan, budget);
    if count > opts.limit {
        return Err(CcmError::EnumerationTooLarge {
            count,
            limit: opts.limit,
        });
    }
    let unknowns = plan.num_unknowns();
    let mut checked = 0u128;
    let mut patterns = pattern_iter(plan, budget).peekable();
    while patterns.peek().is_some() {
        let chunk: Vec<CompletionPattern> = patterns.by_ref().take(CHUNK).collect();
        let ranks: Vec<usize> = in_pool(opts.threads, || {
            chunk
                .par_iter()
                .map(|p| pattern_rank(plan, p))
                .collect::<Result<Vec<usize>>>()
        })??;
        for (p, r) in chunk.into_iter().zip(ranks) {
            checked += 1;
            if r < unknowns {
                return Ok(ThresholdReport {
                    budget,
                    holds: false,
                    patterns_checked: checked,
                    counterexample: Some(p),
                    counterexample_rank: Some(r),
                    unknowns,
                });
            }
        }
    }
    Ok(ThresholdReport {
        budget,
        holds: true,
        patterns_checked: checked,
        counterexample: None,
        counterexample_rank: None,
        unknowns,
    })
}

/// Does every set of `tau` complete workers decode?
pub fn verify_threshold(plan: &EncodingPlan, tau: usize, opts: &AnalysisOptions) -> Result<ThresholdReport> {
    verify(plan, Budget::Workers(tau), opts)
}

/// Does every prefix pattern of `tau2` stages decode?
pub fn verify_threshold2(plan: &EncodingPlan, tau2: usize, opts: &AnalysisOptions) -> Result<ThresholdReport> {
    verify(plan, Budget::Stages(tau2), opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    #[serde(rename = "gammaA")]
    pub gamma_a: Vec<Fraction>,
    #[serde(rename = "gammaB")]
    pub gamma_b: Option<Vec<Fraction>>,
    /// Worker work as a fraction of `cost(r,t,w) = 2rtw`.
    pub comp_fraction: Vec<Fraction>,
    /// Values sent to the master as a fraction of `rw`.
    pub comm_load: Vec<Fraction>,
    /// Exact flop count per worker.
    pub flops: Vec<u64>,
}

pub fn loads(plan: &EncodingPlan, r: usize, t: usize, w: usize) -> Result<LoadReport> {
    let l = plan.layout;
    let n_b = if plan.coeff_b.is_some() { l.n } else { 1 };
    for (name, dim, parts) in [("r", r, l.m), ("t", t, l.p), ("w", w, n_b)] {
        if dim == 0 || dim % parts != 0 {
            return Err(CcmError::Dimension(format!("{name}: {dim} not divisible by {parts}")));
        }
    }
    let (br, bt, bw) = ((r / l.m) as u64, (t / l.p) as u64, (w / n_b) as u64);
    let cost = 2 * (r * t * w) as u64;
    let rw = (r * w) as u64;
    let mut comp = Vec::new();
    let mut comm = Vec::new();
    let mut flops = Vec::new();
    for tasks in &plan.assignments {
        let k = tasks.len() as u64;
        comp.push(Fraction::new(k * 2 * br * bt * bw, cost));
        comm.push(Fraction::new(k * br * bw, rw));
        flops.push(k * br * bw * (2 * bt - 1));
    }
    Ok(LoadReport {
        gamma_a: plan.gamma_a.clone(),
        gamma_b: plan.gamma_b.clone(),
        comp_fraction: comp,
        comm_load: comm,
        flops,
    })
}

/// Coded symbols (in stream order) a peeling decoder needs before every
/// unknown is resolved.
pub fn fountain_symbols_needed(plan: &EncodingPlan) -> Result<usize> {
    let SchemeKind::FountainMatvec = plan.kind else {
        return Err(CcmError::Config("plan is not a fountain plan".into()));
    };
    let m = plan.num_unknowns();
    let mut tracker = crate::decoders::PeelTracker::new(m);
    for s in 0..plan.coeff_a.rows() {
        let row = plan.coeff_a.row(s);
        tracker.push((0..m).filter(|&i| row[i] != 0.0));
        if tracker.is_complete() {
            return Ok(s + 1);
        }
    }
    let max_overhead = match plan.params {
        crate::schemes::SchemeParams::FountainMatvec { max_overhead, .. } => max_overhead,
        _ => unreachable!(),
    };
    Err(CcmError::OverheadExceeded {
        max_overhead,
        symbols: plan.coeff_a.rows(),
        resolved: tracker.resolved(),
        unknowns: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_poly_matmul, build_repetition};

    #[test]
    fn subsets_enumerate_binomial() {
        let all: Vec<Vec<usize>> = Subsets::new(5, 3).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[9], vec![2, 3, 4]);
        assert_eq!(Subsets::new(3, 3).count(), 1);
    }

    #[test]
    fn compositions_match_count() {
        for (caps, total) in [(vec![2, 2, 2], 3), (vec![1, 3, 0, 2], 4), (vec![2, 2, 2, 2, 2], 4)] {
            let all: Vec<Vec<usize>> = Compositions::new(caps.clone(), total).collect();
            assert_eq!(all.len() as u128, count_prefix_patterns(&caps, total));
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
            for c in &all {
                assert_eq!(c.iter().sum::<usize>(), total);
                assert!(c.iter().zip(&caps).all(|(v, cap)| v <= cap));
            }
        }
    }

    #[test]
    fn sampled_prefix_patterns_are_valid() {
        let plan = build_repetition(3).unwrap();
        let mut g = rng::seeded(1);
        for _ in 0..50 {
            let p = sample_pattern(&plan, Budget::Stages(3), &mut g);
            let c = p.counts(&plan).unwrap();
            assert_eq!(c.iter().sum::<usize>(), 3);
        }
    }

    #[test]
    fn example_one_loads() {
        let plan = build_poly_matmul(2, 2, 6, None).unwrap();
        let rep = loads(&plan, 4, 4, 4).unwrap();
        assert!(rep.comp_fraction.iter().all(|f| *f == Fraction::new(1, 4)));
        assert!(rep.comm_load.iter().all(|f| *f == Fraction::new(1, 4)));
        assert!(loads(&plan, 3, 4, 4).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let plan = build_poly_matmul(2, 2, 6, None).unwrap();
        let opts = AnalysisOptions {
            limit: 5,
            ..Default::default()
        };
        let err = worst_case_condition(&plan, Budget::Workers(4), &opts).unwrap_err();
        assert!(matches!(err, CcmError::EnumerationTooLarge { count: 15, limit: 5 }));
        let opts = AnalysisOptions {
            limit: 5,
            sampling: Some(Sampling { samples: 20, seed: 3 }),
            ..Default::default()
        };
        let rep = worst_case_condition(&plan, Budget::Workers(4), &opts).unwrap();
        assert!(rep.sampled);
        assert_eq!(rep.label, "sampled lower bound on worst case");
    }
}
