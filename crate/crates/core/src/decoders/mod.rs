//! Recovering `AᵀB` from task results.

mod interp;
mod peel;
mod solve;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use interp::{hermite_interpolate, hermite_transform, interpolate, lagrange_transform, HermiteNode};
pub use peel::{peel_matrix, PeelOutput, PeelTracker};
pub use solve::{solve_dense_matrix, solve_least_squares_matrix};

use crate::error::{CcmError, Result};
use crate::linalg;
use crate::matrix::{assemble, BlockGrid, Matrix};
use crate::pattern::CompletionPattern;
use crate::schemes::{DecodeMethod, EncodingPlan, TaskResult};

/// Linear map from the plan's unknown blocks to the received results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySystem {
    /// One row per observation, one column per unknown.
    pub rows: Vec<Vec<f64>>,
    pub unknown_labels: Vec<String>,
    /// `(worker, seq)` of each observation.
    pub observation_labels: Vec<(usize, usize)>,
}

impl RecoverySystem {
    pub fn num_observations(&self) -> usize {
        self.rows.len()
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknown_labels.len()
    }

    /// The coefficient matrix, or `None` for an empty system.
    pub fn matrix(&self) -> Option<Matrix> {
        if self.rows.is_empty() {
            None
        } else {
            Some(Matrix::from_rows(&self.rows).expect("rows share the unknown count"))
        }
    }

    pub fn rank(&self) -> usize {
        self.matrix().map_or(0, |m| linalg::rank(&m))
    }

    pub fn is_decodable(&self) -> bool {
        self.rank() == self.num_unknowns()
    }

    /// Condition number of the system, `+∞` when not decodable.
    pub fn condition_number(&self) -> f64 {
        match self.matrix() {
            Some(m) => linalg::condition_number(&m).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    }
}

/// System for an explicit list of `(worker, seq)` tasks.
pub fn system_for_tasks(plan: &EncodingPlan, tasks: &[(usize, usize)]) -> Result<RecoverySystem> {
    let mut rows = Vec::with_capacity(tasks.len());
    let mut seen = std::collections::BTreeSet::new();
    for &(w, s) in tasks {
        if !seen.insert((w, s)) {
            return Err(CcmError::Pattern(format!("task ({w},{s}) listed twice")));
        }
        let t = plan
            .task(w, s)
            .ok_or_else(|| CcmError::Pattern(format!("task ({w},{s}) is not in the plan")))?;
        rows.push(t.recovery_row.clone());
    }
    Ok(RecoverySystem {
        rows,
        unknown_labels: plan.unknowns.clone(),
        observation_labels: tasks.to_vec(),
    })
}

pub fn build_recovery_system(plan: &EncodingPlan, pattern: &CompletionPattern) -> Result<RecoverySystem> {
    system_for_tasks(plan, &pattern.tasks(plan)?)
}

/// Solve a recovery system with matrix-valued observations (one per row).
pub fn solve_dense(system: &RecoverySystem, observations: &[&Matrix]) -> Result<Vec<Matrix>> {
    let (m, y, shape) = system_rhs(system, observations)?;
    Ok(solve::unstack(&solve_dense_matrix(&m, &y)?, shape))
}

pub fn solve_least_squares(system: &RecoverySystem, observations: &[&Matrix]) -> Result<Vec<Matrix>> {
    let (m, y, shape) = system_rhs(system, observations)?;
    Ok(solve::unstack(&solve_least_squares_matrix(&m, &y)?, shape))
}

/// Peel a recovery system; on success also returns the resolution order.
pub fn peel(system: &RecoverySystem, observations: &[&Matrix]) -> Result<(Vec<Matrix>, Vec<usize>)> {
    let (m, y, shape) = system_rhs(system, observations)?;
    let out = peel_matrix(&m, &y)?;
    Ok((solve::unstack(&out.x, shape), out.order))
}

fn system_rhs(system: &RecoverySystem, observations: &[&Matrix]) -> Result<(Matrix, Matrix, (usize, usize))> {
    if observations.len() != system.num_observations() {
        return Err(CcmError::Dimension(format!(
            "{} observations for a system with {} rows",
            observations.len(),
            system.num_observations()
        )));
    }
    let m = system.matrix().ok_or(CcmError::NotDecodable {
        rank: 0,
        unknowns: system.num_unknowns(),
    })?;
    let y = solve::stack(observations)?;
    Ok((m, y, observations[0].shape()))
}

/// Sort, deduplicate-check and shape-check results against the plan.
fn collect_results<'a>(plan: &EncodingPlan, results: &'a [TaskResult]) -> Result<Vec<&'a TaskResult>> {
    let mut by_key: BTreeMap<(usize, usize), &TaskResult> = BTreeMap::new();
    for r in results {
        let key = (r.task.worker, r.task.seq);
        let planned = plan
            .task(key.0, key.1)
            .ok_or_else(|| CcmError::Pattern(format!("task {key:?} is not in the plan")))?;
        if planned.a_index != r.task.a_index || planned.b_index != r.task.b_index {
            return Err(CcmError::Pattern(format!("result {key:?} does not match the plan")));
        }
        if by_key.insert(key, r).is_some() {
            return Err(CcmError::Pattern(format!("duplicate result for task {key:?}")));
        }
    }
    let sorted: Vec<&TaskResult> = by_key.into_values().collect();
    if let Some(first) = sorted.first() {
        let shape = first.value.shape();
        if sorted.iter().any(|r| r.value.shape() != shape) {
            return Err(CcmError::Dimension("task results have different shapes".into()));
        }
    }
    Ok(sorted)
}

/// Solve for every unknown of the plan (targets and interference).
pub fn decode_unknowns(plan: &EncodingPlan, results: &[TaskResult]) -> Result<Vec<Matrix>> {
    let sorted = collect_results(plan, results)?;
    let keys: Vec<(usize, usize)> = sorted.iter().map(|r| (r.task.worker, r.task.seq)).collect();
    let system = system_for_tasks(plan, &keys)?;
    let unknowns = plan.num_unknowns();
    let rank = system.rank();
    if rank < unknowns {
        return Err(CcmError::NotDecodable { rank, unknowns });
    }
    let values: Vec<&Matrix> = sorted.iter().map(|r| &r.value).collect();
    match plan.decode_method {
        DecodeMethod::Interpolate => {
            if let Some(out) = decode_interpolate(plan, &sorted)? {
                return Ok(out);
            }
            solve_dense(&system, &values)
        }
        DecodeMethod::Hermite => {
            if let Some(out) = decode_hermite(plan, &sorted)? {
                return Ok(out);
            }
            solve_dense(&system, &values)
        }
        DecodeMethod::Peel => match peel(&system, &values) {
            Ok((x, _)) => Ok(x),
            Err(CcmError::Stuck { .. }) => solve_dense(&system, &values),
            Err(e) => Err(e),
        },
        DecodeMethod::LeastSquares => solve_least_squares(&system, &values),
        DecodeMethod::Dense => solve_dense(&system, &values),
    }
}

/// Interpolate from the first `D + 1` results at distinct points.
fn decode_interpolate(plan: &EncodingPlan, sorted: &[&TaskResult]) -> Result<Option<Vec<Matrix>>> {
    let need = plan.num_unknowns();
    let mut points = Vec::with_capacity(need);
    let mut values = Vec::with_capacity(need);
    for r in sorted {
        let Some(node) = r.task.node.filter(|n| n.order == 0) else {
            return Ok(None);
        };
        if points.contains(&node.z) {
            continue;
        }
        points.push(node.z);
        values.push(&r.value);
        if points.len() == need {
            return interpolate(&points, &values).map(Some);
        }
    }
    Ok(None)
}

/// Hermite interpolation from per-worker prefixes totalling `D + 1` results.
fn decode_hermite(plan: &EncodingPlan, sorted: &[&TaskResult]) -> Result<Option<Vec<Matrix>>> {
    let need = plan.num_unknowns();
    let mut nodes: Vec<HermiteNode> = Vec::new();
    let mut samples = Vec::with_capacity(need);
    let mut current: Option<usize> = None;
    for r in sorted {
        if samples.len() == need {
            break;
        }
        let Some(node) = r.task.node else {
            return Ok(None);
        };
        if current != Some(r.task.worker) {
            if node.order != 0 || nodes.iter().any(|n| n.z == node.z) {
                return Ok(None);
            }
            current = Some(r.task.worker);
            nodes.push(HermiteNode {
                z: node.z,
                multiplicity: 0,
            });
        }
        let last = nodes.last_mut().unwrap();
        if node.order as usize != last.multiplicity {
            return Ok(None);
        }
        last.multiplicity += 1;
        samples.push(&r.value);
    }
    if samples.len() < need {
        return Ok(None);
    }
    hermite_interpolate(&nodes, &samples, need - 1).map(Some)
}

/// Decode `AᵀB` (or `AᵀX`) from task results.
pub fn decode(plan: &EncodingPlan, results: &[TaskResult]) -> Result<Matrix> {
    let unknowns = decode_unknowns(plan, results)?;
    let rows = plan.targets.len();
    let cols = plan.targets[0].len();
    let blocks = plan
        .targets
        .iter()
        .flat_map(|r| r.iter().map(|&u| unknowns[u].clone()))
        .collect();
    assemble(&BlockGrid::new(rows, cols, blocks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{direct_product, random_matrix, EntryDistribution};
    use crate::schemes::{build_matdot, build_poly_matmul, build_repetition, compute_all};

    const UNIT: EntryDistribution = EntryDistribution::Uniform { low: -1.0, high: 1.0 };

    #[test]
    fn empty_pattern_is_not_decodable() {
        let plan = build_poly_matmul(2, 2, 6, None).unwrap();
        let sys = build_recovery_system(&plan, &CompletionPattern::subset(vec![])).unwrap();
        assert_eq!(sys.num_observations(), 0);
        assert!(!sys.is_decodable());
    }

    #[test]
    fn poly_subset_system_is_vandermonde() {
        let plan = build_poly_matmul(2, 2, 6, None).unwrap();
        let sys = build_recovery_system(&plan, &CompletionPattern::subset([0, 2, 3, 5])).unwrap();
        let z = &plan.eval_points;
        for (row, w) in sys.rows.iter().zip([0, 2, 3, 5]) {
            assert_eq!(row, &vec![1.0, z[w], z[w] * z[w], z[w] * z[w] * z[w]]);
        }
    }

    #[test]
    fn matdot_decodes_from_any_three() {
        let plan = build_matdot(2, 5, None).unwrap();
        let a = random_matrix(4, 3, 1, UNIT).unwrap();
        let b = random_matrix(4, 5, 2, UNIT).unwrap();
        let all = compute_all(&plan, &a, &b).unwrap();
        let (want, _) = direct_product(&a, &b).unwrap();
        let res: Vec<TaskResult> = [4, 1, 2].iter().map(|&w| all[w][0].clone()).collect();
        assert!(decode(&plan, &res).unwrap().relative_error(&want) < 1e-10);
        let err = decode(&plan, &res[..2]).unwrap_err();
        assert!(matches!(err, CcmError::NotDecodable { rank: 2, unknowns: 3 }));
    }

    #[test]
    fn duplicate_results_rejected() {
        let plan = build_repetition(3).unwrap();
        let a = random_matrix(6, 6, 3, UNIT).unwrap();
        let x = random_matrix(6, 1, 4, UNIT).unwrap();
        let all = compute_all(&plan, &a, &x).unwrap();
        let res = vec![all[0][0].clone(), all[0][0].clone()];
        assert_eq!(decode(&plan, &res).unwrap_err().kind(), "PatternError");
    }
}
