use serde::{Deserialize, Serialize};

use crate::error::{CcmError, Result};
use crate::schemes::EncodingPlan;

/// Which task results the master holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompletionPattern {
    /// These workers finished all of their tasks.
    Subset { workers: Vec<usize> },
    /// Worker `i` finished its first `counts[i]` tasks.
    Prefix { counts: Vec<usize> },
}

impl CompletionPattern {
    pub fn subset(workers: impl Into<Vec<usize>>) -> Self {
        CompletionPattern::Subset {
            workers: workers.into(),
        }
    }

    pub fn prefix(counts: impl Into<Vec<usize>>) -> Self {
        CompletionPattern::Prefix { counts: counts.into() }
    }

    /// The full no-straggler pattern.
    pub fn full(plan: &EncodingPlan) -> Self {
        Self::prefix(plan.assignments.iter().map(Vec::len).collect::<Vec<_>>())
    }

    /// `(worker, seq)` pairs covered by the pattern, after validation against
    /// the plan.
    pub fn tasks(&self, plan: &EncodingPlan) -> Result<Vec<(usize, usize)>> {
        let n = plan.workers();
        match self {
            CompletionPattern::Subset { workers } => {
                let mut seen = vec![false; n];
                let mut out = Vec::new();
                for &w in workers {
                    if w >= n {
                        return Err(CcmError::Pattern(format!("worker {w} does not exist (N={n})")));
                    }
                    if std::mem::replace(&mut seen[w], true) {
                        return Err(CcmError::Pattern(format!("worker {w} listed twice")));
                    }
                    out.extend((0..plan.assignments[w].len()).map(|s| (w, s)));
                }
                Ok(out)
            }
            CompletionPattern::Prefix { counts } => {
                if counts.len() != n {
                    return Err(CcmError::Pattern(format!(
                        "prefix pattern has {} counts for {n} workers",
                        counts.len()
                    )));
                }
                let mut out = Vec::new();
                for (w, &c) in counts.iter().enumerate() {
                    if c > plan.assignments[w].len() {
                        return Err(CcmError::Pattern(format!(
                            "worker {w} has {} tasks, pattern asks for {c}",
                            plan.assignments[w].len()
                        )));
                    }
                    out.extend((0..c).map(|s| (w, s)));
                }
                Ok(out)
            }
        }
    }

    /// Per-worker completed-task counts.
    pub fn counts(&self, plan: &EncodingPlan) -> Result<Vec<usize>> {
        let mut counts = vec![0; plan.workers()];
        for (w, _) in self.tasks(plan)? {
            counts[w] += 1;
        }
        Ok(counts)
    }
}

/// JSON-friendly reals: non-finite values are written as the strings `"inf"`,
/// `"-inf"` and `"nan"`, since JSON has no literal for them.
pub mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Str("nan".into())
        } else if v > 0.0 {
            Repr::Str("inf".into())
        } else {
            Repr::Str("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                "nan" | "NaN" => Ok(f64::NAN),
                _ => Err(E::custom(format!("not a real number: {s:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }

    pub mod nested {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
            let r: Vec<Vec<Repr>> = v.iter().map(|row| row.iter().map(|&x| to_repr(x)).collect()).collect();
            r.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
            Vec::<Vec<Repr>>::deserialize(d)?
                .into_iter()
                .map(|row| row.into_iter().map(from_repr).collect())
                .collect()
        }
    }
}
