use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::graph::{EdgeKind, HeteroGraph, PathStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceDimension {
    School,
    Category,
    Teacher,
}

impl PreferenceDimension {
    pub const ALL: [PreferenceDimension; 3] = [
        PreferenceDimension::School,
        PreferenceDimension::Category,
        PreferenceDimension::Teacher,
    ];

    /// Traversal from a student to the dimension's terminals.
    pub fn path(self) -> [PathStep; 2] {
        let second = match self {
            PreferenceDimension::School => PathStep::out(EdgeKind::BelongTo),
            PreferenceDimension::Category => PathStep::out(EdgeKind::Belong),
            PreferenceDimension::Teacher => PathStep::inward(EdgeKind::Teach),
        };
        [PathStep::out(EdgeKind::Learn), second]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceDimension::School => "school",
            PreferenceDimension::Category => "category",
            PreferenceDimension::Teacher => "teacher",
        }
    }
}

impl fmt::Display for PreferenceDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreferenceDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "school" => Ok(PreferenceDimension::School),
            "category" | "type" => Ok(PreferenceDimension::Category),
            "teacher" => Ok(PreferenceDimension::Teacher),
            _ => Err(format!("unknown preference dimension `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub student: String,
    pub dimension: PreferenceDimension,
    /// Terminal id -> number of enrolment paths reaching it.
    pub counts: BTreeMap<String, usize>,
    /// Population variance of the non-zero counts.
    pub variance: f64,
    /// Largest count over the total; 0 when the student has no enrolments.
    pub top_share: f64,
}

impl PreferenceProfile {
    pub fn from_counts(student: impl Into<String>, dimension: PreferenceDimension, counts: BTreeMap<String, usize>) -> Self {
        let (variance, top_share) = summarize(counts.values().copied());
        PreferenceProfile {
            student: student.into(),
            dimension,
            counts,
            variance,
            top_share,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// The most selected terminal; ties go to the smallest id.
    pub fn top_terminal(&self) -> Option<&str> {
        let mut best: Option<(&String, usize)> = None;
        for (id, &c) in &self.counts {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((id, c));
            }
        }
        best.map(|(id, _)| id.as_str())
    }
}

/// (population variance, top share) of a count vector, skipping zeros.
pub(crate) fn summarize(counts: impl Iterator<Item = usize>) -> (f64, f64) {
    let nonzero: Vec<f64> = counts.filter(|&c| c > 0).map(|c| c as f64).collect();
    if nonzero.is_empty() {
        return (0.0, 0.0);
    }
    let n = nonzero.len() as f64;
    let total: f64 = nonzero.iter().sum();
    let mean = total / n;
    let variance = nonzero.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    let max = nonzero.iter().copied().fold(0.0, f64::max);
    (variance, max / total)
}

pub fn preference_profile(graph: &HeteroGraph, student: &str, dim: PreferenceDimension) -> Result<PreferenceProfile> {
    let counts = graph.dfs_collect(student, &dim.path())?;
    Ok(PreferenceProfile::from_counts(student, dim, counts))
}

/// Per-student `(variance, top_share)` rows in ascending student-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub dimension: PreferenceDimension,
    pub students: Vec<String>,
    pub rows: Vec<[f64; 2]>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.to_vec()).collect()
    }

    /// CSV with header `student_id,variance,top_share,cluster`.
    pub fn to_csv(&self, clusters: &[usize]) -> String {
        assert_eq!(clusters.len(), self.rows.len(), "one cluster per row");
        let mut out = String::from("student_id,variance,top_share,cluster\n");
        for ((s, r), c) in self.students.iter().zip(&self.rows).zip(clusters) {
            out.push_str(&format!("{s},{},{},{c}\n", r[0], r[1]));
        }
        out
    }
}

pub fn preference_features(profiles: &[PreferenceProfile], dim: PreferenceDimension) -> Result<FeatureMatrix> {
    if profiles.is_empty() {
        return Err(StatsError::EmptyCohort);
    }
    let mut sorted: Vec<&PreferenceProfile> = profiles.iter().collect();
    for p in &sorted {
        if p.dimension != dim {
            return Err(StatsError::DimensionMismatch {
                expected: dim,
                found: p.dimension,
            });
        }
    }
    sorted.sort_by(|a, b| a.student.cmp(&b.student));
    Ok(FeatureMatrix {
        dimension: dim,
        students: sorted.iter().map(|p| p.student.clone()).collect(),
        rows: sorted.iter().map(|p| [p.variance, p.top_share]).collect(),
    })
}
