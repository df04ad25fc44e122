//! Preference vs. engagement: cluster both sides and test the joint labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::agreement::{pearson, rand_index};
use super::chisq::{chi_square_independence, ChiSquareResult};
use super::kmeans::{kmeans, standardize, ClusterModel};
use super::profile::{FeatureMatrix, PreferenceDimension, PreferenceProfile};
use super::{Result, StatsError};
use crate::graph::{Direction, EdgeKind, GraphError, HeteroGraph, NodeAttrs, NodeIx, NodeKind};

/// Minimum number of completed courses for a student to enter the analysis.
pub const DEFAULT_MIN_COURSES: usize = 27;

/// Which engagement indicators are used: {total, average hours} x {with, without likes}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndicatorScenario {
    /// total hours + likes
    FF,
    /// total hours
    FT,
    /// average hours per course + likes
    TF,
    /// average hours per course
    TT,
}

impl IndicatorScenario {
    pub const ALL: [IndicatorScenario; 4] = [
        IndicatorScenario::FF,
        IndicatorScenario::FT,
        IndicatorScenario::TF,
        IndicatorScenario::TT,
    ];

    pub fn uses_average(self) -> bool {
        matches!(self, IndicatorScenario::TF | IndicatorScenario::TT)
    }

    pub fn uses_likes(self) -> bool {
        matches!(self, IndicatorScenario::FF | IndicatorScenario::TF)
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            IndicatorScenario::FF => &["total_hours", "likes"],
            IndicatorScenario::FT => &["total_hours"],
            IndicatorScenario::TF => &["avg_hours", "likes"],
            IndicatorScenario::TT => &["avg_hours"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorScenario::FF => "FF",
            IndicatorScenario::FT => "FT",
            IndicatorScenario::TF => "TF",
            IndicatorScenario::TT => "TT",
        }
    }
}

impl fmt::Display for IndicatorScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        IndicatorScenario::ALL
            .into_iter()
            .find(|sc| sc.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario `{s}` (expected FF, FT, TF or TT)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementVector {
    pub student: String,
    pub scenario: IndicatorScenario,
    pub components: Vec<f64>,
}

fn student_ix(graph: &HeteroGraph, student: &str) -> Result<NodeIx> {
    graph
        .node_ix(student)
        .filter(|&ix| graph.node_at(ix).kind() == NodeKind::Student)
        .ok_or_else(|| GraphError::UnknownNode(student.to_owned()).into())
}

fn engagement_components(graph: &HeteroGraph, ix: NodeIx, scenario: IndicatorScenario) -> Vec<f64> {
    let NodeAttrs::Student(a) = &graph.node_at(ix).attrs else {
        unreachable!("caller checked the node kind")
    };
    let hours = if scenario.uses_average() {
        let courses = graph.degree_ix(ix, Some(EdgeKind::Learn), Direction::Out);
        if courses == 0 {
            0.0
        } else {
            a.learning_time / courses as f64
        }
    } else {
        a.learning_time
    };
    let mut c = vec![hours];
    if scenario.uses_likes() {
        c.push(a.likes as f64);
    }
    c
}

pub fn engagement_vector(graph: &HeteroGraph, student: &str, scenario: IndicatorScenario) -> Result<EngagementVector> {
    let ix = student_ix(graph, student)?;
    Ok(EngagementVector {
        student: student.to_owned(),
        scenario,
        components: engagement_components(graph, ix, scenario),
    })
}

/// Students with at least `min_courses` Learn edges.
pub fn eligible_students(graph: &HeteroGraph, min_courses: usize) -> BTreeSet<String> {
    graph
        .nodes_of_kind(NodeKind::Student)
        .filter(|n| {
            let ix = graph.node_ix(&n.id).expect("listed node");
            graph.degree_ix(ix, Some(EdgeKind::Learn), Direction::Out) >= min_courses
        })
        .map(|n| n.id.clone())
        .collect()
}

/// Students in `pool` whose WorkIn edge points at the career named `career`.
pub fn cohort_members(graph: &HeteroGraph, pool: &BTreeSet<String>, career: &str) -> Result<BTreeSet<String>> {
    let career_ix = graph
        .nodes_of_kind(NodeKind::Career)
        .find(|n| n.attrs.name() == career || n.id == career)
        .and_then(|n| graph.node_ix(&n.id))
        .ok_or_else(|| StatsError::UnknownCareer(career.to_owned()))?;
    Ok(graph
        .neighbors(career_ix, EdgeKind::WorkIn, Direction::In)
        .map(|s| graph.node_at(s).id.clone())
        .filter(|id| pool.contains(id))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationParams {
    pub k: usize,
    pub seed: u64,
    pub min_courses: usize,
}

impl Default for AssociationParams {
    fn default() -> Self {
        AssociationParams {
            k: 3,
            seed: 0,
            min_courses: DEFAULT_MIN_COURSES,
        }
    }
}

/// Full result of one preference/engagement comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub dimension: PreferenceDimension,
    pub scenario: IndicatorScenario,
    pub k: usize,
    pub features: FeatureMatrix,
    /// Raw engagement components, row-aligned with `features`.
    pub engagement: Vec<Vec<f64>>,
    pub preference_clusters: ClusterModel,
    pub engagement_clusters: ClusterModel,
    pub chi_square: ChiSquareResult,
    pub rand: f64,
    /// top_share vs. each engagement component; `None` when undefined.
    pub pearson: BTreeMap<String, Option<f64>>,
}

/// Serialized form of an [`Association`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub schema_version: u32,
    pub dimension: PreferenceDimension,
    pub scenario: IndicatorScenario,
    pub k: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p: f64,
    pub rand: f64,
    pub pearson: BTreeMap<String, Option<f64>>,
    pub n: usize,
    pub components: Vec<String>,
    pub table: Vec<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cohort: Option<String>,
}

impl Association {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn report(&self) -> AssociationReport {
        AssociationReport {
            schema_version: crate::SCHEMA_VERSION,
            dimension: self.dimension,
            scenario: self.scenario,
            k: self.k,
            chi2: self.chi_square.statistic,
            dof: self.chi_square.dof,
            p: self.chi_square.p_value,
            rand: self.rand,
            pearson: self.pearson.clone(),
            n: self.n(),
            components: self.scenario.component_names().iter().map(|s| s.to_string()).collect(),
            table: self.chi_square.table.clone(),
            cohort: None,
        }
    }
}

/// Joint-label table with all-empty rows and columns removed.
fn contingency(a: &[usize], b: &[usize], k: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; k]; k];
    for (&i, &j) in a.iter().zip(b) {
        t[i][j] += 1;
    }
    let keep_cols: Vec<usize> = (0..k).filter(|&j| t.iter().any(|r| r[j] > 0)).collect();
    t.into_iter()
        .filter(|r| r.iter().any(|&c| c > 0))
        .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
        .collect()
}

fn associate(
    graph: &HeteroGraph,
    students: &BTreeSet<String>,
    dim: PreferenceDimension,
    scenario: IndicatorScenario,
    params: &AssociationParams,
) -> Result<Association> {
    if params.k < 2 {
        return Err(StatsError::TooFewClusters(params.k));
    }
    if students.is_empty() {
        return Err(StatsError::EmptyCohort);
    }
    let (features, preference_clusters) = preference_clusters(graph, students, dim, params.k, params.seed)?;
    // BTreeSet iteration is the same sorted-id order as the feature rows.
    let engagement: Vec<Vec<f64>> = students
        .iter()
        .map(|id| Ok(engagement_components(graph, student_ix(graph, id)?, scenario)))
        .collect::<Result<_>>()?;
    let engagement_clusters = kmeans(&standardize(&engagement), params.k, params.seed)?;
    let table = contingency(&preference_clusters.assignments, &engagement_clusters.assignments, params.k);
    let chi_square = chi_square_independence(&table)?;
    let rand = rand_index(&preference_clusters.assignments, &engagement_clusters.assignments)?;

    let top_share: Vec<f64> = features.rows.iter().map(|r| r[1]).collect();
    let pearson = scenario
        .component_names()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let column: Vec<f64> = engagement.iter().map(|e| e[c]).collect();
            (name.to_string(), pearson(&top_share, &column).ok())
        })
        .collect();

    Ok(Association {
        dimension: dim,
        scenario,
        k: params.k,
        features,
        engagement,
        preference_clusters,
        engagement_clusters,
        chi_square,
        rand,
        pearson,
    })
}

/// Preference features of `students` and their k-means partition on
/// standardized coordinates, as used by the association analysis.
pub fn preference_clusters(
    graph: &HeteroGraph,
    students: &BTreeSet<String>,
    dim: PreferenceDimension,
    k: usize,
    seed: u64,
) -> Result<(FeatureMatrix, ClusterModel)> {
    if students.is_empty() {
        return Err(StatsError::EmptyCohort);
    }
    let path = dim.path();
    let mut profiles = Vec::with_capacity(students.len());
    for id in students {
        let ix = student_ix(graph, id)?;
        let counts = graph
            .dfs_collect_ix(ix, &path)?
            .into_iter()
            .map(|(n, c)| (graph.node_at(n).id.clone(), c))
            .collect();
        profiles.push(PreferenceProfile::from_counts(id.clone(), dim, counts));
    }
    let features = super::profile::preference_features(&profiles, dim)?;
    let model = kmeans(&standardize(&features.points()), k, seed)?;
    Ok((features, model))
}

/// Clusters the eligible students by preference and by engagement and tests
/// the two partitions for independence.
pub fn preference_engagement_association(
    graph: &HeteroGraph,
    dim: PreferenceDimension,
    scenario: IndicatorScenario,
    params: &AssociationParams,
) -> Result<Association> {
    let eligible = eligible_students(graph, params.min_courses);
    associate(graph, &eligible, dim, scenario, params)
}

/// The same analysis restricted to eligible students of one career.
pub fn cohort_association(
    graph: &HeteroGraph,
    career: &str,
    dim: PreferenceDimension,
    scenario: IndicatorScenario,
    params: &AssociationParams,
) -> Result<Association> {
    let eligible = eligible_students(graph, params.min_courses);
    let cohort = cohort_members(graph, &eligible, career)?;
    associate(graph, &cohort, dim, scenario, params)
}
