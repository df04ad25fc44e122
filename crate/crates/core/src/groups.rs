//! Study groups inside preference clusters, scored by embedding cohesion.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("group size must be >= 2, got {0}")]
    GroupSizeTooSmall(usize),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("embedding of `{0}` has zero norm")]
    ZeroNormEmbedding(String),
    #[error("embeddings have inconsistent lengths")]
    RaggedEmbeddings,
    #[error("cohesion needs at least two members")]
    SingletonGroup,
}

pub type Result<T, E = GroupError> = std::result::Result<T, E>;

pub const DEFAULT_GROUP_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyGroup {
    pub members: BTreeSet<String>,
    pub cluster: usize,
    /// Mean pairwise cosine; `None` only for a one-student cluster.
    pub cohesion: Option<f64>,
}

impl StudyGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Mean cosine similarity over unordered member pairs.
pub fn cohesion<S: AsRef<str>>(members: &[S], embeddings: &BTreeMap<String, Vec<f64>>) -> Result<f64> {
    if members.len() < 2 {
        return Err(GroupError::SingletonGroup);
    }
    let vecs = lookup(members.iter().map(|m| m.as_ref()), embeddings)?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            total += cosine(vecs[i], vecs[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

fn lookup<'a, 'e>(
    ids: impl Iterator<Item = &'a str>,
    embeddings: &'e BTreeMap<String, Vec<f64>>,
) -> Result<Vec<&'e [f64]>> {
    let mut out = Vec::new();
    let mut dim = None;
    for id in ids {
        let v = embeddings.get(id).ok_or_else(|| GroupError::MissingEmbedding(id.to_owned()))?;
        if *dim.get_or_insert(v.len()) != v.len() {
            return Err(GroupError::RaggedEmbeddings);
        }
        if norm(v).is_nan() || norm(v) <= 0.0 {
            return Err(GroupError::ZeroNormEmbedding(id.to_owned()));
        }
        out.push(v.as_slice());
    }
    Ok(out)
}

/// Group sizes for a cluster of `m` students: groups of `g`, a tail of `g-1`
/// kept as its own group, shorter tails folded into the last group.
pub fn group_sizes(m: usize, g: usize) -> Vec<usize> {
    let (full, rest) = (m / g, m % g);
    let mut sizes = vec![g; full];
    if rest == 0 {
        return sizes;
    }
    if rest >= (g - 1).max(2) || full == 0 {
        sizes.push(rest);
    } else {
        *sizes.last_mut().expect("full > 0") += rest;
    }
    sizes
}

/// Greedy cohesion-driven partition of every cluster.
///
/// Within a cluster each group starts from the unassigned student with the
/// largest embedding norm and repeatedly takes the unassigned cluster-mate
/// with the highest mean cosine to the current members. Exact ties are broken
/// by a seeded ordering of the students.
pub fn form_groups(
    assignments: &BTreeMap<String, usize>,
    embeddings: &BTreeMap<String, Vec<f64>>,
    g: usize,
    seed: u64,
) -> Result<Vec<StudyGroup>> {
    if g < 2 {
        return Err(GroupError::GroupSizeTooSmall(g));
    }
    lookup(assignments.keys().map(String::as_str), embeddings)?;

    let mut by_cluster: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (id, &c) in assignments {
        by_cluster.entry(c).or_default().push(id);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = Vec::new();
    for (cluster, mut ids) in by_cluster {
        ids.shuffle(&mut rng);
        let vecs: Vec<&[f64]> = ids.iter().map(|id| embeddings[*id].as_slice()).collect();
        let norms: Vec<f64> = vecs.iter().map(|v| norm(v)).collect();
        let n = ids.len();
        let mut sim = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = cosine(vecs[i], vecs[j]);
                sim[i * n + j] = c;
                sim[j * n + i] = c;
            }
        }

        let mut free: Vec<bool> = vec![true; n];
        for size in group_sizes(n, g) {
            let start = (0..n)
                .filter(|&i| free[i])
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if norms[b] >= norms[i] => Some(b),
                    _ => Some(i),
                })
                .expect("sizes sum to cluster size");
            free[start] = false;
            let mut members = vec![start];
            let mut affinity: Vec<f64> = (0..n).map(|j| sim[start * n + j]).collect();
            while members.len() < size {
                let next = (0..n)
                    .filter(|&i| free[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if affinity[b] >= affinity[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("enough free students");
                free[next] = false;
                members.push(next);
                for j in 0..n {
                    affinity[j] += sim[next * n + j];
                }
            }
            let cohesion = if members.len() < 2 {
                None
            } else {
                let mut total = 0.0;
                for (a, &i) in members.iter().enumerate() {
                    for &j in &members[a + 1..] {
                        total += sim[i * n + j];
                    }
                }
                Some(total / (members.len() * (members.len() - 1) / 2) as f64)
            };
            groups.push(StudyGroup {
                members: members.iter().map(|&i| ids[i].to_owned()).collect(),
                cluster,
                cohesion,
            });
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub cluster: usize,
    pub size: usize,
    pub cohesion: Option<f64>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub schema_version: u32,
    /// Sorted by cohesion, highest first; groups without a cohesion last.
    pub groups: Vec<GroupRow>,
    pub mean_cohesion: Option<f64>,
    pub total_members: usize,
}

pub fn group_report(groups: &[StudyGroup]) -> GroupReport {
    let mut rows: Vec<GroupRow> = groups
        .iter()
        .map(|g| GroupRow {
            cluster: g.cluster,
            size: g.size(),
            cohesion: g.cohesion,
            members: g.members.iter().cloned().collect(),
        })
        .collect();
    rows.sort_by(|a, b| match (a.cohesion, b.cohesion) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let scored: Vec<f64> = rows.iter().filter_map(|r| r.cohesion).collect();
    GroupReport {
        schema_version: crate::SCHEMA_VERSION,
        total_members: rows.iter().map(|r| r.size).sum(),
        mean_cohesion: (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64),
        groups: rows,
    }
}
