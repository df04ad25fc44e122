use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::view::{FeatureConfig, GraphView};
use super::{GnnError, Result};
use crate::graph::{Direction, EdgeKind, HeteroGraph, NodeKind};

/// Two-layer GCN: `E = Â · relu(Â X W1) · W2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub seed: u64,
    pub feature_config: FeatureConfig,
}

/// Intermediate activations kept for back-propagation.
#[derive(Debug, Clone)]
pub(crate) struct Activations {
    /// Â X
    pub ax: Array2<f64>,
    /// Â X W1, before the rectifier
    pub pre: Array2<f64>,
    pub hidden: Array2<f64>,
    pub embeddings: Array2<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound))
}

impl GcnModel {
    /// Glorot-uniform initialisation from `seed`.
    pub fn init(feature_config: FeatureConfig, hidden: usize, embed: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = glorot(feature_config.dims(), hidden, &mut rng);
        let w2 = glorot(hidden, embed, &mut rng);
        GcnModel {
            w1,
            w2,
            seed,
            feature_config,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn embed_dim(&self) -> usize {
        self.w2.ncols()
    }

    pub fn check_view(&self, view: &GraphView) -> Result<()> {
        if view.features.ncols() != self.in_dim() {
            return Err(GnnError::DimMismatch {
                what: "input features",
                expected: self.in_dim(),
                found: view.features.ncols(),
            });
        }
        Ok(())
    }

    pub(crate) fn activations(&self, view: &GraphView, ax: Option<&Array2<f64>>) -> Activations {
        let ax = ax.cloned().unwrap_or_else(|| view.adjacency.matmul(&view.features));
        let pre = ax.dot(&self.w1);
        let hidden = pre.mapv(|v| v.max(0.0));
        let embeddings = view.adjacency.matmul(&hidden.dot(&self.w2));
        Activations {
            ax,
            pre,
            hidden,
            embeddings,
        }
    }

    /// Node embeddings, one row per view node.
    pub fn forward(&self, view: &GraphView) -> Result<Array2<f64>> {
        self.check_view(view)?;
        Ok(self.activations(view, None).embeddings)
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema_version: crate::SCHEMA_VERSION,
            format: CHECKPOINT_FORMAT.to_owned(),
            in_dim: self.in_dim(),
            hidden_dim: self.hidden_dim(),
            embed_dim: self.embed_dim(),
            seed: self.seed,
            features: self.feature_config,
            w1: self.w1.iter().copied().collect(),
            w2: self.w2.iter().copied().collect(),
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT {
            return Err(GnnError::Checkpoint(format!("unexpected format `{}`", c.format)));
        }
        if c.in_dim != c.features.dims() {
            return Err(GnnError::DimMismatch {
                what: "input features",
                expected: c.features.dims(),
                found: c.in_dim,
            });
        }
        let w1 = Array2::from_shape_vec((c.in_dim, c.hidden_dim), c.w1).map_err(|_| GnnError::DimMismatch {
            what: "w1 length",
            expected: c.in_dim * c.hidden_dim,
            found: 0,
        })?;
        let w2 = Array2::from_shape_vec((c.hidden_dim, c.embed_dim), c.w2).map_err(|_| GnnError::DimMismatch {
            what: "w2 length",
            expected: c.hidden_dim * c.embed_dim,
            found: 0,
        })?;
        let model = GcnModel {
            w1,
            w2,
            seed: c.seed,
            feature_config: c.features,
        };
        if !model.is_finite() {
            return Err(GnnError::Checkpoint("non-finite weight".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes");
        std::fs::write(path, json).map_err(|e| GnnError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GnnError::Checkpoint(format!("{}: {e}", path.display())))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| GnnError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(c)
    }
}

const CHECKPOINT_FORMAT: &str = "edurec-gcn";

/// JSON checkpoint with row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub format: String,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub seed: u64,
    pub features: FeatureConfig,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

/// Embeddings of a trained model over one view, for repeated scoring.
#[derive(Debug, Clone)]
pub struct Embeddings<'v> {
    pub view: &'v GraphView,
    pub matrix: Array2<f64>,
}

impl<'v> Embeddings<'v> {
    pub fn new(model: &GcnModel, view: &'v GraphView) -> Result<Self> {
        Ok(Embeddings {
            view,
            matrix: model.forward(view)?,
        })
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.view.position(id).ok_or_else(|| GnnError::UnknownNode(id.to_owned()))
    }

    pub fn row(&self, id: &str) -> Result<ArrayView1<'_, f64>> {
        Ok(self.matrix.row(self.position(id)?))
    }

    /// Embedding rows of every node of `kind`, keyed by id.
    pub fn by_kind(&self, kind: NodeKind) -> std::collections::BTreeMap<String, Vec<f64>> {
        self.view
            .nodes_of_kind(kind)
            .map(|i| (self.view.ids[i].clone(), self.matrix.row(i).to_vec()))
            .collect()
    }

    /// Inner product of the two embedding rows.
    pub fn score(&self, student: &str, course: &str) -> Result<f64> {
        let (s, c) = (self.position(student)?, self.position(course)?);
        Ok(dot(self.matrix.row(s), self.matrix.row(c)))
    }

    /// Top-`n` courses the student is not enrolled in, by descending score,
    /// ties broken by course id.
    pub fn recommend(&self, graph: &HeteroGraph, student: &str, n: usize) -> Result<Recommendation> {
        let s = self.position(student)?;
        if self.view.kinds[s] != NodeKind::Student {
            return Err(GnnError::UnknownNode(student.to_owned()));
        }
        let gix = graph.node_ix(student).ok_or_else(|| GnnError::UnknownNode(student.to_owned()))?;
        let enrolled: std::collections::HashSet<&str> = graph
            .neighbors(gix, EdgeKind::Learn, Direction::Out)
            .map(|c| graph.node_at(c).id.as_str())
            .collect();
        let srow = self.matrix.row(s);
        let mut ranked: Vec<(String, f64)> = self
            .view
            .nodes_of_kind(NodeKind::Course)
            .filter(|&c| !enrolled.contains(self.view.ids[c].as_str()))
            .map(|c| (self.view.ids[c].clone(), dot(srow, self.matrix.row(c))))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(Recommendation {
            student: student.to_owned(),
            ranked,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub student: String,
    /// (course id, score), best first.
    pub ranked: Vec<(String, f64)>,
}

pub fn score(model: &GcnModel, view: &GraphView, student: &str, course: &str) -> Result<f64> {
    Embeddings::new(model, view)?.score(student, course)
}

pub fn recommend(model: &GcnModel, view: &GraphView, graph: &HeteroGraph, student: &str, n: usize) -> Result<Recommendation> {
    Embeddings::new(model, view)?.recommend(graph, student, n)
}
