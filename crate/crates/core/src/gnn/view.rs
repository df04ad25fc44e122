use std::collections::HashMap;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GnnError, Result};
use crate::graph::{Direction, EdgeKind, HeteroGraph, NodeAttrs, NodeIx, NodeKind};

/// One-hot kind (3) + learning_time, likes, num.
pub const BASE_FEATURES: usize = 6;

/// How node features are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Extra per-node random coordinates appended to the base features.
    /// Derived from the node id, so they do not depend on node order.
    pub random_dims: usize,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { random_dims: 32, seed: 0 }
    }
}

impl FeatureConfig {
    pub fn dims(&self) -> usize {
        BASE_FEATURES + self.random_dims
    }
}

/// Symmetric matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }

    /// `self · x` for a dense `x` with `n` rows.
    pub fn matmul(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n);
        let cols = x.ncols();
        let x = x.as_standard_layout();
        let src = x.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.n * cols];
        for i in 0..self.n {
            let dst = &mut out[i * cols..(i + 1) * cols];
            for (j, v) in self.row(i) {
                for (d, s) in dst.iter_mut().zip(&src[j * cols..(j + 1) * cols]) {
                    *d += v * s;
                }
            }
        }
        Array2::from_shape_vec((self.n, cols), out).expect("shape")
    }
}

/// Student/course/teacher subgraph prepared for propagation.
#[derive(Debug, Clone)]
pub struct GraphView {
    pub ids: Vec<String>,
    pub kinds: Vec<NodeKind>,
    index: HashMap<String, usize>,
    /// D^-1/2 (A + I) D^-1/2 over undirected Learn and Teach edges.
    pub adjacency: SparseMatrix,
    pub features: Array2<f64>,
    pub feature_config: FeatureConfig,
}

const VIEW_KINDS: [NodeKind; 3] = [NodeKind::Student, NodeKind::Course, NodeKind::Teacher];

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn normalized_adjacency(neighbors: &[Vec<usize>]) -> SparseMatrix {
    let n = neighbors.len();
    let deg: Vec<f64> = neighbors.iter().map(|nb| nb.len() as f64 + 1.0).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let mut row: Vec<usize> = neighbors[i].clone();
        row.push(i);
        row.sort_unstable();
        for j in row {
            cols.push(j);
            vals.push(1.0 / (deg[i] * deg[j]).sqrt());
        }
        row_ptr.push(cols.len());
    }
    SparseMatrix { n, row_ptr, cols, vals }
}

impl GraphView {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.kinds[i] == kind)
    }

    /// Same view with rows in `order` (`order[new] = old`).
    pub fn reorder(&self, order: &[usize]) -> GraphView {
        assert_eq!(order.len(), self.len());
        let mut new_of = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of[old] = new;
        }
        let neighbors: Vec<Vec<usize>> = order
            .iter()
            .map(|&old| {
                self.adjacency
                    .row(old)
                    .filter(|&(j, _)| j != old)
                    .map(|(j, _)| new_of[j])
                    .collect()
            })
            .collect();
        let ids: Vec<String> = order.iter().map(|&o| self.ids[o].clone()).collect();
        GraphView {
            index: ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect(),
            ids,
            kinds: order.iter().map(|&o| self.kinds[o]).collect(),
            adjacency: normalized_adjacency(&neighbors),
            features: self.features.select(ndarray::Axis(0), order),
            feature_config: self.feature_config,
        }
    }
}

pub fn build_view(graph: &HeteroGraph, features: FeatureConfig) -> Result<GraphView> {
    let members: Vec<NodeIx> = (0..graph.node_count())
        .map(NodeIx)
        .filter(|&ix| VIEW_KINDS.contains(&graph.node_at(ix).kind()))
        .collect();
    if members.is_empty() {
        return Err(GnnError::EmptyGraph);
    }
    let mut position: HashMap<NodeIx, usize> = HashMap::with_capacity(members.len());
    for (i, &ix) in members.iter().enumerate() {
        position.insert(ix, i);
    }

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
    for (i, &ix) in members.iter().enumerate() {
        for kind in [EdgeKind::Learn, EdgeKind::Teach] {
            for nb in graph.neighbors(ix, kind, Direction::Both) {
                if let Some(&j) = position.get(&nb) {
                    neighbors[i].push(j);
                }
            }
        }
    }

    let f = features.dims();
    let mut x = Array2::<f64>::zeros((members.len(), f));
    let (mut max_time, mut max_likes, mut max_num) = (0.0f64, 0.0f64, 0.0f64);
    for &ix in &members {
        match &graph.node_at(ix).attrs {
            NodeAttrs::Student(a) => {
                max_time = max_time.max(a.learning_time);
                max_likes = max_likes.max(a.likes as f64);
            }
            NodeAttrs::Course(a) => max_num = max_num.max(a.num as f64),
            _ => {}
        }
    }
    let scaled = |v: f64, max: f64| if max > 0.0 { v / max } else { 0.0 };
    for (i, &ix) in members.iter().enumerate() {
        let node = graph.node_at(ix);
        match &node.attrs {
            NodeAttrs::Student(a) => {
                x[[i, 0]] = 1.0;
                x[[i, 3]] = scaled(a.learning_time, max_time);
                x[[i, 4]] = scaled(a.likes as f64, max_likes);
            }
            NodeAttrs::Course(a) => {
                x[[i, 1]] = 1.0;
                x[[i, 5]] = scaled(a.num as f64, max_num);
            }
            _ => x[[i, 2]] = 1.0,
        }
        if features.random_dims > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&node.id) ^ features.seed);
            let scale = 1.0 / (features.random_dims as f64).sqrt();
            for j in 0..features.random_dims {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[[i, BASE_FEATURES + j]] = z * scale;
            }
        }
    }

    let ids: Vec<String> = members.iter().map(|&ix| graph.node_at(ix).id.clone()).collect();
    Ok(GraphView {
        index: ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect(),
        kinds: members.iter().map(|&ix| graph.node_at(ix).kind()).collect(),
        ids,
        adjacency: normalized_adjacency(&neighbors),
        features: x,
        feature_config: features,
    })
}
