//! Embedded heterogeneous property graph for the student / course / teacher
//! schema.
//!
//! Nodes carry kind-specific attributes and are addressed by opaque string
//! ids, conventionally namespaced by kind (`"student:17"`). Edges are typed;
//! each [`EdgeKind`] admits exactly one (head kind, tail kind) signature.
//! Adjacency is indexed per node, per edge kind, in both directions, so
//! typed traversals never scan the edge list.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("{kind} node is missing required attribute `{attr}`")]
    MissingAttr { kind: NodeKind, attr: &'static str },
    #[error("attribute `{attr}` of node `{id}` is negative or not finite")]
    NegativeNumericAttr { id: String, attr: &'static str },
    #[error("attribute `{attr}` has the wrong type: {reason}")]
    InvalidAttr { attr: &'static str, reason: String },
    #[error("unknown node kind `{0}`")]
    UnknownNodeKind(String),
    #[error("unknown edge kind `{0}`")]
    UnknownEdgeKind(String),
    #[error("edge endpoint `{0}` does not exist")]
    UnknownEndpoint(String),
    #[error("{kind} expects {expected_head}->{expected_tail}, got {head}->{tail}")]
    SignatureMismatch {
        kind: EdgeKind,
        expected_head: NodeKind,
        expected_tail: NodeKind,
        head: NodeKind,
        tail: NodeKind,
    },
    #[error("duplicate edge {kind}({head} -> {tail})")]
    DuplicateEdge { kind: EdgeKind, head: String, tail: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("incompatible path schema: {0}")]
    IncompatiblePathSchema(String),
    #[error("graph is frozen")]
    Frozen,
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Student,
    Course,
    Teacher,
    School,
    Career,
    Major,
    Category,
}

impl NodeKind {
    pub const ALL: [NodeKind; 7] = [
        NodeKind::Student,
        NodeKind::Course,
        NodeKind::Teacher,
        NodeKind::School,
        NodeKind::Career,
        NodeKind::Major,
        NodeKind::Category,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Student => "Student",
            NodeKind::Course => "Course",
            NodeKind::Teacher => "Teacher",
            NodeKind::School => "School",
            NodeKind::Career => "Career",
            NodeKind::Major => "Major",
            NodeKind::Category => "Category",
        }
    }

    /// Lower-case prefix used for namespaced ids.
    pub fn prefix(self) -> &'static str {
        match self {
            NodeKind::Student => "student",
            NodeKind::Course => "course",
            NodeKind::Teacher => "teacher",
            NodeKind::School => "school",
            NodeKind::Career => "career",
            NodeKind::Major => "major",
            NodeKind::Category => "category",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "student" => Ok(NodeKind::Student),
            "course" => Ok(NodeKind::Course),
            "teacher" => Ok(NodeKind::Teacher),
            "school" => Ok(NodeKind::School),
            "career" => Ok(NodeKind::Career),
            "major" => Ok(NodeKind::Major),
            // source tables use the plural
            "category" | "categories" => Ok(NodeKind::Category),
            _ => Err(GraphError::UnknownNodeKind(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Belong,
    BelongTo,
    Learn,
    LearnIn,
    MajorIn,
    Teach,
    TeachIn,
    WorkIn,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 8] = [
        EdgeKind::Belong,
        EdgeKind::BelongTo,
        EdgeKind::Learn,
        EdgeKind::LearnIn,
        EdgeKind::MajorIn,
        EdgeKind::Teach,
        EdgeKind::TeachIn,
        EdgeKind::WorkIn,
    ];

    /// The only admissible (head, tail) node kinds for this relationship.
    pub fn signature(self) -> (NodeKind, NodeKind) {
        use NodeKind::*;
        match self {
            EdgeKind::Belong => (Course, Category),
            EdgeKind::BelongTo => (Course, School),
            EdgeKind::Learn => (Student, Course),
            EdgeKind::LearnIn => (Student, School),
            EdgeKind::MajorIn => (Student, Major),
            EdgeKind::Teach => (Teacher, Course),
            EdgeKind::TeachIn => (Teacher, School),
            EdgeKind::WorkIn => (Student, Career),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Belong => "Belong",
            EdgeKind::BelongTo => "BelongTo",
            EdgeKind::Learn => "Learn",
            EdgeKind::LearnIn => "LearnIn",
            EdgeKind::MajorIn => "MajorIn",
            EdgeKind::Teach => "Teach",
            EdgeKind::TeachIn => "TeachIn",
            EdgeKind::WorkIn => "WorkIn",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = GraphError;

    /// Accepts both `BelongTo` and the snake-case `Belong_to` spelling.
    fn from_str(s: &str) -> Result<Self> {
        let folded: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.as_str().to_ascii_lowercase() == folded)
            .ok_or_else(|| GraphError::UnknownEdgeKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StudentAttrs {
    pub name: String,
    pub id: String,
    pub url: String,
    /// Total learning hours.
    pub learning_time: f64,
    pub response: u64,
    pub likes: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CourseAttrs {
    pub name: String,
    pub id: String,
    pub url: String,
    /// Number of electors.
    pub num: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TeacherAttrs {
    pub name: String,
    pub id: String,
    /// Academic title.
    pub career: String,
}

/// Kind-specific attributes. The variant determines the node kind.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeAttrs {
    Student(StudentAttrs),
    Course(CourseAttrs),
    Teacher(TeacherAttrs),
    School { name: String },
    Career { name: String },
    Major { name: String },
    Category { name: String },
}

impl NodeAttrs {
    pub fn kind(&self) -> NodeKind {
        match self {
            NodeAttrs::Student(_) => NodeKind::Student,
            NodeAttrs::Course(_) => NodeKind::Course,
            NodeAttrs::Teacher(_) => NodeKind::Teacher,
            NodeAttrs::School { .. } => NodeKind::School,
            NodeAttrs::Career { .. } => NodeKind::Career,
            NodeAttrs::Major { .. } => NodeKind::Major,
            NodeAttrs::Category { .. } => NodeKind::Category,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            NodeAttrs::Student(a) => &a.name,
            NodeAttrs::Course(a) => &a.name,
            NodeAttrs::Teacher(a) => &a.name,
            NodeAttrs::School { name }
            | NodeAttrs::Career { name }
            | NodeAttrs::Major { name }
            | NodeAttrs::Category { name } => name,
        }
    }

    /// Attributes for one of the four name-only kinds.
    pub fn named(kind: NodeKind, name: impl Into<String>) -> Option<NodeAttrs> {
        let name = name.into();
        match kind {
            NodeKind::School => Some(NodeAttrs::School { name }),
            NodeKind::Career => Some(NodeAttrs::Career { name }),
            NodeKind::Major => Some(NodeAttrs::Major { name }),
            NodeKind::Category => Some(NodeAttrs::Category { name }),
            _ => None,
        }
    }

    /// Parses the attribute object of a serialized node.
    pub fn from_json(kind: NodeKind, id: &str, attrs: &Map<String, Value>) -> Result<NodeAttrs> {
        let text = |attr: &'static str| -> Result<String> {
            match attrs.get(attr) {
                None | Some(Value::Null) => Err(GraphError::MissingAttr { kind, attr }),
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Number(n)) => Ok(n.to_string()),
                Some(other) => Err(GraphError::InvalidAttr {
                    attr,
                    reason: format!("expected string, got {other}"),
                }),
            }
        };
        let real = |attr: &'static str| -> Result<f64> {
            let v = match attrs.get(attr) {
                None | Some(Value::Null) => return Err(GraphError::MissingAttr { kind, attr }),
                Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
                Some(Value::String(s)) => s.trim().parse::<f64>().map_err(|e| GraphError::InvalidAttr {
                    attr,
                    reason: e.to_string(),
                })?,
                Some(other) => {
                    return Err(GraphError::InvalidAttr {
                        attr,
                        reason: format!("expected number, got {other}"),
                    })
                }
            };
            if !v.is_finite() || v < 0.0 {
                return Err(GraphError::NegativeNumericAttr { id: id.to_owned(), attr });
            }
            Ok(v)
        };
        let count = |attr: &'static str| -> Result<u64> {
            let v = real(attr)?;
            if v.fract() != 0.0 {
                return Err(GraphError::InvalidAttr {
                    attr,
                    reason: format!("expected an integer count, got {v}"),
                });
            }
            Ok(v as u64)
        };

        Ok(match kind {
            NodeKind::Student => NodeAttrs::Student(StudentAttrs {
                name: text("name")?,
                id: text("id")?,
                url: text("url")?,
                learning_time: real("learning_time")?,
                response: count("response")?,
                likes: count("likes")?,
            }),
            NodeKind::Course => NodeAttrs::Course(CourseAttrs {
                name: text("name")?,
                id: text("id")?,
                url: text("url")?,
                num: count("num")?,
            }),
            NodeKind::Teacher => NodeAttrs::Teacher(TeacherAttrs {
                name: text("name")?,
                id: text("id")?,
                career: text("career")?,
            }),
            other => NodeAttrs::named(other, text("name")?).expect("name-only kind"),
        })
    }

    pub fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_owned(), v);
        };
        match self {
            NodeAttrs::Student(a) => {
                put("name", a.name.clone().into());
                put("id", a.id.clone().into());
                put("url", a.url.clone().into());
                put("learning_time", a.learning_time.into());
                put("response", a.response.into());
                put("likes", a.likes.into());
            }
            NodeAttrs::Course(a) => {
                put("name", a.name.clone().into());
                put("id", a.id.clone().into());
                put("url", a.url.clone().into());
                put("num", a.num.into());
            }
            NodeAttrs::Teacher(a) => {
                put("name", a.name.clone().into());
                put("id", a.id.clone().into());
                put("career", a.career.clone().into());
            }
            other => put("name", other.name().to_owned().into()),
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub attrs: NodeAttrs,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, attrs: NodeAttrs) -> Self {
        NodeRecord { id: id.into(), attrs }
    }

    pub fn kind(&self) -> NodeKind {
        self.attrs.kind()
    }

    fn validate(&self) -> Result<()> {
        if let NodeAttrs::Student(a) = &self.attrs {
            if !a.learning_time.is_finite() || a.learning_time < 0.0 {
                return Err(GraphError::NegativeNumericAttr {
                    id: self.id.clone(),
                    attr: "learning_time",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIx(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub head: String,
    pub tail: String,
}

/// One hop of a typed traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub kind: EdgeKind,
    pub dir: Direction,
}

impl PathStep {
    pub const fn out(kind: EdgeKind) -> Self {
        PathStep { kind, dir: Direction::Out }
    }

    pub const fn inward(kind: EdgeKind) -> Self {
        PathStep { kind, dir: Direction::In }
    }

    fn endpoints(self) -> Option<(NodeKind, NodeKind)> {
        let (h, t) = self.kind.signature();
        match self.dir {
            Direction::Out => Some((h, t)),
            Direction::In => Some((t, h)),
            Direction::Both => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationRule {
    UnknownEndpoint,
    SignatureMismatch,
    DuplicateEdge,
    IndexMismatch,
    InvalidAttr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: ViolationRule,
    /// Offending node id, or `Kind(head -> tail)` for edges.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub nodes: BTreeMap<NodeKind, usize>,
    pub edges: BTreeMap<EdgeKind, usize>,
}

impl GraphCounts {
    pub fn total_nodes(&self) -> usize {
        self.nodes.values().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.values().sum()
    }
}

type Adjacency = [Vec<u32>; 8];

#[derive(Debug, Clone, Default)]
pub struct HeteroGraph {
    nodes: Vec<NodeRecord>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_set: HashSet<(EdgeKind, usize, usize)>,
    out_adj: Vec<Adjacency>,
    in_adj: Vec<Adjacency>,
    frozen: bool,
}

impl HeteroGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, record: NodeRecord) -> Result<NodeIx> {
        if self.frozen {
            return Err(GraphError::Frozen);
        }
        if self.index.contains_key(&record.id) {
            return Err(GraphError::DuplicateId(record.id));
        }
        record.validate()?;
        let ix = self.nodes.len();
        self.index.insert(record.id.clone(), ix);
        self.nodes.push(record);
        self.out_adj.push(Default::default());
        self.in_adj.push(Default::default());
        Ok(NodeIx(ix))
    }

    pub fn add_edge(&mut self, kind: EdgeKind, head: &str, tail: &str) -> Result<EdgeIx> {
        if self.frozen {
            return Err(GraphError::Frozen);
        }
        let h = self.require(head).map_err(|_| GraphError::UnknownEndpoint(head.to_owned()))?;
        let t = self.require(tail).map_err(|_| GraphError::UnknownEndpoint(tail.to_owned()))?;
        let (expected_head, expected_tail) = kind.signature();
        let (hk, tk) = (self.nodes[h].kind(), self.nodes[t].kind());
        if hk != expected_head || tk != expected_tail {
            return Err(GraphError::SignatureMismatch {
                kind,
                expected_head,
                expected_tail,
                head: hk,
                tail: tk,
            });
        }
        if self.edge_set.contains(&(kind, h, t)) {
            return Err(GraphError::DuplicateEdge {
                kind,
                head: head.to_owned(),
                tail: tail.to_owned(),
            });
        }
        Ok(self.push_edge(kind, head, tail, Some((h, t))))
    }

    /// Stores an edge without any validation. Endpoints that do not exist are
    /// kept in the edge list but not indexed. Used to exercise
    /// [`HeteroGraph::schema_validate`] on corrupted graphs.
    #[doc(hidden)]
    pub fn insert_edge_unchecked(&mut self, kind: EdgeKind, head: &str, tail: &str) -> EdgeIx {
        let ends = self.index.get(head).copied().zip(self.index.get(tail).copied());
        self.push_edge(kind, head, tail, ends)
    }

    fn push_edge(&mut self, kind: EdgeKind, head: &str, tail: &str, ends: Option<(usize, usize)>) -> EdgeIx {
        if let Some((h, t)) = ends {
            self.edge_set.insert((kind, h, t));
            self.out_adj[h][kind.slot()].push(t as u32);
            self.in_adj[t][kind.slot()].push(h as u32);
        }
        self.edges.push(Edge {
            kind,
            head: head.to_owned(),
            tail: tail.to_owned(),
        });
        EdgeIx(self.edges.len() - 1)
    }

    /// Ends the build phase. A frozen graph rejects all mutation.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.index.get(id).map(|&ix| &self.nodes[ix])
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.index.get(id).map(|&ix| NodeIx(ix))
    }

    pub fn node_at(&self, ix: NodeIx) -> &NodeRecord {
        &self.nodes[ix.0]
    }

    /// Nodes in insertion order.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &NodeRecord> + '_ {
        self.nodes.iter().filter(move |n| n.kind() == kind)
    }

    /// Neighbour indices reached from `ix` over `kind` edges in `dir`
    /// (`Out` = tails of edges headed at `ix`, `In` = heads of edges ending at
    /// `ix`). `Both` yields the concatenation.
    pub fn neighbors(&self, ix: NodeIx, kind: EdgeKind, dir: Direction) -> impl Iterator<Item = NodeIx> + '_ {
        let out: &[u32] = match dir {
            Direction::Out | Direction::Both => &self.out_adj[ix.0][kind.slot()],
            Direction::In => &[],
        };
        let inc: &[u32] = match dir {
            Direction::In | Direction::Both => &self.in_adj[ix.0][kind.slot()],
            Direction::Out => &[],
        };
        out.iter().chain(inc.iter()).map(|&n| NodeIx(n as usize))
    }

    pub fn degree(&self, id: &str, filter: Option<EdgeKind>, dir: Direction) -> Result<usize> {
        let ix = self.require(id)?;
        Ok(self.degree_ix(NodeIx(ix), filter, dir))
    }

    pub fn degree_ix(&self, ix: NodeIx, filter: Option<EdgeKind>, dir: Direction) -> usize {
        let side = |adj: &Adjacency| -> usize {
            match filter {
                Some(k) => adj[k.slot()].len(),
                None => adj.iter().map(Vec::len).sum(),
            }
        };
        let out = side(&self.out_adj[ix.0]);
        let inc = side(&self.in_adj[ix.0]);
        match dir {
            Direction::Out => out,
            Direction::In => inc,
            Direction::Both => out + inc,
        }
    }

    /// Follows `schema` depth-first from `start` and returns every terminal
    /// node with the number of distinct paths reaching it.
    pub fn dfs_collect(&self, start: &str, schema: &[PathStep]) -> Result<BTreeMap<String, usize>> {
        let ix = self.require(start)?;
        let counts = self.dfs_collect_ix(NodeIx(ix), schema)?;
        Ok(counts
            .into_iter()
            .map(|(n, c)| (self.nodes[n.0].id.clone(), c))
            .collect())
    }

    pub fn dfs_collect_ix(&self, start: NodeIx, schema: &[PathStep]) -> Result<HashMap<NodeIx, usize>> {
        self.check_schema(self.nodes[start.0].kind(), schema)?;
        let mut counts: HashMap<NodeIx, usize> = HashMap::new();
        let mut stack = vec![(start, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            if depth == schema.len() {
                *counts.entry(node).or_insert(0) += 1;
                continue;
            }
            let step = schema[depth];
            stack.extend(self.neighbors(node, step.kind, step.dir).map(|n| (n, depth + 1)));
        }
        Ok(counts)
    }

    fn check_schema(&self, start_kind: NodeKind, schema: &[PathStep]) -> Result<()> {
        if schema.is_empty() {
            return Err(GraphError::IncompatiblePathSchema("empty path".into()));
        }
        let mut at = start_kind;
        for (i, step) in schema.iter().enumerate() {
            let (from, to) = step.endpoints().ok_or_else(|| {
                GraphError::IncompatiblePathSchema(format!("step {i}: direction must be Out or In"))
            })?;
            if from != at {
                return Err(GraphError::IncompatiblePathSchema(format!(
                    "step {i}: {} {:?} leaves a {from}, but the walk is at a {at}",
                    step.kind, step.dir
                )));
            }
            at = to;
        }
        Ok(())
    }

    pub fn counts_by_kind(&self) -> GraphCounts {
        let mut nodes: BTreeMap<NodeKind, usize> = NodeKind::ALL.iter().map(|&k| (k, 0)).collect();
        let mut edges: BTreeMap<EdgeKind, usize> = EdgeKind::ALL.iter().map(|&k| (k, 0)).collect();
        for n in &self.nodes {
            *nodes.get_mut(&n.kind()).unwrap() += 1;
        }
        for e in &self.edges {
            *edges.get_mut(&e.kind).unwrap() += 1;
        }
        GraphCounts { nodes, edges }
    }

    /// Checks every structural invariant. An empty result means the graph
    /// is consistent.
    pub fn schema_validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen: HashSet<(EdgeKind, usize, usize)> = HashSet::new();
        let mut listed: HashMap<(EdgeKind, usize, usize), usize> = HashMap::new();

        for n in &self.nodes {
            if let Err(e) = n.validate() {
                out.push(Violation {
                    rule: ViolationRule::InvalidAttr,
                    subject: n.id.clone(),
                    detail: e.to_string(),
                });
            }
        }

        for e in &self.edges {
            let subject = format!("{}({} -> {})", e.kind, e.head, e.tail);
            let (h, t) = match (self.index.get(&e.head), self.index.get(&e.tail)) {
                (Some(&h), Some(&t)) => (h, t),
                (h, _) => {
                    let missing = if h.is_none() { &e.head } else { &e.tail };
                    out.push(Violation {
                        rule: ViolationRule::UnknownEndpoint,
                        subject,
                        detail: format!("node `{missing}` does not exist"),
                    });
                    continue;
                }
            };
            let (eh, et) = e.kind.signature();
            let (hk, tk) = (self.nodes[h].kind(), self.nodes[t].kind());
            if (hk, tk) != (eh, et) {
                out.push(Violation {
                    rule: ViolationRule::SignatureMismatch,
                    subject: subject.clone(),
                    detail: format!("expected {eh}->{et}, found {hk}->{tk}"),
                });
            }
            if !seen.insert((e.kind, h, t)) {
                out.push(Violation {
                    rule: ViolationRule::DuplicateEdge,
                    subject: subject.clone(),
                    detail: "triple already present".into(),
                });
            }
            *listed.entry((e.kind, h, t)).or_insert(0) += 1;
        }

        let mut indexed: HashMap<(EdgeKind, usize, usize), usize> = HashMap::new();
        for (h, adj) in self.out_adj.iter().enumerate() {
            for kind in EdgeKind::ALL {
                for &t in &adj[kind.slot()] {
                    *indexed.entry((kind, h, t as usize)).or_insert(0) += 1;
                }
            }
        }
        let mut incoming: HashMap<(EdgeKind, usize, usize), usize> = HashMap::new();
        for (t, adj) in self.in_adj.iter().enumerate() {
            for kind in EdgeKind::ALL {
                for &h in &adj[kind.slot()] {
                    *incoming.entry((kind, h as usize, t)).or_insert(0) += 1;
                }
            }
        }
        if indexed != listed || incoming != listed {
            out.push(Violation {
                rule: ViolationRule::IndexMismatch,
                subject: "<adjacency>".into(),
                detail: "adjacency indices disagree with the edge list".into(),
            });
        }
        out
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_owned()))
    }
}
