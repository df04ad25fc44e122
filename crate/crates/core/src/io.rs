//! JSONL ingestion and export, plus GraphML export and re-import.
//!
//! Node lines: `{"id": str, "kind": str, "attrs": {...}}`.
//! Edge lines: `{"kind": str, "head": str, "tail": str}`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{GraphError, HeteroGraph, NodeAttrs, NodeKind, NodeRecord, Violation, ViolationRule};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{count} malformed lines exceed the threshold of {threshold}")]
    TooManyMalformed { count: usize, threshold: usize },
    #[error("invalid GraphML: {0}")]
    Xml(String),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Abort once more than this many lines fail to parse.
    pub max_malformed: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { max_malformed: usize::MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalformedLine {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub nodes_read: usize,
    pub edges_read: usize,
    pub malformed: Vec<MalformedLine>,
    pub violations: Vec<Violation>,
    pub elapsed: f64,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.malformed.is_empty() && self.violations.is_empty()
    }
}

#[derive(Deserialize)]
struct NodeLine {
    id: String,
    kind: String,
    #[serde(default)]
    attrs: Map<String, Value>,
}

#[derive(Serialize)]
struct NodeLineOut<'a> {
    id: &'a str,
    kind: &'a str,
    attrs: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct EdgeLine {
    kind: String,
    head: String,
    tail: String,
}

/// Accumulates a graph from loosely validated records, turning per-record
/// failures into report entries.
struct Builder {
    graph: HeteroGraph,
    report: IngestReport,
    opts: IngestOptions,
    started: Instant,
}

impl Builder {
    fn new(opts: IngestOptions) -> Self {
        Builder {
            graph: HeteroGraph::new(),
            report: IngestReport {
                nodes_read: 0,
                edges_read: 0,
                malformed: Vec::new(),
                violations: Vec::new(),
                elapsed: 0.0,
            },
            opts,
            started: Instant::now(),
        }
    }

    fn malformed(&mut self, file: &str, line: usize, reason: impl Into<String>) -> Result<()> {
        self.report.malformed.push(MalformedLine {
            file: file.to_owned(),
            line,
            reason: reason.into(),
        });
        let count = self.report.malformed.len();
        if count > self.opts.max_malformed {
            return Err(IngestError::TooManyMalformed {
                count,
                threshold: self.opts.max_malformed,
            });
        }
        Ok(())
    }

    fn node(&mut self, file: &str, line: usize, id: String, kind: &str, attrs: &Map<String, Value>) -> Result<()> {
        let parsed = kind
            .parse::<NodeKind>()
            .and_then(|k| NodeAttrs::from_json(k, &id, attrs));
        let attrs = match parsed {
            Ok(a) => a,
            Err(e) => return self.malformed(file, line, e.to_string()),
        };
        match self.graph.add_node(NodeRecord::new(id.clone(), attrs)) {
            Ok(_) => self.report.nodes_read += 1,
            Err(e) => self.report.violations.push(Violation {
                rule: ViolationRule::InvalidAttr,
                subject: id,
                detail: e.to_string(),
            }),
        }
        Ok(())
    }

    fn edge(&mut self, file: &str, line: usize, kind: &str, head: &str, tail: &str) -> Result<()> {
        let kind = match kind.parse() {
            Ok(k) => k,
            Err(e) => return self.malformed(file, line, GraphError::to_string(&e)),
        };
        match self.graph.add_edge(kind, head, tail) {
            Ok(_) => self.report.edges_read += 1,
            Err(e) => {
                let rule = match e {
                    GraphError::UnknownEndpoint(_) => ViolationRule::UnknownEndpoint,
                    GraphError::SignatureMismatch { .. } => ViolationRule::SignatureMismatch,
                    GraphError::DuplicateEdge { .. } => ViolationRule::DuplicateEdge,
                    _ => ViolationRule::InvalidAttr,
                };
                self.report.violations.push(Violation {
                    rule,
                    subject: format!("{kind}({head} -> {tail})"),
                    detail: e.to_string(),
                });
            }
        }
        Ok(())
    }

    fn finish(mut self) -> (HeteroGraph, IngestReport) {
        self.graph.freeze();
        self.report.elapsed = self.started.elapsed().as_secs_f64();
        (self.graph, self.report)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::FileNotFound(path.to_owned())
        } else {
            IngestError::Io {
                path: path.to_owned(),
                source,
            }
        }
    })
}

fn write_file(path: &Path, contents: &str) -> Result<u64> {
    fs::write(path, contents).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(contents.len() as u64)
}

/// Loads a graph from a node file and an edge file. Lines that fail to parse
/// are listed in the report and skipped; records that parse but break a
/// graph rule are recorded as violations and skipped. The returned graph is
/// frozen.
pub fn load_jsonl(nodes: &Path, edges: &Path, opts: IngestOptions) -> Result<(HeteroGraph, IngestReport)> {
    let node_text = read_to_string(nodes)?;
    let edge_text = read_to_string(edges)?;
    let node_file = nodes.display().to_string();
    let edge_file = edges.display().to_string();

    let mut b = Builder::new(opts);
    for (i, line) in node_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<NodeLine>(line) {
            Ok(n) => b.node(&node_file, i + 1, n.id, &n.kind, &n.attrs)?,
            Err(e) => b.malformed(&node_file, i + 1, e.to_string())?,
        }
    }
    for (i, line) in edge_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EdgeLine>(line) {
            Ok(e) => b.edge(&edge_file, i + 1, &e.kind, &e.head, &e.tail)?,
            Err(e) => b.malformed(&edge_file, i + 1, e.to_string())?,
        }
    }
    Ok(b.finish())
}

pub fn nodes_to_jsonl(graph: &HeteroGraph) -> String {
    let mut out = String::new();
    for n in graph.nodes() {
        let line = NodeLineOut {
            id: &n.id,
            kind: n.kind().as_str(),
            attrs: n.attrs.to_json(),
        };
        out.push_str(&serde_json::to_string(&line).expect("node serializes"));
        out.push('\n');
    }
    out
}

pub fn edges_to_jsonl(graph: &HeteroGraph) -> String {
    let mut out = String::new();
    for e in graph.edges() {
        let line = EdgeLine {
            kind: e.kind.as_str().to_owned(),
            head: e.head.clone(),
            tail: e.tail.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("edge serializes"));
        out.push('\n');
    }
    out
}

/// Writes the node and edge files, returning the total byte count.
pub fn write_jsonl(graph: &HeteroGraph, nodes: &Path, edges: &Path) -> Result<u64> {
    Ok(write_file(nodes, &nodes_to_jsonl(graph))? + write_file(edges, &edges_to_jsonl(graph))?)
}

/// (key id, attribute name, GraphML type)
const NODE_KEYS: [(&str, &str, &str); 9] = [
    ("kind", "kind", "string"),
    ("name", "name", "string"),
    ("ext_id", "id", "string"),
    ("url", "url", "string"),
    ("learning_time", "learning_time", "double"),
    ("response", "response", "long"),
    ("likes", "likes", "long"),
    ("num", "num", "long"),
    ("career", "career", "string"),
];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn to_graphml(graph: &HeteroGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    for (id, name, ty) in NODE_KEYS {
        let _ = writeln!(out, "  <key id=\"{id}\" for=\"node\" attr.name=\"{name}\" attr.type=\"{ty}\"/>");
    }
    out.push_str("  <key id=\"edge_kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n");
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for n in graph.nodes() {
        let _ = write!(out, "    <node id=\"{}\">", escape(&n.id));
        let _ = write!(out, "<data key=\"kind\">{}</data>", n.kind());
        for (key, value) in n.attrs.to_json() {
            let key_id = if key == "id" { "ext_id".to_owned() } else { key };
            let text = match value {
                Value::String(s) => s,
                other => other.to_string(),
            };
            let _ = write!(out, "<data key=\"{key_id}\">{}</data>", escape(&text));
        }
        out.push_str("</node>\n");
    }
    for (i, e) in graph.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"><data key=\"edge_kind\">{}</data></edge>",
            escape(&e.head),
            escape(&e.tail),
            e.kind
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Writes GraphML and returns the number of bytes written.
pub fn export_graphml(graph: &HeteroGraph, path: &Path) -> Result<u64> {
    write_file(path, &to_graphml(graph))
}

/// Reads GraphML produced by [`export_graphml`] (or any GraphML using the
/// same attribute names) back into a frozen graph.
pub fn read_graphml(path: &Path, opts: IngestOptions) -> Result<(HeteroGraph, IngestReport)> {
    let text = read_to_string(path)?;
    let file = path.display().to_string();
    let doc = roxmltree::Document::parse(&text).map_err(|e| IngestError::Xml(e.to_string()))?;

    // key id -> (attribute name, type)
    let mut keys: HashMap<String, (String, String)> = HashMap::new();
    for k in doc.descendants().filter(|n| n.has_tag_name("key")) {
        if let (Some(id), Some(name)) = (k.attribute("id"), k.attribute("attr.name")) {
            let ty = k.attribute("attr.type").unwrap_or("string");
            keys.insert(id.to_owned(), (name.to_owned(), ty.to_owned()));
        }
    }
    let data = |node: roxmltree::Node| -> Map<String, Value> {
        let mut m = Map::new();
        for d in node.children().filter(|c| c.has_tag_name("data")) {
            let Some((name, ty)) = d.attribute("key").and_then(|k| keys.get(k)) else {
                continue;
            };
            let raw = d.text().unwrap_or("");
            let value = match ty.as_str() {
                "double" | "float" | "long" | "int" => raw
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .map(Value::Number)
                    .unwrap_or_else(|| Value::String(raw.to_owned())),
                _ => Value::String(raw.to_owned()),
            };
            m.insert(name.clone(), value);
        }
        m
    };

    let newlines: Vec<usize> = text.match_indices('\n').map(|(i, _)| i).collect();
    let line_of = |node: roxmltree::Node| newlines.partition_point(|&i| i < node.range().start) + 1;

    let mut b = Builder::new(opts);
    for n in doc.descendants().filter(|n| n.has_tag_name("node")) {
        let line = line_of(n);
        let Some(id) = n.attribute("id") else {
            b.malformed(&file, line, "node without id")?;
            continue;
        };
        let mut attrs = data(n);
        let kind = match attrs.remove("kind") {
            Some(Value::String(k)) => k,
            _ => {
                b.malformed(&file, line, format!("node `{id}` has no kind"))?;
                continue;
            }
        };
        b.node(&file, line, id.to_owned(), &kind, &attrs)?;
    }
    for e in doc.descendants().filter(|n| n.has_tag_name("edge")) {
        let line = line_of(e);
        let attrs = data(e);
        match (e.attribute("source"), e.attribute("target"), attrs.get("kind")) {
            (Some(h), Some(t), Some(Value::String(k))) => b.edge(&file, line, k, h, t)?,
            _ => b.malformed(&file, line, "edge needs source, target and kind")?,
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::EdgeKind;

    fn two_node_graph() -> HeteroGraph {
        let mut g = HeteroGraph::new();
        g.add_node(student("student:1")).unwrap();
        g.add_node(course("course:1")).unwrap();
        g.add_edge(EdgeKind::Learn, "student:1", "course:1").unwrap();
        g.freeze();
        g
    }

    #[test]
    fn loads_minimal_files() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = (dir.path().join("n.jsonl"), dir.path().join("e.jsonl"));
        fs::write(
            &np,
            "{\"id\":\"s1\",\"kind\":\"Student\",\"attrs\":{\"name\":\"A\",\"id\":\"1\",\"url\":\"u\",\"learning_time\":2.5,\"response\":0,\"likes\":1}}\n\
             {\"id\":\"c1\",\"kind\":\"Course\",\"attrs\":{\"name\":\"C\",\"id\":\"9\",\"url\":\"u\",\"num\":1}}\n",
        )
        .unwrap();
        fs::write(&ep, "{\"kind\":\"Learn\",\"head\":\"s1\",\"tail\":\"c1\"}\n").unwrap();
        let (g, report) = load_jsonl(&np, &ep, IngestOptions::default()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert!(report.is_clean());
        assert!(g.is_frozen());
    }

    #[test]
    fn bad_lines_are_reported_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let (np, ep) = (dir.path().join("n.jsonl"), dir.path().join("e.jsonl"));
        fs::write(&np, "{\"id\":\"c1\",\"kind\":\"Course\",\"attrs\":{\"name\":\"C\",\"id\":\"9\",\"url\":\"u\",\"num\":1}}\nnot json\n").unwrap();
        fs::write(
            &ep,
            "{\"kind\":\"Learn\",\"head\":\"ghost\",\"tail\":\"c1\"}\n{\"kind\":\"Friend\",\"head\":\"a\",\"tail\":\"b\"}\n",
        )
        .unwrap();
        let (g, report) = load_jsonl(&np, &ep, IngestOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(report.malformed.len(), 2);
        assert_eq!(report.malformed[0].line, 2);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, ViolationRule::UnknownEndpoint);

        let err = load_jsonl(&np, &ep, IngestOptions { max_malformed: 1 }).unwrap_err();
        assert!(matches!(err, IngestError::TooManyMalformed { count: 2, threshold: 1 }));
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_jsonl(&dir.path().join("a"), &dir.path().join("b"), IngestOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::FileNotFound(_)));
    }

    #[test]
    fn graphml_element_counts() {
        let empty = to_graphml(&HeteroGraph::new());
        assert_eq!(empty.matches("<node ").count(), 0);
        roxmltree::Document::parse(&empty).unwrap();

        let xml = to_graphml(&two_node_graph());
        assert_eq!(xml.matches("<node ").count(), 2);
        assert_eq!(xml.matches("<edge ").count(), 1);
    }

    #[test]
    fn graphml_escapes_and_reimports() {
        let mut g = HeteroGraph::new();
        let mut s = student("student:<&>");
        if let NodeAttrs::Student(a) = &mut s.attrs {
            a.name = "O'Neil \"Jr\" & co".into();
            a.learning_time = 12.25;
            a.likes = 3;
        }
        g.add_node(s.clone()).unwrap();
        g.freeze();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.graphml");
        let bytes = export_graphml(&g, &path).unwrap();
        assert_eq!(bytes, fs::metadata(&path).unwrap().len());
        let (back, report) = read_graphml(&path, IngestOptions::default()).unwrap();
        assert!(report.is_clean(), "{report:?}");
        assert_eq!(back.node("student:<&>"), Some(&s));
    }
}
