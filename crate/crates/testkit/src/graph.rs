//! A small random property graph with its own schema, for exercising the
//! query engine away from snapshot data.

use breakcheck_query::{Adapter, AdapterError, Arguments, Schema, Value, VertexIter};
use rand::seq::SliceRandom;
use rand::Rng;

pub const GRAPH_SCHEMA: &str = "
root Root

type Root
  edge node: [Node]

type Node
  property id: Int
  property name: String
  property label: String?
  property weight: Int
  property words: [String]
  edge child: [Node]
  edge parent: Node?
  edge peer: [Node]

type Special : Node
  property level: Int
";

pub fn graph_schema() -> Schema {
    Schema::parse(GRAPH_SCHEMA).expect("graph schema parses")
}

/// Short names so that equality and ordering filters hit often.
pub const NAMES: [&str; 6] = ["a", "ab", "b", "ba", "c", "abc"];
pub const WORDS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub special: bool,
    pub name: String,
    pub label: Option<String>,
    pub weight: i64,
    pub level: i64,
    pub words: Vec<String>,
    pub child: Vec<usize>,
    pub parent: Option<usize>,
    pub peer: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphVertex {
    Root,
    Node(usize),
}

#[derive(Debug, Clone)]
pub struct GraphAdapter {
    pub nodes: Vec<Node>,
}

impl GraphAdapter {
    /// A graph with `n` nodes and random edges.
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> GraphAdapter {
        let mut nodes: Vec<Node> = (0..n)
            .map(|_| Node {
                special: rng.gen_bool(0.3),
                name: NAMES.choose(rng).unwrap().to_string(),
                label: rng.gen_bool(0.5).then(|| NAMES.choose(rng).unwrap().to_string()),
                weight: rng.gen_range(0..8),
                level: rng.gen_range(0..4),
                words: WORDS
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|w| w.to_string())
                    .collect(),
                child: Vec::new(),
                parent: None,
                peer: Vec::new(),
            })
            .collect();
        for (i, node) in nodes.iter_mut().enumerate() {
            let children = rng.gen_range(0..4usize);
            node.child = (0..children).map(|_| rng.gen_range(0..n)).collect();
            node.parent = (i > 0 && rng.gen_bool(0.6)).then(|| rng.gen_range(0..i));
            let peers = rng.gen_range(0..3usize);
            node.peer = (0..peers).map(|_| rng.gen_range(0..n)).collect();
        }
        GraphAdapter { nodes }
    }

    fn node(&self, v: &GraphVertex) -> Result<&Node, AdapterError> {
        match v {
            GraphVertex::Node(i) => Ok(&self.nodes[*i]),
            GraphVertex::Root => Err(AdapterError::new("root has no properties")),
        }
    }
}

impl Adapter for GraphAdapter {
    type Vertex = GraphVertex;

    fn resolve_starting_vertices(
        &self,
        root: &str,
        _: &Arguments,
    ) -> Result<VertexIter<'_, GraphVertex>, AdapterError> {
        match root {
            "Root" => Ok(Box::new(std::iter::once(GraphVertex::Root))),
            other => Err(AdapterError::new(format!("unknown root {other}"))),
        }
    }

    fn resolve_property(&self, v: &GraphVertex, _: &str, property: &str) -> Result<Value, AdapterError> {
        let node = self.node(v)?;
        let id = match v {
            GraphVertex::Node(i) => *i as i64,
            GraphVertex::Root => unreachable!(),
        };
        Ok(match property {
            "id" => Value::Int(id),
            "name" => Value::text(node.name.as_str()),
            "label" => node.label.clone().into(),
            "weight" => Value::Int(node.weight),
            "words" => Value::text_list(node.words.iter().cloned()),
            "level" if node.special => Value::Int(node.level),
            other => return Err(AdapterError::new(format!("no property {other} on node {id}"))),
        })
    }

    fn resolve_neighbors(
        &self,
        v: &GraphVertex,
        _: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, GraphVertex>, AdapterError> {
        let ids: Vec<usize> = match (v, edge) {
            (GraphVertex::Root, "node") => (0..self.nodes.len()).collect(),
            (GraphVertex::Node(i), "child") => self.nodes[*i].child.clone(),
            (GraphVertex::Node(i), "parent") => self.nodes[*i].parent.into_iter().collect(),
            (GraphVertex::Node(i), "peer") => self.nodes[*i].peer.clone(),
            _ => return Err(AdapterError::new(format!("no edge {edge} on {v:?}"))),
        };
        Ok(Box::new(ids.into_iter().map(GraphVertex::Node)))
    }

    fn resolve_coercion(&self, v: &GraphVertex, _: &str, to: &str) -> Result<bool, AdapterError> {
        Ok(match to {
            "Special" => self.node(v)?.special,
            _ => true,
        })
    }
}
