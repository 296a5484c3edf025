//! Adapter wrappers that record or count the calls made through them.

use std::cell::{Cell, RefCell};

use breakcheck_query::{Adapter, AdapterError, Arguments, Value, VertexIter};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Call {
    Start {
        root: String,
    },
    Property {
        vertex: String,
        type_name: String,
        property: String,
    },
    Neighbors {
        vertex: String,
        type_name: String,
        edge: String,
    },
    Coercion {
        vertex: String,
        from: String,
        to: String,
    },
}

/// Records every adapter call in order. Vertices are recorded through a
/// labelling function so large vertices stay readable.
type Labeller<V> = Box<dyn Fn(&V) -> String>;

pub struct TracingAdapter<A: Adapter> {
    inner: A,
    label: Labeller<A::Vertex>,
    calls: RefCell<Vec<Call>>,
}

impl<A: Adapter> TracingAdapter<A> {
    pub fn new(inner: A) -> Self {
        Self::with_labels(inner, |v| format!("{v:?}"))
    }

    pub fn with_labels(inner: A, label: impl Fn(&A::Vertex) -> String + 'static) -> Self {
        TracingAdapter {
            inner,
            label: Box::new(label),
            calls: RefCell::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<Call> {
        self.calls.borrow().clone()
    }

    fn record(&self, call: Call) {
        self.calls.borrow_mut().push(call);
    }
}

impl<A: Adapter> Adapter for TracingAdapter<A> {
    type Vertex = A::Vertex;

    fn resolve_starting_vertices(
        &self,
        root: &str,
        args: &Arguments,
    ) -> Result<VertexIter<'_, A::Vertex>, AdapterError> {
        self.record(Call::Start { root: root.to_string() });
        self.inner.resolve_starting_vertices(root, args)
    }

    fn resolve_property(&self, v: &A::Vertex, type_name: &str, property: &str) -> Result<Value, AdapterError> {
        self.record(Call::Property {
            vertex: (self.label)(v),
            type_name: type_name.to_string(),
            property: property.to_string(),
        });
        self.inner.resolve_property(v, type_name, property)
    }

    fn resolve_neighbors(
        &self,
        v: &A::Vertex,
        type_name: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, A::Vertex>, AdapterError> {
        self.record(Call::Neighbors {
            vertex: (self.label)(v),
            type_name: type_name.to_string(),
            edge: edge.to_string(),
        });
        self.inner.resolve_neighbors(v, type_name, edge)
    }

    fn resolve_coercion(&self, v: &A::Vertex, from: &str, to: &str) -> Result<bool, AdapterError> {
        self.record(Call::Coercion {
            vertex: (self.label)(v),
            from: from.to_string(),
            to: to.to_string(),
        });
        self.inner.resolve_coercion(v, from, to)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub starts: usize,
    pub properties: usize,
    pub neighbors: usize,
    pub coercions: usize,
}

/// Counts calls per adapter method.
pub struct CountingAdapter<A> {
    inner: A,
    starts: Cell<usize>,
    properties: Cell<usize>,
    neighbors: Cell<usize>,
    coercions: Cell<usize>,
}

impl<A: Adapter> CountingAdapter<A> {
    pub fn new(inner: A) -> Self {
        CountingAdapter {
            inner,
            starts: Cell::new(0),
            properties: Cell::new(0),
            neighbors: Cell::new(0),
            coercions: Cell::new(0),
        }
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            starts: self.starts.get(),
            properties: self.properties.get(),
            neighbors: self.neighbors.get(),
            coercions: self.coercions.get(),
        }
    }
}

fn bump(c: &Cell<usize>) {
    c.set(c.get() + 1);
}

impl<A: Adapter> Adapter for CountingAdapter<A> {
    type Vertex = A::Vertex;

    fn resolve_starting_vertices(
        &self,
        root: &str,
        args: &Arguments,
    ) -> Result<VertexIter<'_, A::Vertex>, AdapterError> {
        bump(&self.starts);
        self.inner.resolve_starting_vertices(root, args)
    }

    fn resolve_property(&self, v: &A::Vertex, type_name: &str, property: &str) -> Result<Value, AdapterError> {
        bump(&self.properties);
        self.inner.resolve_property(v, type_name, property)
    }

    fn resolve_neighbors(
        &self,
        v: &A::Vertex,
        type_name: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, A::Vertex>, AdapterError> {
        bump(&self.neighbors);
        self.inner.resolve_neighbors(v, type_name, edge)
    }

    fn resolve_coercion(&self, v: &A::Vertex, from: &str, to: &str) -> Result<bool, AdapterError> {
        bump(&self.coercions);
        self.inner.resolve_coercion(v, from, to)
    }
}
