use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::AdapterError;
use crate::value::Value;

/// Ordered stream of vertices produced by an adapter.
pub type VertexIter<'a, V> = Box<dyn Iterator<Item = V> + 'a>;

/// Named query arguments (`$name` operands).
pub type Arguments = BTreeMap<String, Value>;

/// Data-source contract consumed by the interpreter.
///
/// The `type_name` passed to each resolver is the static type of the query
/// location, which may be a supertype of the vertex's concrete type.
pub trait Adapter {
    type Vertex: Clone + Debug;

    fn resolve_starting_vertices(
        &self,
        root_type: &str,
        arguments: &Arguments,
    ) -> Result<VertexIter<'_, Self::Vertex>, AdapterError>;

    fn resolve_property(&self, vertex: &Self::Vertex, type_name: &str, property: &str) -> Result<Value, AdapterError>;

    fn resolve_neighbors(
        &self,
        vertex: &Self::Vertex,
        type_name: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, Self::Vertex>, AdapterError>;

    fn resolve_coercion(&self, vertex: &Self::Vertex, from_type: &str, to_type: &str) -> Result<bool, AdapterError>;
}

impl<A: Adapter + ?Sized> Adapter for &A {
    type Vertex = A::Vertex;

    fn resolve_starting_vertices(
        &self,
        root_type: &str,
        arguments: &Arguments,
    ) -> Result<VertexIter<'_, Self::Vertex>, AdapterError> {
        (**self).resolve_starting_vertices(root_type, arguments)
    }

    fn resolve_property(&self, vertex: &Self::Vertex, type_name: &str, property: &str) -> Result<Value, AdapterError> {
        (**self).resolve_property(vertex, type_name, property)
    }

    fn resolve_neighbors(
        &self,
        vertex: &Self::Vertex,
        type_name: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, Self::Vertex>, AdapterError> {
        (**self).resolve_neighbors(vertex, type_name, edge)
    }

    fn resolve_coercion(&self, vertex: &Self::Vertex, from_type: &str, to_type: &str) -> Result<bool, AdapterError> {
        (**self).resolve_coercion(vertex, from_type, to_type)
    }
}
