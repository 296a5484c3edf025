//! Validates a parsed document against a schema and lowers it into a flat,
//! depth-first plan of steps for the interpreter.

use std::collections::BTreeMap;

use crate::ast::{DirectiveKind, FilterOp, Operand, Position, QueryDocument, Selection, SelectionKind};
use crate::error::CheckError;
use crate::schema::Schema;
use crate::value::{Value, ValueKind};

pub(crate) type NodeId = usize;
pub(crate) type TagId = usize;

#[derive(Debug, Clone)]
pub(crate) enum Step {
    Property {
        node: NodeId,
        type_name: String,
        property: String,
        actions: Vec<Action>,
        path: String,
    },
    Edge {
        from: NodeId,
        to: NodeId,
        type_name: String,
        edge: String,
        optional: bool,
        path: String,
    },
    Coerce {
        node: NodeId,
        from: String,
        to: String,
        path: String,
    },
    Fold {
        from: NodeId,
        to: NodeId,
        type_name: String,
        edge: String,
        body: Vec<Step>,
        /// Output names declared anywhere inside the fold body.
        outputs: Vec<String>,
        /// Filters, tags and outputs applied to the folded count.
        count_actions: Vec<Action>,
        path: String,
    },
}

#[derive(Debug, Clone)]
pub(crate) enum Action {
    Filter { op: FilterOp, operand: CheckedOperand },
    Tag(TagId),
    Output(String),
}

#[derive(Debug, Clone)]
pub(crate) enum CheckedOperand {
    None,
    Literal(Value),
    Parameter(String),
    Tag(TagId),
}

/// A query that passed schema validation, ready for execution.
#[derive(Debug, Clone)]
pub struct CheckedQuery {
    document: QueryDocument,
    pub(crate) steps: Vec<Step>,
    pub(crate) node_count: usize,
    pub(crate) tag_count: usize,
    parameters: BTreeMap<String, ValueKind>,
    outputs: BTreeMap<String, ValueKind>,
}

impl CheckedQuery {
    pub fn document(&self) -> &QueryDocument {
        &self.document
    }

    pub fn root_type(&self) -> &str {
        &self.document.root_type
    }

    /// Parameter names with the kinds inferred from their uses.
    pub fn parameters(&self) -> &BTreeMap<String, ValueKind> {
        &self.parameters
    }

    /// Output names with their kinds (lists for outputs under `@fold`).
    pub fn outputs(&self) -> &BTreeMap<String, ValueKind> {
        &self.outputs
    }
}

struct TagInfo {
    id: TagId,
    kind: ValueKind,
    fold_scope: Vec<usize>,
}

struct Checker<'s> {
    schema: &'s Schema,
    node_count: usize,
    fold_count: usize,
    tags: BTreeMap<String, TagInfo>,
    all_tag_names: Vec<String>,
    parameters: BTreeMap<String, ValueKind>,
    outputs: BTreeMap<String, ValueKind>,
}

pub fn check_query(document: &QueryDocument, schema: &Schema) -> Result<CheckedQuery, CheckError> {
    if !schema.has_type(&document.root_type) || !schema.is_root(&document.root_type) {
        return Err(CheckError::UnknownType {
            name: document.root_type.clone(),
            position: document.root_position,
        });
    }
    let mut checker = Checker {
        schema,
        node_count: 1,
        fold_count: 0,
        tags: BTreeMap::new(),
        all_tag_names: Vec::new(),
        parameters: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    collect_tag_names(&document.selections, &mut checker.all_tag_names);
    let mut steps = Vec::new();
    let mut scope = Vec::new();
    checker.block(
        &document.selections,
        0,
        &document.root_type,
        &document.root_type,
        &mut scope,
        &mut steps,
    )?;
    Ok(CheckedQuery {
        document: document.clone(),
        steps,
        node_count: checker.node_count,
        tag_count: checker.tags.len(),
        parameters: checker.parameters,
        outputs: checker.outputs,
    })
}

fn collect_tag_names(selections: &[Selection], out: &mut Vec<String>) {
    for s in selections {
        for d in &s.directives {
            if let DirectiveKind::Tag { name } = &d.kind {
                out.push(name.clone());
            }
        }
        collect_tag_names(&s.children, out);
    }
}

impl<'s> Checker<'s> {
    fn block(
        &mut self,
        selections: &[Selection],
        node: NodeId,
        type_name: &str,
        path: &str,
        scope: &mut Vec<usize>,
        steps: &mut Vec<Step>,
    ) -> Result<(), CheckError> {
        let mut current_type = type_name.to_string();
        let mut current_path = path.to_string();
        for sel in selections {
            match sel.kind {
                SelectionKind::Coercion => {
                    if !self.schema.has_type(&sel.name) {
                        return Err(CheckError::UnknownType {
                            name: sel.name.clone(),
                            position: sel.position,
                        });
                    }
                    if !self.schema.is_subtype(&sel.name, &current_type) {
                        return Err(CheckError::TypeMismatch {
                            message: format!("`{}` is not a subtype of `{current_type}`", sel.name),
                            position: sel.position,
                        });
                    }
                    let coerced_path = format!("{current_path}[{}]", sel.name);
                    steps.push(Step::Coerce {
                        node,
                        from: current_type.clone(),
                        to: sel.name.clone(),
                        path: coerced_path.clone(),
                    });
                    // Siblings after a coercion see the narrowed type too.
                    current_type = sel.name.clone();
                    current_path = coerced_path;
                    self.block(&sel.children, node, &current_type, &current_path, scope, steps)?;
                }
                SelectionKind::Property => {
                    let Some(def) = self.schema.property(&current_type, &sel.name) else {
                        return Err(self.unknown_field(&current_type, sel, "property"));
                    };
                    let kind = def.kind.clone();
                    let mut actions = Vec::new();
                    for d in &sel.directives {
                        actions.push(self.action(&d.kind, &kind, d.position, scope)?);
                    }
                    steps.push(Step::Property {
                        node,
                        type_name: current_type.clone(),
                        property: sel.name.clone(),
                        actions,
                        path: format!("{current_path}.{}", sel.name),
                    });
                }
                SelectionKind::Edge => {
                    let Some(edge) = self.schema.edge(&current_type, &sel.name) else {
                        return Err(self.unknown_field(&current_type, sel, "edge"));
                    };
                    let target = edge.target.clone();
                    let to = self.node_count;
                    self.node_count += 1;
                    let edge_path = format!("{current_path}.{}", sel.name);
                    if sel.is_folded() {
                        self.fold_count += 1;
                        scope.push(self.fold_count);
                        let outputs_before: Vec<String> = self.outputs.keys().cloned().collect();
                        let mut body = Vec::new();
                        self.block(&sel.children, to, &target, &edge_path, scope, &mut body)?;
                        scope.pop();
                        let inner: Vec<String> = self
                            .outputs
                            .keys()
                            .filter(|k| !outputs_before.contains(k))
                            .cloned()
                            .collect();
                        for name in &inner {
                            let k = self.outputs.remove(name).expect("inner output");
                            self.outputs.insert(name.clone(), ValueKind::List(Box::new(k)));
                        }
                        let mut count_actions = Vec::new();
                        for d in &sel.directives {
                            if matches!(d.kind, DirectiveKind::Fold | DirectiveKind::Transform(_)) {
                                continue;
                            }
                            count_actions.push(self.action(&d.kind, &ValueKind::Int, d.position, scope)?);
                        }
                        steps.push(Step::Fold {
                            from: node,
                            to,
                            type_name: current_type.clone(),
                            edge: sel.name.clone(),
                            body,
                            outputs: inner,
                            count_actions,
                            path: edge_path,
                        });
                    } else {
                        steps.push(Step::Edge {
                            from: node,
                            to,
                            type_name: current_type.clone(),
                            edge: sel.name.clone(),
                            optional: sel.is_optional(),
                            path: edge_path.clone(),
                        });
                        self.block(&sel.children, to, &target, &edge_path, scope, steps)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn unknown_field(&self, type_name: &str, sel: &Selection, used_as: &'static str) -> CheckError {
        let declared_as = if self.schema.property(type_name, &sel.name).is_some() {
            Some("property")
        } else if self.schema.edge(type_name, &sel.name).is_some() {
            Some("edge")
        } else {
            None
        };
        match declared_as {
            Some(declared_as) => CheckError::FieldKindMismatch {
                name: sel.name.clone(),
                used_as,
                declared_as,
                position: sel.position,
            },
            None => CheckError::UnknownField {
                type_name: type_name.to_string(),
                field: sel.name.clone(),
                position: sel.position,
            },
        }
    }

    fn action(
        &mut self,
        directive: &DirectiveKind,
        kind: &ValueKind,
        position: Position,
        scope: &[usize],
    ) -> Result<Action, CheckError> {
        match directive {
            DirectiveKind::Filter { op, operand } => {
                let expected =
                    operand_kind(*op, kind).map_err(|message| CheckError::TypeMismatch { message, position })?;
                let checked = match (operand, expected) {
                    (None, _) => CheckedOperand::None,
                    (Some(_), None) => unreachable!("parser rejects operands for unary filters"),
                    (Some(Operand::Literal(v)), Some(expected)) => {
                        let found = v.kind().unwrap_or(ValueKind::Any);
                        if !found.compatible_with(&expected) {
                            return Err(CheckError::TypeMismatch {
                                message: format!(
                                    "`{}` needs a {expected} operand, literal `{v}` is {found}",
                                    op.symbol()
                                ),
                                position,
                            });
                        }
                        CheckedOperand::Literal(v.clone())
                    }
                    (Some(Operand::Parameter(name)), Some(expected)) => {
                        match self.parameters.get(name) {
                            Some(prev) if !prev.compatible_with(&expected) => {
                                return Err(CheckError::TypeMismatch {
                                    message: format!("parameter `${name}` used as both {prev} and {expected}"),
                                    position,
                                });
                            }
                            Some(_) => {}
                            None => {
                                self.parameters.insert(name.clone(), expected);
                            }
                        }
                        CheckedOperand::Parameter(name.clone())
                    }
                    (Some(Operand::Tag(name)), Some(expected)) => {
                        let Some(tag) = self.tags.get(name) else {
                            return Err(CheckError::TagUsedBeforeDefinition {
                                name: name.clone(),
                                position,
                            });
                        };
                        if !scope.starts_with(&tag.fold_scope) {
                            return Err(CheckError::TagOutOfScope {
                                name: name.clone(),
                                position,
                            });
                        }
                        if !tag.kind.compatible_with(&expected) {
                            return Err(CheckError::TypeMismatch {
                                message: format!(
                                    "`{}` needs a {expected} operand, tag `%{name}` is {}",
                                    op.symbol(),
                                    tag.kind
                                ),
                                position,
                            });
                        }
                        CheckedOperand::Tag(tag.id)
                    }
                };
                Ok(Action::Filter {
                    op: *op,
                    operand: checked,
                })
            }
            DirectiveKind::Tag { name } => {
                if self.tags.contains_key(name) || self.all_tag_names.iter().filter(|n| *n == name).count() > 1 {
                    return Err(CheckError::DuplicateTagName {
                        name: name.clone(),
                        position,
                    });
                }
                let id = self.tags.len();
                self.tags.insert(
                    name.clone(),
                    TagInfo {
                        id,
                        kind: kind.clone(),
                        fold_scope: scope.to_vec(),
                    },
                );
                Ok(Action::Tag(id))
            }
            DirectiveKind::Output { name } => {
                self.outputs.insert(name.clone(), kind.clone());
                Ok(Action::Output(name.clone()))
            }
            DirectiveKind::Fold | DirectiveKind::Transform(_) | DirectiveKind::Optional => {
                unreachable!("structural directives are handled by the caller")
            }
        }
    }
}

/// Kind of operand a filter operator needs against a property of `kind`,
/// or `None` for unary operators.
fn operand_kind(op: FilterOp, kind: &ValueKind) -> Result<Option<ValueKind>, String> {
    match op {
        FilterOp::IsNull | FilterOp::IsNotNull => Ok(None),
        FilterOp::Equals | FilterOp::NotEquals => Ok(Some(kind.clone())),
        FilterOp::GreaterThan | FilterOp::GreaterOrEqual | FilterOp::LessThan | FilterOp::LessOrEqual => match kind {
            ValueKind::Int | ValueKind::Text => Ok(Some(kind.clone())),
            other => Err(format!("`{}` cannot order values of kind {other}", op.symbol())),
        },
        FilterOp::OneOf => Ok(Some(ValueKind::List(Box::new(kind.clone())))),
        FilterOp::Contains | FilterOp::NotContains => match kind.element() {
            Some(inner) => Ok(Some(inner.clone())),
            None => Err(format!("`{}` needs a list property, found {kind}", op.symbol())),
        },
        FilterOp::Regex => match kind {
            ValueKind::Text => Ok(Some(ValueKind::Text)),
            other => Err(format!("`regex` needs a String property, found {other}")),
        },
    }
}
