//! Structural validation. Violations are data, not failures: every check
//! returns a machine-readable code plus the offending entity path.

use super::{CodeFacts, TypeKind, TypeRef};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationCode {
    DuplicateClass,
    UnknownCluster,
    DuplicateField,
    DuplicateMethod,
    BadConstructorName,
    DanglingExtends,
    DanglingTypeRef,
    MissingClassName,
    UnexpectedClassName,
    DanglingCall,
    DanglingAccess,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
}

impl Violation {
    fn new(code: ViolationCode, path: impl Into<String>) -> Self {
        Violation { code, path: path.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.code, self.path)
    }
}

/// Empty iff all type invariants hold.
pub fn validate(facts: &CodeFacts) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_classes = BTreeSet::new();
    for class in &facts.classes {
        if !seen_classes.insert(class.name.as_str()) {
            out.push(Violation::new(ViolationCode::DuplicateClass, &class.name));
        }
        if !facts.clusters.contains(&class.cluster) {
            out.push(Violation::new(
                ViolationCode::UnknownCluster,
                format!("{}@{}", class.name, class.cluster),
            ));
        }
        if let Some(parent) = &class.extends {
            if facts.class(parent).is_none() {
                out.push(Violation::new(
                    ViolationCode::DanglingExtends,
                    format!("{} extends {parent}", class.name),
                ));
            }
        }
        let mut seen_fields = BTreeSet::new();
        for field in &class.fields {
            if !seen_fields.insert(field.name.as_str()) {
                out.push(Violation::new(
                    ViolationCode::DuplicateField,
                    format!("{}.{}", class.name, field.name),
                ));
            }
            check_type(facts, &field.ty, &format!("{}.{}", class.name, field.name), &mut out);
        }
        let mut seen_methods = BTreeSet::new();
        for method in &class.methods {
            if !seen_methods.insert((method.name.as_str(), method.arity())) {
                out.push(Violation::new(
                    ViolationCode::DuplicateMethod,
                    format!("{}.{}/{}", class.name, method.name, method.arity()),
                ));
            }
            if method.is_constructor && method.name != class.name {
                out.push(Violation::new(
                    ViolationCode::BadConstructorName,
                    format!("{}.{}", class.name, method.name),
                ));
            }
            let at = format!("{}.{}/{}", class.name, method.name, method.arity());
            for ty in method.params.iter().chain(method.return_type.iter()) {
                check_type(facts, ty, &at, &mut out);
            }
        }
    }
    for call in &facts.calls {
        for mref in [&call.from, &call.to] {
            if facts.resolve_method(mref).is_none() {
                out.push(Violation::new(ViolationCode::DanglingCall, mref.to_string()));
            }
        }
    }
    for access in &facts.accesses {
        if facts.resolve_method(&access.from).is_none() {
            out.push(Violation::new(ViolationCode::DanglingAccess, access.from.to_string()));
        }
        if facts.resolve_field(&access.field).is_none() {
            out.push(Violation::new(ViolationCode::DanglingAccess, access.field.to_string()));
        }
    }
    out
}

fn check_type(facts: &CodeFacts, ty: &TypeRef, at: &str, out: &mut Vec<Violation>) {
    match ty.kind {
        TypeKind::Declared => match &ty.class_name {
            None => out.push(Violation::new(ViolationCode::MissingClassName, at)),
            Some(name) if facts.class(name).is_none() => {
                out.push(Violation::new(ViolationCode::DanglingTypeRef, format!("{at}: {name}")));
            }
            Some(_) => {}
        },
        // Library and Resource types are opaque leaves and never resolve.
        _ => {
            if ty.class_name.is_some() {
                out.push(Violation::new(ViolationCode::UnexpectedClassName, at));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::{ClassDecl, MethodDecl};

    fn class(name: &str, cluster: &str) -> ClassDecl {
        ClassDecl {
            name: name.into(),
            cluster: cluster.into(),
            is_singleton: false,
            has_private_constructor: false,
            extends: None,
            fields: vec![],
            methods: vec![],
        }
    }

    #[test]
    fn duplicate_class_reported() {
        let facts = CodeFacts {
            clusters: ["c1".to_string()].into(),
            classes: vec![class("CatalogMgr", "c1"), class("CatalogMgr", "c1")],
            calls: vec![],
            accesses: vec![],
        };
        let violations = validate(&facts);
        assert!(violations
            .iter()
            .any(|v| v.code == ViolationCode::DuplicateClass && v.path == "CatalogMgr"));
    }

    #[test]
    fn unknown_cluster_reported() {
        let facts = CodeFacts {
            clusters: ["c1".to_string()].into(),
            classes: vec![class("A", "nowhere")],
            calls: vec![],
            accesses: vec![],
        };
        let violations = validate(&facts);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].code, ViolationCode::UnknownCluster);
    }

    #[test]
    fn constructor_must_match_class_name() {
        let mut c = class("A", "c1");
        c.methods.push(MethodDecl {
            name: "build".into(),
            params: vec![],
            return_type: None,
            is_constructor: true,
            constructor_model: None,
            effects: vec![],
        });
        let facts = CodeFacts {
            clusters: ["c1".to_string()].into(),
            classes: vec![c],
            calls: vec![],
            accesses: vec![],
        };
        assert!(validate(&facts).iter().any(|v| v.code == ViolationCode::BadConstructorName));
    }
}
