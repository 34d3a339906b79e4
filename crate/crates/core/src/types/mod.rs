//! Verifier types, annotation parsing, and the inference/checking passes
//! that turn a loosely annotated program into a fully annotated one.

mod env;
mod walk;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Constant, Expr, ExprKind, Location};

pub use env::{
    fits, is_int_literal, literal_value, AttrInfo, Binding, Builtin, Callee, ClassInfo, Ctx,
    FunctionInfo, ModuleScope, TypeEnvironment,
};
pub use walk::{check_types, infer_and_annotate, type_environment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct IntType {
    pub width: u32,
    pub signed: bool,
}

impl IntType {
    pub const fn signed(width: u32) -> Self {
        IntType {
            width,
            signed: true,
        }
    }

    pub const fn unsigned(width: u32) -> Self {
        IntType {
            width,
            signed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FunctionSig {
    pub params: Vec<VerifierType>,
    pub ret: Box<VerifierType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum VerifierType {
    Bool,
    Int(IntType),
    /// IEEE-754 binary64.
    Float,
    /// Fixed-length list. The length is unknown only for list-typed parameters,
    /// which always alias a caller-owned list.
    List {
        elem: Box<VerifierType>,
        len: Option<usize>,
    },
    /// Instance of a class, by qualified name.
    Class(String),
    Function(FunctionSig),
    None,
}

pub const SUPPORTED_INT_WIDTHS: [u32; 4] = [32, 64, 128, 256];

impl VerifierType {
    pub fn is_int(&self) -> bool {
        matches!(self, VerifierType::Int(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, VerifierType::Int(_) | VerifierType::Float)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            VerifierType::Bool | VerifierType::Int(_) | VerifierType::Float
        )
    }

    pub fn int_type(&self) -> Option<IntType> {
        match self {
            VerifierType::Int(t) => Some(*t),
            _ => None,
        }
    }

    pub fn list(elem: VerifierType, len: Option<usize>) -> Self {
        VerifierType::List {
            elem: Box::new(elem),
            len,
        }
    }

    /// Bit width used for counterexample rendering.
    pub fn bit_width(&self) -> Option<u32> {
        match self {
            VerifierType::Bool => Some(1),
            VerifierType::Int(t) => Some(t.width),
            VerifierType::Float => Some(64),
            _ => None,
        }
    }
}

impl fmt::Display for VerifierType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifierType::Bool => f.write_str("bool"),
            VerifierType::Int(t) if t.signed => write!(f, "int{}", t.width),
            VerifierType::Int(t) => write!(f, "uint{}", t.width),
            VerifierType::Float => f.write_str("float"),
            VerifierType::List { elem, len: Some(n) } => write!(f, "list[{elem}; {n}]"),
            VerifierType::List { elem, len: None } => write!(f, "list[{elem}]"),
            VerifierType::Class(c) => f.write_str(short_name(c)),
            VerifierType::Function(sig) => {
                let params: Vec<_> = sig.params.iter().map(|p| p.to_string()).collect();
                write!(f, "({}) -> {}", params.join(", "), sig.ret)
            }
            VerifierType::None => f.write_str("None"),
        }
    }
}

/// Last component of a `module@Class` style qualified name.
pub fn short_name(qualified: &str) -> &str {
    qualified.rsplit('@').next().unwrap_or(qualified)
}

/// Options that change how bare `int` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeOptions {
    pub int_width: u32,
}

impl Default for TypeOptions {
    fn default() -> Self {
        TypeOptions { int_width: 32 }
    }
}

impl TypeOptions {
    pub fn default_int(&self) -> IntType {
        IntType::signed(self.int_width)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("type conflict for `{name}`: {first} vs {second} at {loc}")]
    TypeConflict {
        name: String,
        first: String,
        second: String,
        loc: Location,
    },
    #[error("cannot infer a type at {loc}: {reason}")]
    UntypeableExpression { reason: String, loc: Location },
    #[error("unknown name `{name}` at {loc}")]
    UnknownName { name: String, loc: Location },
    #[error("unsupported annotation `{text}` at {loc}")]
    BadAnnotation { text: String, loc: Location },
}

impl TypeError {
    pub fn location(&self) -> Location {
        match self {
            TypeError::TypeConflict { loc, .. }
            | TypeError::UntypeableExpression { loc, .. }
            | TypeError::UnknownName { loc, .. }
            | TypeError::BadAnnotation { loc, .. } => *loc,
        }
    }

    pub(crate) fn untypeable(reason: impl Into<String>, loc: Location) -> Self {
        TypeError::UntypeableExpression {
            reason: reason.into(),
            loc,
        }
    }
}

/// A located type-consistency finding from [`check_types`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub module: String,
    pub loc: Location,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.module, self.loc, self.message)
    }
}

/// Name of the built-in scalar a type annotation denotes, if any.
pub fn scalar_from_name(name: &str, opts: &TypeOptions) -> Option<VerifierType> {
    Some(match name {
        "int" => VerifierType::Int(opts.default_int()),
        "float" => VerifierType::Float,
        "bool" => VerifierType::Bool,
        "uint64" => VerifierType::Int(IntType::unsigned(64)),
        "uint128" => VerifierType::Int(IntType::unsigned(128)),
        "uint256" => VerifierType::Int(IntType::unsigned(256)),
        _ => return None,
    })
}

/// Annotation text for a type, as it would be written in source.
pub fn annotation_text(ty: &VerifierType, opts: &TypeOptions) -> String {
    match ty {
        VerifierType::Int(t) if t.signed && t.width == opts.int_width => "int".into(),
        VerifierType::Int(t) if t.signed => format!("int{}", t.width),
        VerifierType::Int(t) => format!("uint{}", t.width),
        VerifierType::List { elem, .. } => format!("list[{}]", annotation_text(elem, opts)),
        other => other.to_string(),
    }
}

/// Builds an annotation expression for `ty` located at `loc`.
///
/// `class_ref` maps a qualified class name to the dotted path under which the
/// class is visible in the module being annotated.
pub fn annotation_expr(
    ty: &VerifierType,
    opts: &TypeOptions,
    loc: Location,
    class_ref: &dyn Fn(&str) -> Vec<String>,
) -> Expr {
    match ty {
        VerifierType::None => Expr::new(ExprKind::Constant(Constant::None), loc),
        VerifierType::List { elem, .. } => Expr::new(
            ExprKind::Subscript {
                value: Box::new(Expr::name("list", loc)),
                index: Box::new(annotation_expr(elem, opts, loc, class_ref)),
            },
            loc,
        ),
        VerifierType::Class(q) => {
            let path = class_ref(q);
            let mut e = Expr::name(&path[0], loc);
            for part in &path[1..] {
                e = Expr::new(
                    ExprKind::Attribute {
                        value: Box::new(e),
                        attr: part.clone(),
                    },
                    loc,
                );
            }
            e
        }
        other => Expr::name(&annotation_text(other, opts), loc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_unsigned_names() {
        let o = TypeOptions::default();
        assert_eq!(
            scalar_from_name("uint64", &o),
            Some(VerifierType::Int(IntType::unsigned(64)))
        );
        assert_eq!(
            scalar_from_name("uint256", &o),
            Some(VerifierType::Int(IntType::unsigned(256)))
        );
        assert_eq!(
            scalar_from_name("int", &o),
            Some(VerifierType::Int(IntType::signed(32)))
        );
        assert_eq!(scalar_from_name("str", &o), None);
    }

    #[test]
    fn annotation_text_round_trips_through_names() {
        let o = TypeOptions { int_width: 64 };
        for name in ["int", "float", "bool", "uint64", "uint128", "uint256"] {
            let ty = scalar_from_name(name, &o).unwrap();
            assert_eq!(annotation_text(&ty, &o), name);
        }
    }
}
