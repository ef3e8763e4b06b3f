//! Typed morphism terms over the signature, with type inference and a
//! printer that round-trips through the parser.

use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::basis::BasisElem;
use crate::object::ObjExpr;

/// Generator kinds of the signature. Each carries object parameters:
/// `M` takes two, `MI` none, the rest one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenKind {
    /// digging, `!A -> !!A`
    Delta,
    /// dereliction, `!A -> A`
    Eps,
    /// contraction, `!A -> !A ⊗ !A`
    Copy,
    /// weakening, `!A -> I`
    Weak,
    /// lax monoidal structure, `!A ⊗ !B -> !(A ⊗ B)`
    M,
    /// lax monoidal unit, `I -> !I`
    MI,
    /// cocontraction, `!A ⊗ !A -> !A`
    Nabla,
    /// coweakening, `I -> !A`
    U,
    /// codereliction candidate, `A -> !A`
    Eta,
    /// deriving transformation, `!A ⊗ A -> !A`
    D,
    /// antipode, `!A -> !A`
    S,
}

impl GenKind {
    pub fn name(self) -> &'static str {
        match self {
            GenKind::Delta => "delta",
            GenKind::Eps => "eps",
            GenKind::Copy => "copy",
            GenKind::Weak => "weak",
            GenKind::M => "m",
            GenKind::MI => "mI",
            GenKind::Nabla => "nabla",
            GenKind::U => "u",
            GenKind::Eta => "eta",
            GenKind::D => "d",
            GenKind::S => "S",
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GenKind::MI => 0,
            GenKind::M => 2,
            _ => 1,
        }
    }
}

/// An explicit linear map given by a finite entry table.
#[derive(Clone, Debug, PartialEq)]
pub struct LinMap {
    pub name: String,
    pub dom: ObjExpr,
    pub cod: ObjExpr,
    /// `(input basis element, output basis element, coefficient)`
    pub entries: Vec<(BasisElem, BasisElem, BigRational)>,
}

impl LinMap {
    pub fn zero(name: impl Into<String>, dom: ObjExpr, cod: ObjExpr) -> Self {
        LinMap { name: name.into(), dom, cod, entries: Vec::new() }
    }
}

/// Morphism terms. Composition is diagrammatic: in `Comp([f, g])` the
/// morphism `f` happens first.
#[derive(Clone, Debug, PartialEq)]
pub enum MorTerm {
    Id(ObjExpr),
    Gen(GenKind, Vec<ObjExpr>),
    Sym(ObjExpr, ObjExpr),
    Comp(Vec<MorTerm>),
    Ten(Vec<MorTerm>),
    BangBox(Box<MorTerm>),
    Sum(Vec<MorTerm>),
    Neg(Box<MorTerm>),
    Zero(ObjExpr, ObjExpr),
    Lin(LinMap),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("composition mismatch: `{left}` has codomain {cod} but `{right}` has domain {dom}")]
    CompMismatch { left: String, right: String, cod: ObjExpr, dom: ObjExpr },
    #[error("summands have different types: {first} vs {second}")]
    SumMismatch { first: String, second: String },
    #[error("empty {0} is not a term")]
    EmptyList(&'static str),
    #[error("generator {0} expects {1} object parameter(s), got {2}")]
    BadParams(&'static str, usize, usize),
}

impl MorTerm {
    pub fn gen(kind: GenKind, params: Vec<ObjExpr>) -> MorTerm {
        MorTerm::Gen(kind, params)
    }

    /// Diagrammatic composition, flattening nested `Comp`s.
    pub fn comp(parts: Vec<MorTerm>) -> MorTerm {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                MorTerm::Comp(ps) => flat.extend(ps),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            MorTerm::Comp(flat)
        }
    }

    pub fn ten(parts: Vec<MorTerm>) -> MorTerm {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                MorTerm::Ten(ps) => flat.extend(ps),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            MorTerm::Ten(flat)
        }
    }

    pub fn bang(inner: MorTerm) -> MorTerm {
        MorTerm::BangBox(Box::new(inner))
    }

    pub fn neg(inner: MorTerm) -> MorTerm {
        MorTerm::Neg(Box::new(inner))
    }

    /// Whether the term is free of `Sum`, `Neg` and `Zero` nodes (the
    /// fragment representable as a port graph).
    pub fn is_sum_free(&self) -> bool {
        match self {
            MorTerm::Sum(_) | MorTerm::Neg(_) | MorTerm::Zero(..) => false,
            MorTerm::Comp(ps) | MorTerm::Ten(ps) => ps.iter().all(|p| p.is_sum_free()),
            MorTerm::BangBox(inner) => inner.is_sum_free(),
            _ => true,
        }
    }

    /// Inferred `(dom, cod)` pair, both normalized. Deterministic and
    /// idempotent; fails only on genuine mismatches.
    pub fn infer_type(&self) -> Result<(ObjExpr, ObjExpr), TypeError> {
        match self {
            MorTerm::Id(a) => Ok((a.clone(), a.clone())),
            MorTerm::Gen(kind, params) => {
                if params.len() != kind.param_count() {
                    return Err(TypeError::BadParams(
                        kind.name(),
                        kind.param_count(),
                        params.len(),
                    ));
                }
                Ok(gen_type(*kind, params))
            }
            MorTerm::Sym(a, b) => Ok((a.then(b), b.then(a))),
            MorTerm::Comp(parts) => {
                if parts.is_empty() {
                    return Err(TypeError::EmptyList("composition"));
                }
                let mut iter = parts.iter();
                let first = iter.next().unwrap();
                let (dom, mut cod) = first.infer_type()?;
                let mut prev = first;
                for p in iter {
                    let (d, c) = p.infer_type()?;
                    if d != cod {
                        return Err(TypeError::CompMismatch {
                            left: prev.to_string(),
                            right: p.to_string(),
                            cod,
                            dom: d,
                        });
                    }
                    cod = c;
                    prev = p;
                }
                Ok((dom, cod))
            }
            MorTerm::Ten(parts) => {
                if parts.is_empty() {
                    return Err(TypeError::EmptyList("tensor"));
                }
                let mut doms = Vec::new();
                let mut cods = Vec::new();
                for p in parts {
                    let (d, c) = p.infer_type()?;
                    doms.push(d);
                    cods.push(c);
                }
                Ok((ObjExpr::tensor(doms), ObjExpr::tensor(cods)))
            }
            MorTerm::BangBox(inner) => {
                let (d, c) = inner.infer_type()?;
                Ok((ObjExpr::bang(d), ObjExpr::bang(c)))
            }
            MorTerm::Sum(parts) => {
                if parts.is_empty() {
                    return Err(TypeError::EmptyList("sum"));
                }
                let ty = parts[0].infer_type()?;
                for p in &parts[1..] {
                    if p.infer_type()? != ty {
                        return Err(TypeError::SumMismatch {
                            first: parts[0].to_string(),
                            second: p.to_string(),
                        });
                    }
                }
                Ok(ty)
            }
            MorTerm::Neg(inner) => inner.infer_type(),
            MorTerm::Zero(a, b) => Ok((a.clone(), b.clone())),
            MorTerm::Lin(l) => Ok((l.dom.clone(), l.cod.clone())),
        }
    }
}

fn gen_type(kind: GenKind, params: &[ObjExpr]) -> (ObjExpr, ObjExpr) {
    let p = |i: usize| params[i].clone();
    match kind {
        GenKind::Delta => (ObjExpr::bang(p(0)), ObjExpr::bang(ObjExpr::bang(p(0)))),
        GenKind::Eps => (ObjExpr::bang(p(0)), p(0)),
        GenKind::Copy => {
            let ba = ObjExpr::bang(p(0));
            (ba.clone(), ba.then(&ba))
        }
        GenKind::Weak => (ObjExpr::bang(p(0)), ObjExpr::Unit),
        GenKind::M => {
            let (a, b) = (p(0), p(1));
            (
                ObjExpr::bang(a.clone()).then(&ObjExpr::bang(b.clone())),
                ObjExpr::bang(a.then(&b)),
            )
        }
        GenKind::MI => (ObjExpr::Unit, ObjExpr::bang(ObjExpr::Unit)),
        GenKind::Nabla => {
            let ba = ObjExpr::bang(p(0));
            (ba.then(&ba), ba)
        }
        GenKind::U => (ObjExpr::Unit, ObjExpr::bang(p(0))),
        GenKind::Eta => (p(0), ObjExpr::bang(p(0))),
        GenKind::D => {
            let ba = ObjExpr::bang(p(0));
            (ba.then(&p(0)), ba)
        }
        GenKind::S => {
            let ba = ObjExpr::bang(p(0));
            (ba.clone(), ba)
        }
    }
}

// Printing follows the parser's precedence: `+` loosest, then unary `-`,
// then `;`, then `*`, atoms tightest.
fn prec(t: &MorTerm) -> u8 {
    match t {
        MorTerm::Sum(_) => 0,
        MorTerm::Neg(_) => 1,
        MorTerm::Comp(_) => 2,
        MorTerm::Ten(_) => 3,
        MorTerm::Zero(..) => 0,
        _ => 4,
    }
}

fn fmt_at(t: &MorTerm, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(t);
    let parens = p < min;
    if parens {
        write!(f, "(")?;
    }
    match t {
        MorTerm::Id(a) => write!(f, "id{{{a}}}")?,
        MorTerm::Gen(kind, params) => {
            write!(f, "{}", kind.name())?;
            if !params.is_empty() {
                write!(f, "{{")?;
                for (i, x) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "}}")?;
            }
        }
        MorTerm::Sym(a, b) => write!(f, "sigma{{{a},{b}}}")?,
        MorTerm::Comp(parts) => {
            for (i, x) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " ; ")?;
                }
                fmt_at(x, 3, f)?;
            }
        }
        MorTerm::Ten(parts) => {
            for (i, x) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " * ")?;
                }
                fmt_at(x, 4, f)?;
            }
        }
        MorTerm::BangBox(inner) => write!(f, "bang({inner})")?,
        MorTerm::Sum(parts) => {
            for (i, x) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                fmt_at(x, 1, f)?;
            }
        }
        MorTerm::Neg(inner) => {
            write!(f, "-")?;
            fmt_at(inner, 2, f)?;
        }
        MorTerm::Zero(a, b) => write!(f, "0 : {a} -> {b}")?,
        MorTerm::Lin(l) => write!(f, "lin {}", l.name)?,
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for MorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, f)
    }
}

/// `pretty_print` per the module contract: text that re-parses to an equal
/// term.
pub fn pretty_print(t: &MorTerm) -> String {
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj_a() -> ObjExpr {
        ObjExpr::base("A")
    }

    #[test]
    fn eta_types() {
        let t = MorTerm::gen(GenKind::Eta, vec![obj_a()]);
        assert_eq!(t.infer_type().unwrap(), (obj_a(), ObjExpr::bang(obj_a())));
    }

    #[test]
    fn copy_types() {
        let t = MorTerm::gen(GenKind::Copy, vec![obj_a()]);
        let ba = ObjExpr::bang(obj_a());
        assert_eq!(t.infer_type().unwrap(), (ba.clone(), ba.then(&ba)));
    }

    #[test]
    fn eps_after_eps_is_type_error() {
        let t = MorTerm::comp(vec![
            MorTerm::gen(GenKind::Eps, vec![obj_a()]),
            MorTerm::gen(GenKind::Eps, vec![obj_a()]),
        ]);
        assert!(matches!(t.infer_type(), Err(TypeError::CompMismatch { .. })));
    }

    #[test]
    fn inference_idempotent() {
        let t = MorTerm::comp(vec![
            MorTerm::gen(GenKind::Eta, vec![obj_a()]),
            MorTerm::gen(GenKind::Eps, vec![obj_a()]),
        ]);
        assert_eq!(t.infer_type().unwrap(), t.infer_type().unwrap());
    }

    #[test]
    fn monoidal_rule_left_side_types() {
        // (id{!A} * eta{B}) ; m{A,B} : !A ⊗ B -> !(A ⊗ B)
        let a = obj_a();
        let b = ObjExpr::base("B");
        let t = MorTerm::comp(vec![
            MorTerm::ten(vec![
                MorTerm::Id(ObjExpr::bang(a.clone())),
                MorTerm::gen(GenKind::Eta, vec![b.clone()]),
            ]),
            MorTerm::gen(GenKind::M, vec![a.clone(), b.clone()]),
        ]);
        let (dom, cod) = t.infer_type().unwrap();
        assert_eq!(dom, ObjExpr::bang(a.clone()).then(&b));
        assert_eq!(cod, ObjExpr::bang(a.then(&b)));
    }

    #[test]
    fn sum_type_mismatch() {
        let t = MorTerm::Sum(vec![
            MorTerm::gen(GenKind::Eta, vec![obj_a()]),
            MorTerm::gen(GenKind::Eps, vec![obj_a()]),
        ]);
        assert!(matches!(t.infer_type(), Err(TypeError::SumMismatch { .. })));
    }
}
