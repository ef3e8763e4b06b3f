//! Object expressions of the signature: base objects, the tensor unit,
//! tensor products, and the exponential `!`.
//!
//! Objects are kept in a strict-monoidal normal form: tensor lists are
//! flattened, unit factors are dropped, and a tensor of fewer than two
//! factors collapses to its contents. Two objects are equal iff their
//! normal forms are structurally equal.

use std::fmt;

use serde::Serialize;

/// A normalized object expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ObjExpr {
    /// A declared base object with a finite basis.
    Base(String),
    /// The tensor unit `I`.
    Unit,
    /// A flattened tensor of at least two non-unit factors.
    Tensor(Vec<ObjExpr>),
    /// The exponential `!A`.
    Bang(Box<ObjExpr>),
}

impl ObjExpr {
    pub fn base(name: impl Into<String>) -> Self {
        ObjExpr::Base(name.into())
    }

    pub fn bang(inner: ObjExpr) -> Self {
        ObjExpr::Bang(Box::new(inner))
    }

    /// Smart constructor: flattens nested tensors, drops units, collapses
    /// singletons. The result is in normal form whenever the inputs are.
    pub fn tensor(factors: Vec<ObjExpr>) -> Self {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                ObjExpr::Unit => {}
                ObjExpr::Tensor(fs) => flat.extend(fs),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ObjExpr::Unit,
            1 => flat.pop().unwrap(),
            _ => ObjExpr::Tensor(flat),
        }
    }

    /// Re-normalizes an arbitrarily bracketed expression.
    pub fn normalize(self) -> Self {
        match self {
            ObjExpr::Base(n) => ObjExpr::Base(n),
            ObjExpr::Unit => ObjExpr::Unit,
            ObjExpr::Tensor(fs) => {
                ObjExpr::tensor(fs.into_iter().map(|f| f.normalize()).collect())
            }
            ObjExpr::Bang(inner) => ObjExpr::bang(inner.normalize()),
        }
    }

    /// The tensor factor list of a normalized object. The unit has no
    /// factors; a non-tensor object is its own single factor.
    pub fn factors(&self) -> &[ObjExpr] {
        match self {
            ObjExpr::Unit => &[],
            ObjExpr::Tensor(fs) => fs,
            other => std::slice::from_ref(other),
        }
    }

    /// Number of tensor factors after normalization.
    pub fn arity(&self) -> usize {
        self.factors().len()
    }

    /// Tensor of two normalized objects.
    pub fn then(&self, other: &ObjExpr) -> ObjExpr {
        ObjExpr::tensor(vec![self.clone(), other.clone()])
    }

    /// All base names mentioned in the expression.
    pub fn base_names(&self, out: &mut Vec<String>) {
        match self {
            ObjExpr::Base(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            ObjExpr::Unit => {}
            ObjExpr::Tensor(fs) => {
                for f in fs {
                    f.base_names(out);
                }
            }
            ObjExpr::Bang(inner) => inner.base_names(out),
        }
    }
}

impl fmt::Display for ObjExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjExpr::Base(n) => write!(f, "{n}"),
            ObjExpr::Unit => write!(f, "I"),
            ObjExpr::Tensor(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    match x {
                        ObjExpr::Tensor(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
            ObjExpr::Bang(inner) => match **inner {
                ObjExpr::Tensor(_) => write!(f, "!({inner})"),
                _ => write!(f, "!{inner}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> ObjExpr {
        ObjExpr::base("A")
    }
    fn b() -> ObjExpr {
        ObjExpr::base("B")
    }

    #[test]
    fn tensor_flattens_and_strips_units() {
        let t = ObjExpr::tensor(vec![
            ObjExpr::tensor(vec![a(), ObjExpr::Unit]),
            ObjExpr::tensor(vec![b(), a()]),
        ]);
        assert_eq!(t, ObjExpr::Tensor(vec![a(), b(), a()]));
    }

    #[test]
    fn unit_only_tensor_is_unit() {
        assert_eq!(ObjExpr::tensor(vec![ObjExpr::Unit, ObjExpr::Unit]), ObjExpr::Unit);
    }

    #[test]
    fn singleton_collapses() {
        assert_eq!(ObjExpr::tensor(vec![a()]), a());
    }

    #[test]
    fn normalization_is_confluent_over_bracketings() {
        // (A*(I*B))*A and A*((B*I)*A) meet in one normal form.
        let l = ObjExpr::Tensor(vec![
            ObjExpr::Tensor(vec![a(), ObjExpr::Tensor(vec![ObjExpr::Unit, b()])]),
            a(),
        ])
        .normalize();
        let r = ObjExpr::Tensor(vec![
            a(),
            ObjExpr::Tensor(vec![ObjExpr::Tensor(vec![b(), ObjExpr::Unit]), a()]),
        ])
        .normalize();
        assert_eq!(l, r);
        assert_eq!(l, ObjExpr::Tensor(vec![a(), b(), a()]));
    }

    #[test]
    fn display_round_shape() {
        let t = ObjExpr::bang(ObjExpr::tensor(vec![a(), b()]));
        assert_eq!(t.to_string(), "!(A * B)");
        assert_eq!(ObjExpr::bang(a()).to_string(), "!A");
    }
}
