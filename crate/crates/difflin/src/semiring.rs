//! Coefficient semirings for the model.
//!
//! Every evaluation runs on exact arbitrary-precision rationals; the
//! semiring descriptor controls which operations exist (negatives) and
//! whether addition is idempotent. The Boolean instance collapses every
//! positive value to 1, which is an exact semiring homomorphism from the
//! nonnegative rationals, so collapsing during evaluation and collapsing
//! at the end agree.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

pub type Coeff = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SemiringId {
    RatExact,
    IntExact,
    Nat,
    Boolean,
}

impl SemiringId {
    pub fn name(self) -> &'static str {
        match self {
            SemiringId::RatExact => "rational",
            SemiringId::IntExact => "integer",
            SemiringId::Nat => "natural",
            SemiringId::Boolean => "boolean",
        }
    }

    pub fn parse(s: &str) -> Option<SemiringId> {
        Some(match s {
            "rational" => SemiringId::RatExact,
            "integer" => SemiringId::IntExact,
            "natural" => SemiringId::Nat,
            "boolean" => SemiringId::Boolean,
            _ => return None,
        })
    }

    pub fn desc(self) -> SemiringDesc {
        match self {
            SemiringId::RatExact => SemiringDesc {
                id: self,
                has_negatives: true,
                idempotent_add: false,
            },
            SemiringId::IntExact => SemiringDesc {
                id: self,
                has_negatives: true,
                idempotent_add: false,
            },
            SemiringId::Nat => SemiringDesc {
                id: self,
                has_negatives: false,
                idempotent_add: false,
            },
            SemiringId::Boolean => SemiringDesc {
                id: self,
                has_negatives: false,
                idempotent_add: true,
            },
        }
    }
}

impl fmt::Display for SemiringId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemiringDesc {
    pub id: SemiringId,
    pub has_negatives: bool,
    pub idempotent_add: bool,
}

impl SemiringDesc {
    pub fn zero(&self) -> Coeff {
        Coeff::zero()
    }

    pub fn one(&self) -> Coeff {
        Coeff::one()
    }

    /// Canonical image of a model coefficient in this semiring. Boolean
    /// collapses any nonzero magnitude to 1.
    pub fn embed(&self, c: Coeff) -> Coeff {
        if self.idempotent_add && !c.is_zero() {
            Coeff::one()
        } else {
            c
        }
    }

    pub fn add(&self, a: Coeff, b: Coeff) -> Coeff {
        self.embed(a + b)
    }

    pub fn mul(&self, a: Coeff, b: Coeff) -> Coeff {
        self.embed(a * b)
    }

    pub fn neg(&self, a: Coeff) -> Option<Coeff> {
        self.has_negatives.then(|| -a)
    }
}

/// Exact display: integers plainly, other rationals as `p/q`.
pub fn coeff_string(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Whether a value is representable without division (used in reports for
/// the integer/natural instances).
pub fn is_integral(c: &Coeff) -> bool {
    c.is_integer()
}

pub fn is_nonnegative(c: &Coeff) -> bool {
    !c.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Coeff {
        Coeff::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn boolean_collapses() {
        let b = SemiringId::Boolean.desc();
        assert_eq!(b.add(q(1, 2), q(1, 2)), q(1, 1));
        assert_eq!(b.add(q(0, 1), q(0, 1)), q(0, 1));
        assert_eq!(b.mul(q(3, 1), q(2, 1)), q(1, 1));
        assert!(b.neg(q(1, 1)).is_none());
    }

    #[test]
    fn rational_is_exact() {
        let r = SemiringId::RatExact.desc();
        assert_eq!(r.add(q(1, 3), q(1, 6)), q(1, 2));
        assert_eq!(r.neg(q(2, 1)), Some(q(-2, 1)));
    }

    #[test]
    fn display() {
        assert_eq!(coeff_string(&q(5, 1)), "5");
        assert_eq!(coeff_string(&q(1, 2)), "1/2");
        assert_eq!(coeff_string(&q(-2, 4)), "-1/2");
    }
}
