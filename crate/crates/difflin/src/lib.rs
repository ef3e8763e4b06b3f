//! Typed diagram terms for differential linear structure, an exact
//! free-exponential model over a choice of commutative semiring, and a
//! verifier that checks the structural laws entrywise.

pub mod axioms;
pub mod basis;
pub mod eval;
pub mod graph;
pub mod object;
pub mod parse;
pub mod semiring;
pub mod term;
pub mod verify;

pub use basis::{basis_enum, BasisElem};
pub use eval::{equal_upto, eval_entry, gen_entry, ModelCfg, Mutation, Verdict};
pub use object::ObjExpr;
pub use parse::{parse_basis_elem, parse_file, parse_object, parse_term, FileEnv};
pub use semiring::{Coeff, SemiringDesc, SemiringId};
pub use term::{GenKind, LinMap, MorTerm};
