//! Exact evaluation of terms in the free-exponential model.
//!
//! The carrier of `!A` is the free semimodule on finite multisets over the
//! basis of `A`. Generator coefficients:
//!
//! - dereliction picks singletons, weakening the empty multiset;
//! - contraction splits with multiplicity-wise binomials, cocontraction is
//!   plain multiset union;
//! - digging sends `m` to multisets of parts summing to `m`, counted by
//!   `m!/(∏ β!·∏ mult!)`; parts may be empty, so `j` padding copies of the
//!   empty multiset carry `1/j!`;
//! - the lax monoidal map counts occurrence-list bijections `m!·n!/p!`, and
//!   its unit is the series `Σ [•^k]/k!`;
//! - the deriving transformation adjoins one element, the antipode scales
//!   by `(−1)^{|m|}`.
//!
//! Digging and the monoidal unit have unbounded forward images; every
//! entry request therefore runs a bidirectional support pass, intersecting
//! forward images with backward preimages at each composition junction.
//! Entries are exact whenever every junction is bounded; otherwise an
//! explicit fallback cap flags the result approximate.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::basis::{basis_enum, mset, BasisElem};
use crate::object::ObjExpr;
use crate::semiring::{Coeff, SemiringDesc, SemiringId};
use crate::term::{GenKind, MorTerm, TypeError};

/// Model-layer generator overrides used by the mutation suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Mutation {
    /// `eta` scaled by 2; breaks the linear rule.
    ScaleEtaBy2,
    /// coefficient-free contraction; breaks the bimonoid square over
    /// non-idempotent semirings.
    DeltaWithoutBinomialCopy,
    /// antipode replaced by the identity; breaks the antipode law.
    DropS,
    /// deriving transformation replaced by weaken-then-insert; breaks the
    /// Leibniz rule.
    SwapD,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::ScaleEtaBy2,
        Mutation::DeltaWithoutBinomialCopy,
        Mutation::DropS,
        Mutation::SwapD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::ScaleEtaBy2 => "scale_eta_by_2",
            Mutation::DeltaWithoutBinomialCopy => "delta_without_binomial_copy",
            Mutation::DropS => "drop_S",
            Mutation::SwapD => "swap_d",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelCfg {
    pub ring: SemiringDesc,
    pub dims: BTreeMap<String, u32>,
    pub size_cap: u32,
    pub fallback_cap: Option<u32>,
    pub mutation: Option<Mutation>,
}

impl ModelCfg {
    pub fn new(ring: SemiringId, dims: BTreeMap<String, u32>, size_cap: u32) -> Self {
        ModelCfg { ring: ring.desc(), dims, size_cap, fallback_cap: None, mutation: None }
    }

    pub fn dim(&self, base: &str) -> Option<u32> {
        self.dims.get(base).copied()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("negatives are unavailable over the {0} semiring")]
    Negatives(&'static str),
    #[error("unbounded interior over {object}; supply a fallback cap")]
    Unbounded { object: ObjExpr },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("{0}")]
    Model(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eval {
    pub value: Coeff,
    pub approximate: bool,
}

/// Entrywise comparison outcome of [`equal_upto`].
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass { entries: usize, approximate: bool },
    Fail { inp: BasisElem, out: BasisElem, lhs: Coeff, rhs: Coeff },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

fn big(i: i64) -> Coeff {
    Coeff::from_integer(BigInt::from(i))
}

fn ratio(n: BigInt, d: BigInt) -> Coeff {
    BigRational::new(n, d)
}

// ---------------------------------------------------------------------------
// Generator coefficient oracles

/// Raw model coefficient of a generator entry, before any semiring
/// collapse. Shape mismatches yield zero.
pub fn gen_entry(
    kind: GenKind,
    params: &[ObjExpr],
    inp: &BasisElem,
    out: &BasisElem,
    cfg: &ModelCfg,
) -> Result<Coeff, EvalError> {
    let hit = |ok: bool| if ok { big(1) } else { big(0) };
    Ok(match kind {
        GenKind::Eps => match inp {
            BasisElem::MSet(xs) if xs.len() == 1 => hit(&xs[0] == out),
            _ => big(0),
        },
        GenKind::Weak => match inp {
            BasisElem::MSet(xs) => hit(xs.is_empty() && *out == BasisElem::UnitElem),
            _ => big(0),
        },
        GenKind::Eta => {
            let base = hit(*out == BasisElem::mset(vec![inp.clone()]));
            if cfg.mutation == Some(Mutation::ScaleEtaBy2) {
                base * big(2)
            } else {
                base
            }
        }
        GenKind::U => hit(*inp == BasisElem::UnitElem && *out == BasisElem::empty_mset()),
        GenKind::Copy => {
            let m = expect_mset(inp)?;
            let (m1, m2) = out.split2(1, 1);
            let (m1, m2) = (expect_mset(&m1)?, expect_mset(&m2)?);
            if mset::add(&m1, &m2) != m {
                big(0)
            } else if cfg.mutation == Some(Mutation::DeltaWithoutBinomialCopy) {
                big(1)
            } else {
                // ∏_x C(m(x), m1(x)) = m!/(m1!·m2!)
                ratio(mset::msfact(&m), mset::msfact(&m1) * mset::msfact(&m2))
            }
        }
        GenKind::Nabla => {
            let (m1, m2) = inp.split2(1, 1);
            let (m1, m2) = (expect_mset(&m1)?, expect_mset(&m2)?);
            hit(*out == BasisElem::MSet(mset::add(&m1, &m2)))
        }
        GenKind::Delta => {
            let m = expect_mset(inp)?;
            let parts = expect_mset(out)?;
            let mut total: Vec<BasisElem> = Vec::new();
            let mut denom = BigInt::one();
            for p in &parts {
                let inner = expect_mset(p)?;
                total.extend(inner.iter().cloned());
                denom *= mset::msfact(&inner);
            }
            total.sort();
            if total != m {
                big(0)
            } else {
                denom *= mset::msfact(&parts);
                ratio(mset::msfact(&m), denom)
            }
        }
        GenKind::M => {
            let (la, ra) = (params[0].arity(), params[1].arity());
            let (m, n) = inp.split2(1, 1);
            let (m, n) = (expect_mset(&m)?, expect_mset(&n)?);
            let p = expect_mset(out)?;
            if m.len() != n.len() || p.len() != m.len() {
                return Ok(big(0));
            }
            let mut fst = Vec::new();
            let mut snd = Vec::new();
            for pair in &p {
                let (x, y) = pair.split2(la, ra);
                fst.push(x);
                snd.push(y);
            }
            fst.sort();
            snd.sort();
            if fst != m || snd != n {
                big(0)
            } else {
                // number of occurrence-list bijections realizing p
                ratio(mset::msfact(&m) * mset::msfact(&n), mset::msfact(&p))
            }
        }
        GenKind::MI => {
            if *inp != BasisElem::UnitElem {
                return Ok(big(0));
            }
            let p = expect_mset(out)?;
            if p.iter().all(|x| *x == BasisElem::UnitElem) {
                ratio(BigInt::one(), mset::factorial(p.len()))
            } else {
                big(0)
            }
        }
        GenKind::D => {
            let xa = params[0].arity();
            let (m, x) = inp.split2(1, xa);
            let m = expect_mset(&m)?;
            if cfg.mutation == Some(Mutation::SwapD) {
                hit(m.is_empty() && *out == BasisElem::mset(vec![x]))
            } else {
                let mut want = m;
                want.push(x);
                want.sort();
                hit(*out == BasisElem::MSet(want))
            }
        }
        GenKind::S => {
            if !cfg.ring.has_negatives {
                return Err(EvalError::Negatives(cfg.ring.id.name()));
            }
            if inp != out {
                return Ok(big(0));
            }
            let m = expect_mset(inp)?;
            if cfg.mutation == Some(Mutation::DropS) || m.len() % 2 == 0 {
                big(1)
            } else {
                big(-1)
            }
        }
    })
}

fn expect_mset(e: &BasisElem) -> Result<Vec<BasisElem>, EvalError> {
    match e {
        BasisElem::MSet(xs) => Ok(xs.clone()),
        other => Err(EvalError::Model(format!("expected a multiset element, got {other}"))),
    }
}

// ---------------------------------------------------------------------------
// Support inference

pub type Support = Option<BTreeSet<BasisElem>>; // None = unbounded

fn singleton(e: BasisElem) -> Support {
    let mut s = BTreeSet::new();
    s.insert(e);
    Some(s)
}

fn empty() -> Support {
    Some(BTreeSet::new())
}

/// Finite overapproximation of the image of `t` at input `x`, or `None`
/// when no finite bound exists. Mutations only shrink true supports, so the
/// unmutated tables stay sound.
pub fn fwd_set(t: &MorTerm, x: &BasisElem, cfg: &ModelCfg) -> Result<Support, EvalError> {
    Ok(match t {
        MorTerm::Id(_) => singleton(x.clone()),
        MorTerm::Sym(a, b) => {
            let (l, r) = x.split2(a.arity(), b.arity());
            singleton(BasisElem::join2(&r, b.arity(), &l, a.arity()))
        }
        MorTerm::Zero(..) => empty(),
        MorTerm::Lin(l) => Some(
            l.entries
                .iter()
                .filter(|(i, _, c)| i == x && !c.is_zero())
                .map(|(_, o, _)| o.clone())
                .collect(),
        ),
        MorTerm::Sum(parts) => {
            let mut acc = BTreeSet::new();
            for p in parts {
                match fwd_set(p, x, cfg)? {
                    Some(s) => acc.extend(s),
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        MorTerm::Neg(inner) => fwd_set(inner, x, cfg)?,
        MorTerm::Ten(parts) => {
            let mut arities = Vec::new();
            let mut comps = Vec::new();
            for p in parts {
                let (d, c) = p.infer_type()?;
                arities.push((d.arity(), c.arity()));
                comps.push(p);
            }
            let xs = split_many(x, arities.iter().map(|(d, _)| *d));
            let mut sets = Vec::new();
            for (p, xi) in comps.iter().zip(&xs) {
                match fwd_set(p, xi, cfg)? {
                    Some(s) => sets.push(s.into_iter().collect::<Vec<_>>()),
                    None => return Ok(None),
                }
            }
            Some(cartesian_join(&sets, arities.iter().map(|(_, c)| *c).collect()))
        }
        MorTerm::BangBox(inner) => {
            let xs = expect_mset(x)?;
            let mut per = Vec::new();
            for xi in &xs {
                match fwd_set(inner, xi, cfg)? {
                    Some(s) => per.push(s.into_iter().collect::<Vec<_>>()),
                    None => return Ok(None),
                }
            }
            Some(mset_combinations(&per))
        }
        MorTerm::Comp(parts) => {
            let mut cur: BTreeSet<BasisElem> = [x.clone()].into();
            for p in parts {
                let mut next = BTreeSet::new();
                for e in &cur {
                    match fwd_set(p, e, cfg)? {
                        Some(s) => next.extend(s),
                        None => return Ok(None),
                    }
                }
                cur = next;
            }
            Some(cur)
        }
        MorTerm::Gen(kind, params) => gen_fwd(*kind, params, x, cfg)?,
    })
}

fn gen_fwd(
    kind: GenKind,
    params: &[ObjExpr],
    x: &BasisElem,
    cfg: &ModelCfg,
) -> Result<Support, EvalError> {
    Ok(match kind {
        GenKind::Eps => match x {
            BasisElem::MSet(xs) if xs.len() == 1 => singleton(xs[0].clone()),
            _ => empty(),
        },
        GenKind::Weak => match x {
            BasisElem::MSet(xs) if xs.is_empty() => singleton(BasisElem::UnitElem),
            _ => empty(),
        },
        GenKind::Eta => singleton(BasisElem::mset(vec![x.clone()])),
        GenKind::U => singleton(BasisElem::empty_mset()),
        GenKind::Copy => {
            let m = expect_mset(x)?;
            Some(
                mset::splits(&m)
                    .into_iter()
                    .map(|(m1, m2, _)| {
                        BasisElem::Tuple(vec![BasisElem::MSet(m1), BasisElem::MSet(m2)])
                    })
                    .collect(),
            )
        }
        GenKind::Nabla => {
            let (m1, m2) = x.split2(1, 1);
            let (m1, m2) = (expect_mset(&m1)?, expect_mset(&m2)?);
            singleton(BasisElem::MSet(mset::add(&m1, &m2)))
        }
        GenKind::Delta | GenKind::MI => None,
        GenKind::M => {
            let (la, ra) = (params[0].arity(), params[1].arity());
            let (m, n) = x.split2(1, 1);
            let (m, n) = (expect_mset(&m)?, expect_mset(&n)?);
            if m.len() != n.len() {
                return Ok(empty());
            }
            let mut out = BTreeSet::new();
            for perm in mset::distinct_permutations(&n) {
                let pairs: Vec<BasisElem> = m
                    .iter()
                    .zip(&perm)
                    .map(|(a, b)| BasisElem::join2(a, la, b, ra))
                    .collect();
                out.insert(BasisElem::mset(pairs));
            }
            Some(out)
        }
        GenKind::D => {
            let xa = params[0].arity();
            let (m, e) = x.split2(1, xa);
            let mut m = expect_mset(&m)?;
            m.push(e);
            m.sort();
            singleton(BasisElem::MSet(m))
        }
        GenKind::S => {
            if !cfg.ring.has_negatives {
                return Err(EvalError::Negatives(cfg.ring.id.name()));
            }
            singleton(x.clone())
        }
    })
}

/// Finite overapproximation of the preimage of `t` at output `y`.
pub fn bwd_set(t: &MorTerm, y: &BasisElem, cfg: &ModelCfg) -> Result<Support, EvalError> {
    Ok(match t {
        MorTerm::Id(_) => singleton(y.clone()),
        MorTerm::Sym(a, b) => {
            let (l, r) = y.split2(b.arity(), a.arity());
            singleton(BasisElem::join2(&r, a.arity(), &l, b.arity()))
        }
        MorTerm::Zero(..) => empty(),
        MorTerm::Lin(l) => Some(
            l.entries
                .iter()
                .filter(|(_, o, c)| o == y && !c.is_zero())
                .map(|(i, _, _)| i.clone())
                .collect(),
        ),
        MorTerm::Sum(parts) => {
            let mut acc = BTreeSet::new();
            for p in parts {
                match bwd_set(p, y, cfg)? {
                    Some(s) => acc.extend(s),
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        MorTerm::Neg(inner) => bwd_set(inner, y, cfg)?,
        MorTerm::Ten(parts) => {
            let mut arities = Vec::new();
            for p in parts {
                let (d, c) = p.infer_type()?;
                arities.push((d.arity(), c.arity()));
            }
            let ys = split_many(y, arities.iter().map(|(_, c)| *c));
            let mut sets = Vec::new();
            for (p, yi) in parts.iter().zip(&ys) {
                match bwd_set(p, yi, cfg)? {
                    Some(s) => sets.push(s.into_iter().collect::<Vec<_>>()),
                    None => return Ok(None),
                }
            }
            Some(cartesian_join(&sets, arities.iter().map(|(d, _)| *d).collect()))
        }
        MorTerm::BangBox(inner) => {
            let ys = expect_mset(y)?;
            let mut per = Vec::new();
            for yi in &ys {
                match bwd_set(inner, yi, cfg)? {
                    Some(s) => per.push(s.into_iter().collect::<Vec<_>>()),
                    None => return Ok(None),
                }
            }
            Some(mset_combinations(&per))
        }
        MorTerm::Comp(parts) => {
            let mut cur: BTreeSet<BasisElem> = [y.clone()].into();
            for p in parts.iter().rev() {
                let mut prev = BTreeSet::new();
                for e in &cur {
                    match bwd_set(p, e, cfg)? {
                        Some(s) => prev.extend(s),
                        None => return Ok(None),
                    }
                }
                cur = prev;
            }
            Some(cur)
        }
        MorTerm::Gen(kind, params) => gen_bwd(*kind, params, y, cfg)?,
    })
}

fn gen_bwd(
    kind: GenKind,
    params: &[ObjExpr],
    y: &BasisElem,
    cfg: &ModelCfg,
) -> Result<Support, EvalError> {
    Ok(match kind {
        GenKind::Eps => singleton(BasisElem::mset(vec![y.clone()])),
        GenKind::Weak => {
            if *y == BasisElem::UnitElem {
                singleton(BasisElem::empty_mset())
            } else {
                empty()
            }
        }
        GenKind::Eta => match y {
            BasisElem::MSet(xs) if xs.len() == 1 => singleton(xs[0].clone()),
            _ => empty(),
        },
        GenKind::U => match y {
            BasisElem::MSet(xs) if xs.is_empty() => singleton(BasisElem::UnitElem),
            _ => empty(),
        },
        GenKind::Copy => {
            let (m1, m2) = y.split2(1, 1);
            let (m1, m2) = (expect_mset(&m1)?, expect_mset(&m2)?);
            singleton(BasisElem::MSet(mset::add(&m1, &m2)))
        }
        GenKind::Nabla => {
            let p = expect_mset(y)?;
            Some(
                mset::splits(&p)
                    .into_iter()
                    .map(|(m1, m2, _)| {
                        BasisElem::Tuple(vec![BasisElem::MSet(m1), BasisElem::MSet(m2)])
                    })
                    .collect(),
            )
        }
        GenKind::Delta => {
            let parts = expect_mset(y)?;
            let mut total = Vec::new();
            for p in &parts {
                total.extend(expect_mset(p)?);
            }
            total.sort();
            singleton(BasisElem::MSet(total))
        }
        GenKind::MI => {
            let p = expect_mset(y)?;
            if p.iter().all(|x| *x == BasisElem::UnitElem) {
                singleton(BasisElem::UnitElem)
            } else {
                empty()
            }
        }
        GenKind::M => {
            let (la, ra) = (params[0].arity(), params[1].arity());
            let p = expect_mset(y)?;
            let mut fst = Vec::new();
            let mut snd = Vec::new();
            for pair in &p {
                let (a, b) = pair.split2(la, ra);
                fst.push(a);
                snd.push(b);
            }
            fst.sort();
            snd.sort();
            singleton(BasisElem::Tuple(vec![BasisElem::MSet(fst), BasisElem::MSet(snd)]))
        }
        GenKind::D => {
            let xa = params[0].arity();
            let p = expect_mset(y)?;
            let mut out = BTreeSet::new();
            for (x, _) in mset::runs(&p) {
                let mut rest = p.clone();
                let ix = rest.iter().position(|e| e == x).unwrap();
                let x = rest.remove(ix);
                out.insert(BasisElem::join2(&BasisElem::MSet(rest), 1, &x, xa));
            }
            Some(out)
        }
        GenKind::S => {
            if !cfg.ring.has_negatives {
                return Err(EvalError::Negatives(cfg.ring.id.name()));
            }
            singleton(y.clone())
        }
    })
}

fn split_many(e: &BasisElem, arities: impl Iterator<Item = usize>) -> Vec<BasisElem> {
    let arities: Vec<usize> = arities.collect();
    let total: usize = arities.iter().sum();
    let comps = e.explode(total);
    let mut out = Vec::new();
    let mut ix = 0;
    for a in arities {
        out.push(BasisElem::implode(comps[ix..ix + a].to_vec()));
        ix += a;
    }
    out
}

fn join_many(parts: &[BasisElem], arities: &[usize]) -> BasisElem {
    let mut comps = Vec::new();
    for (p, a) in parts.iter().zip(arities) {
        comps.extend(p.explode(*a));
    }
    BasisElem::implode(comps)
}

fn cartesian_join(sets: &[Vec<BasisElem>], arities: Vec<usize>) -> BTreeSet<BasisElem> {
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; sets.len()];
    if sets.iter().any(|s| s.is_empty()) {
        return out;
    }
    loop {
        let parts: Vec<BasisElem> = sets.iter().zip(&idx).map(|(s, i)| s[*i].clone()).collect();
        out.insert(join_many(&parts, &arities));
        let mut k = 0;
        loop {
            if k == sets.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < sets[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// All multisets formed by one choice from each slot.
fn mset_combinations(per: &[Vec<BasisElem>]) -> BTreeSet<BasisElem> {
    let mut out = BTreeSet::new();
    if per.iter().any(|s| s.is_empty()) {
        if per.is_empty() {
            out.insert(BasisElem::empty_mset());
        }
        return out;
    }
    let mut idx = vec![0usize; per.len()];
    loop {
        let elems: Vec<BasisElem> = per.iter().zip(&idx).map(|(s, i)| s[*i].clone()).collect();
        out.insert(BasisElem::mset(elems));
        let mut k = 0;
        loop {
            if k == per.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < per[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Per-junction candidate sets of a top-level composition, after the
/// bidirectional pass with both boundary entries fixed. `None` marks a
/// junction the fixpoint cannot bound.
pub fn support_bounds(
    t: &MorTerm,
    inp: &BasisElem,
    out: &BasisElem,
    cfg: &ModelCfg,
) -> Result<Vec<(ObjExpr, Support)>, EvalError> {
    let parts = match t {
        MorTerm::Comp(ps) => ps.clone(),
        other => vec![other.clone()],
    };
    let mut bounds = Vec::new();
    // forward chains
    let mut fwd: Vec<Support> = vec![singleton(inp.clone())];
    for p in &parts {
        let prev = fwd.last().unwrap();
        let next = match prev {
            None => None,
            Some(set) => {
                let mut acc = BTreeSet::new();
                let mut unbounded = false;
                for e in set {
                    match fwd_set(p, e, cfg)? {
                        Some(s) => acc.extend(s),
                        None => {
                            unbounded = true;
                            break;
                        }
                    }
                }
                if unbounded {
                    None
                } else {
                    Some(acc)
                }
            }
        };
        fwd.push(next);
    }
    // backward chains
    let mut bwd: Vec<Support> = vec![singleton(out.clone())];
    for p in parts.iter().rev() {
        let prev = bwd.last().unwrap();
        let next = match prev {
            None => None,
            Some(set) => {
                let mut acc = BTreeSet::new();
                let mut unbounded = false;
                for e in set {
                    match bwd_set(p, e, cfg)? {
                        Some(s) => acc.extend(s),
                        None => {
                            unbounded = true;
                            break;
                        }
                    }
                }
                if unbounded {
                    None
                } else {
                    Some(acc)
                }
            }
        };
        bwd.push(next);
    }
    bwd.reverse();
    for (i, p) in parts.iter().enumerate().skip(0) {
        if i + 1 == parts.len() {
            break;
        }
        let (_, mid_obj) = p.infer_type()?;
        let combined = match (&fwd[i + 1], &bwd[i + 1]) {
            (Some(f), Some(b)) => Some(f.intersection(b).cloned().collect()),
            (Some(f), None) => Some(f.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        bounds.push((mid_obj, combined));
    }
    Ok(bounds)
}

// ---------------------------------------------------------------------------
// Entry evaluation

/// The matrix entry of `t` at `(inp, out)`, exact unless a junction was
/// unbounded and the fallback cap was used.
pub fn eval_entry(
    t: &MorTerm,
    inp: &BasisElem,
    out: &BasisElem,
    cfg: &ModelCfg,
) -> Result<Eval, EvalError> {
    let ring = &cfg.ring;
    Ok(match t {
        MorTerm::Id(_) => Eval { value: if inp == out { big(1) } else { big(0) }, approximate: false },
        MorTerm::Gen(kind, params) => Eval {
            value: ring.embed(gen_entry(*kind, params, inp, out, cfg)?),
            approximate: false,
        },
        MorTerm::Sym(a, b) => {
            let (l, r) = inp.split2(a.arity(), b.arity());
            let swapped = BasisElem::join2(&r, b.arity(), &l, a.arity());
            Eval { value: if swapped == *out { big(1) } else { big(0) }, approximate: false }
        }
        MorTerm::Zero(..) => Eval { value: big(0), approximate: false },
        MorTerm::Lin(l) => {
            let mut v = big(0);
            for (i, o, c) in &l.entries {
                if i == inp && o == out {
                    v = ring.add(v, ring.embed(c.clone()));
                }
            }
            Eval { value: v, approximate: false }
        }
        MorTerm::Sum(parts) => {
            let mut v = big(0);
            let mut approx = false;
            for p in parts {
                let e = eval_entry(p, inp, out, cfg)?;
                approx |= e.approximate;
                v = ring.add(v, e.value);
            }
            Eval { value: v, approximate: approx }
        }
        MorTerm::Neg(inner) => {
            let e = eval_entry(inner, inp, out, cfg)?;
            let v = ring
                .neg(e.value)
                .ok_or(EvalError::Negatives(ring.id.name()))?;
            Eval { value: v, approximate: e.approximate }
        }
        MorTerm::Ten(parts) => {
            let mut arities = Vec::new();
            for p in parts {
                let (d, c) = p.infer_type()?;
                arities.push((d.arity(), c.arity()));
            }
            let ins = split_many(inp, arities.iter().map(|(d, _)| *d));
            let outs = split_many(out, arities.iter().map(|(_, c)| *c));
            let mut v = big(1);
            let mut approx = false;
            for ((p, i), o) in parts.iter().zip(&ins).zip(&outs) {
                let e = eval_entry(p, i, o, cfg)?;
                approx |= e.approximate;
                v = ring.mul(v, e.value);
                if v.is_zero() {
                    break;
                }
            }
            Eval { value: v, approximate: approx }
        }
        MorTerm::BangBox(inner) => {
            let xs = expect_mset(inp)?;
            let ys = expect_mset(out)?;
            if xs.len() != ys.len() {
                return Ok(Eval { value: big(0), approximate: false });
            }
            let mut v = big(0);
            let mut approx = false;
            for perm in mset::distinct_permutations(&ys) {
                let mut prod = big(1);
                for (x, y) in xs.iter().zip(&perm) {
                    let e = eval_entry(inner, x, y, cfg)?;
                    approx |= e.approximate;
                    prod = ring.mul(prod, e.value);
                    if prod.is_zero() {
                        break;
                    }
                }
                v = ring.add(v, prod);
            }
            Eval { value: v, approximate: approx }
        }
        MorTerm::Comp(parts) => {
            if parts.is_empty() {
                return Err(EvalError::Type(TypeError::EmptyList("composition")));
            }
            if parts.len() == 1 {
                return eval_entry(&parts[0], inp, out, cfg);
            }
            let first = &parts[0];
            let rest = MorTerm::Comp(parts[1..].to_vec());
            let f = fwd_set(first, inp, cfg)?;
            let b = bwd_set(&rest, out, cfg)?;
            let mut approx = false;
            let candidates: BTreeSet<BasisElem> = match (f, b) {
                (Some(f), Some(b)) => f.intersection(&b).cloned().collect(),
                (Some(f), None) => f,
                (None, Some(b)) => b,
                (None, None) => {
                    let (_, mid_obj) = first.infer_type()?;
                    match cfg.fallback_cap {
                        Some(cap) => {
                            approx = true;
                            let dims = cfg.dims.clone();
                            basis_enum(&mid_obj, cap, &move |n| dims.get(n).copied())
                                .map_err(EvalError::Model)?
                                .into_iter()
                                .collect()
                        }
                        None => return Err(EvalError::Unbounded { object: mid_obj }),
                    }
                }
            };
            let mut v = big(0);
            for mid in &candidates {
                let l = eval_entry(first, inp, mid, cfg)?;
                if l.value.is_zero() && !l.approximate {
                    continue;
                }
                let r = eval_entry(&rest, mid, out, cfg)?;
                approx |= l.approximate | r.approximate;
                v = ring.add(v, ring.mul(l.value, r.value));
            }
            Eval { value: v, approximate: approx }
        }
    })
}

/// A finite vector over one object's basis: the forward image of a single
/// basis element, with zero coefficients dropped.
pub type Vector = BTreeMap<BasisElem, Coeff>;

/// Full forward vector of `t` at `inp`. Fails as unbounded when the image
/// has no finite bound and no fallback cap is given.
pub fn eval_vector(t: &MorTerm, inp: &BasisElem, cfg: &ModelCfg) -> Result<(Vector, bool), EvalError> {
    let (_, cod) = t.infer_type()?;
    let mut approx = false;
    let outs: Vec<BasisElem> = match fwd_set(t, inp, cfg)? {
        Some(s) => s.into_iter().collect(),
        None => match cfg.fallback_cap {
            Some(cap) => {
                approx = true;
                let dims = cfg.dims.clone();
                basis_enum(&cod, cap, &move |n| dims.get(n).copied()).map_err(EvalError::Model)?
            }
            None => return Err(EvalError::Unbounded { object: cod }),
        },
    };
    let mut v = Vector::new();
    for o in outs {
        let e = eval_entry(t, inp, &o, cfg)?;
        approx |= e.approximate;
        if !e.value.is_zero() {
            v.insert(o, e.value);
        }
    }
    Ok((v, approx))
}

/// Compares two terms entrywise over all boundary pairs with structural
/// size at most `cfg.size_cap`, reporting the first counterexample in
/// canonical order.
pub fn equal_upto(t1: &MorTerm, t2: &MorTerm, cfg: &ModelCfg) -> Result<Verdict, EvalError> {
    let ty1 = t1.infer_type()?;
    let ty2 = t2.infer_type()?;
    if ty1 != ty2 {
        return Err(EvalError::Model(format!(
            "type mismatch: {} -> {} vs {} -> {}",
            ty1.0, ty1.1, ty2.0, ty2.1
        )));
    }
    let dims = cfg.dims.clone();
    let lookup = move |n: &str| dims.get(n).copied();
    let ins = basis_enum(&ty1.0, cfg.size_cap, &lookup).map_err(EvalError::Model)?;
    let outs = basis_enum(&ty1.1, cfg.size_cap, &lookup).map_err(EvalError::Model)?;
    let mut entries = 0usize;
    let mut approximate = false;
    for i in &ins {
        for o in &outs {
            let l = eval_entry(t1, i, o, cfg)?;
            let r = eval_entry(t2, i, o, cfg)?;
            entries += 1;
            approximate |= l.approximate | r.approximate;
            if l.value != r.value {
                return Ok(Verdict::Fail {
                    inp: i.clone(),
                    out: o.clone(),
                    lhs: l.value,
                    rhs: r.value,
                });
            }
        }
    }
    Ok(Verdict::Pass { entries, approximate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_term, LinEnv};

    fn cfg1() -> ModelCfg {
        let mut dims = BTreeMap::new();
        dims.insert("A".to_string(), 1);
        dims.insert("B".to_string(), 1);
        ModelCfg::new(SemiringId::RatExact, dims, 4)
    }

    fn a() -> BasisElem {
        BasisElem::Atom("A".into(), 0)
    }

    fn ms(v: Vec<BasisElem>) -> BasisElem {
        BasisElem::mset(v)
    }

    fn term(src: &str) -> MorTerm {
        parse_term(src, &LinEnv::new()).unwrap()
    }

    fn entry(src: &str, i: &BasisElem, o: &BasisElem) -> Coeff {
        eval_entry(&term(src), i, o, &cfg1()).unwrap().value
    }

    #[test]
    fn copy_carries_ordered_splitting_counts() {
        // enumeration oracle: the 2 ordered splittings of [a,a] into ([a],[a])
        let m = vec![a(), a()];
        let mut count = 0;
        for (m1, m2, c) in mset::splits(&m) {
            if m1 == vec![a()] && m2 == vec![a()] {
                count += 1;
                assert_eq!(c, BigInt::from(2));
            }
            let _ = m2;
        }
        assert_eq!(count, 1);
        let got = entry(
            "copy{A}",
            &ms(vec![a(), a()]),
            &BasisElem::Tuple(vec![ms(vec![a()]), ms(vec![a()])]),
        );
        assert_eq!(got, big(2));
    }

    #[test]
    fn delta_small_entries() {
        let aa = ms(vec![a(), a()]);
        assert_eq!(entry("delta{A}", &aa, &ms(vec![ms(vec![a()]), ms(vec![a()])])), big(1));
        assert_eq!(entry("delta{A}", &aa, &ms(vec![ms(vec![a(), a()])])), big(1));
        // all other outputs of size ≤ 4 vanish
        let obj = ObjExpr::bang(ObjExpr::bang(ObjExpr::base("A")));
        let cfg = cfg1();
        let dims = cfg.dims.clone();
        for o in basis_enum(&obj, 4, &move |n| dims.get(n).copied()).unwrap() {
            if o != ms(vec![ms(vec![a()]), ms(vec![a()])]) && o != ms(vec![ms(vec![a(), a()])]) {
                assert_eq!(entry("delta{A}", &aa, &o), big(0), "nonzero at {o}");
            }
        }
        // empty-part padding carries reciprocal factorials
        assert_eq!(
            entry("delta{A}", &ms(vec![]), &ms(vec![BasisElem::empty_mset()])),
            big(1)
        );
        let two_pads = ms(vec![BasisElem::empty_mset(), BasisElem::empty_mset()]);
        assert_eq!(entry("delta{A}", &ms(vec![]), &two_pads), ratio(1.into(), 2.into()));
    }

    #[test]
    fn antipode_signs() {
        let aa = ms(vec![a(), a()]);
        assert_eq!(entry("S{A}", &aa, &aa), big(1));
        assert_eq!(entry("S{A}", &ms(vec![a()]), &ms(vec![a()])), big(-1));
    }

    #[test]
    fn antipode_requires_negatives() {
        let mut cfg = cfg1();
        cfg.ring = SemiringId::Nat.desc();
        let err = eval_entry(&term("S{A}"), &ms(vec![a()]), &ms(vec![a()]), &cfg).unwrap_err();
        assert!(matches!(err, EvalError::Negatives(_)));
    }

    #[test]
    fn linear_rule_entry() {
        assert_eq!(entry("eta{A} ; eps{A}", &a(), &a()), big(1));
    }

    #[test]
    fn digging_then_dereliction_is_identity() {
        let aa = ms(vec![a(), a()]);
        assert_eq!(entry("delta{A} ; eps{!A}", &aa, &aa), big(1));
        assert_eq!(entry("delta{A} ; eps{!A}", &ms(vec![]), &ms(vec![])), big(1));
        assert_eq!(entry("delta{A} ; eps{!A}", &aa, &ms(vec![a()])), big(0));
    }

    #[test]
    fn support_mi_weak_and_eps() {
        let cfg = cfg1();
        let t = term("mI ; weak{I}");
        let b = support_bounds(&t, &BasisElem::UnitElem, &BasisElem::UnitElem, &cfg).unwrap();
        assert_eq!(b.len(), 1);
        let s = b[0].1.clone().unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![BasisElem::empty_mset()]);

        let t = term("mI ; eps{I}");
        let b = support_bounds(&t, &BasisElem::UnitElem, &BasisElem::UnitElem, &cfg).unwrap();
        let s = b[0].1.clone().unwrap();
        assert_eq!(
            s.into_iter().collect::<Vec<_>>(),
            vec![ms(vec![BasisElem::UnitElem])]
        );
    }

    #[test]
    fn mi_full_vector_unbounded() {
        let cfg = cfg1();
        let err = eval_vector(&term("mI"), &BasisElem::UnitElem, &cfg).unwrap_err();
        assert!(matches!(err, EvalError::Unbounded { .. }));
        let mut with_cap = cfg;
        with_cap.fallback_cap = Some(5);
        let (v, approx) = eval_vector(&term("mI"), &BasisElem::UnitElem, &with_cap).unwrap();
        assert!(approx);
        assert_eq!(v[&ms(vec![])], big(1));
        assert_eq!(
            v[&ms(vec![BasisElem::UnitElem, BasisElem::UnitElem])],
            ratio(1.into(), 2.into())
        );
    }

    #[test]
    fn equal_upto_reports_first_counterexample() {
        // doubled codereliction against the identity
        let lhs = term("(eta{A} + eta{A}) ; eps{A}");
        let rhs = term("id{A}");
        match equal_upto(&lhs, &rhs, &cfg1()).unwrap() {
            Verdict::Fail { inp, out, lhs, rhs } => {
                assert_eq!(inp, a());
                assert_eq!(out, a());
                assert_eq!(lhs, big(2));
                assert_eq!(rhs, big(1));
            }
            v => panic!("expected failure, got {v:?}"),
        }
    }

    #[test]
    fn equal_upto_trivial() {
        let t = term("id{!A}");
        assert!(equal_upto(&t, &t, &cfg1()).unwrap().passed());
    }

    #[test]
    fn weight_is_preserved_by_generators() {
        // degree discipline over every generator at small sizes
        let cfg = cfg1();
        let gens = [
            "delta{A}", "eps{A}", "copy{A}", "weak{A}", "nabla{A}", "u{A}", "eta{A}", "d{A}",
            "S{A}", "m{A,B}", "mI",
        ];
        for g in gens {
            let t = term(g);
            let (dom, cod) = t.infer_type().unwrap();
            let dims = cfg.dims.clone();
            let lookup = move |n: &str| dims.get(n).copied();
            for i in basis_enum(&dom, 4, &lookup).unwrap() {
                for o in basis_enum(&cod, 4, &lookup).unwrap() {
                    let v = eval_entry(&t, &i, &o, &cfg).unwrap().value;
                    if !v.is_zero() {
                        assert_eq!(i.weight(), o.weight(), "{g} at ({i}, {o})");
                    }
                }
            }
        }
    }

    #[test]
    fn convolution_sum_of_scalars() {
        // f = 2·id, g = 3·id on a 1-dim base: composite entry (a, a) = 5
        use crate::term::LinMap;
        let mk = |name: &str, k: i64| {
            MorTerm::Lin(LinMap {
                name: name.into(),
                dom: ObjExpr::base("A"),
                cod: ObjExpr::base("A"),
                entries: vec![(a(), a(), big(k))],
            })
        };
        let t = MorTerm::comp(vec![
            term("eta{A} ; copy{A}"),
            MorTerm::ten(vec![MorTerm::bang(mk("f", 2)), MorTerm::bang(mk("g", 3))]),
            term("nabla{A} ; eps{A}"),
        ]);
        assert_eq!(eval_entry(&t, &a(), &a(), &cfg1()).unwrap().value, big(5));
    }
}
