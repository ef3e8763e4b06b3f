//! Basis elements of the free semimodules carried by objects.
//!
//! Each normalized object has a basis: atoms for a base object, the single
//! point `*` for the unit, tuples for tensors and finite multisets for `!`.
//! Multisets are stored sorted under the canonical order (structural size
//! first, then lexicographic), which also fixes counterexample ordering.

use std::cmp::Ordering;
use std::fmt;

use crate::object::ObjExpr;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasisElem {
    /// `index`-th atom of a declared base object (0-based).
    Atom(String, u32),
    /// The basis point of the tensor unit, written `*`.
    UnitElem,
    /// Componentwise element of a tensor (arity ≥ 2).
    Tuple(Vec<BasisElem>),
    /// Finite multiset over the inner basis; kept sorted.
    MSet(Vec<BasisElem>),
}

impl BasisElem {
    pub fn mset(mut elems: Vec<BasisElem>) -> Self {
        elems.sort();
        BasisElem::MSet(elems)
    }

    pub fn empty_mset() -> Self {
        BasisElem::MSet(Vec::new())
    }

    /// Structural size: atoms and the unit point count 1, tuples and
    /// multisets count 1 plus the sizes of their contents.
    pub fn size(&self) -> u32 {
        match self {
            BasisElem::Atom(..) | BasisElem::UnitElem => 1,
            BasisElem::Tuple(xs) => 1 + xs.iter().map(|x| x.size()).sum::<u32>(),
            BasisElem::MSet(xs) => 1 + xs.iter().map(|x| x.size()).sum::<u32>(),
        }
    }

    /// Algebraic weight: atoms count 1, the unit point 0; containers sum.
    pub fn weight(&self) -> u32 {
        match self {
            BasisElem::Atom(..) => 1,
            BasisElem::UnitElem => 0,
            BasisElem::Tuple(xs) | BasisElem::MSet(xs) => {
                xs.iter().map(|x| x.weight()).sum()
            }
        }
    }

    /// Whether the element has the shape of the given normalized object.
    pub fn matches(&self, obj: &ObjExpr) -> bool {
        match (self, obj) {
            (BasisElem::Atom(b, _), ObjExpr::Base(n)) => b == n,
            (BasisElem::UnitElem, ObjExpr::Unit) => true,
            (BasisElem::Tuple(xs), ObjExpr::Tensor(fs)) => {
                xs.len() == fs.len() && xs.iter().zip(fs).all(|(x, f)| x.matches(f))
            }
            (BasisElem::MSet(xs), ObjExpr::Bang(inner)) => {
                xs.iter().all(|x| x.matches(inner))
            }
            _ => false,
        }
    }

    /// Components of the element along a normalized object's factor list.
    /// The unit has zero components, a single-factor object one, a tensor
    /// its tuple fields.
    pub fn explode(&self, arity: usize) -> Vec<BasisElem> {
        match (arity, self) {
            (0, BasisElem::UnitElem) => Vec::new(),
            (1, x) => vec![x.clone()],
            (_, BasisElem::Tuple(xs)) if xs.len() == arity => xs.clone(),
            _ => panic!("basis element does not match factor arity {arity}: {self}"),
        }
    }

    /// Inverse of [`explode`]: rebuilds the element of an object with the
    /// given factor count from its components.
    pub fn implode(components: Vec<BasisElem>) -> BasisElem {
        match components.len() {
            0 => BasisElem::UnitElem,
            1 => components.into_iter().next().unwrap(),
            _ => BasisElem::Tuple(components),
        }
    }

    /// Splits an element of `A ⊗ B` into its `A` and `B` parts, given the
    /// factor arities of the two sides.
    pub fn split2(&self, left_arity: usize, right_arity: usize) -> (BasisElem, BasisElem) {
        let comps = self.explode(left_arity + right_arity);
        let (l, r) = comps.split_at(left_arity);
        (BasisElem::implode(l.to_vec()), BasisElem::implode(r.to_vec()))
    }

    /// Joins an `A` part and a `B` part into an element of `A ⊗ B`.
    pub fn join2(l: &BasisElem, l_arity: usize, r: &BasisElem, r_arity: usize) -> BasisElem {
        let mut comps = l.explode(l_arity);
        comps.extend(r.explode(r_arity));
        BasisElem::implode(comps)
    }
}

/// Canonical order: size first, then a fixed rank per constructor, then
/// contents lexicographically. Multisets rely on this order for their
/// sorted storage, so it must stay total and stable.
impl Ord for BasisElem {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(e: &BasisElem) -> u8 {
            match e {
                BasisElem::Atom(..) => 0,
                BasisElem::UnitElem => 1,
                BasisElem::Tuple(_) => 2,
                BasisElem::MSet(_) => 3,
            }
        }
        self.size()
            .cmp(&other.size())
            .then_with(|| rank(self).cmp(&rank(other)))
            .then_with(|| match (self, other) {
                (BasisElem::Atom(a, i), BasisElem::Atom(b, j)) => {
                    a.cmp(b).then(i.cmp(j))
                }
                (BasisElem::UnitElem, BasisElem::UnitElem) => Ordering::Equal,
                (BasisElem::Tuple(xs), BasisElem::Tuple(ys))
                | (BasisElem::MSet(xs), BasisElem::MSet(ys)) => xs.cmp(ys),
                _ => unreachable!(),
            })
    }
}

impl PartialOrd for BasisElem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BasisElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElem::Atom(base, i) => write!(f, "{}", atom_name(base, *i)),
            BasisElem::UnitElem => write!(f, "*"),
            BasisElem::Tuple(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            BasisElem::MSet(xs) => {
                write!(f, "[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Printable atom name. A lone lowercase base name denotes atom 0; with an
/// index it is 1-based (`a1`, `a2`, ...). Printing always includes the
/// index so output stays unambiguous across dimensions.
pub fn atom_name(base: &str, index: u32) -> String {
    format!("{}{}", base.to_lowercase(), index + 1)
}

/// Enumerates, in canonical order, every basis element of `obj` with
/// structural size at most `size_cap`. Base dimensions come from `dims`.
pub fn basis_enum(
    obj: &ObjExpr,
    size_cap: u32,
    dims: &dyn Fn(&str) -> Option<u32>,
) -> Result<Vec<BasisElem>, String> {
    let mut out = enum_inner(obj, size_cap, dims)?;
    out.sort();
    Ok(out)
}

fn enum_inner(
    obj: &ObjExpr,
    size_cap: u32,
    dims: &dyn Fn(&str) -> Option<u32>,
) -> Result<Vec<BasisElem>, String> {
    Ok(match obj {
        ObjExpr::Base(n) => {
            let d = dims(n).ok_or_else(|| format!("base `{n}` has no declared dimension"))?;
            if size_cap < 1 {
                Vec::new()
            } else {
                (0..d).map(|i| BasisElem::Atom(n.clone(), i)).collect()
            }
        }
        ObjExpr::Unit => {
            if size_cap < 1 {
                Vec::new()
            } else {
                vec![BasisElem::UnitElem]
            }
        }
        ObjExpr::Tensor(fs) => {
            // Components cost 1 for the tuple wrapper plus their own sizes.
            let mut acc: Vec<(u32, Vec<BasisElem>)> = vec![(1, Vec::new())];
            for f in fs {
                let mut next = Vec::new();
                for (used, partial) in &acc {
                    let budget = size_cap.saturating_sub(*used);
                    for cand in enum_inner(f, budget, dims)? {
                        let s = cand.size();
                        if used + s <= size_cap {
                            let mut p = partial.clone();
                            p.push(cand);
                            next.push((used + s, p));
                        }
                    }
                }
                acc = next;
            }
            acc.into_iter().map(|(_, comps)| BasisElem::Tuple(comps)).collect()
        }
        ObjExpr::Bang(inner) => {
            // Multisets built as sorted non-decreasing sequences.
            let elems = enum_inner(inner, size_cap.saturating_sub(1), dims)?;
            let mut out = Vec::new();
            let mut stack: Vec<(usize, u32, Vec<BasisElem>)> = vec![(0, 1, Vec::new())];
            while let Some((start, used, partial)) = stack.pop() {
                out.push(BasisElem::MSet(partial.clone()));
                for (i, e) in elems.iter().enumerate().skip(start) {
                    let s = e.size();
                    if used + s <= size_cap {
                        let mut p = partial.clone();
                        p.push(e.clone());
                        stack.push((i, used + s, p));
                    }
                }
            }
            out
        }
    })
}

/// Multiset utilities over the sorted-`Vec` representation.
pub mod mset {
    use super::BasisElem;
    use num_bigint::BigInt;
    use num_traits::One;

    /// Union (sum) of two multisets.
    pub fn add(a: &[BasisElem], b: &[BasisElem]) -> Vec<BasisElem> {
        let mut out = a.to_vec();
        out.extend_from_slice(b);
        out.sort();
        out
    }

    /// Runs of equal elements with multiplicities.
    pub fn runs(a: &[BasisElem]) -> Vec<(&BasisElem, usize)> {
        let mut out: Vec<(&BasisElem, usize)> = Vec::new();
        for x in a {
            match out.last_mut() {
                Some((y, k)) if *y == x => *k += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }

    /// The factorial of a multiset: product of the factorials of its
    /// multiplicities.
    pub fn msfact(a: &[BasisElem]) -> BigInt {
        runs(a).into_iter().map(|(_, k)| factorial(k)).product()
    }

    pub fn factorial(n: usize) -> BigInt {
        let mut out = BigInt::one();
        for i in 2..=n {
            out *= i;
        }
        out
    }

    /// All ordered splittings `m = m1 + m2` as distinct `(m1, m2)` pairs,
    /// each with its multiplicity-wise binomial coefficient.
    pub fn splits(m: &[BasisElem]) -> Vec<(Vec<BasisElem>, Vec<BasisElem>, BigInt)> {
        let rs = runs(m);
        let mut out = Vec::new();
        let mut choice = vec![0usize; rs.len()];
        loop {
            let mut m1 = Vec::new();
            let mut m2 = Vec::new();
            let mut coeff = BigInt::one();
            for (i, (x, k)) in rs.iter().enumerate() {
                let take = choice[i];
                for _ in 0..take {
                    m1.push((*x).clone());
                }
                for _ in 0..(k - take) {
                    m2.push((*x).clone());
                }
                coeff *= binomial(*k, take);
            }
            out.push((m1, m2, coeff));
            // odometer over 0..=k per run
            let mut i = 0;
            loop {
                if i == rs.len() {
                    return out;
                }
                if choice[i] < rs[i].1 {
                    choice[i] += 1;
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    pub fn binomial(n: usize, k: usize) -> BigInt {
        if k > n {
            return BigInt::from(0);
        }
        let k = k.min(n - k);
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for i in 0..k {
            num *= n - i;
            den *= i + 1;
        }
        num / den
    }

    /// Distinct permutations of a multiset, as index-free element vectors.
    pub fn distinct_permutations(m: &[BasisElem]) -> Vec<Vec<BasisElem>> {
        let rs: Vec<(BasisElem, usize)> =
            runs(m).into_iter().map(|(x, k)| (x.clone(), k)).collect();
        let mut counts: Vec<usize> = rs.iter().map(|(_, k)| *k).collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(m.len());
        permute_rec(&rs, &mut counts, m.len(), &mut current, &mut out);
        out
    }

    fn permute_rec(
        rs: &[(BasisElem, usize)],
        counts: &mut [usize],
        remaining: usize,
        current: &mut Vec<BasisElem>,
        out: &mut Vec<Vec<BasisElem>>,
    ) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for i in 0..rs.len() {
            if counts[i] > 0 {
                counts[i] -= 1;
                current.push(rs[i].0.clone());
                permute_rec(rs, counts, remaining - 1, current, out);
                current.pop();
                counts[i] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim1(name: &str) -> Option<u32> {
        (name == "A").then_some(1)
    }

    fn a() -> BasisElem {
        BasisElem::Atom("A".into(), 0)
    }

    #[test]
    fn sizes() {
        assert_eq!(a().size(), 1);
        assert_eq!(BasisElem::empty_mset().size(), 1);
        assert_eq!(BasisElem::mset(vec![a(), a()]).size(), 3);
        assert_eq!(BasisElem::Tuple(vec![a(), a()]).size(), 3);
    }

    #[test]
    fn enum_bang_a_cap3() {
        let obj = ObjExpr::bang(ObjExpr::base("A"));
        let got = basis_enum(&obj, 3, &dim1).unwrap();
        assert_eq!(
            got,
            vec![
                BasisElem::empty_mset(),
                BasisElem::mset(vec![a()]),
                BasisElem::mset(vec![a(), a()]),
            ]
        );
    }

    #[test]
    fn enum_unit_cap1() {
        let got = basis_enum(&ObjExpr::Unit, 1, &dim1).unwrap();
        assert_eq!(got, vec![BasisElem::UnitElem]);
    }

    #[test]
    fn enum_bang_bang_a_cap3() {
        // Size enumeration: [] (1), [[]] (2), [[],[]] (3), [[a]] (3).
        let obj = ObjExpr::bang(ObjExpr::bang(ObjExpr::base("A")));
        let got = basis_enum(&obj, 3, &dim1).unwrap();
        let e = BasisElem::empty_mset();
        assert_eq!(
            got,
            vec![
                BasisElem::mset(vec![]),
                BasisElem::mset(vec![e.clone()]),
                BasisElem::mset(vec![e.clone(), e]),
                BasisElem::mset(vec![BasisElem::mset(vec![a()])]),
            ]
        );
    }

    #[test]
    fn canonical_order_is_size_first() {
        let mut v = vec![
            BasisElem::mset(vec![a(), a()]),
            a(),
            BasisElem::empty_mset(),
            BasisElem::mset(vec![a()]),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                a(),
                BasisElem::empty_mset(),
                BasisElem::mset(vec![a()]),
                BasisElem::mset(vec![a(), a()]),
            ]
        );
    }

    #[test]
    fn splits_of_double() {
        let m = vec![a(), a()];
        let mut s = mset::splits(&m);
        s.sort_by(|x, y| x.0.len().cmp(&y.0.len()));
        assert_eq!(s.len(), 3);
        // middle split carries binomial 2
        assert_eq!(s[1].2, num_bigint::BigInt::from(2));
    }

    #[test]
    fn split_join_roundtrip() {
        let e = BasisElem::Tuple(vec![a(), BasisElem::mset(vec![a()]), a()]);
        let (l, r) = e.split2(2, 1);
        assert_eq!(BasisElem::join2(&l, 2, &r, 1), e);
    }
}
