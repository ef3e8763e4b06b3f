//! Recursive-descent parser for objects, terms, basis-element literals and
//! declaration files.
//!
//! Term grammar (loosest to tightest): `+` sums, unary `-`, `;` diagrammatic
//! composition, `*` tensor, then atoms. Objects use `!` (tightest) and `*`.
//! Files hold one declaration per line: `base A dim 2`,
//! `lin f : A -> B { a1->b1: 2, ... }`, `let NAME = term`, plus model
//! configuration lines `semiring ...`, `size_cap k`, `fallback_cap k`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::basis::BasisElem;
use crate::object::ObjExpr;
use crate::semiring::SemiringId;
use crate::term::{GenKind, LinMap, MorTerm};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_char()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            return self.err("expected identifier");
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(kw) {
            let after = rest[kw.len()..].chars().next();
            if after.map_or(true, |c| !c.is_alphanumeric() && c != '_') {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek_char() == Some('-') {
            self.pos += 1;
        }
        while let Some(c) = self.peek_char() {
            if c.is_ascii_digit() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = &self.src[start..self.pos];
        if s.is_empty() || s == "-" {
            return self.err("expected integer");
        }
        Ok(s.parse().unwrap())
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

// ---------------------------------------------------------------------------
// Objects

fn parse_obj_atom(lx: &mut Lexer) -> Result<ObjExpr, ParseError> {
    if lx.eat('!') {
        let inner = parse_obj_atom(lx)?;
        return Ok(ObjExpr::bang(inner));
    }
    if lx.eat('(') {
        let inner = parse_obj_expr(lx)?;
        lx.expect(')')?;
        return Ok(inner);
    }
    let id = lx.ident()?;
    if id == "I" {
        Ok(ObjExpr::Unit)
    } else {
        Ok(ObjExpr::Base(id))
    }
}

fn parse_obj_expr(lx: &mut Lexer) -> Result<ObjExpr, ParseError> {
    let mut factors = vec![parse_obj_atom(lx)?];
    while lx.eat('*') {
        factors.push(parse_obj_atom(lx)?);
    }
    Ok(ObjExpr::tensor(factors))
}

/// Parses an object expression, consuming all input.
pub fn parse_object(src: &str) -> Result<ObjExpr, ParseError> {
    let mut lx = Lexer::new(src);
    let obj = parse_obj_expr(&mut lx)?;
    if !lx.at_end() {
        return lx.err("trailing input after object");
    }
    Ok(obj)
}

// ---------------------------------------------------------------------------
// Terms

/// Named linear maps available to `lin NAME` references.
pub type LinEnv = BTreeMap<String, LinMap>;

fn gen_from_name(name: &str) -> Option<GenKind> {
    Some(match name {
        "delta" => GenKind::Delta,
        "eps" => GenKind::Eps,
        "copy" => GenKind::Copy,
        "weak" => GenKind::Weak,
        "m" => GenKind::M,
        "mI" => GenKind::MI,
        "nabla" => GenKind::Nabla,
        "u" => GenKind::U,
        "eta" => GenKind::Eta,
        "d" => GenKind::D,
        "S" => GenKind::S,
        _ => return None,
    })
}

fn parse_params(lx: &mut Lexer, count: usize) -> Result<Vec<ObjExpr>, ParseError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    lx.expect('{')?;
    let mut params = Vec::new();
    for i in 0..count {
        if i > 0 {
            lx.expect(',')?;
        }
        params.push(parse_obj_expr(lx)?);
    }
    lx.expect('}')?;
    Ok(params)
}

fn parse_term_atom(lx: &mut Lexer, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    if lx.eat('(') {
        let t = parse_term_sum(lx, lins)?;
        lx.expect(')')?;
        return Ok(t);
    }
    if lx.peek() == Some('0') {
        lx.expect('0')?;
        lx.expect(':')?;
        let dom = parse_obj_expr(lx)?;
        if !lx.eat_str("->") {
            return lx.err("expected `->` in zero-morphism type");
        }
        let cod = parse_obj_expr(lx)?;
        return Ok(MorTerm::Zero(dom, cod));
    }
    if lx.keyword("id") {
        lx.expect('{')?;
        let obj = parse_obj_expr(lx)?;
        lx.expect('}')?;
        return Ok(MorTerm::Id(obj));
    }
    if lx.keyword("sigma") {
        let params = parse_params(lx, 2)?;
        let mut it = params.into_iter();
        return Ok(MorTerm::Sym(it.next().unwrap(), it.next().unwrap()));
    }
    if lx.keyword("bang") {
        lx.expect('(')?;
        let inner = parse_term_sum(lx, lins)?;
        lx.expect(')')?;
        return Ok(MorTerm::bang(inner));
    }
    if lx.keyword("lin") {
        let name = lx.ident()?;
        let l = lins
            .get(&name)
            .ok_or_else(|| ParseError { pos: lx.pos, msg: format!("unknown lin name `{name}`") })?;
        return Ok(MorTerm::Lin(l.clone()));
    }
    let save = lx.pos;
    let id = lx.ident()?;
    if let Some(kind) = gen_from_name(&id) {
        let params = parse_params(lx, kind.param_count())?;
        return Ok(MorTerm::Gen(kind, params));
    }
    lx.pos = save;
    lx.err(format!("unknown term atom `{id}`"))
}

fn parse_term_tensor(lx: &mut Lexer, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    let mut parts = vec![parse_term_atom(lx, lins)?];
    while lx.eat('*') {
        parts.push(parse_term_atom(lx, lins)?);
    }
    Ok(MorTerm::ten(parts))
}

fn parse_term_comp(lx: &mut Lexer, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    let mut parts = vec![parse_term_tensor(lx, lins)?];
    while lx.eat(';') {
        parts.push(parse_term_tensor(lx, lins)?);
    }
    Ok(MorTerm::comp(parts))
}

fn parse_term_neg(lx: &mut Lexer, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    if lx.eat('-') {
        let inner = parse_term_neg(lx, lins)?;
        return Ok(MorTerm::neg(inner));
    }
    parse_term_comp(lx, lins)
}

fn parse_term_sum(lx: &mut Lexer, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    let mut parts = vec![parse_term_neg(lx, lins)?];
    while lx.eat('+') {
        parts.push(parse_term_neg(lx, lins)?);
    }
    if parts.len() == 1 {
        Ok(parts.pop().unwrap())
    } else {
        Ok(MorTerm::Sum(parts))
    }
}

/// Parses a morphism term, consuming all input. Typing is a separate step.
pub fn parse_term(src: &str, lins: &LinEnv) -> Result<MorTerm, ParseError> {
    let mut lx = Lexer::new(src);
    let t = parse_term_sum(&mut lx, lins)?;
    if !lx.at_end() {
        return lx.err("trailing input after term");
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Basis-element literals: `a`, `a1`, `*`, `(a,b)`, `[a,a]`, `[[a],[]]`

/// Resolves an atom literal against declared bases: a lone lowercased base
/// name means atom 0, a trailing 1-based index selects others.
fn resolve_atom(
    word: &str,
    dims: &BTreeMap<String, u32>,
    pos: usize,
) -> Result<BasisElem, ParseError> {
    for (base, dim) in dims {
        let lower = base.to_lowercase();
        if let Some(rest) = word.strip_prefix(&lower) {
            if rest.is_empty() {
                if *dim >= 1 {
                    return Ok(BasisElem::Atom(base.clone(), 0));
                }
            } else if let Ok(ix) = rest.parse::<u32>() {
                if ix >= 1 && ix <= *dim {
                    return Ok(BasisElem::Atom(base.clone(), ix - 1));
                }
            }
        }
    }
    Err(ParseError { pos, msg: format!("unknown atom literal `{word}`") })
}

fn parse_elem(lx: &mut Lexer, dims: &BTreeMap<String, u32>) -> Result<BasisElem, ParseError> {
    if lx.eat('*') {
        return Ok(BasisElem::UnitElem);
    }
    if lx.eat('(') {
        let mut comps = Vec::new();
        if !lx.eat(')') {
            loop {
                comps.push(parse_elem(lx, dims)?);
                if lx.eat(')') {
                    break;
                }
                lx.expect(',')?;
            }
        }
        return Ok(BasisElem::implode(comps));
    }
    if lx.eat('[') {
        let mut elems = Vec::new();
        if !lx.eat(']') {
            loop {
                elems.push(parse_elem(lx, dims)?);
                if lx.eat(']') {
                    break;
                }
                lx.expect(',')?;
            }
        }
        return Ok(BasisElem::mset(elems));
    }
    let pos = lx.pos;
    let word = lx.ident()?;
    resolve_atom(&word, dims, pos)
}

/// Parses a basis-element literal, consuming all input.
pub fn parse_basis_elem(
    src: &str,
    dims: &BTreeMap<String, u32>,
) -> Result<BasisElem, ParseError> {
    let mut lx = Lexer::new(src);
    let e = parse_elem(&mut lx, dims)?;
    if !lx.at_end() {
        return lx.err("trailing input after basis element");
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Declaration files

/// Parsed contents of a term/model file.
#[derive(Debug, Default, Clone)]
pub struct FileEnv {
    pub dims: BTreeMap<String, u32>,
    pub lins: LinEnv,
    /// `let` bindings in file order.
    pub lets: Vec<(String, MorTerm)>,
    pub semiring: Option<SemiringId>,
    pub size_cap: Option<u32>,
    pub fallback_cap: Option<u32>,
}

impl FileEnv {
    pub fn term(&self, name: Option<&str>) -> Result<&MorTerm, String> {
        match name {
            Some(n) => self
                .lets
                .iter()
                .rev()
                .find(|(k, _)| k == n)
                .map(|(_, t)| t)
                .ok_or_else(|| format!("no `let {n} = ...` in file")),
            None => self
                .lets
                .last()
                .map(|(_, t)| t)
                .ok_or_else(|| "file contains no `let` declaration".to_string()),
        }
    }
}

fn parse_coeff(lx: &mut Lexer) -> Result<BigRational, ParseError> {
    let num = lx.integer()?;
    if lx.eat('/') {
        let den = lx.integer()?;
        if den == BigInt::from(0) {
            return lx.err("zero denominator");
        }
        Ok(BigRational::new(num, den))
    } else {
        Ok(BigRational::from_integer(num))
    }
}

/// Parses a whole declaration file. Later declarations may refer to earlier
/// `lin` names; `let` bodies are typed by the caller.
pub fn parse_file(src: &str) -> Result<FileEnv, ParseError> {
    let mut env = FileEnv::default();
    let mut offset = 0usize;
    for line in src.lines() {
        let res = parse_file_line(line, &mut env);
        if let Err(mut e) = res {
            e.pos += offset;
            return Err(e);
        }
        offset += line.len() + 1;
    }
    Ok(env)
}

fn parse_file_line(line: &str, env: &mut FileEnv) -> Result<(), ParseError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(());
    }
    let mut lx = Lexer::new(line);
    if lx.keyword("base") {
        let name = lx.ident()?;
        if !lx.keyword("dim") {
            return lx.err("expected `dim`");
        }
        let d = lx.integer()?;
        let d: u32 = d
            .try_into()
            .map_err(|_| ParseError { pos: lx.pos, msg: "dimension out of range".into() })?;
        env.dims.insert(name, d);
    } else if lx.keyword("lin") {
        let name = lx.ident()?;
        lx.expect(':')?;
        let dom = parse_obj_expr(&mut lx)?;
        if !lx.eat_str("->") {
            return lx.err("expected `->` in lin type");
        }
        let cod = parse_obj_expr(&mut lx)?;
        lx.expect('{')?;
        let mut entries = Vec::new();
        if !lx.eat('}') {
            loop {
                let i = parse_elem(&mut lx, &env.dims)?;
                if !lx.eat_str("->") {
                    return lx.err("expected `->` in lin entry");
                }
                let o = parse_elem(&mut lx, &env.dims)?;
                lx.expect(':')?;
                let c = parse_coeff(&mut lx)?;
                if !i.matches(&dom) {
                    return lx.err(format!("lin entry input `{i}` does not match domain {dom}"));
                }
                if !o.matches(&cod) {
                    return lx.err(format!("lin entry output `{o}` does not match codomain {cod}"));
                }
                entries.push((i, o, c));
                if lx.eat('}') {
                    break;
                }
                lx.expect(',')?;
            }
        }
        env.lins.insert(name.clone(), LinMap { name, dom, cod, entries });
    } else if lx.keyword("let") {
        let name = lx.ident()?;
        lx.expect('=')?;
        let rest = &line[lx.pos..];
        let t = parse_term(rest, &env.lins)?;
        env.lets.push((name, t));
        return Ok(());
    } else if lx.keyword("semiring") {
        let id = lx.ident()?;
        env.semiring = Some(match id.as_str() {
            "rational" => SemiringId::RatExact,
            "integer" => SemiringId::IntExact,
            "natural" => SemiringId::Nat,
            "boolean" => SemiringId::Boolean,
            other => {
                return lx.err(format!(
                    "unknown semiring `{other}` (rational|integer|natural|boolean)"
                ))
            }
        });
    } else if lx.keyword("size_cap") {
        let v = lx.integer()?;
        env.size_cap = Some(v.try_into().map_err(|_| ParseError {
            pos: lx.pos,
            msg: "size_cap out of range".into(),
        })?);
    } else if lx.keyword("fallback_cap") {
        let v = lx.integer()?;
        env.fallback_cap = Some(v.try_into().map_err(|_| ParseError {
            pos: lx.pos,
            msg: "fallback_cap out of range".into(),
        })?);
    } else {
        return lx.err("expected declaration (base/lin/let/semiring/size_cap/fallback_cap)");
    }
    if !lx.at_end() {
        return lx.err("trailing input after declaration");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object::ObjExpr;

    #[test]
    fn object_examples() {
        // unit stripped by strictness
        assert_eq!(parse_object("!A * I").unwrap(), ObjExpr::bang(ObjExpr::base("A")));
        assert_eq!(
            parse_object("!(A*B)").unwrap(),
            ObjExpr::bang(ObjExpr::tensor(vec![ObjExpr::base("A"), ObjExpr::base("B")]))
        );
        assert!(parse_object("A * * B").is_err());
    }

    #[test]
    fn term_examples() {
        let lins = LinEnv::new();
        let t = parse_term("eta{A} ; eps{A}", &lins).unwrap();
        assert_eq!(
            t,
            MorTerm::comp(vec![
                MorTerm::gen(GenKind::Eta, vec![ObjExpr::base("A")]),
                MorTerm::gen(GenKind::Eps, vec![ObjExpr::base("A")]),
            ])
        );
        assert!(parse_term("eta{A} ;", &lins).is_err());
        assert!(parse_term("lin nosuch", &lins).is_err());
    }

    #[test]
    fn precedence_star_tighter_than_semi_plus_loosest() {
        let lins = LinEnv::new();
        let t = parse_term("eta{A} ; weak{A} * id{I} + eta{A} ; weak{A}", &lins).unwrap();
        match t {
            MorTerm::Sum(parts) => assert_eq!(parts.len(), 2),
            other => panic!("expected sum, got {other}"),
        }
    }

    #[test]
    fn zero_literal() {
        let lins = LinEnv::new();
        let t = parse_term("0 : A -> B", &lins).unwrap();
        assert_eq!(t, MorTerm::Zero(ObjExpr::base("A"), ObjExpr::base("B")));
    }

    #[test]
    fn basis_literals() {
        let mut dims = BTreeMap::new();
        dims.insert("A".to_string(), 2);
        dims.insert("B".to_string(), 1);
        assert_eq!(
            parse_basis_elem("[a1,a1]", &dims).unwrap(),
            BasisElem::mset(vec![
                BasisElem::Atom("A".into(), 0),
                BasisElem::Atom("A".into(), 0)
            ])
        );
        assert_eq!(
            parse_basis_elem("(a2,b)", &dims).unwrap(),
            BasisElem::Tuple(vec![BasisElem::Atom("A".into(), 1), BasisElem::Atom("B".into(), 0)])
        );
        assert_eq!(parse_basis_elem("*", &dims).unwrap(), BasisElem::UnitElem);
        assert_eq!(
            parse_basis_elem("[[a1],[]]", &dims).unwrap(),
            BasisElem::mset(vec![
                BasisElem::mset(vec![BasisElem::Atom("A".into(), 0)]),
                BasisElem::empty_mset(),
            ])
        );
        assert!(parse_basis_elem("z9", &dims).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let src = "\
# demo
base A dim 2
base B dim 1
semiring rational
size_cap 4
lin f : A -> B { a1->b: 2, a2->b: 1/3 }
let t = lin f ; eta{B}
";
        let env = parse_file(src).unwrap();
        assert_eq!(env.dims["A"], 2);
        assert_eq!(env.semiring, Some(SemiringId::RatExact));
        assert_eq!(env.size_cap, Some(4));
        let t = env.term(Some("t")).unwrap();
        assert!(t.infer_type().is_ok());
    }
}
