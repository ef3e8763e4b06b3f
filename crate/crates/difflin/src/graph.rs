//! Hierarchical port graphs for sum-free terms and equality modulo the
//! symmetric strict monoidal axioms.
//!
//! Composition concatenates graphs, tensor juxtaposes, symmetry is a pure
//! wire permutation (no node), and functor boxes nest whole graphs inside
//! a node. Equality is decided by a deterministic canonical form: nodes
//! are colored by kind and nested content, colors are refined by ordered
//! port adjacency to a fixpoint, and remaining ties are broken by
//! backtracking over minimal color classes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::object::ObjExpr;
use crate::term::{GenKind, MorTerm, TypeError};

/// Where a node input port or graph output draws its value from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    /// `i`-th graph input.
    Input(usize),
    /// `port`-th output of node `node`.
    Node { node: usize, port: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub label: NodeLabel,
    /// Types of input ports, in order.
    pub ins: Vec<ObjExpr>,
    /// Types of output ports, in order.
    pub outs: Vec<ObjExpr>,
    /// Sources feeding the input ports, parallel to `ins`.
    pub sources: Vec<Source>,
    /// Nested graph for functor boxes.
    pub nested: Option<Box<PortGraph>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeLabel {
    Gen(GenKind, Vec<ObjExpr>),
    Lin(String),
    Box_,
}

/// A string diagram with ordered boundaries. Wires are implicit: every
/// node input port and every graph output has exactly one source.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PortGraph {
    pub nodes: Vec<Node>,
    pub inputs: Vec<ObjExpr>,
    pub outputs: Vec<ObjExpr>,
    /// Sources feeding the graph outputs, parallel to `outputs`.
    pub output_sources: Vec<Source>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("term contains formal sums, negation or zero; no graph form")]
    SumBearing,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("boundary type mismatch: {0} vs {1}")]
    Boundary(String, String),
}

/// Translates a typed, sum-free term into a port graph whose boundary
/// factor lists equal the normalized `dom`/`cod` factor lists.
pub fn term_to_graph(t: &MorTerm) -> Result<PortGraph, GraphError> {
    if !t.is_sum_free() {
        return Err(GraphError::SumBearing);
    }
    t.infer_type()?;
    Ok(build(t))
}

fn wire_types(obj: &ObjExpr) -> Vec<ObjExpr> {
    obj.factors().to_vec()
}

fn build(t: &MorTerm) -> PortGraph {
    match t {
        MorTerm::Id(a) => {
            let tys = wire_types(a);
            PortGraph {
                nodes: Vec::new(),
                output_sources: (0..tys.len()).map(Source::Input).collect(),
                inputs: tys.clone(),
                outputs: tys,
            }
        }
        MorTerm::Sym(a, b) => {
            let la = wire_types(a);
            let lb = wire_types(b);
            let mut inputs = la.clone();
            inputs.extend(lb.clone());
            let mut outputs = lb.clone();
            outputs.extend(la.clone());
            let mut srcs: Vec<Source> =
                (la.len()..la.len() + lb.len()).map(Source::Input).collect();
            srcs.extend((0..la.len()).map(Source::Input));
            PortGraph { nodes: Vec::new(), inputs, outputs, output_sources: srcs }
        }
        MorTerm::Gen(kind, params) => {
            let (dom, cod) = t.infer_type().expect("typed before build");
            let ins = wire_types(&dom);
            let outs = wire_types(&cod);
            let node = Node {
                label: NodeLabel::Gen(*kind, params.clone()),
                sources: (0..ins.len()).map(Source::Input).collect(),
                ins: ins.clone(),
                outs: outs.clone(),
                nested: None,
            };
            PortGraph {
                nodes: vec![node],
                inputs: ins,
                outputs: outs.clone(),
                output_sources: (0..outs.len())
                    .map(|p| Source::Node { node: 0, port: p })
                    .collect(),
            }
        }
        MorTerm::Lin(l) => {
            let ins = wire_types(&l.dom);
            let outs = wire_types(&l.cod);
            let node = Node {
                label: NodeLabel::Lin(l.name.clone()),
                sources: (0..ins.len()).map(Source::Input).collect(),
                ins: ins.clone(),
                outs: outs.clone(),
                nested: None,
            };
            PortGraph {
                nodes: vec![node],
                inputs: ins,
                outputs: outs.clone(),
                output_sources: (0..outs.len())
                    .map(|p| Source::Node { node: 0, port: p })
                    .collect(),
            }
        }
        MorTerm::BangBox(inner) => {
            let nested = build(inner);
            let (dom, cod) = t.infer_type().expect("typed before build");
            let ins = wire_types(&dom);
            let outs = wire_types(&cod);
            let node = Node {
                label: NodeLabel::Box_,
                sources: (0..ins.len()).map(Source::Input).collect(),
                ins: ins.clone(),
                outs: outs.clone(),
                nested: Some(Box::new(nested)),
            };
            PortGraph {
                nodes: vec![node],
                inputs: ins,
                outputs: outs.clone(),
                output_sources: (0..outs.len())
                    .map(|p| Source::Node { node: 0, port: p })
                    .collect(),
            }
        }
        MorTerm::Ten(parts) => {
            let mut acc = PortGraph::default();
            for p in parts {
                let g = build(p);
                let node_off = acc.nodes.len();
                let input_off = acc.inputs.len();
                let shift = |s: &Source| match s {
                    Source::Input(i) => Source::Input(i + input_off),
                    Source::Node { node, port } => {
                        Source::Node { node: node + node_off, port: *port }
                    }
                };
                acc.nodes.extend(g.nodes.iter().map(|n| Node {
                    sources: n.sources.iter().map(&shift).collect(),
                    ..n.clone()
                }));
                acc.inputs.extend(g.inputs);
                acc.outputs.extend(g.outputs);
                acc.output_sources.extend(g.output_sources.iter().map(&shift));
            }
            acc
        }
        MorTerm::Comp(parts) => {
            let mut iter = parts.iter();
            let mut acc = build(iter.next().expect("nonempty composition"));
            for p in iter {
                let g = build(p);
                let node_off = acc.nodes.len();
                // the right graph's `Input(i)` resolves to the left graph's
                // i-th output source
                let resolve = |s: &Source| match s {
                    Source::Input(i) => acc.output_sources[*i].clone(),
                    Source::Node { node, port } => {
                        Source::Node { node: node + node_off, port: *port }
                    }
                };
                let new_nodes: Vec<Node> = g
                    .nodes
                    .iter()
                    .map(|n| Node {
                        sources: n.sources.iter().map(&resolve).collect(),
                        ..n.clone()
                    })
                    .collect();
                let new_out: Vec<Source> = g.output_sources.iter().map(&resolve).collect();
                acc.nodes.extend(new_nodes);
                acc.outputs = g.outputs;
                acc.output_sources = new_out;
            }
            acc
        }
        MorTerm::Sum(_) | MorTerm::Neg(_) | MorTerm::Zero(..) => {
            unreachable!("sum-bearing terms rejected before build")
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical form

/// A canonical, isomorphism-invariant code of a graph. Two graphs with the
/// same boundary types are isomorphic iff their codes coincide.
pub fn canonical_code(g: &PortGraph) -> String {
    let n = g.nodes.len();
    // initial colors: label plus nested code
    let mut colors: Vec<String> = g
        .nodes
        .iter()
        .map(|node| {
            let nested = node.nested.as_deref().map(canonical_code).unwrap_or_default();
            format!(
                "{:?}|{}|{}|{}",
                node.label,
                node.ins.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
                node.outs.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
                nested
            )
        })
        .collect();
    // refinement by ordered adjacency (ports are ordered, so signatures
    // are sequences, anchored by boundary indices)
    loop {
        let sigs: Vec<String> = (0..n)
            .map(|i| {
                let mut s = colors[i].clone();
                for src in &g.nodes[i].sources {
                    match src {
                        Source::Input(k) => {
                            let _ = write!(s, ";in{k}");
                        }
                        Source::Node { node, port } => {
                            let _ = write!(s, ";({})#{port}", colors[*node]);
                        }
                    }
                }
                let mut consumers: Vec<String> = Vec::new();
                for (j, other) in g.nodes.iter().enumerate() {
                    for (p, src) in other.sources.iter().enumerate() {
                        if let Source::Node { node, port } = src {
                            if *node == i {
                                consumers.push(format!("{}@{p}>{port}", colors[j]));
                            }
                        }
                    }
                }
                for (k, src) in g.output_sources.iter().enumerate() {
                    if let Source::Node { node, port } = src {
                        if *node == i {
                            consumers.push(format!("out{k}>{port}"));
                        }
                    }
                }
                consumers.sort();
                for c in consumers {
                    let _ = write!(s, ";{c}");
                }
                s
            })
            .collect();
        // ranks come from the sorted signature strings, so color ids are
        // invariant under node renumbering
        let mut sorted: Vec<&String> = sigs.iter().collect();
        sorted.sort();
        sorted.dedup();
        let palette: BTreeMap<&String, usize> =
            sorted.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        let next: Vec<String> = sigs.iter().map(|s| format!("c{:04}", palette[s])).collect();
        if next == colors {
            break;
        }
        colors = next;
    }

    fn serialize(g: &PortGraph, order: &[usize], colors: &[String]) -> String {
        let pos: BTreeMap<usize, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut s = String::new();
        let _ = write!(
            s,
            "in:{};out:{};",
            g.inputs.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
            g.outputs.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        );
        for &v in order {
            let node = &g.nodes[v];
            let _ = write!(s, "[{}", colors[v]);
            for src in &node.sources {
                match src {
                    Source::Input(k) => {
                        let _ = write!(s, ",I{k}");
                    }
                    Source::Node { node, port } => {
                        let _ = write!(s, ",N{}#{port}", pos[node]);
                    }
                }
            }
            s.push(']');
        }
        for src in &g.output_sources {
            match src {
                Source::Input(k) => {
                    let _ = write!(s, "OI{k}");
                }
                Source::Node { node, port } => {
                    let _ = write!(s, "ON{}#{port}", pos[node]);
                }
            }
        }
        s
    }

    fn rec(
        g: &PortGraph,
        colors: &[String],
        order: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<String>,
    ) {
        let n = g.nodes.len();
        if order.len() == n {
            let code = serialize(g, order, colors);
            if best.as_ref().map_or(true, |b| code < *b) {
                *best = Some(code);
            }
            return;
        }
        let min_color = (0..n)
            .filter(|&i| !used[i])
            .map(|i| &colors[i])
            .min()
            .unwrap()
            .clone();
        for i in 0..n {
            if !used[i] && colors[i] == min_color {
                used[i] = true;
                order.push(i);
                rec(g, colors, order, used, best);
                order.pop();
                used[i] = false;
            }
        }
    }

    if n == 0 {
        return serialize(g, &[], &colors);
    }
    let mut best = None;
    let mut order = Vec::new();
    let mut used = vec![false; n];
    rec(g, &colors, &mut order, &mut used, &mut best);
    best.unwrap()
}

/// Boundary-, type- and nesting-preserving isomorphism test via canonical
/// codes. Requires equal boundary types.
pub fn graphs_equal(g1: &PortGraph, g2: &PortGraph) -> Result<bool, GraphError> {
    if g1.inputs != g2.inputs || g1.outputs != g2.outputs {
        return Err(GraphError::Boundary(
            format!("{:?} -> {:?}", g1.inputs, g1.outputs),
            format!("{:?} -> {:?}", g2.inputs, g2.outputs),
        ));
    }
    Ok(canonical_code(g1) == canonical_code(g2))
}

/// DOT rendering with boundary ordering encoded in node names; boxes
/// become clusters.
pub fn emit_dot(g: &PortGraph) -> String {
    let mut out = String::from("digraph diagram {\n  rankdir=TB;\n");
    emit_dot_inner(g, "", &mut out);
    out.push_str("}\n");
    out
}

fn emit_dot_inner(g: &PortGraph, prefix: &str, out: &mut String) {
    for (i, ty) in g.inputs.iter().enumerate() {
        let _ = writeln!(out, "  \"{prefix}in{i}\" [shape=point, xlabel=\"{ty}\"];");
    }
    for (i, ty) in g.outputs.iter().enumerate() {
        let _ = writeln!(out, "  \"{prefix}out{i}\" [shape=point, xlabel=\"{ty}\"];");
    }
    for (i, node) in g.nodes.iter().enumerate() {
        match &node.nested {
            Some(nested) => {
                let _ = writeln!(out, "  subgraph \"cluster_{prefix}n{i}\" {{ label=\"!\";");
                emit_dot_inner(nested, &format!("{prefix}n{i}_"), out);
                let _ = writeln!(out, "  }}");
                let _ = writeln!(out, "  \"{prefix}n{i}\" [label=\"!box\", shape=box];");
            }
            None => {
                let label = match &node.label {
                    NodeLabel::Gen(kind, params) => {
                        let ps: Vec<String> = params.iter().map(|p| p.to_string()).collect();
                        if ps.is_empty() {
                            kind.name().to_string()
                        } else {
                            format!("{}{{{}}}", kind.name(), ps.join(","))
                        }
                    }
                    NodeLabel::Lin(name) => format!("lin {name}"),
                    NodeLabel::Box_ => "!box".to_string(),
                };
                let _ = writeln!(out, "  \"{prefix}n{i}\" [label=\"{label}\", shape=box];");
            }
        }
    }
    let src_name = |s: &Source| match s {
        Source::Input(k) => format!("{prefix}in{k}"),
        Source::Node { node, .. } => format!("{prefix}n{node}"),
    };
    for (i, node) in g.nodes.iter().enumerate() {
        for (p, s) in node.sources.iter().enumerate() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{prefix}n{i}\" [label=\"{}\"];",
                src_name(s),
                node.ins.get(p).map(|t| t.to_string()).unwrap_or_default()
            );
        }
    }
    for (k, s) in g.output_sources.iter().enumerate() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{prefix}out{k}\" [label=\"{}\"];",
            src_name(s),
            g.outputs.get(k).map(|t| t.to_string()).unwrap_or_default()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisElem;
    use crate::parse::{parse_term, LinEnv};
    use crate::term::LinMap;
    use num_rational::BigRational;

    fn lins() -> LinEnv {
        let mut env = LinEnv::new();
        let one = BigRational::from_integer(1.into());
        env.insert(
            "f".into(),
            LinMap {
                name: "f".into(),
                dom: ObjExpr::base("A"),
                cod: ObjExpr::base("A"),
                entries: vec![(
                    BasisElem::Atom("A".into(), 0),
                    BasisElem::Atom("A".into(), 0),
                    one,
                )],
            },
        );
        env.insert(
            "g".into(),
            LinMap {
                name: "g".into(),
                dom: ObjExpr::base("B"),
                cod: ObjExpr::base("B"),
                entries: vec![],
            },
        );
        env
    }

    fn graph(src: &str) -> PortGraph {
        term_to_graph(&parse_term(src, &lins()).unwrap()).unwrap()
    }

    #[test]
    fn interchange_law_holds_graphically() {
        let g1 = graph("(lin f * id{B}) ; (id{A} * lin g)");
        let g2 = graph("(id{A} * lin g) ; (lin f * id{B})");
        assert!(graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn symmetry_involution_is_identity_graph() {
        let g1 = graph("sigma{A,B} ; sigma{B,A}");
        let g2 = graph("id{A*B}");
        assert!(graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn linear_rule_is_not_an_smc_law() {
        let g1 = graph("eta{A} ; eps{A}");
        let g2 = graph("id{A}");
        assert!(!graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn cocommutativity_is_not_an_smc_law() {
        let g1 = graph("copy{A}");
        let g2 = graph("copy{A} ; sigma{!A,!A}");
        assert!(!graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn tensor_bracketings_agree() {
        let g1 = graph("(eta{A} * eta{A}) * (eta{B} * eta{B})");
        let g2 = graph("eta{A} * (eta{A} * (eta{B} * eta{B}))");
        assert!(graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn symmetry_naturality() {
        let g1 = graph("(lin f * lin g) ; sigma{A,B}");
        let g2 = graph("sigma{A,B} ; (lin g * lin f)");
        assert!(graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn boxes_never_flatten() {
        let g1 = graph("bang(lin f ; lin f)");
        let g2 = graph("bang(lin f) ; bang(lin f)");
        assert!(!graphs_equal(&g1, &g2).unwrap());
    }

    #[test]
    fn canonicalization_deterministic() {
        let g = graph("eta{A} ; copy{A} ; nabla{A}");
        assert_eq!(canonical_code(&g), canonical_code(&g.clone()));
    }

    #[test]
    fn sum_bearing_rejected() {
        let t = parse_term("eta{A} + eta{A}", &lins()).unwrap();
        assert_eq!(term_to_graph(&t).unwrap_err(), GraphError::SumBearing);
    }

    #[test]
    fn boundary_mismatch_is_an_error() {
        let g1 = graph("id{A}");
        let g2 = graph("id{B}");
        assert!(matches!(graphs_equal(&g1, &g2), Err(GraphError::Boundary(..))));
    }

    #[test]
    fn dot_output_shapes() {
        let g = graph("id{A}");
        let dot = emit_dot(&g);
        assert!(dot.contains("in0") && dot.contains("out0"));
        assert!(!dot.contains("\"n0\""));

        let g = graph("eta{A} ; copy{A}");
        let dot = emit_dot(&g);
        assert_eq!(dot.matches("shape=box").count(), 2);

        let g = graph("bang(lin f)");
        let dot = emit_dot(&g);
        assert!(dot.contains("cluster"));
    }
}
