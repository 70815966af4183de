//! The line-oriented `.cph` text format.
//!
//! ```text
//! cph 2 2
//! parts 2 2
//! bounds 1 2
//! colors 0 1
//! colors 0,1 2
//! colors 1 1
//! edge 0,1 1 1 0
//! ```
//!
//! `bounds` is optional (defaults to the largest class size per arity),
//! `colors` lines may carry a trailing `inv` flag marking color 0 invisible,
//! unlisted classes have one color and unlisted edges have color 0.
//! `#` starts a comment.

use crate::error::{Error, Result};
use crate::model::{ColorId, ColoredHypergraph, Edge, IndexSet, Params, SimplicialComplex};
use std::collections::BTreeMap;
use std::fmt::Write;

/// A parsed file: the raw colored graph plus the classes flagged `inv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CphDocument {
    pub graph: ColoredHypergraph,
    pub invisible: Vec<IndexSet>,
}

impl CphDocument {
    pub fn into_complex(self) -> SimplicialComplex {
        SimplicialComplex::from_graph(self.graph, &self.invisible)
    }
}

fn write_doc(g: &ColoredHypergraph, invisible: &dyn Fn(IndexSet) -> bool) -> String {
    let p = g.params();
    let mut out = String::new();
    let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(" ");
    writeln!(out, "cph {} {}", p.r, p.k).unwrap();
    writeln!(out, "parts {}", join(&mut p.part_sizes.iter().map(|n| n.to_string()))).unwrap();
    writeln!(out, "bounds {}", join(&mut p.b.iter().map(|b| b.to_string()))).unwrap();
    for class in g.classes() {
        let flag = if invisible(class.index()) { " inv" } else { "" };
        writeln!(out, "colors {} {}{flag}", class.index(), class.size()).unwrap();
    }
    for class in g.classes() {
        for (off, &c) in class.table().iter().enumerate() {
            if c.0 != 0 {
                let e = class.edge_at(off);
                let verts = join(&mut e.verts.iter().map(|v| v.to_string()));
                writeln!(out, "edge {} {verts} {c}", e.index).unwrap();
            }
        }
    }
    out
}

/// Canonical rendering: classes and edges in lexicographic order, only
/// nonzero edges listed.
pub fn render(g: &ColoredHypergraph) -> String {
    write_doc(g, &|_| false)
}

pub fn render_complex(s: &SimplicialComplex) -> String {
    write_doc(s.graph(), &|i| s.has_invisible(i))
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::parse(line, format!("bad {what} {tok:?}")))
}

pub fn parse_document(text: &str) -> Result<CphDocument> {
    let mut header: Option<(usize, usize)> = None;
    let mut parts: Option<Vec<usize>> = None;
    let mut bounds: Option<Vec<u32>> = None;
    let mut sizes: BTreeMap<IndexSet, (u32, bool)> = BTreeMap::new();
    let mut edges: Vec<(usize, Edge, ColorId)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let kw = toks.next().unwrap();
        if header.is_none() && kw != "cph" {
            return Err(Error::parse(ln, "expected `cph r k` header"));
        }
        match kw {
            "cph" => {
                if header.is_some() {
                    return Err(Error::parse(ln, "duplicate header"));
                }
                header = Some((num(ln, toks.next(), "r")?, num(ln, toks.next(), "k")?));
            }
            "parts" => parts = Some(toks.map(|t| num(ln, Some(t), "part size")).collect::<Result<_>>()?),
            "bounds" => bounds = Some(toks.map(|t| num(ln, Some(t), "bound")).collect::<Result<_>>()?),
            "colors" => {
                let index: IndexSet = toks
                    .next()
                    .ok_or_else(|| Error::parse(ln, "missing index"))?
                    .parse()
                    .map_err(|e: Error| Error::parse(ln, e.to_string()))?;
                let size: u32 = num(ln, toks.next(), "class size")?;
                let inv = match toks.next() {
                    None => false,
                    Some("inv") => true,
                    Some(t) => return Err(Error::parse(ln, format!("unexpected {t:?}"))),
                };
                if sizes.insert(index, (size, inv)).is_some() {
                    return Err(Error::parse(ln, format!("class {index} listed twice")));
                }
            }
            "edge" => {
                let index: IndexSet = toks
                    .next()
                    .ok_or_else(|| Error::parse(ln, "missing index"))?
                    .parse()
                    .map_err(|e: Error| Error::parse(ln, e.to_string()))?;
                let rest: Vec<u32> = toks.map(|t| num(ln, Some(t), "vertex")).collect::<Result<_>>()?;
                if rest.len() != index.len() + 1 {
                    return Err(Error::parse(ln, format!("edge {index} needs {} vertices and a color", index.len())));
                }
                let c = ColorId(rest[index.len()]);
                edges.push((ln, Edge::new(index, rest[..index.len()].to_vec())?, c));
            }
            other => return Err(Error::parse(ln, format!("unknown keyword {other:?}"))),
        }
    }

    let (r, k) = header.ok_or_else(|| Error::parse(0, "empty document"))?;
    let part_sizes = parts.ok_or_else(|| Error::parse(0, "missing `parts` line"))?;
    let b = match bounds {
        Some(b) => b,
        None => (1..=k)
            .map(|a| {
                sizes
                    .iter()
                    .filter(|(i, _)| i.len() == a)
                    .map(|(_, &(s, _))| s)
                    .max()
                    .unwrap_or(1)
            })
            .collect(),
    };
    let params = Params::new(r, k, b, part_sizes)?;
    for &index in sizes.keys() {
        if index.len() > k || index.members().any(|p| p >= r) {
            return Err(Error::parse(0, format!("class {index} outside r={r}, k={k}")));
        }
    }
    let mut graph = ColoredHypergraph::with_sizes(params, |i| sizes.get(&i).map_or(1, |s| s.0))?;
    for (ln, e, c) in edges {
        graph.set_color(&e, c).map_err(|err| Error::parse(ln, err.to_string()))?;
    }
    let invisible = sizes.iter().filter(|(_, s)| s.1).map(|(&i, _)| i).collect();
    Ok(CphDocument { graph, invisible })
}

pub fn parse(text: &str) -> Result<ColoredHypergraph> {
    Ok(parse_document(text)?.graph)
}

pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    Ok(parse_document(text)?.into_complex())
}
