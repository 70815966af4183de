//! Forbidden families `F`: built-in predicates plus explicit members, and the
//! `.fam` text format.
//!
//! ```text
//! fam 3 2
//! builtin clique:1
//! member
//! cph 3 2
//! ...
//! end
//! ```

use crate::counting::Pattern;
use crate::cph;
use crate::error::{Error, Result};
use crate::model::{index_sets, ColorId, ColoredHypergraph, Edge, UniformColoredGraph};
use crate::sampling::PartitionwiseMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// One vertex per part, every top edge visible with color `c`.
    Clique(ColorId),
    /// A single visible top edge of color `c`, one member per top index set.
    NoVisibleTopEdgeClass(ColorId),
}

impl Builtin {
    fn parse(s: &str) -> Option<Builtin> {
        let (name, c) = s.split_once(':')?;
        let c = ColorId(c.parse().ok()?);
        match name {
            "clique" => Some(Builtin::Clique(c)),
            "no-visible-top-edge-class" => Some(Builtin::NoVisibleTopEdgeClass(c)),
            _ => None,
        }
    }

    fn name(&self) -> String {
        match self {
            Builtin::Clique(c) => format!("clique:{c}"),
            Builtin::NoVisibleTopEdgeClass(c) => format!("no-visible-top-edge-class:{c}"),
        }
    }

    fn expand(&self, r: usize, k: usize) -> Vec<UniformColoredGraph> {
        let tops: Vec<_> = index_sets(r, k).into_iter().filter(|i| i.len() == k).collect();
        match *self {
            Builtin::Clique(c) => {
                let mut f = UniformColoredGraph::new(r, k, 1, c.0 + 1).expect("valid");
                for &i in &tops {
                    f.set_top(&Edge::new(i, vec![0; k]).expect("edge"), Some(c)).expect("color");
                }
                vec![f]
            }
            Builtin::NoVisibleTopEdgeClass(c) => tops
                .iter()
                .map(|&i| {
                    let mut f = UniformColoredGraph::new(r, k, 1, c.0 + 1).expect("valid");
                    f.set_top(&Edge::new(i, vec![0; k]).expect("edge"), Some(c)).expect("color");
                    f
                })
                .collect(),
        }
    }
}

/// A copy of a family member in a graph.
#[derive(Clone, Debug)]
pub struct CopyWitness {
    /// Position of the member in [`Family::members`].
    pub member: usize,
    pub map: PartitionwiseMap,
}

/// A finite slice of a forbidden family on `r` parts with top arity `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    r: usize,
    k: usize,
    builtins: Vec<Builtin>,
    explicit: Vec<UniformColoredGraph>,
}

impl Family {
    pub fn empty(r: usize, k: usize) -> Self {
        Family { r, k, builtins: Vec::new(), explicit: Vec::new() }
    }

    pub fn with_builtin(mut self, b: Builtin) -> Self {
        self.builtins.push(b);
        self
    }

    pub fn with_member(mut self, f: UniformColoredGraph) -> Result<Self> {
        if f.r() != self.r || f.k() != self.k {
            return Err(Error::InvalidParams(format!("member is ({}, {}), family is ({}, {})", f.r(), f.k(), self.r, self.k)));
        }
        self.explicit.push(f);
        Ok(self)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.builtins.is_empty() && self.explicit.is_empty()
    }

    /// All members, ordered by vertex count per part (stable otherwise).
    pub fn members(&self) -> Vec<UniformColoredGraph> {
        let mut out: Vec<_> = self.builtins.iter().flat_map(|b| b.expand(self.r, self.k)).collect();
        out.extend(self.explicit.iter().cloned());
        out.sort_by_key(|f| f.h());
        out
    }

    /// Members with at most `h` vertices per part.
    pub fn slice(&self, h: usize) -> Vec<UniformColoredGraph> {
        self.members().into_iter().filter(|f| f.h() <= h).collect()
    }

    /// The first member (in [`Family::members`] order) with a copy in `g`.
    pub fn find_copy(&self, g: &ColoredHypergraph, budget: u128) -> Result<Option<CopyWitness>> {
        for (member, f) in self.members().iter().enumerate() {
            let pattern = Pattern::compile(g, f.complex());
            if let Some(map) = pattern.first(g, budget)? {
                return Ok(Some(CopyWitness { member, map }));
            }
        }
        Ok(None)
    }

    pub fn is_free(&self, g: &ColoredHypergraph, budget: u128) -> Result<bool> {
        Ok(self.find_copy(g, budget)?.is_none())
    }

    pub fn render(&self) -> String {
        let mut out = format!("fam {} {}\n", self.r, self.k);
        for b in &self.builtins {
            writeln!(out, "builtin {}", b.name()).unwrap();
        }
        for f in &self.explicit {
            out.push_str("member\n");
            out.push_str(&cph::render_complex(f.complex()));
            out.push_str("end\n");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fam: Option<Family> = None;
        let mut member: Option<(usize, String)> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some((start, buf)) = &mut member {
                if line == "end" {
                    let body = std::mem::take(buf);
                    let start = *start;
                    member = None;
                    let s = cph::parse_complex(&body).map_err(|e| Error::parse(start, format!("member: {e}")))?;
                    let f = UniformColoredGraph::from_complex(s).map_err(|e| Error::parse(start, e.to_string()))?;
                    let cur = fam.take().ok_or_else(|| Error::parse(start, "member before header"))?;
                    fam = Some(cur.with_member(f).map_err(|e| Error::parse(start, e.to_string()))?);
                } else {
                    buf.push_str(raw);
                    buf.push('\n');
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "fam" if toks.len() == 3 => {
                    let r = toks[1].parse().map_err(|_| Error::parse(no + 1, "bad r"))?;
                    let k = toks[2].parse().map_err(|_| Error::parse(no + 1, "bad k"))?;
                    if fam.is_some() {
                        return Err(Error::parse(no + 1, "duplicate header"));
                    }
                    fam = Some(Family::empty(r, k));
                }
                "builtin" if toks.len() == 2 => {
                    let b = Builtin::parse(toks[1]).ok_or_else(|| Error::parse(no + 1, format!("unknown builtin {}", toks[1])))?;
                    let f = fam.as_mut().ok_or_else(|| Error::parse(no + 1, "builtin before header"))?;
                    f.builtins.push(b);
                }
                "member" => member = Some((no + 1, String::new())),
                _ => return Err(Error::parse(no + 1, format!("unexpected `{line}`"))),
            }
        }
        if member.is_some() {
            return Err(Error::parse(text.lines().count(), "unterminated member"));
        }
        fam.ok_or_else(|| Error::parse(0, "missing `fam r k` header"))
    }
}
