//! Copy probabilities `P_{phi in Phi(h)}[G(phi(e)) = S(e) for all visible e]`,
//! isolated padding and the colorability search used to pick a target graph.

use crate::error::{Error, Result};
use crate::model::{ColorId, ColoredHypergraph, Edge, IndexSet, SimplicialComplex, UniformColoredGraph};
use crate::sampling::{PartitionwiseMap, RngStream};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CountMode {
    /// Enumerate every map, refusing when the search space exceeds the budget.
    Exact { budget: u128 },
    /// Draw `samples` maps and report a Hoeffding interval at `confidence`.
    Sampled { samples: u64, confidence: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopyEstimate {
    /// Exact probability in exact mode.
    pub exact: Option<BigRational>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Successful maps (exact mode) or successful samples.
    pub hits: u128,
    /// `prod_i n_i^h` (exact mode) or the sample count.
    pub trials: u128,
    pub witness: Option<PartitionwiseMap>,
}

impl CopyEstimate {
    /// Expected number of successful maps, `P * prod_i n_i^h`.
    pub fn map_count(&self, g: &ColoredHypergraph, h: usize) -> f64 {
        let total: f64 = g.params().part_sizes.iter().map(|&n| (n as f64).powi(h as i32)).product();
        self.value * total
    }
}

/// A compiled embedding problem: vertex slots `part * h + j` and color
/// constraints over them.
#[derive(Clone, Debug)]
pub struct Pattern {
    h: usize,
    part_sizes: Vec<usize>,
    /// Slots in search order: constrained slots first.
    order: Vec<usize>,
    /// Number of leading slots in `order` that carry constraints.
    constrained: usize,
    /// Per search depth, constraints completed at that depth.
    checks: Vec<Vec<Constraint>>,
    /// Some visible color lies outside the mother class.
    impossible: bool,
}

#[derive(Clone, Debug)]
struct Constraint {
    class: usize,
    /// `(search depth, stride)` per member.
    terms: Vec<(usize, usize)>,
    color: ColorId,
}

impl Pattern {
    /// Visible edges of `s` must map onto edges of `g` with the same color.
    pub fn compile(g: &ColoredHypergraph, s: &SimplicialComplex) -> Self {
        let h = s.params().part_sizes[0];
        assert!(s.params().part_sizes.iter().all(|&x| x == h), "pattern parts must be equal");
        assert_eq!(s.params().r, g.r());
        let visible = s.visible_edges();
        let mut impossible = false;
        let mut used = BTreeSet::new();
        for (e, _) in &visible {
            for (p, &v) in e.index.members().zip(&e.verts) {
                used.insert(p * h + v as usize);
            }
        }
        let mut order: Vec<usize> = used.iter().copied().collect();
        let constrained = order.len();
        order.extend((0..g.r() * h).filter(|x| !used.contains(x)));
        let mut depth_of = vec![0usize; g.r() * h];
        for (d, &slot) in order.iter().enumerate() {
            depth_of[slot] = d;
        }
        let mut checks = vec![Vec::new(); order.len()];
        for (e, c) in visible {
            if !g.has_class(e.index) || c.0 >= g.class_size(e.index) {
                impossible = true;
                continue;
            }
            let class = g.class(e.index);
            let terms: Vec<(usize, usize)> = e
                .index
                .members()
                .zip(&e.verts)
                .enumerate()
                .map(|(pos, (p, &v))| (depth_of[p * h + v as usize], class.stride(pos)))
                .collect();
            let at = terms.iter().map(|t| t.0).max().unwrap();
            checks[at].push(Constraint { class: g.slot(e.index), terms, color: c });
        }
        Pattern { h, part_sizes: g.params().part_sizes.clone(), order, constrained, checks, impossible }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    fn slot_size(&self, slot: usize) -> usize {
        self.part_sizes[slot / self.h]
    }

    /// Maps in `Phi(h)` that differ only on unconstrained slots.
    fn free_factor(&self) -> u128 {
        self.order[self.constrained..].iter().map(|&s| self.slot_size(s) as u128).product()
    }

    /// Size of the enumerated space.
    pub fn search_space(&self) -> Option<u128> {
        self.order[..self.constrained]
            .iter()
            .try_fold(1u128, |a, &s| a.checked_mul(self.slot_size(s) as u128))
    }

    fn ok_at(&self, g: &ColoredHypergraph, depth: usize, assign: &[u32]) -> bool {
        self.checks[depth].iter().all(|c| {
            let off: usize = c.terms.iter().map(|&(d, st)| assign[d] as usize * st).sum();
            g.class_at(c.class).table()[off] == c.color
        })
    }

    /// Whether a full assignment (in search order) embeds the pattern.
    fn accepts(&self, g: &ColoredHypergraph, assign: &[u32]) -> bool {
        (0..self.constrained).all(|d| self.ok_at(g, d, assign))
    }

    fn count_from(&self, g: &ColoredHypergraph, depth: usize, assign: &mut Vec<u32>, first: &mut Option<Vec<u32>>) -> u128 {
        if depth == self.constrained {
            if first.is_none() {
                *first = Some(assign.clone());
            }
            return 1;
        }
        let n = self.slot_size(self.order[depth]);
        let mut total = 0;
        for v in 0..n as u32 {
            assign[depth] = v;
            if self.ok_at(g, depth, assign) {
                total += self.count_from(g, depth + 1, assign, first);
            }
        }
        total
    }

    fn to_map(&self, assign: &[u32]) -> PartitionwiseMap {
        let r = self.part_sizes.len();
        let mut images = vec![vec![0u32; self.h]; r];
        for (d, &slot) in self.order.iter().enumerate() {
            images[slot / self.h][slot % self.h] = assign.get(d).copied().unwrap_or(0);
        }
        PartitionwiseMap::unchecked(images)
    }

    fn first_from(&self, g: &ColoredHypergraph, depth: usize, assign: &mut Vec<u32>) -> bool {
        if depth == self.constrained {
            return true;
        }
        let n = self.slot_size(self.order[depth]);
        for v in 0..n as u32 {
            assign[depth] = v;
            if self.ok_at(g, depth, assign) && self.first_from(g, depth + 1, assign) {
                return true;
            }
        }
        false
    }

    fn each_from(&self, g: &ColoredHypergraph, depth: usize, assign: &mut Vec<u32>, f: &mut dyn FnMut(&PartitionwiseMap)) {
        if depth == self.constrained {
            f(&self.to_map(assign));
            return;
        }
        for v in 0..self.slot_size(self.order[depth]) as u32 {
            assign[depth] = v;
            if self.ok_at(g, depth, assign) {
                self.each_from(g, depth + 1, assign, f);
            }
        }
    }

    /// Visit every successful map in search order; unconstrained vertices map
    /// to vertex 0.
    pub fn for_each_hit(&self, g: &ColoredHypergraph, budget: u128, mut f: impl FnMut(&PartitionwiseMap)) -> Result<()> {
        if self.impossible {
            return Ok(());
        }
        let space = self.search_space().unwrap_or(u128::MAX);
        if space > budget {
            return Err(Error::budget("copy enumeration", space, budget));
        }
        let mut assign = vec![0u32; self.order.len()];
        self.each_from(g, 0, &mut assign, &mut f);
        Ok(())
    }

    /// The first successful map in search order, stopping at the first hit.
    pub fn first(&self, g: &ColoredHypergraph, budget: u128) -> Result<Option<PartitionwiseMap>> {
        if self.impossible {
            return Ok(None);
        }
        let space = self.search_space().unwrap_or(u128::MAX);
        if space > budget {
            return Err(Error::budget("copy enumeration", space, budget));
        }
        let mut assign = vec![0u32; self.order.len()];
        Ok(self.first_from(g, 0, &mut assign).then(|| self.to_map(&assign)))
    }

    /// Exact number of successful maps and the first one in search order.
    pub fn count(&self, g: &ColoredHypergraph, budget: u128) -> Result<(u128, Option<PartitionwiseMap>)> {
        if self.impossible {
            return Ok((0, None));
        }
        let space = self.search_space().unwrap_or(u128::MAX);
        if space > budget {
            return Err(Error::budget("copy enumeration", space, budget));
        }
        if self.constrained == 0 {
            return Ok((self.free_factor(), Some(self.to_map(&[]))));
        }
        let n0 = self.slot_size(self.order[0]) as u32;
        let parts: Vec<(u128, Option<Vec<u32>>)> = (0..n0)
            .into_par_iter()
            .map(|v| {
                let mut assign = vec![0u32; self.order.len()];
                assign[0] = v;
                let mut first = None;
                let c = if self.ok_at(g, 0, &assign) { self.count_from(g, 1, &mut assign, &mut first) } else { 0 };
                (c, first)
            })
            .collect();
        let hits: u128 = parts.iter().map(|p| p.0).sum::<u128>() * self.free_factor();
        let witness = parts.into_iter().find_map(|p| p.1).map(|a| self.to_map(&a));
        Ok((hits, witness))
    }
}

/// Two-sided Hoeffding half-width for `n` samples at `confidence`.
pub fn hoeffding_halfwidth(n: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Probability that a uniformly random `phi in Phi(h)` maps every visible edge
/// of `s` onto an edge of `g` of the same color. Visible colors outside `g`'s
/// classes make the probability 0.
pub fn copy_probability(g: &ColoredHypergraph, s: &SimplicialComplex, mode: CountMode, rng: &mut RngStream) -> Result<CopyEstimate> {
    let pattern = Pattern::compile(g, s);
    let h = pattern.h;
    match mode {
        CountMode::Exact { budget } => {
            let (hits, witness) = pattern.count(g, budget)?;
            let total = crate::sampling::map_count(&g.params().part_sizes, h)
                .ok_or_else(|| Error::budget("map count", u128::MAX, budget))?;
            let exact = ratio(hits, total);
            let value = hits as f64 / total as f64;
            Ok(CopyEstimate { exact: Some(exact), value, lower: value, upper: value, hits, trials: total, witness })
        }
        CountMode::Sampled { samples, confidence } => {
            let batch = 1024u64;
            let batches = samples.div_ceil(batch);
            let base = rng.child("copy-samples");
            let results: Vec<(u64, Option<Vec<u32>>)> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut r = base.child(format!("b{b}"));
                    let n = batch.min(samples - b * batch);
                    let mut assign = vec![0u32; pattern.order.len()];
                    let mut hits = 0;
                    let mut first = None;
                    for _ in 0..n {
                        for (d, &slot) in pattern.order.iter().enumerate() {
                            assign[d] = r.below(pattern.slot_size(slot) as u64) as u32;
                        }
                        if !pattern.impossible && pattern.accepts(g, &assign) {
                            hits += 1;
                            if first.is_none() {
                                first = Some(assign.clone());
                            }
                        }
                    }
                    (hits, first)
                })
                .collect();
            let hits: u64 = results.iter().map(|x| x.0).sum();
            let witness = results.into_iter().find_map(|x| x.1).map(|a| pattern.to_map(&a));
            let value = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
            let t = if samples == 0 { 1.0 } else { hoeffding_halfwidth(samples, confidence) };
            Ok(CopyEstimate {
                exact: None,
                value,
                lower: (value - t).max(0.0),
                upper: (value + t).min(1.0),
                hits: hits as u128,
                trials: samples as u128,
                witness,
            })
        }
    }
}

/// Check that `phi` embeds `s` into `g`.
pub fn witness_valid(g: &ColoredHypergraph, s: &SimplicialComplex, phi: &PartitionwiseMap) -> bool {
    s.visible_edges().iter().all(|(e, c)| match phi.apply(e) {
        Ok(img) => g.has_class(img.index) && g.color(&img).map(|x| x == *c).unwrap_or(false),
        Err(_) => false,
    })
}

/// `F` with `h0` vertices per part; the added vertices only touch invisible
/// edges.
pub fn isolated_padding(f: &UniformColoredGraph, h0: usize) -> Result<UniformColoredGraph> {
    let h = f.h();
    if h > h0 {
        return Err(Error::InvalidPadding { h, h0 });
    }
    let top = f.complex().params().b[f.k() - 1] - 1;
    let mut out = UniformColoredGraph::new(f.r(), f.k(), h0, top)?;
    for (e, c) in f.visible_edges() {
        out.set_top(&e, Some(c))?;
    }
    Ok(out)
}

/// Allowed top colors per `(I, frame)`; frames not listed allow nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ColorabilityInstance {
    /// Color counts `b'_1..b'_{k-1}` for the lower classes of `S`.
    pub b_prime: Vec<u32>,
    pub g: BTreeMap<IndexSet, HashMap<Vec<ColorId>, BTreeSet<ColorId>>>,
}

impl ColorabilityInstance {
    fn allows(&self, index: IndexSet, frame: &[ColorId], c: ColorId) -> bool {
        self.g.get(&index).and_then(|m| m.get(frame)).is_some_and(|s| s.contains(&c))
    }

    /// `g_I(frame) = {c : d_H(c | frame) > 0}` for every realized frame of `h`.
    pub fn from_graph(h: &ColoredHypergraph) -> Self {
        let k = h.k();
        let stats = crate::regularize::FrameStats::new(h);
        let mut g = BTreeMap::new();
        for index in h.index_sets_of_arity(k) {
            let mut m = HashMap::new();
            for (frame, bucket) in stats.frames(index) {
                let set: BTreeSet<ColorId> =
                    bucket.colors.iter().enumerate().filter(|(_, &n)| n > 0).map(|(c, _)| ColorId(c as u32)).collect();
                m.insert(frame.clone(), set);
            }
            g.insert(index, m);
        }
        let b_prime = (1..k).map(|a| h.max_class_size(a)).collect();
        ColorabilityInstance { b_prime, g }
    }
}

/// Search for a complex `S` on `F`'s vertices with lower colors in `[b'_i]`
/// such that every visible top edge `e` of `F` has `F(e) in g_I(S(∂e))`.
/// Lower edges are assigned in (arity, lexicographic) order, colors ascending.
pub fn colorable(f: &UniformColoredGraph, inst: &ColorabilityInstance) -> Option<SimplicialComplex> {
    let k = f.k();
    let r = f.r();
    let h = f.h();
    let tops = f.visible_edges();
    // lower edges that must be visible
    let mut lower: BTreeSet<(usize, Edge)> = BTreeSet::new();
    for (e, _) in &tops {
        for sub in e.index.subsets() {
            if sub != e.index {
                lower.insert((sub.len(), e.restrict(sub).unwrap()));
            }
        }
    }
    let lower: Vec<Edge> = lower.into_iter().map(|x| x.1).collect();
    let pos: HashMap<&Edge, usize> = lower.iter().enumerate().map(|(i, e)| (e, i)).collect();
    // each top edge is checked once its last lower edge is assigned
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); lower.len().max(1)];
    let mut frames: Vec<Vec<usize>> = Vec::new();
    for (t, (e, _)) in tops.iter().enumerate() {
        let subs: Vec<usize> = e
            .index
            .subsets()
            .filter(|&s| s != e.index)
            .map(|s| pos[&e.restrict(s).unwrap()])
            .collect();
        let at = subs.iter().copied().max().unwrap_or(0);
        checks[at].push(t);
        frames.push(subs);
    }
    let sizes: Vec<u32> = lower.iter().map(|e| inst.b_prime.get(e.index.len() - 1).copied().unwrap_or(0)).collect();
    if sizes.iter().any(|&s| s == 0) {
        return None;
    }
    let check = |t: usize, assign: &[u32]| {
        let frame: Vec<ColorId> = frames[t].iter().map(|&i| ColorId(assign[i])).collect();
        inst.allows(tops[t].0.index, &frame, tops[t].1)
    };
    if lower.is_empty() {
        if !(0..tops.len()).all(|t| check(t, &[])) {
            return None;
        }
    } else {
        let mut assign = vec![0u32; lower.len()];
        fn dfs(d: usize, assign: &mut Vec<u32>, sizes: &[u32], checks: &[Vec<usize>], check: &dyn Fn(usize, &[u32]) -> bool) -> bool {
            if d == assign.len() {
                return true;
            }
            for c in 0..sizes[d] {
                assign[d] = c;
                if checks[d].iter().all(|&t| check(t, assign)) && dfs(d + 1, assign, sizes, checks, check) {
                    return true;
                }
            }
            false
        }
        if !dfs(0, &mut assign, &sizes, &checks, &check) {
            return None;
        }
        return Some(build_complex(r, k, h, inst, &lower, &assign, &tops));
    }
    Some(build_complex(r, k, h, inst, &lower, &[], &tops))
}

fn build_complex(r: usize, k: usize, h: usize, inst: &ColorabilityInstance, lower: &[Edge], assign: &[u32], tops: &[(Edge, ColorId)]) -> SimplicialComplex {
    let top_colors = tops.iter().map(|t| t.1 .0 + 1).max().unwrap_or(1);
    let mut s = SimplicialComplex::invisible(r, k, h, |i| {
        if i.len() == k {
            top_colors
        } else {
            inst.b_prime[i.len() - 1]
        }
    })
    .expect("valid sizes");
    for (e, &c) in lower.iter().zip(assign) {
        s.set_visible(e, Some(ColorId(c))).expect("in range");
    }
    for (e, c) in tops {
        s.set_visible(e, Some(*c)).expect("in range");
    }
    s
}

/// First `(position, S)` over the slice in order.
pub fn colorable_search(slice: &[UniformColoredGraph], inst: &ColorabilityInstance) -> Option<(usize, SimplicialComplex)> {
    slice.iter().enumerate().find_map(|(i, f)| colorable(f, inst).map(|s| (i, s)))
}

/// Smallest `h` in the slice with a colorable member, or `None` when nothing in
/// the slice is colorable (the answer beyond the slice is unknown).
pub fn sliced_h0(slice: &[UniformColoredGraph], inst: &ColorabilityInstance) -> Option<usize> {
    slice.iter().filter(|f| colorable(f, inst).is_some()).map(|f| f.h()).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;

    fn exact() -> CountMode {
        CountMode::Exact { budget: 1 << 40 }
    }

    fn bip() -> ColoredHypergraph {
        let p = Params::uniform(2, 2, vec![1, 2], 2).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| ColorId((i.len() == 2 && v != [1, 1]) as u32)).unwrap();
        g
    }

    fn black_edge(r: usize, k: usize, h: usize) -> UniformColoredGraph {
        let mut f = UniformColoredGraph::new(r, k, h, 2).unwrap();
        let top = IndexSet::new(&(0..k).collect::<Vec<_>>()).unwrap();
        f.set_top(&Edge::new(top, vec![0; k]).unwrap(), Some(ColorId(1))).unwrap();
        f
    }

    #[test]
    fn single_black_edge_in_bipartite() {
        let g = bip();
        let f = black_edge(2, 2, 1);
        let est = copy_probability(&g, f.complex(), exact(), &mut RngStream::new(0)).unwrap();
        assert_eq!(est.exact.unwrap(), ratio(3, 4));
        assert!(witness_valid(&g, f.complex(), est.witness.as_ref().unwrap()));
        let all = ColoredHypergraph::constant(g.params().clone(), &[ColorId(0), ColorId(1)]).unwrap();
        let est = copy_probability(&all, f.complex(), exact(), &mut RngStream::new(0)).unwrap();
        assert_eq!(est.exact.unwrap(), ratio(1, 1));
    }

    #[test]
    fn triangle_in_complete_tripartite() {
        let g = ColoredHypergraph::constant(Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let mut f = UniformColoredGraph::new(3, 2, 1, 2).unwrap();
        for i in g.index_sets_of_arity(2) {
            f.set_top(&Edge::new(i, vec![0, 0]).unwrap(), Some(ColorId(1))).unwrap();
        }
        let est = copy_probability(&g, f.complex(), exact(), &mut RngStream::new(0)).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn padding_preserves_probability() {
        let g = bip();
        let f = black_edge(2, 2, 1);
        let pad = isolated_padding(&f, 2).unwrap();
        assert_eq!(pad.h(), 2);
        let a = copy_probability(&g, f.complex(), exact(), &mut RngStream::new(0)).unwrap();
        let b = copy_probability(&g, pad.complex(), exact(), &mut RngStream::new(0)).unwrap();
        assert_eq!(a.exact, b.exact);
        assert_eq!(isolated_padding(&pad, 2).unwrap(), pad);
        assert_eq!(isolated_padding(&pad, 1).unwrap_err(), Error::InvalidPadding { h: 2, h0: 1 });
    }

    #[test]
    fn exact_budget_guard() {
        let g = bip();
        let f = black_edge(2, 2, 1);
        let r = copy_probability(&g, f.complex(), CountMode::Exact { budget: 1 }, &mut RngStream::new(0));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn sampled_interval_contains_truth() {
        let g = bip();
        let f = black_edge(2, 2, 1);
        let est = copy_probability(&g, f.complex(), CountMode::Sampled { samples: 4000, confidence: 0.95 }, &mut RngStream::new(5)).unwrap();
        assert!(est.lower <= 0.75 && 0.75 <= est.upper);
    }

    #[test]
    fn colorability_all_and_none() {
        let f = black_edge(2, 2, 1);
        let top = IndexSet::full(2);
        let mut inst = ColorabilityInstance { b_prime: vec![2], g: BTreeMap::new() };
        let mut m = HashMap::new();
        for a in 0..2 {
            for b in 0..2 {
                m.insert(vec![ColorId(a), ColorId(b)], BTreeSet::from([ColorId(0), ColorId(1)]));
            }
        }
        inst.g.insert(top, m.clone());
        let s = colorable(&f, &inst).unwrap();
        assert!(crate::model::validate_complex(&s, None).is_valid());
        for v in m.values_mut() {
            v.remove(&ColorId(1));
        }
        inst.g.insert(top, m);
        assert!(colorable(&f, &inst).is_none());
    }
}
