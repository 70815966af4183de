//! Sampled color representatives `d(a)`, the lookup maps `theta_I` and the
//! composite `vartheta` with its null value.

use crate::error::{Error, Result};
use crate::model::{ColorId, ColoredHypergraph, FrameColor, IndexSet, TotalColor};
use crate::regularity::{ordinary_frame, DeltaCertificate, OrdinaryContext};
use crate::regularize::{FrameStats, RegularizedGraph};
use crate::sampling::RngStream;
use std::collections::HashMap;
use std::fmt::Write as _;

const TOL: f64 = 1e-12;

/// `(L_1, .., L_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LVector(Vec<u32>);

impl LVector {
    pub fn new(ls: Vec<u32>) -> Result<Self> {
        if ls.is_empty() || ls.contains(&0) {
            return Err(Error::InvalidParams("every L_i must be at least 1".into()));
        }
        Ok(LVector(ls))
    }

    pub fn get(&self, arity: usize) -> u32 {
        self.0[arity - 1]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `|A_I|` for `|I| = i`: `prod_{J ⊆ I} L_{|J|}`.
    pub fn class_count(&self, i: usize) -> Option<u128> {
        let mut n = 1u128;
        for t in 1..(1u32 << i) {
            n = n.checked_mul(self.get(t.count_ones() as usize) as u128)?;
        }
        Some(n)
    }

    /// `|A| = sum_i C(r, i) prod_j L_j^{C(i, j)}`.
    pub fn total_count(&self, r: usize, k: usize) -> Option<u128> {
        let mut total = 0u128;
        for i in 1..=k {
            total = total.checked_add(binomial(r, i).checked_mul(self.class_count(i)?)?)?;
        }
        Some(total)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j as u128 + 1))
}

/// One conditional draw of the representative process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrawRecord {
    pub index: IndexSet,
    /// Mixed-radix code of `a` (entries in relative-mask order, last fastest).
    pub code: u64,
    /// Offset of the drawn edge in `Omega_I`; `None` when the fiber was empty.
    pub edge: Option<u64>,
}

/// The sampled maps `d`, `theta` and `vartheta` for a pair `(H, psi)`.
#[derive(Clone, Debug)]
pub struct RepresentativeTable {
    l: LVector,
    seed: u64,
    /// Stream path the table was built under.
    path: String,
    /// Per index set (lexicographic): `d_I(a)` by code, `None` if unrealizable.
    d: Vec<(IndexSet, Vec<Option<ColorId>>)>,
    /// Per index set: regularized id -> `H` id.
    to_base: Vec<Vec<ColorId>>,
    transcript: Vec<DrawRecord>,
    theta_rng: RngStream,
}

/// Edges of `Omega_I` grouped by their regularized frame.
fn fibers(g: &ColoredHypergraph, index: IndexSet) -> HashMap<Vec<ColorId>, Vec<u64>> {
    let plan = crate::model::SubEdgePlan::new(g, index);
    let class = g.class(index);
    let mut out: HashMap<Vec<ColorId>, Vec<u64>> = HashMap::new();
    let mut verts = vec![0u32; index.len()];
    let mut buf = Vec::new();
    for off in 0..class.len() {
        class.decode(off, &mut verts);
        plan.total_into(g, &verts, &mut buf);
        buf.pop();
        out.entry(buf.clone()).or_default().push(off as u64);
    }
    out
}

/// Digit radices of `A_I` in relative-mask order.
fn radices(l: &LVector, index: IndexSet) -> Vec<u32> {
    (1..=index.subset_count() as u32).map(|t| l.get(t.count_ones() as usize)).collect()
}

fn encode(radices: &[u32], digits: &[u32]) -> u64 {
    radices.iter().zip(digits).fold(0u64, |acc, (&r, &d)| acc * r as u64 + (d - 1) as u64)
}

fn decode(radices: &[u32], mut code: u64, out: &mut [u32]) {
    for (i, &r) in radices.iter().enumerate().rev() {
        out[i] = (code % r as u64) as u32 + 1;
        code /= r as u64;
    }
}

impl RepresentativeTable {
    /// Run the representative process on `reg = H/psi` (with base `H`).
    /// Draws happen by increasing arity, then index set, then code.
    /// `budget` caps `|A|`.
    pub fn build(reg: &RegularizedGraph, l: LVector, budget: u128, rng: &RngStream) -> Result<Self> {
        let g = reg.graph();
        let (r, k) = (g.r(), g.k());
        if l.as_slice().len() != k {
            return Err(Error::InvalidParams(format!("L has {} entries, k = {k}", l.as_slice().len())));
        }
        let total = l.total_count(r, k).unwrap_or(u128::MAX);
        if total > budget {
            return Err(Error::budget("representative draws", total, budget));
        }
        let mut draw = rng.child("representative/d");
        let mut d: Vec<(IndexSet, Vec<Option<ColorId>>)> = Vec::new();
        let mut transcript = Vec::with_capacity(total as usize);
        let mut sets: Vec<IndexSet> = g.index_sets().collect();
        sets.sort_by_key(|i| (i.len(), *i));
        for index in sets {
            let fib = fibers(g, index);
            let rad = radices(&l, index);
            let n = l.class_count(index.len()).unwrap() as u64;
            let mut values = Vec::with_capacity(n as usize);
            let mut digits = vec![0u32; rad.len()];
            let class = g.class(index);
            for code in 0..n {
                decode(&rad, code, &mut digits);
                let frame = Self::sub_values(&d, &l, index, &digits);
                let fiber = frame.as_ref().and_then(|f| fib.get(f));
                let (edge, color) = match fiber {
                    Some(edges) => {
                        let e = edges[draw.below(edges.len() as u64) as usize];
                        (Some(e), Some(class.table()[e as usize]))
                    }
                    None => (None, None),
                };
                transcript.push(DrawRecord { index, code, edge });
                values.push(color);
            }
            d.push((index, values));
        }
        d.sort_by_key(|x| x.0);
        let to_base = d.iter().map(|(i, _)| reg.base_colors(*i).to_vec()).collect();
        Ok(RepresentativeTable {
            l,
            seed: rng.seed(),
            path: rng.path().to_string(),
            d,
            to_base,
            transcript,
            theta_rng: rng.child("representative/theta"),
        })
    }

    /// `(d_J(a|_J))_{J ⊊ I}` from the already drawn lower arities.
    fn sub_values(d: &[(IndexSet, Vec<Option<ColorId>>)], l: &LVector, index: IndexSet, digits: &[u32]) -> Option<Vec<ColorId>> {
        let mut out = Vec::with_capacity(digits.len().saturating_sub(1));
        for t in 1..digits.len() as u32 {
            let sub = index.subset(t);
            let sub_digits = restrict_digits(index, sub, digits);
            let code = encode(&radices(l, sub), &sub_digits);
            let pos = d.iter().position(|x| x.0 == sub).expect("lower arity drawn first");
            out.push(d[pos].1[code as usize]?);
        }
        Some(out)
    }

    fn slot(&self, index: IndexSet) -> usize {
        self.d.binary_search_by_key(&index, |x| x.0).expect("index class")
    }

    pub fn l(&self) -> &LVector {
        &self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transcript(&self) -> &[DrawRecord] {
        &self.transcript
    }

    /// Entries of `A` whose fiber was empty.
    pub fn unrealizable(&self) -> usize {
        self.d.iter().map(|x| x.1.iter().filter(|c| c.is_none()).count()).sum()
    }

    /// `d_I(a)` with `a` in relative-mask order, entries `1..=L`.
    pub fn d_color(&self, index: IndexSet, a: &[u32]) -> Option<ColorId> {
        let code = encode(&radices(&self.l, index), a);
        self.d[self.slot(index)].1[code as usize]
    }

    fn d_base(&self, index: IndexSet, a: &[u32]) -> Option<ColorId> {
        let c = self.d_color(index, a)?;
        Some(self.to_base[self.slot(index)][c.index()])
    }

    /// `theta_J(c|_J)` for every nonempty `J ⊆ I`, in relative-mask order.
    /// Zero means no representative.
    pub fn theta(&self, tc: &TotalColor) -> Vec<u32> {
        let index = tc.index();
        let mut out = vec![0u32; tc.entries().len()];
        // relative masks in increasing popcount order
        let mut order: Vec<u32> = (1..=out.len() as u32).collect();
        order.sort_by_key(|t| t.count_ones());
        for t in order {
            let sub = index.subset(t);
            let rel = index.relative(sub);
            let mut digits = Vec::with_capacity(sub.subset_count());
            let mut zero = false;
            for u in 1..sub.subset_count() as u32 {
                let v = out[crate::model::deposit(u, rel) as usize - 1];
                zero |= v == 0;
                digits.push(v);
            }
            if zero {
                continue;
            }
            let target = tc.get(sub);
            let top_l = self.l.get(sub.len());
            digits.push(0);
            let last = digits.len() - 1;
            let candidates: Vec<u32> = (1..=top_l)
                .filter(|&a| {
                    digits[last] = a;
                    self.d_base(sub, &digits) == Some(target)
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            out[t as usize - 1] = if candidates.len() == 1 {
                candidates[0]
            } else {
                let sub_total = tc.restrict(sub);
                let key: Vec<String> = sub_total.entries().iter().map(|c| c.0.to_string()).collect();
                let mut r = self.theta_rng.child(format!("{sub}:{}", key.join(".")));
                candidates[r.below(candidates.len() as u64) as usize]
            };
        }
        out
    }

    /// `vartheta(c) = d(theta(c))`, or `None` for the null value.
    pub fn vartheta(&self, tc: &TotalColor) -> Option<TotalColor> {
        let th = self.theta(tc);
        self.lift(tc.index(), &th).map(|e| TotalColor::new(tc.index(), e).expect("length"))
    }

    /// `vartheta` of a frame: the representatives of every proper sub-color.
    pub fn vartheta_frame(&self, fc: &FrameColor) -> Option<FrameColor> {
        let index = fc.index();
        let mut out = Vec::with_capacity(fc.entries().len());
        // the frame's entries are the totals of its proper subsets
        let mut memo: HashMap<IndexSet, Vec<ColorId>> = HashMap::new();
        for t in 1..index.subset_count() as u32 {
            let sub = index.subset(t);
            // any maximal proper subset containing `sub` gives the same value
            let owner = maximal_owner(index, sub);
            let reps = match memo.get(&owner) {
                Some(v) => v.clone(),
                None => {
                    let v = self.vartheta(&fc.total_of(owner))?.entries().to_vec();
                    memo.insert(owner, v.clone());
                    v
                }
            };
            let rel = owner.relative(sub);
            out.push(reps[rel as usize - 1]);
        }
        Some(FrameColor::new(index, out).expect("length"))
    }

    fn lift(&self, index: IndexSet, theta: &[u32]) -> Option<Vec<ColorId>> {
        if theta.contains(&0) {
            return None;
        }
        (1..=theta.len() as u32)
            .map(|t| {
                let sub = index.subset(t);
                self.d_color(sub, &restrict_digits(index, sub, theta))
            })
            .collect()
    }

    /// Text form: header, then one `d` line per draw.
    pub fn render(&self) -> String {
        let mut out = format!("rtab 1\nseed {}\n", self.seed);
        if !self.path.is_empty() {
            writeln!(out, "path {}", self.path).unwrap();
        }
        out.push('L');
        for l in self.l.as_slice() {
            write!(out, " {l}").unwrap();
        }
        out.push('\n');
        for rec in &self.transcript {
            match rec.edge {
                Some(e) => writeln!(out, "d {} {} {}", rec.index, rec.code, e).unwrap(),
                None => writeln!(out, "d {} {} -", rec.index, rec.code).unwrap(),
            }
        }
        out
    }

    /// Replay a rendered table against the same `H/psi`.
    pub fn parse(reg: &RegularizedGraph, text: &str) -> Result<Self> {
        let g = reg.graph();
        let mut seed = None;
        let mut path = String::new();
        let mut l = None;
        let mut transcript = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |m: &str| Error::parse(no + 1, m);
            match toks[0] {
                "rtab" if toks.get(1) == Some(&"1") => {}
                "seed" => seed = Some(toks.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad seed"))?),
                "path" if toks.len() == 2 => path = toks[1].to_string(),
                "L" => {
                    let ls = toks[1..].iter().map(|s| s.parse()).collect::<std::result::Result<Vec<u32>, _>>().map_err(|_| bad("bad L"))?;
                    l = Some(LVector::new(ls)?);
                }
                "d" if toks.len() == 4 => {
                    let index: IndexSet = toks[1].parse().map_err(|_| bad("bad index set"))?;
                    let code = toks[2].parse().map_err(|_| bad("bad code"))?;
                    let edge = if toks[3] == "-" { None } else { Some(toks[3].parse().map_err(|_| bad("bad edge"))?) };
                    transcript.push(DrawRecord { index, code, edge });
                }
                _ => return Err(bad("unknown line")),
            }
        }
        let seed = seed.ok_or_else(|| Error::parse(0, "missing seed"))?;
        let l = l.ok_or_else(|| Error::parse(0, "missing L"))?;
        if l.as_slice().len() != g.k() {
            return Err(Error::parse(0, "L length differs from k"));
        }
        let mut d: Vec<(IndexSet, Vec<Option<ColorId>>)> = g
            .index_sets()
            .map(|i| (i, vec![None; l.class_count(i.len()).unwrap_or(0) as usize]))
            .collect();
        d.sort_by_key(|x| x.0);
        for rec in &transcript {
            let pos = d.binary_search_by_key(&rec.index, |x| x.0).map_err(|_| Error::parse(0, "index outside graph"))?;
            let slot = d[pos].1.get_mut(rec.code as usize).ok_or_else(|| Error::parse(0, "code out of range"))?;
            if let Some(e) = rec.edge {
                let class = g.class(rec.index);
                let c = class.table().get(e as usize).ok_or_else(|| Error::parse(0, "edge out of range"))?;
                *slot = Some(*c);
            }
        }
        let to_base = d.iter().map(|(i, _)| reg.base_colors(*i).to_vec()).collect();
        let mut root = RngStream::new(seed);
        if !path.is_empty() {
            root = root.child(&path);
        }
        let theta_rng = root.child("representative/theta");
        Ok(RepresentativeTable { l, seed, path, d, to_base, transcript, theta_rng })
    }
}

/// `a|_J` from `a` indexed by relative masks of `I`.
fn restrict_digits(index: IndexSet, sub: IndexSet, digits: &[u32]) -> Vec<u32> {
    let rel = index.relative(sub);
    (1..=sub.subset_count() as u32).map(|u| digits[crate::model::deposit(u, rel) as usize - 1]).collect()
}

/// A maximal proper subset of `index` containing `sub`.
fn maximal_owner(index: IndexSet, sub: IndexSet) -> IndexSet {
    if index.len() == 1 {
        return sub;
    }
    let drop = index.members().find(|&p| !sub.contains(p)).expect("proper subset");
    index.difference(IndexSet::singleton(drop))
}

/// Everything needed to decide ordinariness of frames of `H/psi`.
pub struct OrdinaryOracle<'a> {
    pub reg: &'a RegularizedGraph,
    pub table: &'a RepresentativeTable,
    /// Slack certificate of `H/psi`.
    pub delta: &'a DeltaCertificate,
    inner: FrameStats,
    mixed: FrameStats,
    base: FrameStats,
}

impl<'a> OrdinaryOracle<'a> {
    pub fn new(reg: &'a RegularizedGraph, table: &'a RepresentativeTable, delta: &'a DeltaCertificate) -> Self {
        OrdinaryOracle {
            reg,
            table,
            delta,
            inner: FrameStats::new(reg.graph()),
            mixed: FrameStats::mixed(reg.graph(), reg.base()),
            base: FrameStats::new(reg.base()),
        }
    }

    pub fn inner_stats(&self) -> &FrameStats {
        &self.inner
    }

    pub fn base_stats(&self) -> &FrameStats {
        &self.base
    }

    pub fn context(&self) -> OrdinaryContext<'_> {
        OrdinaryContext { stats: &self.inner, delta: self.delta, graph: self.reg.graph() }
    }

    fn to_base(&self, index: IndexSet, c: ColorId) -> ColorId {
        self.reg.base_color(index, c)
    }

    /// `H[c*]`: the `H` frame refined by a frame of `H/psi`.
    pub fn base_frame(&self, fc: &FrameColor) -> FrameColor {
        let index = fc.index();
        let e = fc.iter().map(|(j, c)| self.to_base(j, c)).collect();
        FrameColor::new(index, e).expect("length")
    }

    /// `(eps1, gamma, alpha)`-ordinariness of a frame of `H/psi`; `alpha = None`
    /// drops the third condition.
    pub fn is_ordinary_frame(&self, fc: &FrameColor, eps1: f64, gamma: f64, alpha: Option<f64>) -> bool {
        if !ordinary_frame(fc, eps1, &self.context()) {
            return false;
        }
        let index = fc.index();
        let h = self.reg.base();
        for j in index.subsets() {
            let f = fc.frame_of(j);
            let hf = self.base_frame(&f);
            let (Some(mb), Some(bb)) = (self.mixed.bucket(j, f.entries()), self.base.bucket(j, hf.entries())) else {
                return false;
            };
            let size = h.class_size(j);
            let sum: f64 = (0..size as usize)
                .map(|c| {
                    let x = mb.colors[c] as f64 / mb.count as f64 - bb.colors[c] as f64 / bb.count as f64;
                    x * x
                })
                .sum();
            let allowed = gamma / size as f64;
            if sum > allowed * allowed + TOL {
                return false;
            }
        }
        if let Some(alpha) = alpha {
            let hf = self.base_frame(fc);
            let bb = self.base.bucket(index, hf.entries()).expect("checked above");
            let size = h.class_size(index);
            for c in 0..size {
                let dens = bb.colors[c as usize] as f64 / bb.count as f64;
                if dens >= alpha / size as f64 - TOL && self.table.vartheta(&hf.with_top(ColorId(c))).is_none() {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;
    use crate::regularize::regularize_vector;
    use crate::sampling::random_map_uniform;

    fn random_graph(r: usize, k: usize, n: usize, b: Vec<u32>, seed: u64) -> ColoredHypergraph {
        let p = Params::uniform(r, k, b.clone(), n).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        let mut rng = RngStream::new(seed);
        g.fill_with(|i, _| ColorId(rng.below(b[i.len() - 1] as u64) as u32)).unwrap();
        g
    }

    fn table_for(g: &ColoredHypergraph, l: Vec<u32>, seed: u64) -> (RegularizedGraph, RepresentativeTable) {
        let mut rng = RngStream::new(seed);
        let maps: Vec<_> = (1..g.k()).map(|_| random_map_uniform(g.params(), 1, &mut rng)).collect();
        let reg = if g.k() == 1 { RegularizedGraph::trivial(g) } else { regularize_vector(g, &maps).unwrap() };
        let t = RepresentativeTable::build(&reg, LVector::new(l).unwrap(), 1 << 20, &rng).unwrap();
        (reg, t)
    }

    fn all_totals(g: &ColoredHypergraph, index: IndexSet) -> Vec<TotalColor> {
        let mut out = vec![Vec::new()];
        for t in 1..=index.subset_count() as u32 {
            let size = g.class_size(index.subset(t));
            out = out
                .into_iter()
                .flat_map(|v: Vec<ColorId>| {
                    (0..size).map(move |c| {
                        let mut w = v.clone();
                        w.push(ColorId(c));
                        w
                    })
                })
                .collect();
        }
        out.into_iter().map(|e| TotalColor::new(index, e).unwrap()).collect()
    }

    #[test]
    fn draw_count_r2_k2() {
        let g = random_graph(2, 2, 3, vec![2, 2], 1);
        let (_, t) = table_for(&g, vec![2, 3], 5);
        assert_eq!(t.transcript().len(), 16);
        assert_eq!(LVector::new(vec![2, 3]).unwrap().total_count(2, 2), Some(16));
    }

    #[test]
    fn single_color_graph() {
        let p = Params::uniform(3, 2, vec![1, 1], 2).unwrap();
        let g = ColoredHypergraph::constant(p, &[ColorId(0), ColorId(0)]).unwrap();
        let (_, t) = table_for(&g, vec![2, 2], 3);
        assert_eq!(t.unrealizable(), 0);
        let tc = TotalColor::new(IndexSet::new(&[0, 2]).unwrap(), vec![ColorId(0); 3]).unwrap();
        assert!(t.theta(&tc).iter().all(|&a| a >= 1));
        assert_eq!(t.vartheta(&tc), Some(tc));
    }

    #[test]
    fn absent_color_gives_null() {
        let p = Params::uniform(2, 2, vec![1, 3], 2).unwrap();
        let g = ColoredHypergraph::constant(p, &[ColorId(0), ColorId(1)]).unwrap();
        let (_, t) = table_for(&g, vec![1, 2], 0);
        let tc = TotalColor::new(IndexSet::full(2), vec![ColorId(0), ColorId(0), ColorId(2)]).unwrap();
        assert_eq!(t.theta(&tc)[2], 0);
        assert!(t.vartheta(&tc).is_none());
    }

    #[test]
    fn theta_injective_and_top_fixpoint() {
        for seed in 0..4 {
            let g = random_graph(3, 2, 4, vec![2, 2], seed);
            let (_, t) = table_for(&g, vec![2, 3], seed + 10);
            for index in g.index_sets() {
                let mut seen: HashMap<Vec<u32>, TotalColor> = HashMap::new();
                for tc in all_totals(&g, index) {
                    let th = t.theta(&tc);
                    if th.contains(&0) {
                        assert!(t.vartheta(&tc).is_none());
                        continue;
                    }
                    if let Some(prev) = seen.insert(th, tc.clone()) {
                        panic!("theta collides on {prev:?} and {tc:?}");
                    }
                    if index.len() == g.k() {
                        assert_eq!(t.vartheta(&tc).unwrap().top(), tc.top());
                    }
                }
            }
        }
    }

    #[test]
    fn theta_is_deterministic() {
        let g = random_graph(3, 2, 4, vec![2, 3], 9);
        let (_, t) = table_for(&g, vec![3, 3], 2);
        for tc in all_totals(&g, IndexSet::new(&[0, 1]).unwrap()) {
            assert_eq!(t.theta(&tc), t.theta(&tc));
        }
    }

    #[test]
    fn transcript_round_trip() {
        let g = random_graph(3, 2, 3, vec![2, 2], 4);
        let (reg, _) = table_for(&g, vec![2, 2], 8);
        let t = RepresentativeTable::build(&reg, LVector::new(vec![2, 2]).unwrap(), 1 << 20, &RngStream::new(3).child("x/y")).unwrap();
        let back = RepresentativeTable::parse(&reg, &t.render()).unwrap();
        assert_eq!(back.transcript(), t.transcript());
        assert_eq!(back.d, t.d);
        for tc in all_totals(&g, IndexSet::new(&[1, 2]).unwrap()) {
            assert_eq!(back.vartheta(&tc), t.vartheta(&tc));
        }
    }

    #[test]
    fn frame_vartheta_matches_total() {
        let g = random_graph(3, 3, 3, vec![2, 2, 2], 5);
        let (_, t) = table_for(&g, vec![2, 2, 2], 6);
        for tc in all_totals(&g, IndexSet::full(3)) {
            let via_total = t.vartheta(&tc).map(|x| x.frame());
            let fr = t.vartheta_frame(&tc.frame());
            if let (Some(a), Some(b)) = (&via_total, &fr) {
                assert_eq!(a, b);
            }
            if fr.is_none() {
                assert!(via_total.is_none());
            }
        }
    }

    #[test]
    fn ordinary_frame_on_single_color() {
        let p = Params::uniform(3, 2, vec![1, 1], 2).unwrap();
        let g = ColoredHypergraph::constant(p, &[ColorId(0), ColorId(0)]).unwrap();
        let (reg, t) = table_for(&g, vec![1, 1], 1);
        let delta = DeltaCertificate::zero();
        let o = OrdinaryOracle::new(&reg, &t, &delta);
        let fc = FrameColor::new(IndexSet::new(&[0, 1]).unwrap(), vec![ColorId(0); 2]).unwrap();
        assert!(o.is_ordinary_frame(&fc, 0.001, 0.1, Some(0.1)));
        assert!(o.is_ordinary_frame(&fc, 0.001, 0.0, None));
    }
}
