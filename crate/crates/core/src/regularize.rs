//! Regularization by partitionwise maps and exact relative densities.

use crate::error::{Error, Result};
use crate::model::{ColorClass, ColorId, ColoredHypergraph, FrameColor, IndexSet, Params, SubEdgePlan};
use crate::sampling::PartitionwiseMap;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use rayon::prelude::*;
use std::collections::HashMap;

/// The vectors interned by one regularization stage.
#[derive(Clone, Debug)]
pub struct Stage {
    pub s: usize,
    pub map: PartitionwiseMap,
    /// Per class index `|I| <= s`: new id -> color vector.
    pub vectors: Vec<(IndexSet, Vec<Vec<ColorId>>)>,
}

/// `G` together with `G/phi` (or `G/phi_vec`) and the map back to `G`'s colors.
#[derive(Clone, Debug)]
pub struct RegularizedGraph {
    base: ColoredHypergraph,
    graph: ColoredHypergraph,
    /// Per class slot: regularized id -> base id.
    to_base: Vec<Vec<ColorId>>,
    stages: Vec<Stage>,
}

impl RegularizedGraph {
    /// No regularization at all.
    pub fn trivial(g: &ColoredHypergraph) -> Self {
        let to_base = g.classes().iter().map(|c| (0..c.size()).map(ColorId).collect()).collect();
        RegularizedGraph { base: g.clone(), graph: g.clone(), to_base, stages: Vec::new() }
    }

    pub fn base(&self) -> &ColoredHypergraph {
        &self.base
    }

    pub fn graph(&self) -> &ColoredHypergraph {
        &self.graph
    }

    pub fn into_graph(self) -> ColoredHypergraph {
        self.graph
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// The base color a regularized color refines.
    pub fn base_color(&self, index: IndexSet, c: ColorId) -> ColorId {
        self.to_base[self.graph.slot(index)][c.index()]
    }

    pub fn base_colors(&self, index: IndexSet) -> &[ColorId] {
        &self.to_base[self.graph.slot(index)]
    }
}

struct Piece {
    slot: usize,
    /// Stride in the target class for each member of `I`, in order.
    strides: Vec<usize>,
    /// Offsets contributed by every `f` in the image product over `J`.
    f_offsets: Vec<usize>,
}

fn pieces(g: &ColoredHypergraph, index: IndexSet, s: usize, images: &[Vec<u32>]) -> Vec<Piece> {
    let r = g.r();
    let rest = IndexSet::full(r).difference(index);
    let max_extra = s + 1 - index.len();
    let mut js: Vec<IndexSet> = (0..=rest.subset_count() as u32)
        .map(|t| rest.subset(t))
        .filter(|j| j.len() <= max_extra)
        .collect();
    // empty set first, then lexicographic
    js.sort_by(|a, b| (!a.is_empty()).cmp(&!b.is_empty()).then(a.cmp(b)));
    js.into_iter()
        .map(|j| {
            let target = index.union(j);
            let slot = g.slot(target);
            let class = g.class_at(slot);
            let pos = |p: usize| class.stride(target.position(p).unwrap());
            let strides = index.members().map(pos).collect();
            let mut f_offsets = vec![0usize];
            for p in j.members() {
                let st = pos(p);
                f_offsets = f_offsets
                    .iter()
                    .flat_map(|&o| images[p].iter().map(move |&v| o + v as usize * st))
                    .collect();
            }
            Piece { slot, strides, f_offsets }
        })
        .collect()
}

/// `G/^s phi`: every edge of arity at most `s` is recolored by the vector of
/// colors `G(e ∪ f)` over `J ⊆ 𝔯∖I`, `|J| <= s+1-|I|`, and `f` inside the
/// image of `phi`; higher arities keep their colors.
pub fn regularize(g: &ColoredHypergraph, s: usize, phi: &PartitionwiseMap) -> Result<RegularizedGraph> {
    regularize_from(RegularizedGraph::trivial(g), s, phi)
}

fn regularize_from(prev: RegularizedGraph, s: usize, phi: &PartitionwiseMap) -> Result<RegularizedGraph> {
    let g = &prev.graph;
    let k = g.k();
    if s == 0 || s >= k {
        return Err(Error::InvalidArity { s, k });
    }
    if phi.images().len() != g.r() {
        return Err(Error::InvalidDomain(format!("map has {} parts, graph has {}", phi.images().len(), g.r())));
    }
    for (p, img) in phi.images().iter().enumerate() {
        if let Some(&v) = img.iter().find(|&&v| v as usize >= g.params().part_sizes[p]) {
            return Err(Error::InvalidVertex { part: p, vertex: v });
        }
    }
    let images = phi.image_sets();
    let mut classes: Vec<ColorClass> = Vec::with_capacity(g.classes().len());
    let mut to_base = Vec::with_capacity(g.classes().len());
    let mut vectors_out = Vec::new();
    let mut b = g.params().b.clone();

    for (slot, class) in g.classes().iter().enumerate() {
        let index = class.index();
        if index.len() > s {
            classes.push(class.clone());
            to_base.push(prev.to_base[slot].clone());
            continue;
        }
        let ps = pieces(g, index, s, &images);
        let width: usize = ps.iter().map(|p| p.f_offsets.len()).sum();
        let n = class.len();
        let mut flat = vec![ColorId(0); n * width];
        flat.par_chunks_mut(width.max(1)).enumerate().for_each(|(off, row)| {
            if width == 0 {
                return;
            }
            let mut verts = vec![0u32; index.len()];
            class.decode(off, &mut verts);
            let mut w = 0;
            for piece in &ps {
                let table = g.class_at(piece.slot).table();
                let base: usize = verts.iter().zip(&piece.strides).map(|(&v, &st)| v as usize * st).sum();
                for &fo in &piece.f_offsets {
                    row[w] = table[base + fo];
                    w += 1;
                }
            }
        });
        let mut distinct: Vec<&[ColorId]> = flat.chunks(width).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let ids: HashMap<&[ColorId], u32> =
            distinct.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        let table: Vec<ColorId> = flat.chunks(width).map(|v| ColorId(ids[v])).collect();
        let size = distinct.len() as u32;
        b[index.len() - 1] = b[index.len() - 1].max(size);
        to_base.push(distinct.iter().map(|v| prev.to_base[slot][v[0].index()]).collect());
        vectors_out.push((index, distinct.iter().map(|v| v.to_vec()).collect()));
        classes.push(ColorClass::from_table(index, size, g.params(), table));
    }

    let params = Params { b, ..g.params().clone() };
    let graph = ColoredHypergraph::from_parts(params, classes);
    let mut stages = prev.stages;
    stages.push(Stage { s, map: phi.clone(), vectors: vectors_out });
    Ok(RegularizedGraph { base: prev.base, graph, to_base, stages })
}

/// `((G/^{k-1} phi_{k-1}) /^{k-2} phi_{k-2}) ... /^1 phi_1`, where
/// `phis[s-1]` is `phi_s`.
pub fn regularize_vector(g: &ColoredHypergraph, phis: &[PartitionwiseMap]) -> Result<RegularizedGraph> {
    let k = g.k();
    if phis.len() + 1 != k {
        return Err(Error::InvalidArity { s: phis.len(), k });
    }
    let mut cur = RegularizedGraph::trivial(g);
    for s in (1..k).rev() {
        cur = regularize_from(cur, s, &phis[s - 1])?;
    }
    Ok(cur)
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `B_i(b, m) = prod_{j=0}^{k-i} b_{i+j}^(C(r,j) m^j)`.
pub fn color_bound(b: &[u32], r: usize, i: usize, m: usize) -> BigUint {
    let k = b.len();
    let mut out = BigUint::one();
    for j in 0..=k - i {
        let exp = binomial(r, j) * (m as u64).pow(j as u32);
        out *= BigUint::from(b[i + j - 1]).pow(exp as u32);
    }
    out
}

/// Per-frame counts of one index class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameBucket {
    pub count: u64,
    /// Counts per target color.
    pub colors: Vec<u64>,
}

/// Frame histograms of every class, with target colors possibly taken from a
/// different graph on the same parts (the mixed densities of a regularization).
#[derive(Clone, Debug)]
pub struct FrameStats {
    classes: Vec<(IndexSet, u32, HashMap<Vec<ColorId>, FrameBucket>)>,
    totals: Vec<u64>,
}

fn class_stats(frames: &ColoredHypergraph, targets: &ColoredHypergraph, index: IndexSet) -> HashMap<Vec<ColorId>, FrameBucket> {
    let plan = SubEdgePlan::new(frames, index);
    let class = frames.class(index);
    let tclass = targets.class(index);
    let tsize = tclass.size() as usize;
    let n = class.len();
    let chunk = 4096.max(n / 64 + 1);
    (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let mut map: HashMap<Vec<ColorId>, FrameBucket> = HashMap::new();
            let mut verts = vec![0u32; index.len()];
            let mut buf = Vec::new();
            for off in ci * chunk..((ci + 1) * chunk).min(n) {
                class.decode(off, &mut verts);
                plan.total_into(frames, &verts, &mut buf);
                buf.pop();
                let bucket = map.entry(buf.clone()).or_insert_with(|| FrameBucket { count: 0, colors: vec![0; tsize] });
                bucket.count += 1;
                bucket.colors[tclass.table()[off].index()] += 1;
            }
            map
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                let e = a.entry(k).or_insert_with(|| FrameBucket { count: 0, colors: vec![0; tsize] });
                e.count += v.count;
                for (x, y) in e.colors.iter_mut().zip(&v.colors) {
                    *x += y;
                }
            }
            a
        })
}

impl FrameStats {
    pub fn new(g: &ColoredHypergraph) -> Self {
        Self::mixed(g, g)
    }

    /// Frames from `frames`, target colors from `targets`.
    pub fn mixed(frames: &ColoredHypergraph, targets: &ColoredHypergraph) -> Self {
        assert_eq!(frames.params().part_sizes, targets.params().part_sizes);
        let classes: Vec<_> = frames
            .index_sets()
            .map(|i| (i, targets.class_size(i), class_stats(frames, targets, i)))
            .collect();
        let totals = classes.iter().map(|c| frames.class(c.0).len() as u64).collect();
        FrameStats { classes, totals }
    }

    fn find(&self, index: IndexSet) -> usize {
        self.classes.iter().position(|c| c.0 == index).expect("index class")
    }

    pub fn bucket(&self, index: IndexSet, frame: &[ColorId]) -> Option<&FrameBucket> {
        self.classes[self.find(index)].2.get(frame)
    }

    /// `|Omega_I|`.
    pub fn total(&self, index: IndexSet) -> u64 {
        self.totals[self.find(index)]
    }

    pub fn target_size(&self, index: IndexSet) -> u32 {
        self.classes[self.find(index)].1
    }

    /// Realized frames with their buckets.
    pub fn frames(&self, index: IndexSet) -> impl Iterator<Item = (&Vec<ColorId>, &FrameBucket)> {
        self.classes[self.find(index)].2.iter()
    }

    /// `P[G(e) = target | frame(e) = frame]` exactly.
    pub fn density(&self, index: IndexSet, frame: &[ColorId], target: ColorId) -> Result<Ratio<u64>> {
        let b = self.bucket(index, frame).ok_or(Error::EmptyCondition)?;
        let hit = b.colors.get(target.index()).copied().unwrap_or(0);
        Ok(Ratio::new(hit, b.count))
    }

    pub fn density_f64(&self, index: IndexSet, frame: &[ColorId], target: ColorId) -> Option<f64> {
        let b = self.bucket(index, frame)?;
        let hit = b.colors.get(target.index()).copied().unwrap_or(0);
        Some(hit as f64 / b.count as f64)
    }

    /// `d(c_I | frame)` for a total color.
    pub fn density_of_total(&self, tc: &crate::model::TotalColor) -> Option<f64> {
        let entries = tc.entries();
        self.density_f64(tc.index(), &entries[..entries.len() - 1], tc.top())
    }
}

/// A target color at index `I` conditioned on a frame color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityQuery {
    pub target: ColorId,
    pub frame: FrameColor,
}

/// `d_G(target | frame)` by full enumeration of `Omega_I`.
pub fn relative_density(g: &ColoredHypergraph, q: &DensityQuery) -> Result<Ratio<u64>> {
    let index = q.frame.index();
    let stats = class_stats(g, g, index);
    let b = stats.get(q.frame.entries()).ok_or(Error::EmptyCondition)?;
    Ok(Ratio::new(b.colors.get(q.target.index()).copied().unwrap_or(0), b.count))
}

/// `P[G(e) = target | G/phi(∂e) = frame]` where the frame is a color of the
/// regularized graph.
pub fn mixed_density(reg: &RegularizedGraph, q: &DensityQuery) -> Result<Ratio<u64>> {
    let index = q.frame.index();
    let stats = class_stats(reg.graph(), reg.base(), index);
    let b = stats.get(q.frame.entries()).ok_or(Error::EmptyCondition)?;
    Ok(Ratio::new(b.colors.get(q.target.index()).copied().unwrap_or(0), b.count))
}
