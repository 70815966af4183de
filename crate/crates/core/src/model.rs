//! Colored r-partite k-bound hypergraphs over finite uniform parts.
//!
//! Parts are labelled `0..r`. An edge of index `I` picks exactly one vertex in
//! every part of `I`; every index class `I` (with `1 <= |I| <= k`) owns a dense
//! color table laid out row-major over the parts of `I` in label order.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Largest supported part count (index sets are bitmasks).
pub const MAX_PARTS: usize = 16;

/// Scatter the low bits of `rel` onto the set bits of `mask`.
pub(crate) fn deposit(rel: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut bit = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if rel >> bit & 1 == 1 {
            out |= low;
        }
        m &= m - 1;
        bit += 1;
    }
    out
}

/// Gather the bits of `x` at the set bits of `mask` into the low bits.
pub(crate) fn extract(x: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    let mut bit = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if x & low != 0 {
            out |= 1 << bit;
        }
        m &= m - 1;
        bit += 1;
    }
    out
}

/// A set of part labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(u32);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn new(members: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &p in members {
            if p >= MAX_PARTS {
                return Err(Error::InvalidIndexSet(format!("part {p} >= {MAX_PARTS}")));
            }
            if mask >> p & 1 == 1 {
                return Err(Error::InvalidIndexSet(format!("part {p} repeated")));
            }
            mask |= 1 << p;
        }
        Ok(IndexSet(mask))
    }

    pub const fn from_mask(mask: u32) -> Self {
        IndexSet(mask)
    }

    pub const fn singleton(part: usize) -> Self {
        IndexSet(1 << part)
    }

    /// All parts `0..r`.
    pub fn full(r: usize) -> Self {
        IndexSet(((1u64 << r) - 1) as u32)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, part: usize) -> bool {
        self.0 >> part & 1 == 1
    }

    pub const fn is_subset(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn union(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 | other.0)
    }

    pub const fn difference(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 & !other.0)
    }

    pub fn members(self) -> impl Iterator<Item = usize> + Clone {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let p = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(p)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.members().collect()
    }

    /// Position of `part` among the members, if present.
    pub fn position(self, part: usize) -> Option<usize> {
        self.contains(part)
            .then(|| (self.0 & ((1u32 << part) - 1)).count_ones() as usize)
    }

    /// The subset selected by a mask relative to the member positions.
    pub fn subset(self, rel: u32) -> IndexSet {
        IndexSet(deposit(rel, self.0))
    }

    /// Mask of `sub` relative to the member positions of `self`.
    pub fn relative(self, sub: IndexSet) -> u32 {
        extract(sub.0, self.0)
    }

    /// Number of nonempty subsets, `2^|I| - 1`.
    pub fn subset_count(self) -> usize {
        (1usize << self.len()) - 1
    }

    /// Nonempty subsets in relative-mask order (the layout of color vectors).
    pub fn subsets(self) -> impl Iterator<Item = IndexSet> {
        (1..=self.subset_count() as u32).map(move |t| self.subset(t))
    }
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.members().cmp(other.members())
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for IndexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let members = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidIndexSet(format!("bad member {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let set = IndexSet::new(&members)?;
        if set.is_empty() {
            return Err(Error::InvalidIndexSet("empty".into()));
        }
        Ok(set)
    }
}

/// All index sets with `1 <= |I| <= k` over `r` parts, lexicographic by members.
pub fn index_sets(r: usize, k: usize) -> Vec<IndexSet> {
    let mut out: Vec<IndexSet> = (1u32..(1u32 << r))
        .map(IndexSet)
        .filter(|s| s.len() <= k)
        .collect();
    out.sort();
    out
}

/// Part count, uniformity bound, per-arity color bounds and part sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub r: usize,
    pub k: usize,
    /// `b[i-1]` bounds the color count of every arity-`i` class.
    pub b: Vec<u32>,
    pub part_sizes: Vec<usize>,
}

impl Params {
    pub fn new(r: usize, k: usize, b: Vec<u32>, part_sizes: Vec<usize>) -> Result<Self> {
        let p = Params { r, k, b, part_sizes };
        p.validate()?;
        Ok(p)
    }

    /// Equal part sizes `n` and bounds `b`.
    pub fn uniform(r: usize, k: usize, b: Vec<u32>, n: usize) -> Result<Self> {
        Self::new(r, k, b, vec![n; r])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.k == 0 || self.r < self.k {
            return bad(format!("need r >= k >= 1, got r={} k={}", self.r, self.k));
        }
        if self.r > MAX_PARTS {
            return bad(format!("r = {} exceeds {MAX_PARTS}", self.r));
        }
        if self.b.len() != self.k || self.b.iter().any(|&b| b == 0) {
            return bad(format!("need k positive color bounds, got {:?}", self.b));
        }
        if self.part_sizes.len() != self.r || self.part_sizes.iter().any(|&n| n == 0) {
            return bad(format!("need r nonempty parts, got {:?}", self.part_sizes));
        }
        Ok(())
    }

    pub fn index_sets(&self) -> Vec<IndexSet> {
        index_sets(self.r, self.k)
    }

    /// `|Omega_I|`.
    pub fn edge_count(&self, index: IndexSet) -> usize {
        index.members().map(|p| self.part_sizes[p]).product()
    }

    pub fn with_part_sizes(&self, part_sizes: Vec<usize>) -> Result<Self> {
        Self::new(self.r, self.k, self.b.clone(), part_sizes)
    }
}

/// A color within one index class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct ColorId(pub u32);

impl ColorId {
    /// The invisible color of a class that has one.
    pub const INVISIBLE: ColorId = ColorId(0);

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ColorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One vertex per part of `index`, listed in part-label order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub index: IndexSet,
    pub verts: Vec<u32>,
}

impl Edge {
    pub fn new(index: IndexSet, verts: Vec<u32>) -> Result<Self> {
        if index.is_empty() || index.len() != verts.len() {
            return Err(Error::InvalidEdge(format!(
                "index {index} needs {} vertices, got {}",
                index.len(),
                verts.len()
            )));
        }
        Ok(Edge { index, verts })
    }

    /// Vertex in `part`, if the edge touches it.
    pub fn vertex(&self, part: usize) -> Option<u32> {
        self.index.position(part).map(|i| self.verts[i])
    }

    pub fn restrict(&self, to: IndexSet) -> Result<Edge> {
        if to.is_empty() || !to.is_subset(self.index) {
            return Err(Error::InvalidRestriction { from: self.index, to });
        }
        let rel = self.index.relative(to);
        let verts = (0..self.index.len())
            .filter(|i| rel >> i & 1 == 1)
            .map(|i| self.verts[i])
            .collect();
        Ok(Edge { index: to, verts })
    }

    fn check(&self, params: &Params) -> Result<()> {
        if self.index.len() != self.verts.len() || self.index.is_empty() {
            return Err(Error::InvalidEdge(format!("malformed edge {self:?}")));
        }
        if self.index.len() > params.k || self.index.members().any(|p| p >= params.r) {
            return Err(Error::InvalidEdge(format!("index {} not a class", self.index)));
        }
        for (p, &v) in self.index.members().zip(&self.verts) {
            if v as usize >= params.part_sizes[p] {
                return Err(Error::InvalidEdge(format!("vertex {v} outside part {p}")));
            }
        }
        Ok(())
    }
}

/// Restrict `e` to the nonempty `J` contained in its index.
pub fn restrict_edge(e: &Edge, to: IndexSet) -> Result<Edge> {
    e.restrict(to)
}

/// Colors of every nonempty `J ⊆ I`, stored at relative mask order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TotalColor {
    index: IndexSet,
    entries: Vec<ColorId>,
}

/// Colors of every nonempty proper `J ⊊ I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameColor {
    index: IndexSet,
    entries: Vec<ColorId>,
}

fn gather(index: IndexSet, entries: &[ColorId], to: IndexSet) -> Vec<ColorId> {
    let rel = index.relative(to);
    (1..=to.subset_count() as u32)
        .map(|t| entries[deposit(t, rel) as usize - 1])
        .collect()
}

impl TotalColor {
    pub fn new(index: IndexSet, entries: Vec<ColorId>) -> Result<Self> {
        if entries.len() != index.subset_count() {
            return Err(Error::InvalidEdge(format!(
                "total color of {index} needs {} entries",
                index.subset_count()
            )));
        }
        Ok(TotalColor { index, entries })
    }

    pub fn index(&self) -> IndexSet {
        self.index
    }

    pub fn entries(&self) -> &[ColorId] {
        &self.entries
    }

    pub fn get(&self, sub: IndexSet) -> ColorId {
        debug_assert!(sub.is_subset(self.index) && !sub.is_empty());
        self.entries[self.index.relative(sub) as usize - 1]
    }

    pub fn top(&self) -> ColorId {
        *self.entries.last().expect("nonempty")
    }

    pub fn frame(&self) -> FrameColor {
        FrameColor {
            index: self.index,
            entries: self.entries[..self.entries.len() - 1].to_vec(),
        }
    }

    /// `c|_J` for nonempty `J ⊆ I`.
    pub fn restrict(&self, to: IndexSet) -> TotalColor {
        TotalColor { index: to, entries: gather(self.index, &self.entries, to) }
    }

    /// Entries as `(J, color)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (IndexSet, ColorId)> + '_ {
        self.index.subsets().zip(self.entries.iter().copied())
    }
}

impl FrameColor {
    pub fn new(index: IndexSet, entries: Vec<ColorId>) -> Result<Self> {
        if entries.len() + 1 != index.subset_count() {
            return Err(Error::InvalidEdge(format!(
                "frame of {index} needs {} entries",
                index.subset_count() - 1
            )));
        }
        Ok(FrameColor { index, entries })
    }

    pub fn index(&self) -> IndexSet {
        self.index
    }

    pub fn entries(&self) -> &[ColorId] {
        &self.entries
    }

    pub fn get(&self, sub: IndexSet) -> ColorId {
        debug_assert!(sub.is_subset(self.index) && sub != self.index && !sub.is_empty());
        self.entries[self.index.relative(sub) as usize - 1]
    }

    pub fn with_top(&self, top: ColorId) -> TotalColor {
        let mut entries = self.entries.clone();
        entries.push(top);
        TotalColor { index: self.index, entries }
    }

    /// Total color of a proper nonempty `J ⊊ I`.
    pub fn total_of(&self, sub: IndexSet) -> TotalColor {
        debug_assert!(sub != self.index);
        TotalColor { index: sub, entries: gather(self.index, &self.entries, sub) }
    }

    /// Frame of a nonempty `J ⊆ I` (for `J = I` this is `self`).
    pub fn frame_of(&self, sub: IndexSet) -> FrameColor {
        if sub == self.index {
            return self.clone();
        }
        let mut entries = gather(self.index, &self.entries, sub);
        entries.pop();
        FrameColor { index: sub, entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexSet, ColorId)> + '_ {
        self.index.subsets().zip(self.entries.iter().copied())
    }
}

/// Dense color table of one index class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorClass {
    index: IndexSet,
    size: u32,
    dims: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<ColorId>,
}

impl ColorClass {
    fn new(index: IndexSet, size: u32, params: &Params) -> Self {
        let dims: Vec<usize> = index.members().map(|p| params.part_sizes[p]).collect();
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let len = dims.iter().product();
        ColorClass { index, size, dims, strides, table: vec![ColorId(0); len] }
    }

    pub(crate) fn from_table(index: IndexSet, size: u32, params: &Params, table: Vec<ColorId>) -> Self {
        let mut c = Self::new(index, size, params);
        assert_eq!(c.table.len(), table.len());
        c.table = table;
        c
    }

    pub fn index(&self) -> IndexSet {
        self.index
    }

    /// `|C_I|`.
    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub(crate) fn table_mut(&mut self) -> &mut [ColorId] {
        &mut self.table
    }

    pub fn table(&self) -> &[ColorId] {
        &self.table
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Stride of the member at `pos` (row-major, last member fastest).
    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    pub fn offset(&self, verts: &[u32]) -> usize {
        verts.iter().zip(&self.strides).map(|(&v, &s)| v as usize * s).sum()
    }

    pub fn decode(&self, mut offset: usize, verts: &mut [u32]) {
        for (i, &s) in self.strides.iter().enumerate() {
            verts[i] = (offset / s) as u32;
            offset %= s;
        }
    }

    pub fn edge_at(&self, offset: usize) -> Edge {
        let mut verts = vec![0; self.dims.len()];
        self.decode(offset, &mut verts);
        Edge { index: self.index, verts }
    }
}

/// Precomputed lookup of every sub-edge of an index-`I` edge.
///
/// Valid for any graph with the same parameters since the table layout only
/// depends on part sizes.
#[derive(Clone, Debug)]
pub struct SubEdgePlan {
    index: IndexSet,
    /// Per relative mask `t`: class slot and `(member position, stride)` pairs.
    subs: Vec<(usize, Vec<(usize, usize)>)>,
}

impl SubEdgePlan {
    pub fn new(graph: &ColoredHypergraph, index: IndexSet) -> Self {
        let subs = index
            .subsets()
            .map(|sub| {
                let slot = graph.slot(sub);
                let class = &graph.classes[slot];
                let rel = index.relative(sub);
                let terms = (0..index.len())
                    .filter(|i| rel >> i & 1 == 1)
                    .enumerate()
                    .map(|(j, i)| (i, class.strides[j]))
                    .collect();
                (slot, terms)
            })
            .collect();
        SubEdgePlan { index, subs }
    }

    pub fn index(&self) -> IndexSet {
        self.index
    }

    /// Offset of the sub-edge selected by relative mask `t` (1-based).
    #[inline]
    pub fn sub_offset(&self, t: usize, verts: &[u32]) -> (usize, usize) {
        let (slot, terms) = &self.subs[t - 1];
        (*slot, terms.iter().map(|&(i, s)| verts[i] as usize * s).sum())
    }

    /// Writes all `2^|I| - 1` entries of the total color into `out`.
    #[inline]
    pub fn total_into(&self, graph: &ColoredHypergraph, verts: &[u32], out: &mut Vec<ColorId>) {
        out.clear();
        for (slot, terms) in &self.subs {
            let off: usize = terms.iter().map(|&(i, s)| verts[i] as usize * s).sum();
            out.push(graph.classes[*slot].table[off]);
        }
    }
}

/// A k-bound colored r-partite hypergraph with dense color tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredHypergraph {
    params: Params,
    classes: Vec<ColorClass>,
    slots: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl ColoredHypergraph {
    /// Every class gets `class_size(I)` colors and all edges color 0.
    pub fn with_sizes(params: Params, class_size: impl Fn(IndexSet) -> u32) -> Result<Self> {
        params.validate()?;
        let mut slots = vec![NO_SLOT; 1 << params.r];
        let mut classes = Vec::new();
        for index in params.index_sets() {
            let size = class_size(index);
            if size == 0 {
                return Err(Error::InvalidParams(format!("class {index} has no colors")));
            }
            if size > params.b[index.len() - 1] {
                return Err(Error::InvalidParams(format!(
                    "class {index} has {size} colors, bound is {}",
                    params.b[index.len() - 1]
                )));
            }
            slots[index.mask() as usize] = classes.len() as u32;
            classes.push(ColorClass::new(index, size, &params));
        }
        Ok(ColoredHypergraph { params, classes, slots })
    }

    /// Classes sized by `b` with every edge colored 0.
    pub fn blank(params: Params) -> Result<Self> {
        let b = params.b.clone();
        Self::with_sizes(params, |i| b[i.len() - 1])
    }

    /// Every arity-`i` edge colored `colors[i-1]`; class sizes from `b`.
    pub fn constant(params: Params, colors: &[ColorId]) -> Result<Self> {
        let mut g = Self::blank(params)?;
        if colors.len() != g.params.k {
            return Err(Error::InvalidParams("need one color per arity".into()));
        }
        for class in &mut g.classes {
            let c = colors[class.index.len() - 1];
            if c.0 >= class.size {
                return Err(Error::InvalidParams(format!("color {c} outside class")));
            }
            class.table.fill(c);
        }
        Ok(g)
    }

    /// Fill every table from `color(index, verts)`.
    pub fn fill_with(&mut self, mut color: impl FnMut(IndexSet, &[u32]) -> ColorId) -> Result<()> {
        let mut verts = Vec::new();
        for class in &mut self.classes {
            verts.resize(class.dims.len(), 0);
            for off in 0..class.table.len() {
                class.decode(off, &mut verts);
                let c = color(class.index, &verts);
                if c.0 >= class.size {
                    return Err(Error::InvalidEdge(format!(
                        "color {c} outside class {} of size {}",
                        class.index, class.size
                    )));
                }
                class.table[off] = c;
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(params: Params, classes: Vec<ColorClass>) -> Self {
        let mut slots = vec![NO_SLOT; 1 << params.r];
        for (i, c) in classes.iter().enumerate() {
            slots[c.index.mask() as usize] = i as u32;
        }
        ColoredHypergraph { params, classes, slots }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn r(&self) -> usize {
        self.params.r
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn classes(&self) -> &[ColorClass] {
        &self.classes
    }

    pub(crate) fn classes_mut(&mut self) -> &mut [ColorClass] {
        &mut self.classes
    }

    pub fn index_sets(&self) -> impl Iterator<Item = IndexSet> + '_ {
        self.classes.iter().map(|c| c.index)
    }

    /// Index sets of arity exactly `s`, lexicographic.
    pub fn index_sets_of_arity(&self, s: usize) -> Vec<IndexSet> {
        self.index_sets().filter(|i| i.len() == s).collect()
    }

    pub fn has_class(&self, index: IndexSet) -> bool {
        (index.mask() as usize) < self.slots.len() && self.slots[index.mask() as usize] != NO_SLOT
    }

    pub(crate) fn slot(&self, index: IndexSet) -> usize {
        let s = self.slots[index.mask() as usize];
        assert!(s != NO_SLOT, "no class for index {index}");
        s as usize
    }

    pub fn class(&self, index: IndexSet) -> &ColorClass {
        &self.classes[self.slot(index)]
    }

    pub(crate) fn class_mut(&mut self, index: IndexSet) -> &mut ColorClass {
        let s = self.slot(index);
        &mut self.classes[s]
    }

    pub fn class_at(&self, slot: usize) -> &ColorClass {
        &self.classes[slot]
    }

    /// `|C_I|`.
    pub fn class_size(&self, index: IndexSet) -> u32 {
        self.class(index).size
    }

    /// `c_i(G) = max_{|I| = i} |C_I|`.
    pub fn max_class_size(&self, arity: usize) -> u32 {
        self.classes
            .iter()
            .filter(|c| c.index.len() == arity)
            .map(|c| c.size)
            .max()
            .unwrap_or(0)
    }

    pub fn validate_edge(&self, e: &Edge) -> Result<()> {
        e.check(&self.params)
    }

    pub fn color(&self, e: &Edge) -> Result<ColorId> {
        self.validate_edge(e)?;
        Ok(self.color_unchecked(e.index, &e.verts))
    }

    #[inline]
    pub fn color_unchecked(&self, index: IndexSet, verts: &[u32]) -> ColorId {
        let class = self.class(index);
        class.table[class.offset(verts)]
    }

    pub fn set_color(&mut self, e: &Edge, c: ColorId) -> Result<()> {
        self.validate_edge(e)?;
        let class = self.class_mut(e.index);
        if c.0 >= class.size {
            return Err(Error::InvalidEdge(format!("color {c} outside class {}", e.index)));
        }
        let off = class.offset(&e.verts);
        class.table[off] = c;
        Ok(())
    }

    pub(crate) fn set_at(&mut self, index: IndexSet, offset: usize, c: ColorId) {
        self.class_mut(index).table[offset] = c;
    }

    pub fn total_color(&self, e: &Edge) -> Result<TotalColor> {
        self.validate_edge(e)?;
        let plan = SubEdgePlan::new(self, e.index);
        let mut entries = Vec::with_capacity(e.index.subset_count());
        plan.total_into(self, &e.verts, &mut entries);
        Ok(TotalColor { index: e.index, entries })
    }

    pub fn frame_color(&self, e: &Edge) -> Result<FrameColor> {
        Ok(self.total_color(e)?.frame())
    }

    /// Every edge of index `index` as `(offset, verts)` in table order.
    pub fn edges(&self, index: IndexSet) -> impl Iterator<Item = Edge> + '_ {
        let class = self.class(index);
        (0..class.len()).map(move |off| class.edge_at(off))
    }

    /// Sum of all table sizes.
    pub fn table_volume(&self) -> usize {
        self.classes.iter().map(|c| c.len()).sum()
    }

    /// Change the size of a class; existing colors must fit.
    pub fn resize_class(&mut self, index: IndexSet, size: u32) -> Result<()> {
        let arity = index.len();
        let bound = self.params.b[arity - 1];
        let class = self.class_mut(index);
        if size == 0 || class.table.iter().any(|c| c.0 >= size) {
            return Err(Error::InvalidParams(format!("class {index} cannot shrink to {size}")));
        }
        class.size = size;
        if size > bound {
            self.params.b[arity - 1] = size;
        }
        Ok(())
    }
}

/// `G<e>` for a valid edge.
pub fn total_color(g: &ColoredHypergraph, e: &Edge) -> Result<TotalColor> {
    g.total_color(e)
}

/// Odometer over all vertex tuples of the given dimensions.
pub(crate) fn for_each_tuple(dims: &[usize], mut f: impl FnMut(&[u32])) {
    if dims.iter().any(|&d| d == 0) {
        return;
    }
    let mut cur = vec![0u32; dims.len()];
    loop {
        f(&cur);
        let mut i = dims.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < dims[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// A colored graph whose invisible edges are closed upward.
///
/// Classes flagged invisible reserve color 0 for "invisible"; their visible
/// color `c >= 1` stands for mother-graph color `c - 1`. Classes without an
/// invisible color map colors to the mother graph unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    graph: ColoredHypergraph,
    invisible: Vec<bool>,
}

/// Result of checking upward invisibility and the color injection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComplexReport {
    /// `(invisible sub-edge, visible super-edge)` pairs.
    pub violations: Vec<(Edge, Edge)>,
    /// Visible edges whose color has no counterpart in the mother graph.
    pub injection_violations: Vec<Edge>,
}

impl ComplexReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.injection_violations.is_empty()
    }
}

impl SimplicialComplex {
    /// Wrap a graph; `invisible[slot]` marks classes whose color 0 is invisible.
    pub fn from_graph(graph: ColoredHypergraph, invisible_classes: &[IndexSet]) -> Self {
        let mut invisible = vec![false; graph.classes.len()];
        for &i in invisible_classes {
            invisible[graph.slot(i)] = true;
        }
        SimplicialComplex { graph, invisible }
    }

    /// A complex with `h` vertices per part where every class has an invisible
    /// color followed by `mother_sizes(I)` visible colors; all edges invisible.
    pub fn invisible(
        r: usize,
        k: usize,
        h: usize,
        mother_sizes: impl Fn(IndexSet) -> u32,
    ) -> Result<Self> {
        let sets = index_sets(r, k);
        let mut b = vec![1u32; k];
        for &i in &sets {
            b[i.len() - 1] = b[i.len() - 1].max(mother_sizes(i) + 1);
        }
        let params = Params::uniform(r, k, b, h)?;
        let graph = ColoredHypergraph::with_sizes(params, |i| mother_sizes(i) + 1)?;
        let invisible = vec![true; graph.classes.len()];
        Ok(SimplicialComplex { graph, invisible })
    }

    /// Every class fully visible with the given graph's palettes.
    pub fn all_visible(graph: ColoredHypergraph) -> Self {
        let invisible = vec![false; graph.classes.len()];
        SimplicialComplex { graph, invisible }
    }

    pub fn graph(&self) -> &ColoredHypergraph {
        &self.graph
    }

    pub fn into_graph(self) -> ColoredHypergraph {
        self.graph
    }

    pub fn params(&self) -> &Params {
        &self.graph.params
    }

    pub fn has_invisible(&self, index: IndexSet) -> bool {
        self.invisible[self.graph.slot(index)]
    }

    pub fn invisible_classes(&self) -> Vec<IndexSet> {
        self.graph
            .index_sets()
            .filter(|&i| self.has_invisible(i))
            .collect()
    }

    fn decode_color(&self, slot: usize, c: ColorId) -> Option<ColorId> {
        if self.invisible[slot] {
            (c.0 > 0).then(|| ColorId(c.0 - 1))
        } else {
            Some(c)
        }
    }

    /// Mother-graph color of a visible edge, `None` when invisible.
    pub fn visible_color(&self, e: &Edge) -> Result<Option<ColorId>> {
        let c = self.graph.color(e)?;
        Ok(self.decode_color(self.graph.slot(e.index), c))
    }

    pub(crate) fn visible_at(&self, slot: usize, offset: usize) -> Option<ColorId> {
        self.decode_color(slot, self.graph.classes[slot].table[offset])
    }

    /// Set an edge visible with mother color `c`, or invisible with `None`.
    pub fn set_visible(&mut self, e: &Edge, c: Option<ColorId>) -> Result<()> {
        let slot = self.graph.slot(e.index);
        let raw = match (self.invisible[slot], c) {
            (true, Some(c)) => ColorId(c.0 + 1),
            (true, None) => ColorId::INVISIBLE,
            (false, Some(c)) => c,
            (false, None) => {
                return Err(Error::InvalidEdge(format!("class {} has no invisible color", e.index)))
            }
        };
        self.graph.set_color(e, raw)
    }

    /// Visible edges with their mother colors, in class then table order.
    pub fn visible_edges(&self) -> Vec<(Edge, ColorId)> {
        let mut out = Vec::new();
        for (slot, class) in self.graph.classes.iter().enumerate() {
            for off in 0..class.len() {
                if let Some(c) = self.visible_at(slot, off) {
                    out.push((class.edge_at(off), c));
                }
            }
        }
        out
    }

    /// Mother-graph total color of a visible edge (all sub-edges are visible
    /// in a valid complex).
    pub fn visible_total(&self, e: &Edge) -> Result<Option<TotalColor>> {
        let mut entries = Vec::with_capacity(e.index.subset_count());
        for sub in e.index.subsets() {
            match self.visible_color(&e.restrict(sub)?)? {
                Some(c) => entries.push(c),
                None => return Ok(None),
            }
        }
        Ok(Some(TotalColor { index: e.index, entries }))
    }
}

/// Check upward invisibility by an exhaustive pair scan, and optionally that
/// visible colors inject into `mother`'s classes.
pub fn validate_complex(s: &SimplicialComplex, mother: Option<&ColoredHypergraph>) -> ComplexReport {
    let mut report = ComplexReport::default();
    let g = &s.graph;
    for (slot, class) in g.classes.iter().enumerate() {
        for off in 0..class.len() {
            let Some(c) = s.visible_at(slot, off) else { continue };
            let e = class.edge_at(off);
            if let Some(m) = mother {
                if !m.has_class(e.index) || c.0 >= m.class_size(e.index) {
                    report.injection_violations.push(e.clone());
                }
            }
            for sub in e.index.subsets() {
                if sub == e.index {
                    continue;
                }
                let se = e.restrict(sub).expect("subset");
                let sslot = g.slot(sub);
                let soff = g.classes[sslot].offset(&se.verts);
                if s.visible_at(sslot, soff).is_none() {
                    report.violations.push((se, e.clone()));
                }
            }
        }
    }
    report
}

/// A k-uniform colored graph: classes below arity `k` hold only the invisible
/// color; top classes hold the invisible color 0 plus `b_k` visible colors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformColoredGraph {
    complex: SimplicialComplex,
}

impl UniformColoredGraph {
    /// All-invisible `h`-vertex graph with `b_k` visible top colors.
    pub fn new(r: usize, k: usize, h: usize, b_k: u32) -> Result<Self> {
        let complex = SimplicialComplex::invisible(r, k, h, |i| if i.len() == k { b_k } else { 0 })?;
        Ok(UniformColoredGraph { complex })
    }

    pub fn from_complex(complex: SimplicialComplex) -> Result<Self> {
        let k = complex.params().k;
        for class in complex.graph.classes() {
            if !complex.has_invisible(class.index) {
                return Err(Error::InvalidParams(format!(
                    "uniform graph class {} lacks an invisible color",
                    class.index
                )));
            }
            if class.index.len() < k && class.size != 1 {
                return Err(Error::InvalidParams(format!(
                    "uniform graph class {} below top arity must be invisible only",
                    class.index
                )));
            }
        }
        let sizes = &complex.params().part_sizes;
        if sizes.iter().any(|&n| n != sizes[0]) {
            return Err(Error::InvalidParams("uniform graph parts must be equal".into()));
        }
        Ok(UniformColoredGraph { complex })
    }

    pub fn r(&self) -> usize {
        self.complex.params().r
    }

    pub fn k(&self) -> usize {
        self.complex.params().k
    }

    /// Vertices per part.
    pub fn h(&self) -> usize {
        self.complex.params().part_sizes[0]
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn set_top(&mut self, e: &Edge, c: Option<ColorId>) -> Result<()> {
        if e.index.len() != self.k() {
            return Err(Error::InvalidEdge("uniform graphs only color top edges".into()));
        }
        self.complex.set_visible(e, c)
    }

    /// Visible top edges with mother colors.
    pub fn visible_edges(&self) -> Vec<(Edge, ColorId)> {
        self.complex.visible_edges()
    }

    /// The complex obtained by closing invisibility upward; since every lower
    /// class is invisible this makes every edge invisible.
    pub fn close_upward(&self) -> SimplicialComplex {
        let mut s = self.complex.clone();
        for class in s.graph.classes_mut() {
            class.table.fill(ColorId::INVISIBLE);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bip() -> ColoredHypergraph {
        // parts {u1,u2} x {w1,w2}, black=1 everywhere except (u2,w2) white=0
        let p = Params::uniform(2, 2, vec![1, 2], 2).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| {
            if i.len() == 2 && v == [1, 1] {
                ColorId(0)
            } else if i.len() == 2 {
                ColorId(1)
            } else {
                ColorId(0)
            }
        })
        .unwrap();
        g
    }

    #[test]
    fn index_set_order_is_lexicographic() {
        let sets = index_sets(3, 3);
        let shown: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["0", "0,1", "0,1,2", "0,2", "1", "1,2", "2"]);
    }

    #[test]
    fn deposit_extract_roundtrip() {
        let mask = 0b1011_0100;
        for rel in 0..16 {
            assert_eq!(extract(deposit(rel, mask), mask), rel);
        }
    }

    #[test]
    fn restrict_projection_and_identity() {
        let i = IndexSet::new(&[0, 1]).unwrap();
        let e = Edge::new(i, vec![3, 5]).unwrap();
        let r = e.restrict(IndexSet::singleton(0)).unwrap();
        assert_eq!(r.verts, vec![3]);
        assert_eq!(restrict_edge(&e, i).unwrap(), e);
        assert!(matches!(
            e.restrict(IndexSet::singleton(2)),
            Err(Error::InvalidRestriction { .. })
        ));
        assert!(e.restrict(IndexSet::EMPTY).is_err());
    }

    #[test]
    fn restriction_composes_for_all_chains() {
        let i = IndexSet::new(&[0, 2, 3]).unwrap();
        let e = Edge::new(i, vec![4, 1, 7]).unwrap();
        for j in i.subsets() {
            for j2 in j.subsets() {
                let twice = e.restrict(j).unwrap().restrict(j2).unwrap();
                assert_eq!(twice, e.restrict(j2).unwrap());
            }
        }
    }

    #[test]
    fn total_color_of_constant_graph() {
        let p = Params::uniform(2, 2, vec![1, 2], 3).unwrap();
        let g = ColoredHypergraph::constant(p, &[ColorId(0), ColorId(1)]).unwrap();
        let e = Edge::new(IndexSet::new(&[0, 1]).unwrap(), vec![2, 0]).unwrap();
        let tc = g.total_color(&e).unwrap();
        assert_eq!(tc.entries(), &[ColorId(0), ColorId(0), ColorId(1)]);
        assert_eq!(tc.entries().len(), 3);
        let v = Edge::new(IndexSet::singleton(1), vec![2]).unwrap();
        assert_eq!(g.total_color(&v).unwrap().entries(), &[ColorId(0)]);
    }

    #[test]
    fn total_color_matches_direct_lookup() {
        let g = bip();
        for e in g.edges(IndexSet::new(&[0, 1]).unwrap()) {
            let tc = g.total_color(&e).unwrap();
            for (j, c) in tc.iter() {
                assert_eq!(c, g.color(&e.restrict(j).unwrap()).unwrap());
            }
        }
        let e = Edge::new(IndexSet::new(&[0, 1]).unwrap(), vec![1, 1]).unwrap();
        assert_eq!(g.total_color(&e).unwrap().top(), ColorId(0));
    }

    #[test]
    fn total_color_restriction_and_frames() {
        let p = Params::uniform(3, 3, vec![4, 4, 4], 2).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| ColorId((i.mask() + v.iter().sum::<u32>()) % 4)).unwrap();
        let e = Edge::new(IndexSet::full(3), vec![1, 0, 1]).unwrap();
        let tc = g.total_color(&e).unwrap();
        for j in e.index.subsets() {
            assert_eq!(tc.restrict(j), g.total_color(&e.restrict(j).unwrap()).unwrap());
            if j != e.index {
                assert_eq!(tc.frame().total_of(j), tc.restrict(j));
                assert_eq!(tc.frame().frame_of(j), tc.restrict(j).frame());
            }
        }
        assert_eq!(tc.frame().with_top(tc.top()), tc);
    }

    #[test]
    fn class_bound_enforced() {
        let p = Params::uniform(2, 2, vec![1, 2], 2).unwrap();
        assert!(ColoredHypergraph::with_sizes(p, |_| 3).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::uniform(2, 3, vec![1, 1, 1], 2).is_err());
        assert!(Params::uniform(3, 2, vec![1, 0], 2).is_err());
        assert!(Params::new(3, 2, vec![1, 1], vec![2, 0, 2]).is_err());
        assert!(Params::uniform(3, 2, vec![1, 2], 2).is_ok());
    }

    #[test]
    fn all_invisible_complex_is_valid() {
        let s = SimplicialComplex::invisible(3, 2, 2, |_| 2).unwrap();
        assert!(validate_complex(&s, None).is_valid());
    }

    #[test]
    fn visible_top_over_invisible_vertex_is_reported() {
        let mut s = SimplicialComplex::invisible(2, 2, 1, |_| 2).unwrap();
        let top = Edge::new(IndexSet::full(2), vec![0, 0]).unwrap();
        let v0 = Edge::new(IndexSet::singleton(0), vec![0]).unwrap();
        s.set_visible(&v0, Some(ColorId(1))).unwrap();
        s.set_visible(&top, Some(ColorId(0))).unwrap();
        let report = validate_complex(&s, None);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].0, Edge::new(IndexSet::singleton(1), vec![0]).unwrap());
        assert_eq!(report.violations[0].1, top);
    }

    #[test]
    fn injection_checked_against_mother() {
        let mut s = SimplicialComplex::invisible(2, 1, 1, |_| 5).unwrap();
        let v = Edge::new(IndexSet::singleton(0), vec![0]).unwrap();
        s.set_visible(&v, Some(ColorId(4))).unwrap();
        let mother = ColoredHypergraph::blank(Params::uniform(2, 1, vec![2], 3).unwrap()).unwrap();
        let report = validate_complex(&s, Some(&mother));
        assert_eq!(report.injection_violations, vec![v]);
    }

    #[test]
    fn uniform_graph_closes_to_valid_complex() {
        let mut f = UniformColoredGraph::new(3, 2, 1, 1).unwrap();
        for i in index_sets(3, 2).into_iter().filter(|i| i.len() == 2) {
            f.set_top(&Edge::new(i, vec![0, 0]).unwrap(), Some(ColorId(0))).unwrap();
        }
        assert_eq!(f.visible_edges().len(), 3);
        assert!(!validate_complex(f.complex(), None).is_valid());
        assert!(validate_complex(&f.close_upward(), None).is_valid());
    }
}
