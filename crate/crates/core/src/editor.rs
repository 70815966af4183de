//! Recoloring `H` into `H'` by sweeping arities upward, and the removal
//! pipeline that either edits `G` free of a family or finds a copy.

use crate::counting::{colorable_search, copy_probability, ColorabilityInstance, CopyEstimate, CountMode};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{ColorId, ColoredHypergraph, Edge, FrameColor, IndexSet, SubEdgePlan, TotalColor, UniformColoredGraph};
use crate::regularity::{ordinary_total, regularity_search, SearchBudget};
use crate::representative::{LVector, OrdinaryOracle, RepresentativeTable};
use crate::sampling::{MapVector, PartitionwiseMap, RngStream};
use num_rational::Ratio;
use rayon::prelude::*;
use std::collections::HashMap;

const TOL: f64 = 1e-12;

/// Which rule fixed the color of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    /// Ordinary representative and dense enough: keep.
    Keep,
    /// Ordinary representative, too sparse: smallest color of density `>= 1/|C_I|`.
    Densify,
    /// No ordinary representative: smallest color with an ordinary total representative.
    Recolor,
    /// No color qualifies; the edge keeps its color.
    Stuck,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Keep => "keep",
            Case::Densify => "densify",
            Case::Recolor => "recolor",
            Case::Stuck => "stuck",
        }
    }
}

/// Thresholds of the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EditParams {
    pub epsilon: f64,
    pub epsilon1: f64,
}

/// `H'` with its per-edge case log.
#[derive(Clone, Debug)]
pub struct EditResult {
    pub base: ColoredHypergraph,
    pub edited: ColoredHypergraph,
    /// Per class (in the graph's slot order): the case of every edge.
    pub cases: Vec<Vec<Case>>,
    /// Edges whose representative total color is not ordinary after editing
    /// (stuck edges excluded).
    pub uncertified: u64,
}

impl EditResult {
    pub fn case(&self, e: &Edge) -> Case {
        let slot = self.base.slot(e.index);
        self.cases[slot][self.base.class_at(slot).offset(&e.verts)]
    }

    /// Largest `s` such that every `J ⊆ I` with `|J| <= s` kept its color by
    /// the first case.
    pub fn ordinariness(&self, e: &Edge) -> usize {
        let mut by_size = vec![true; e.index.len() + 1];
        for j in e.index.subsets() {
            if self.case(&e.restrict(j).expect("subset")) != Case::Keep {
                by_size[j.len()] = false;
            }
        }
        (1..=e.index.len()).take_while(|&s| by_size[s]).count()
    }

    /// Count of edges per ordinariness value, per index.
    pub fn ordinariness_histogram(&self) -> Vec<(IndexSet, Vec<u64>)> {
        self.base
            .index_sets()
            .map(|i| {
                let mut hist = vec![0u64; i.len() + 1];
                for e in self.base.edges(i) {
                    hist[self.ordinariness(&e)] += 1;
                }
                (i, hist)
            })
            .collect()
    }

    /// Number of edges per case, over all classes.
    pub fn case_counts(&self) -> [u64; 4] {
        let mut out = [0u64; 4];
        for c in self.cases.iter().flatten() {
            out[*c as usize] += 1;
        }
        out
    }

    pub fn stuck(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (slot, cs) in self.cases.iter().enumerate() {
            for (off, c) in cs.iter().enumerate() {
                if *c == Case::Stuck {
                    out.push(self.base.class_at(slot).edge_at(off));
                }
            }
        }
        out
    }
}

/// Run the sweep on `H = oracle.reg.base()`. Decisions depend only on the
/// (already rewritten) frame and the original color, so they are computed
/// once per distinct pair.
pub fn modify(oracle: &OrdinaryOracle, params: EditParams) -> Result<EditResult> {
    let h = oracle.reg.base();
    let table = oracle.table;
    let k = h.k();
    let e13 = params.epsilon.cbrt();
    let gamma = e13 * e13;
    let mut edited = h.clone();
    let mut cases: Vec<Vec<Case>> = h.classes().iter().map(|c| vec![Case::Keep; c.len()]).collect();
    for s in 1..=k {
        for index in h.index_sets_of_arity(s) {
            let slot = h.slot(index);
            let class = h.class_at(slot);
            let plan = SubEdgePlan::new(&edited, index);
            let mut verts = vec![0u32; s];
            let mut buf = Vec::new();
            let mut keys: Vec<(Vec<ColorId>, ColorId)> = Vec::with_capacity(class.len());
            for off in 0..class.len() {
                class.decode(off, &mut verts);
                plan.total_into(&edited, &verts, &mut buf);
                buf.pop();
                keys.push((buf.clone(), class.table()[off]));
            }
            let mut distinct: Vec<(Vec<ColorId>, ColorId)> = keys.clone();
            distinct.sort();
            distinct.dedup();
            let size = h.class_size(index);
            let decided: HashMap<(Vec<ColorId>, ColorId), (Case, ColorId)> = distinct
                .into_par_iter()
                .map(|(frame, c)| {
                    let fc = FrameColor::new(index, frame.clone()).expect("frame length");
                    let d = decide(oracle, table, &fc, c, size, params.epsilon1, gamma, e13);
                    ((frame, c), d)
                })
                .collect();
            for (off, key) in keys.into_iter().enumerate() {
                let (case, color) = decided[&key];
                cases[slot][off] = case;
                edited.set_at(index, off, color);
            }
        }
    }
    // certify the representatives of the edited total colors
    let cx = oracle.context();
    let mut memo: HashMap<TotalColor, bool> = HashMap::new();
    let mut uncertified = 0;
    for index in h.index_sets() {
        let slot = h.slot(index);
        for (off, e) in h.edges(index).enumerate() {
            if cases[slot][off] == Case::Stuck {
                continue;
            }
            let tc = edited.total_color(&e)?;
            let ok = *memo
                .entry(tc.clone())
                .or_insert_with(|| table.vartheta(&tc).is_some_and(|t| ordinary_total(&t, params.epsilon1, &cx)));
            if !ok {
                uncertified += 1;
            }
        }
    }
    Ok(EditResult { base: h.clone(), edited, cases, uncertified })
}

#[allow(clippy::too_many_arguments)]
fn decide(
    oracle: &OrdinaryOracle,
    table: &RepresentativeTable,
    frame: &FrameColor,
    c: ColorId,
    size: u32,
    eps1: f64,
    gamma: f64,
    e13: f64,
) -> (Case, ColorId) {
    let index = frame.index();
    let ordinary = table
        .vartheta_frame(frame)
        .is_some_and(|f| oracle.is_ordinary_frame(&f, eps1, gamma, Some(e13)));
    let stats = oracle.base_stats();
    if ordinary {
        let dens = |x: ColorId| stats.density_f64(index, frame.entries(), x).unwrap_or(0.0);
        if dens(c) >= e13 / size as f64 - TOL {
            return (Case::Keep, c);
        }
        return match (0..size).map(ColorId).find(|&x| dens(x) >= 1.0 / size as f64 - TOL) {
            Some(x) => (Case::Densify, x),
            None => (Case::Stuck, c),
        };
    }
    let cx = oracle.context();
    let found = (0..size)
        .map(ColorId)
        .find(|&x| table.vartheta(&frame.with_top(x)).is_some_and(|t| ordinary_total(&t, eps1, &cx)));
    match found {
        Some(x) => (Case::Recolor, x),
        None => (Case::Stuck, c),
    }
}

/// Edit measurements of one index class.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexEdit {
    pub index: IndexSet,
    /// `P_e[H'(e) != H(e)]`.
    pub changed: Ratio<u64>,
    /// `P_e[H'<e> != H<e>]`.
    pub total_changed: Ratio<u64>,
    /// `P_e[Ordinariness(e) < |I|]`.
    pub low_ordinariness: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditSizeReport {
    pub per_index: Vec<IndexEdit>,
    /// Every changed edge has ordinariness below its arity.
    pub subset_identity: bool,
    pub target: f64,
}

impl EditSizeReport {
    /// Top-arity changed fractions all at most the target.
    pub fn within_target(&self, k: usize) -> bool {
        self.per_index
            .iter()
            .filter(|x| x.index.len() == k)
            .all(|x| (*x.changed.numer() as f64) <= self.target * *x.changed.denom() as f64 + TOL)
    }
}

pub fn edit_size_report(result: &EditResult, target: f64) -> EditSizeReport {
    let h = &result.base;
    let mut subset_identity = true;
    let per_index = h
        .index_sets()
        .map(|index| {
            let (mut changed, mut total_changed, mut low) = (0u64, 0u64, 0u64);
            let n = h.class(index).len() as u64;
            for e in h.edges(index) {
                let c = h.color_unchecked(index, &e.verts) != result.edited.color_unchecked(index, &e.verts);
                let o = result.ordinariness(&e);
                changed += c as u64;
                low += (o < index.len()) as u64;
                if c && o >= index.len() {
                    subset_identity = false;
                }
                let tc = index.subsets().any(|j| {
                    let sub = e.restrict(j).expect("subset");
                    h.color_unchecked(j, &sub.verts) != result.edited.color_unchecked(j, &sub.verts)
                });
                total_changed += tc as u64;
            }
            IndexEdit {
                index,
                changed: Ratio::new(changed, n),
                total_changed: Ratio::new(total_changed, n),
                low_ordinariness: Ratio::new(low, n),
            }
        })
        .collect();
    EditSizeReport { per_index, subset_identity, target }
}

/// `G'`: `g` with its top-arity tables replaced by those of `edited`.
pub fn lift_top(g: &ColoredHypergraph, edited: &ColoredHypergraph) -> ColoredHypergraph {
    let mut out = g.clone();
    for index in g.index_sets_of_arity(g.k()) {
        out.class_mut(index).table_mut().copy_from_slice(edited.class(index).table());
    }
    out
}

/// Knobs of [`removal_pipeline`].
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub epsilon: f64,
    /// Defaults to `1e-3 * epsilon^2`.
    pub epsilon1: Option<f64>,
    /// Defaults to `ceil(8 b'_i / epsilon)` capped at `l_cap`.
    pub l: Option<Vec<u32>>,
    pub l_cap: u32,
    /// Upper bound on `|A|`; the default `L` shrinks to fit.
    pub table_budget: u128,
    pub outer: SearchBudget,
    pub inner: SearchBudget,
    /// Copy enumeration budget.
    pub copy_budget: u128,
    /// Members with at most this many vertices per part are searched.
    pub h_slice: usize,
}

impl PipelineConfig {
    pub fn new(epsilon: f64) -> Self {
        PipelineConfig {
            epsilon,
            epsilon1: None,
            l: None,
            l_cap: 3,
            table_budget: 1 << 16,
            outer: SearchBudget { max_m: 2, trials: 2, ..SearchBudget::default() },
            inner: SearchBudget { max_m: 2, trials: 2, ..SearchBudget::default() },
            copy_budget: 1 << 32,
            h_slice: 2,
        }
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1.unwrap_or(1e-3 * self.epsilon * self.epsilon)
    }
}

/// `ceil(8 b'_i / eps)` capped at `cap`, then shrunk (largest entry first)
/// until `|A| <= budget`.
pub fn default_l(b_prime: &[u32], epsilon: f64, cap: u32, r: usize, budget: u128) -> Result<LVector> {
    let mut ls: Vec<u32> = b_prime
        .iter()
        .map(|&b| ((8.0 * b as f64 / epsilon - 1e-9).ceil() as u64).clamp(1, cap.max(1) as u64) as u32)
        .collect();
    let k = ls.len();
    loop {
        let l = LVector::new(ls.clone())?;
        let n = l.total_count(r, k).unwrap_or(u128::MAX);
        if n <= budget {
            return Ok(l);
        }
        let (pos, &max) = ls.iter().enumerate().max_by_key(|x| (*x.1, usize::MAX - x.0)).unwrap();
        if max == 1 {
            return Err(Error::budget("representative draws", n, budget));
        }
        ls[pos] -= 1;
    }
}

/// How the copy of branch (ii) was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CopySource {
    /// A member colorable against the edited graph's frame densities.
    Colorable,
    /// Direct scan of the family slice.
    Scan,
}

#[derive(Clone, Debug)]
pub enum Branch {
    /// An edited graph with no copy of any member.
    Edited { graph: ColoredHypergraph, changed: Ratio<u64> },
    /// A member with positive copy probability.
    Copy { member: UniformColoredGraph, estimate: CopyEstimate, witness: PartitionwiseMap, source: CopySource },
}

/// Search diagnostics, present when the regularization machinery ran.
#[derive(Clone, Debug)]
pub struct Machinery {
    pub outer_m: Vec<usize>,
    pub outer_maps: MapVector,
    pub outer_fit: Option<f64>,
    pub outer_reached: bool,
    pub inner_m: Vec<usize>,
    pub inner_fit: Option<f64>,
    pub inner_reached: bool,
    pub epsilon1: f64,
    pub l: LVector,
    pub unrealizable: usize,
    pub case_counts: [u64; 4],
    pub uncertified: u64,
    pub edit_report: EditSizeReport,
    /// The edited graph was not free of the family.
    pub edited_has_copy: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub branch: Branch,
    pub machinery: Option<Machinery>,
}

/// The edit stage of the pipeline: both searches, the table and the sweep.
#[derive(Clone, Debug)]
pub struct EditRun {
    pub g_prime: ColoredHypergraph,
    pub result: EditResult,
    pub machinery: Machinery,
}

pub fn edit_graph(g: &ColoredHypergraph, cfg: &PipelineConfig, rng: &RngStream) -> Result<EditRun> {
    let eps1 = cfg.epsilon1();
    let outer = regularity_search(g, cfg.epsilon, 1, None, cfg.outer, &mut rng.child("outer"))?;
    let h = outer.regularized.graph();
    let inner = regularity_search(h, eps1, 1, None, cfg.inner, &mut rng.child("inner"))?;
    let reg = &inner.regularized;
    let l = match &cfg.l {
        Some(ls) => LVector::new(ls.clone())?,
        None => {
            let b: Vec<u32> = (1..=g.k()).map(|a| reg.graph().max_class_size(a)).collect();
            default_l(&b, cfg.epsilon, cfg.l_cap, g.r(), cfg.table_budget)?
        }
    };
    let table = RepresentativeTable::build(reg, l.clone(), cfg.table_budget, &rng.child("table"))?;
    let oracle = OrdinaryOracle::new(reg, &table, &inner.delta);
    let result = modify(&oracle, EditParams { epsilon: cfg.epsilon, epsilon1: eps1 })?;
    let edit_report = edit_size_report(&result, cfg.epsilon);
    let g_prime = lift_top(g, &result.edited);
    let machinery = Machinery {
        outer_m: outer.m.clone(),
        outer_maps: outer.maps.clone(),
        outer_fit: outer.report.epsilon_fit,
        outer_reached: !outer.not_reached,
        inner_m: inner.m.clone(),
        inner_fit: inner.report.epsilon_fit,
        inner_reached: !inner.not_reached,
        epsilon1: eps1,
        l,
        unrealizable: table.unrealizable(),
        case_counts: result.case_counts(),
        uncertified: result.uncertified,
        edit_report,
        edited_has_copy: false,
    };
    Ok(EditRun { g_prime, result, machinery })
}

/// Either edit `g` free of `family` changing at most an `epsilon` fraction of
/// top edges, or exhibit a member with positive copy
/// probability. A graph that is already free returns itself untouched.
pub fn removal_pipeline(g: &ColoredHypergraph, family: &Family, cfg: &PipelineConfig, rng: &RngStream) -> Result<PipelineOutcome> {
    if family.r() != g.r() || family.k() != g.k() {
        return Err(Error::InvalidParams("family and graph disagree on (r, k)".into()));
    }
    if family.is_free(g, cfg.copy_budget)? {
        let n: u64 = g.index_sets_of_arity(g.k()).iter().map(|&i| g.class(i).len() as u64).sum();
        return Ok(PipelineOutcome {
            branch: Branch::Edited { graph: g.clone(), changed: Ratio::new(0, n.max(1)) },
            machinery: None,
        });
    }
    let run = edit_graph(g, cfg, rng)?;
    let EditRun { g_prime, result, mut machinery } = run;
    let edited_free = family.is_free(&g_prime, cfg.copy_budget)?;
    machinery.edited_has_copy = !edited_free;
    let (num, den) = top_changes(g, &g_prime);
    // an edit above the epsilon budget does not witness the edited branch
    if edited_free && num as f64 <= cfg.epsilon * den as f64 + TOL {
        return Ok(PipelineOutcome {
            branch: Branch::Edited { graph: g_prime, changed: Ratio::new(num, den) },
            machinery: Some(machinery),
        });
    }
    let slice = family.slice(cfg.h_slice);
    let inst = ColorabilityInstance::from_graph(&result.edited);
    let mode = CountMode::Exact { budget: cfg.copy_budget };
    let mut scratch = rng.child("copy");
    if let Some((pos, _)) = colorable_search(&slice, &inst) {
        let est = copy_probability(g, slice[pos].complex(), mode, &mut scratch)?;
        if let Some(witness) = est.witness.clone().filter(|_| est.hits > 0) {
            return Ok(PipelineOutcome {
                branch: Branch::Copy { member: slice[pos].clone(), estimate: est, witness, source: CopySource::Colorable },
                machinery: Some(machinery),
            });
        }
    }
    let found = family.find_copy(g, cfg.copy_budget)?.expect("g is not free");
    let member = family.members()[found.member].clone();
    let est = copy_probability(g, member.complex(), mode, &mut scratch)?;
    Ok(PipelineOutcome {
        branch: Branch::Copy { member, estimate: est, witness: found.map, source: CopySource::Scan },
        machinery: Some(machinery),
    })
}

fn top_changes(g: &ColoredHypergraph, g_prime: &ColoredHypergraph) -> (u64, u64) {
    let mut num = 0;
    let mut den = 0;
    for index in g.index_sets_of_arity(g.k()) {
        let (a, b) = (g.class(index).table(), g_prime.class(index).table());
        num += a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
        den += a.len() as u64;
    }
    (num, den.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Builtin;
    use crate::model::Params;
    use crate::regularity::DeltaCertificate;
    use crate::regularize::RegularizedGraph;

    fn trivial_setup(g: &ColoredHypergraph, l: Vec<u32>) -> (RegularizedGraph, RepresentativeTable) {
        let reg = RegularizedGraph::trivial(g);
        let t = RepresentativeTable::build(&reg, LVector::new(l).unwrap(), 1 << 20, &RngStream::new(1)).unwrap();
        (reg, t)
    }

    #[test]
    fn constant_graph_keeps_everything() {
        let g = ColoredHypergraph::constant(Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let (reg, t) = trivial_setup(&g, vec![2, 2]);
        let delta = DeltaCertificate::zero();
        let o = OrdinaryOracle::new(&reg, &t, &delta);
        let res = modify(&o, EditParams { epsilon: 0.05, epsilon1: 1e-5 }).unwrap();
        assert_eq!(res.edited, g);
        assert_eq!(res.case_counts()[0] as usize, g.classes().iter().map(|c| c.len()).sum::<usize>());
        let rep = edit_size_report(&res, 0.0);
        assert!(rep.subset_identity && rep.within_target(2));
        for e in g.edges(IndexSet::full(2)) {
            assert_eq!(res.ordinariness(&e), 2);
        }
    }

    #[test]
    fn rare_color_is_densified() {
        // one white edge among 16 bipartite edges: density 1/16 < eps^{1/3}/2
        let p = Params::uniform(2, 2, vec![1, 2], 4).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| ColorId((i.len() == 2 && v != [3, 3]) as u32)).unwrap();
        let (reg, t) = trivial_setup(&g, vec![1, 2]);
        let delta = DeltaCertificate::zero();
        let o = OrdinaryOracle::new(&reg, &t, &delta);
        let res = modify(&o, EditParams { epsilon: 0.05, epsilon1: 1e-6 }).unwrap();
        let e = Edge::new(IndexSet::full(2), vec![3, 3]).unwrap();
        assert_eq!(res.case(&e), Case::Densify);
        assert_eq!(res.edited.color(&e).unwrap(), ColorId(1));
        assert_eq!(res.ordinariness(&e), 1);
        let rep = edit_size_report(&res, 0.1);
        assert!(rep.subset_identity);
        assert_eq!(rep.per_index[1].changed, Ratio::new(1, 16));
    }

    #[test]
    fn default_l_respects_cap_and_budget() {
        let l = default_l(&[1, 2], 0.5, 100, 3, 1 << 20).unwrap();
        assert_eq!(l.as_slice(), &[16, 32]);
        let l = default_l(&[1, 2], 0.5, 3, 3, 1 << 20).unwrap();
        assert_eq!(l.as_slice(), &[3, 3]);
        let l = default_l(&[1, 2], 0.5, 3, 3, 30).unwrap();
        assert!(l.total_count(3, 2).unwrap() <= 30);
    }

    #[test]
    fn pipeline_branches() {
        let p = Params::uniform(3, 2, vec![1, 2], 3).unwrap();
        let full = ColoredHypergraph::constant(p.clone(), &[ColorId(0), ColorId(1)]).unwrap();
        let fam = Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1)));
        let cfg = PipelineConfig::new(0.1);
        match removal_pipeline(&full, &fam, &cfg, &RngStream::new(3)).unwrap().branch {
            Branch::Copy { estimate, .. } => assert_eq!(estimate.value, 1.0),
            b => panic!("expected a copy, got {b:?}"),
        }
        let white = ColoredHypergraph::constant(p, &[ColorId(0), ColorId(0)]).unwrap();
        match removal_pipeline(&white, &fam, &cfg, &RngStream::new(3)).unwrap().branch {
            Branch::Edited { graph, changed } => {
                assert_eq!(graph, white);
                assert_eq!(*changed.numer(), 0);
            }
            b => panic!("expected edited, got {b:?}"),
        }
    }
}
