//! δ-certificates for (ε,k,h)-regularity, the mean-square condition, ordinary
//! color sets and a budgeted regularity search.

use crate::error::{Error, Result};
use crate::model::{index_sets, ColorId, ColoredHypergraph, Edge, FrameColor, IndexSet, TotalColor};
use crate::regularize::{regularize, regularize_vector, FrameStats, RegularizedGraph};
use crate::sampling::{decode_map, map_count, random_map_uniform, MapVector, PartitionwiseMap, RngStream};
use num_rational::Ratio;
use rayon::prelude::*;
use std::collections::BTreeMap;

const TOL: f64 = 1e-12;

/// Slack per total color; unlisted colors have slack 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaCertificate {
    values: BTreeMap<TotalColor, f64>,
}

impl DeltaCertificate {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Every total color of `g` gets slack `v`.
    pub fn constant(g: &ColoredHypergraph, v: f64) -> Self {
        let stats = FrameStats::new(g);
        let mut values = BTreeMap::new();
        for index in g.index_sets() {
            for (frame, bucket) in stats.frames(index) {
                let fc = FrameColor::new(index, frame.clone()).unwrap();
                for c in 0..bucket.colors.len() {
                    values.insert(fc.with_top(ColorId(c as u32)), v);
                }
            }
        }
        DeltaCertificate { values }
    }

    pub fn get(&self, tc: &TotalColor) -> f64 {
        self.values.get(tc).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, tc: TotalColor, v: f64) {
        assert!(v.is_finite() && v >= 0.0, "slack must be finite and nonnegative");
        if v == 0.0 {
            self.values.remove(&tc);
        } else {
            self.values.insert(tc, v);
        }
    }

    pub fn raise(&mut self, tc: &TotalColor, v: f64) {
        if v > self.get(tc) {
            self.set(tc.clone(), v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TotalColor, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `delta 1` header, then `I c_1 .. c_n value` per listed total color,
    /// entries in relative-mask order.
    pub fn render(&self) -> String {
        let mut out = String::from("delta 1\n");
        for (tc, v) in self.iter() {
            let cs: Vec<String> = tc.entries().iter().map(|c| c.0.to_string()).collect();
            out.push_str(&format!("{} {} {v}\n", tc.index(), cs.join(" ")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = DeltaCertificate::zero();
        let mut header = false;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !header {
                if line != "delta 1" {
                    return Err(Error::parse(no + 1, "expected `delta 1`"));
                }
                header = true;
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |m: &str| Error::Parse { line: no + 1, msg: m.to_string() };
            let index: IndexSet = toks.first().ok_or_else(|| bad("empty line"))?.parse().map_err(|e: Error| bad(&e.to_string()))?;
            let n = index.subset_count();
            if toks.len() != n + 2 {
                return Err(bad(&format!("index {index} needs {n} colors and a value")));
            }
            let entries = toks[1..=n]
                .iter()
                .map(|t| t.parse().map(ColorId).map_err(|_| bad(&format!("bad color {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let v: f64 = toks[n + 1].parse().map_err(|_| bad("bad value"))?;
            if !v.is_finite() || v < 0.0 {
                return Err(bad("slack must be finite and nonnegative"));
            }
            out.set(TotalColor::new(index, entries).map_err(|e| bad(&e.to_string()))?, v);
        }
        if !header {
            return Err(Error::parse(0, "missing `delta 1` header"));
        }
        Ok(out)
    }

    /// `E_{e in Omega_I}[delta(G<e>)]`.
    pub fn expectation(&self, stats: &FrameStats, index: IndexSet) -> f64 {
        let total = stats.total(index) as f64;
        let mut sum = 0.0;
        for (frame, bucket) in stats.frames(index) {
            let fc = FrameColor::new(index, frame.clone()).unwrap();
            for (c, &n) in bucket.colors.iter().enumerate() {
                if n > 0 {
                    sum += n as f64 * self.get(&fc.with_top(ColorId(c as u32)));
                }
            }
        }
        sum / total
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerifyMode {
    /// Enumerate all of `Phi(h)`; errors when it exceeds the map budget.
    Exact,
    /// Sample maps and test each complex against a Hoeffding band with a union
    /// bound over all complexes.
    Sampled { samples: u64, confidence: f64 },
    /// Exact when affordable, otherwise sampled.
    Auto { samples: u64, confidence: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyBudget {
    /// Largest `|Phi(h)|` enumerated exactly.
    pub maps: u128,
    /// Largest number of complexes visited.
    pub complexes: u64,
}

impl Default for VerifyBudget {
    fn default() -> Self {
        VerifyBudget { maps: 1 << 20, complexes: 2_000_000 }
    }
}

/// How condition (i) was checked.
#[derive(Clone, Debug, PartialEq)]
pub enum CheckMode {
    Exact { maps: u128 },
    Sampled { samples: u64, confidence: f64, halfwidth: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexViolation {
    /// Visible edges of the complex with their colors.
    pub complex: Vec<(Edge, ColorId)>,
    pub totals: Vec<TotalColor>,
    pub densities: Vec<f64>,
    pub observed: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexMargin {
    pub index: IndexSet,
    pub expectation: f64,
    pub allowed: f64,
}

impl IndexMargin {
    pub fn holds(&self) -> bool {
        self.expectation <= self.allowed + TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub h: usize,
    pub epsilon: f64,
    /// `max_I |C_I| E[delta]` when condition (i) passed.
    pub epsilon_fit: Option<f64>,
    pub condition_i_violations: Vec<ComplexViolation>,
    /// Violations beyond the stored list.
    pub violations_total: u64,
    pub condition_ii_margins: Vec<IndexMargin>,
    pub complexes_checked: u64,
    pub mode: CheckMode,
}

impl RegularityReport {
    pub fn condition_i(&self) -> bool {
        self.violations_total == 0
    }

    pub fn condition_ii(&self) -> bool {
        self.condition_ii_margins.iter().all(|m| m.holds())
    }

    pub fn passed(&self) -> bool {
        self.condition_i() && self.condition_ii()
    }
}

struct DomEdge {
    index: IndexSet,
    verts: Vec<u32>,
    /// Proper sub-edges in relative-mask order.
    subs: Vec<usize>,
    colors: u32,
}

/// Precomputed pull-backs of all domain edges of an `h`-vertex complex under
/// every (or every sampled) map.
pub struct Verifier<'a> {
    g: &'a ColoredHypergraph,
    stats: FrameStats,
    h: usize,
    dom: Vec<DomEdge>,
    pulled: Vec<Vec<ColorId>>,
    nmaps: usize,
    mode: CheckMode,
    complex_budget: u64,
}

fn domain_edges(g: &ColoredHypergraph, h: usize) -> Vec<DomEdge> {
    let mut sets = index_sets(g.r(), g.k());
    sets.sort_by_key(|i| (i.len(), *i));
    let mut dom: Vec<DomEdge> = Vec::new();
    let mut ids: BTreeMap<(IndexSet, Vec<u32>), usize> = BTreeMap::new();
    for index in sets {
        let dims = vec![h; index.len()];
        crate::model::for_each_tuple(&dims, |t| {
            let e = Edge { index, verts: t.to_vec() };
            let subs = index
                .subsets()
                .filter(|&s| s != index)
                .map(|s| ids[&(s, e.restrict(s).unwrap().verts)])
                .collect();
            ids.insert((index, t.to_vec()), dom.len());
            dom.push(DomEdge { index, verts: t.to_vec(), subs, colors: g.class_size(index) });
        });
    }
    dom
}

impl<'a> Verifier<'a> {
    pub fn new(g: &'a ColoredHypergraph, h: usize, mode: VerifyMode, budget: VerifyBudget, rng: &mut RngStream) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidParams("h must be at least 1".into()));
        }
        let dom = domain_edges(g, h);
        let sizes = &g.params().part_sizes;
        let total = map_count(sizes, h);
        let exact = match mode {
            VerifyMode::Exact => {
                let t = total.unwrap_or(u128::MAX);
                if t > budget.maps {
                    return Err(Error::budget("map enumeration", t, budget.maps));
                }
                true
            }
            VerifyMode::Sampled { .. } => false,
            VerifyMode::Auto { .. } => total.is_some_and(|t| t <= budget.maps),
        };
        let r = g.r();
        let (maps, mode_out): (Vec<Vec<u32>>, CheckMode) = if exact {
            let t = total.unwrap();
            let maps = (0..t)
                .into_par_iter()
                .map(|i| {
                    let mut buf = vec![0u32; r * h];
                    decode_map(sizes, h, i, &mut buf);
                    buf
                })
                .collect();
            (maps, CheckMode::Exact { maps: t })
        } else {
            let (samples, confidence) = match mode {
                VerifyMode::Sampled { samples, confidence } | VerifyMode::Auto { samples, confidence } => (samples, confidence),
                VerifyMode::Exact => unreachable!(),
            };
            let mut s = rng.child("verify-maps");
            let maps = (0..samples)
                .map(|_| (0..r * h).map(|slot| s.below(sizes[slot / h] as u64) as u32).collect())
                .collect();
            (maps, CheckMode::Sampled { samples, confidence, halfwidth: 0.0 })
        };
        let pulled: Vec<Vec<ColorId>> = dom
            .par_iter()
            .map(|d| {
                let class = g.class(d.index);
                maps.iter()
                    .map(|m| {
                        let off: usize = d
                            .index
                            .members()
                            .zip(&d.verts)
                            .enumerate()
                            .map(|(pos, (p, &v))| m[p * h + v as usize] as usize * class.stride(pos))
                            .sum();
                        class.table()[off]
                    })
                    .collect()
            })
            .collect();
        let mut v = Verifier {
            g,
            stats: FrameStats::new(g),
            h,
            dom,
            pulled,
            nmaps: maps.len(),
            mode: mode_out,
            complex_budget: budget.complexes,
        };
        if let CheckMode::Sampled { samples, confidence, .. } = v.mode {
            let m = v.count_complexes()?;
            let alpha = 1.0 - confidence;
            let halfwidth = if samples == 0 {
                1.0
            } else {
                ((2.0 * m as f64 / alpha).ln() / (2.0 * samples as f64)).sqrt()
            };
            v.mode = CheckMode::Sampled { samples, confidence, halfwidth };
        }
        Ok(v)
    }

    pub fn stats(&self) -> &FrameStats {
        &self.stats
    }

    pub fn graph(&self) -> &ColoredHypergraph {
        self.g
    }

    /// Number of complexes in `S_{k,h,G}`, up to the budget.
    pub fn count_complexes(&self) -> Result<u64> {
        fn go(v: &Verifier, pos: usize, chosen: &mut Vec<Option<ColorId>>, n: &mut u64) -> Result<()> {
            for e in pos..v.dom.len() {
                if !v.dom[e].subs.iter().all(|&s| chosen[s].is_some()) {
                    continue;
                }
                for c in 0..v.dom[e].colors {
                    *n += 1;
                    if *n > v.complex_budget {
                        return Err(Error::budget("complex enumeration", *n as u128, v.complex_budget as u128));
                    }
                    chosen[e] = Some(ColorId(c));
                    go(v, e + 1, chosen, n)?;
                    chosen[e] = None;
                }
            }
            Ok(())
        }
        let mut n = 1;
        go(self, 0, &mut vec![None; self.dom.len()], &mut n)?;
        Ok(n)
    }

    fn total_of(&self, e: usize, chosen: &[Option<ColorId>], c: ColorId) -> TotalColor {
        let d = &self.dom[e];
        let mut entries: Vec<ColorId> = d.subs.iter().map(|&s| chosen[s].unwrap()).collect();
        entries.push(c);
        TotalColor::new(d.index, entries).unwrap()
    }

    fn halfwidth(&self) -> f64 {
        match self.mode {
            CheckMode::Exact { .. } => 0.0,
            CheckMode::Sampled { halfwidth, .. } => halfwidth,
        }
    }

    fn exact(&self) -> bool {
        matches!(self.mode, CheckMode::Exact { .. })
    }

    /// Check condition (i) against `delta`, keeping at most `keep` violations.
    pub fn check(&self, delta: &DeltaCertificate, keep: usize) -> Result<(Vec<ComplexViolation>, u64, u64)> {
        struct Ctx<'v, 'g> {
            v: &'v Verifier<'g>,
            delta: &'v DeltaCertificate,
            chosen: Vec<Option<ColorId>>,
            path: Vec<(usize, TotalColor, f64)>,
            out: Vec<ComplexViolation>,
            keep: usize,
            violations: u64,
            visited: u64,
        }
        fn go(cx: &mut Ctx, pos: usize, maps: &[u32], lower: f64, upper: f64) -> Result<()> {
            let v = cx.v;
            for e in pos..v.dom.len() {
                if !v.dom[e].subs.iter().all(|&s| cx.chosen[s].is_some()) {
                    continue;
                }
                let ncol = v.dom[e].colors as usize;
                let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); ncol];
                for &m in maps {
                    buckets[v.pulled[e][m as usize].index()].push(m);
                }
                for (c, sub) in buckets.into_iter().enumerate() {
                    cx.visited += 1;
                    if cx.visited > v.complex_budget {
                        return Err(Error::budget("complex enumeration", cx.visited as u128, v.complex_budget as u128));
                    }
                    let c = ColorId(c as u32);
                    let tc = v.total_of(e, &cx.chosen, c);
                    let d = v.stats.density_of_total(&tc).unwrap_or(0.0);
                    let dl = cx.delta.get(&tc);
                    let lo = lower * (d - dl).max(0.0);
                    let hi = upper * (d + dl).min(1.0);
                    let p = sub.len() as f64 / v.nmaps.max(1) as f64;
                    cx.path.push((e, tc, d));
                    let band = v.halfwidth() + TOL;
                    if p < lo - band || p > hi + band {
                        cx.violations += 1;
                        if cx.out.len() < cx.keep {
                            cx.out.push(ComplexViolation {
                                complex: cx
                                    .path
                                    .iter()
                                    .map(|(i, t, _)| (Edge { index: v.dom[*i].index, verts: v.dom[*i].verts.clone() }, t.top()))
                                    .collect(),
                                totals: cx.path.iter().map(|x| x.1.clone()).collect(),
                                densities: cx.path.iter().map(|x| x.2).collect(),
                                observed: p,
                                lower: lo,
                                upper: hi,
                            });
                        }
                    }
                    // with no map left and a zero lower bound every extension passes
                    let prune = v.exact() && sub.is_empty() && lo <= TOL;
                    if !prune {
                        cx.chosen[e] = Some(c);
                        go(cx, e + 1, &sub, lo, hi)?;
                        cx.chosen[e] = None;
                    }
                    cx.path.pop();
                }
            }
            Ok(())
        }
        let mut cx = Ctx {
            v: self,
            delta,
            chosen: vec![None; self.dom.len()],
            path: Vec::new(),
            out: Vec::new(),
            keep,
            violations: 0,
            visited: 1,
        };
        let all: Vec<u32> = (0..self.nmaps as u32).collect();
        go(&mut cx, 0, &all, 1.0, 1.0)?;
        Ok((cx.out, cx.violations, cx.visited))
    }

    pub fn report(&self, delta: &DeltaCertificate, epsilon: f64, keep: usize) -> Result<RegularityReport> {
        let (viol, total, visited) = self.check(delta, keep)?;
        let margins: Vec<IndexMargin> = self
            .g
            .index_sets()
            .map(|i| IndexMargin {
                index: i,
                expectation: delta.expectation(&self.stats, i),
                allowed: epsilon / self.g.class_size(i) as f64,
            })
            .collect();
        let epsilon_fit = (total == 0).then(|| {
            margins
                .iter()
                .map(|m| m.expectation * self.g.class_size(m.index) as f64)
                .fold(0.0, f64::max)
        });
        Ok(RegularityReport {
            h: self.h,
            epsilon,
            epsilon_fit,
            condition_i_violations: viol,
            violations_total: total,
            condition_ii_margins: margins,
            complexes_checked: visited,
            mode: self.mode.clone(),
        })
    }
}

/// Check both regularity conditions of `g` for `delta`.
pub fn verify_regularity(
    g: &ColoredHypergraph,
    h: usize,
    delta: &DeltaCertificate,
    epsilon: f64,
    mode: VerifyMode,
    budget: VerifyBudget,
    rng: &mut RngStream,
) -> Result<RegularityReport> {
    Verifier::new(g, h, mode, budget, rng)?.report(delta, epsilon, 64)
}

fn interval(densities: &[f64], totals: &[TotalColor], delta: &DeltaCertificate, raise: f64) -> (f64, f64) {
    let mut lo = 1.0;
    let mut hi = 1.0;
    for (d, tc) in densities.iter().zip(totals) {
        let dl = delta.get(tc).max(raise);
        lo *= (d - dl).max(0.0);
        hi *= (d + dl).min(1.0);
    }
    (lo, hi)
}

/// Fit a certificate: start from zero slack (single edges of arity at most 2
/// factor exactly) and, for every violated complex, raise the slack
/// of its total colors to the smallest level that admits the observation.
/// Raising slack only widens intervals, so one pass over the violations
/// suffices; the result is re-verified.
pub fn fit_delta(
    g: &ColoredHypergraph,
    h: usize,
    mode: VerifyMode,
    budget: VerifyBudget,
    rng: &mut RngStream,
) -> Result<(DeltaCertificate, RegularityReport)> {
    let verifier = Verifier::new(g, h, mode, budget, rng)?;
    fit_with(&verifier)
}

pub fn fit_with(verifier: &Verifier) -> Result<(DeltaCertificate, RegularityReport)> {
    let mut delta = DeltaCertificate::zero();
    let band = verifier.halfwidth() + TOL;
    let (violations, _, _) = verifier.check(&delta, usize::MAX)?;
    for v in &violations {
        let admits = |t: f64, delta: &DeltaCertificate| {
            let (lo, hi) = interval(&v.densities, &v.totals, delta, t);
            v.observed >= lo - band && v.observed <= hi + band
        };
        if admits(0.0, &delta) {
            continue;
        }
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if admits(mid, &delta) {
                b = mid;
            } else {
                a = mid;
            }
        }
        for tc in &v.totals {
            delta.raise(tc, b);
        }
    }
    let mut report = verifier.report(&delta, 0.0, 64)?;
    if let Some(fit) = report.epsilon_fit {
        report.epsilon = fit;
        for m in &mut report.condition_ii_margins {
            m.allowed = fit / verifier.g.class_size(m.index) as f64;
        }
    }
    Ok((delta, report))
}

/// Estimate of the mean-square deviation for one index.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanSquareEstimate {
    pub index: IndexSet,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    /// `(epsilon / |C_I|)^2` is compared against `mean + z * stderr`.
    pub class_size: u32,
}

impl MeanSquareEstimate {
    pub fn holds(&self, epsilon: f64, z: f64) -> bool {
        let t = epsilon / self.class_size as f64;
        self.mean + z * self.stderr <= t * t + TOL
    }
}

/// The inner expectation for one map: `E_{e*}[sum_c (d_{G/phi} - d_G)^2]` for
/// every index, computed exactly.
pub fn mean_square_for_map(g: &ColoredHypergraph, phi: &PartitionwiseMap) -> Result<Vec<(IndexSet, f64)>> {
    let base = FrameStats::new(g);
    if g.k() == 1 {
        return Ok(g.index_sets().map(|i| (i, 0.0)).collect());
    }
    let reg = regularize(g, g.k() - 1, phi)?;
    Ok(mean_square_with(&reg, &base))
}

fn mean_square_with(reg: &RegularizedGraph, base: &FrameStats) -> Vec<(IndexSet, f64)> {
    let g = reg.base();
    let mixed = FrameStats::mixed(reg.graph(), g);
    g.index_sets()
        .map(|index| {
            let total = mixed.total(index) as f64;
            let mut acc = 0.0;
            for (frame, bucket) in mixed.frames(index) {
                let fc = FrameColor::new(index, frame.clone()).unwrap();
                let base_frame: Vec<ColorId> = fc.iter().map(|(j, c)| reg.base_color(j, c)).collect();
                let bb = base.bucket(index, &base_frame).expect("refined frame is realized");
                let mut sq = 0.0;
                for c in 0..bucket.colors.len() {
                    let dm = bucket.colors[c] as f64 / bucket.count as f64;
                    let dg = bb.colors[c] as f64 / bb.count as f64;
                    sq += (dm - dg) * (dm - dg);
                }
                acc += bucket.count as f64 / total * sq;
            }
            (index, acc)
        })
        .collect()
}

/// Monte-Carlo estimate over `phi in Phi(L)` of the mean-square deviation.
pub fn mean_square_condition(g: &ColoredHypergraph, l: usize, samples: u64, rng: &mut RngStream) -> Result<Vec<MeanSquareEstimate>> {
    if l == 0 {
        return Err(Error::InvalidParams("L must be at least 1".into()));
    }
    let base = FrameStats::new(g);
    let s = rng.child("mean-square");
    let per: Vec<Vec<(IndexSet, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = s.child(format!("s{i}"));
            let phi = random_map_uniform(g.params(), l, &mut r);
            if g.k() == 1 {
                return Ok(g.index_sets().map(|i| (i, 0.0)).collect());
            }
            let reg = regularize(g, g.k() - 1, &phi)?;
            Ok(mean_square_with(&reg, &base))
        })
        .collect::<Result<_>>()?;
    Ok(g
        .index_sets()
        .enumerate()
        .map(|(pos, index)| {
            let xs: Vec<f64> = per.iter().map(|v| v[pos].1).collect();
            let n = xs.len() as f64;
            let mean = if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / n };
            let var = if xs.len() < 2 { 0.0 } else { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) };
            MeanSquareEstimate {
                index,
                mean,
                stderr: (var / n.max(1.0)).sqrt(),
                samples,
                class_size: g.class_size(index),
            }
        })
        .collect())
}

/// Densities and slack needed to decide ordinariness.
pub struct OrdinaryContext<'a> {
    pub stats: &'a FrameStats,
    pub delta: &'a DeltaCertificate,
    /// `|C_I|` lookup.
    pub graph: &'a ColoredHypergraph,
}

fn ordinary_subs(subs: impl Iterator<Item = TotalColor>, alpha: f64, cx: &OrdinaryContext) -> bool {
    let a3 = alpha.cbrt();
    let a23 = a3 * a3;
    for tc in subs {
        let size = cx.graph.class_size(tc.index()) as f64;
        let Some(d) = cx.stats.density_of_total(&tc) else { return false };
        if d < a3 / size - TOL || cx.delta.get(&tc) > a23 / size + TOL {
            return false;
        }
    }
    true
}

/// `c in O^alpha TC_I`: every `I* ⊆ I` has density at least `alpha^{1/3}/|C_{I*}|`
/// and slack at most `alpha^{2/3}/|C_{I*}|`; unrealized frames fail.
pub fn ordinary_total(tc: &TotalColor, alpha: f64, cx: &OrdinaryContext) -> bool {
    ordinary_subs(tc.index().subsets().map(|j| tc.restrict(j)), alpha, cx)
}

/// `c in O^alpha ∂C_I`: the same over proper `I* ⊊ I`.
pub fn ordinary_frame(fc: &FrameColor, alpha: f64, cx: &OrdinaryContext) -> bool {
    let index = fc.index();
    ordinary_subs(index.subsets().filter(|&j| j != index).map(|j| fc.total_of(j)), alpha, cx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrdinaryBound {
    pub index: IndexSet,
    /// `P_e[H<e> not in O^eps TC_I]`.
    pub measured: Ratio<u64>,
    pub bound: f64,
}

impl OrdinaryBound {
    pub fn holds(&self) -> bool {
        (*self.measured.numer() as f64 / *self.measured.denom() as f64) <= self.bound + TOL
    }
}

/// Measure the non-ordinary mass of every index exactly and compare it with
/// `2^{|I|+1} eps^{1/3}`. The certificate must first verify at `h = 1`.
pub fn ordinary_mass_check(
    h: &ColoredHypergraph,
    delta: &DeltaCertificate,
    epsilon: f64,
    budget: VerifyBudget,
) -> Result<Vec<OrdinaryBound>> {
    let report = verify_regularity(h, 1, delta, epsilon, VerifyMode::Exact, budget, &mut RngStream::new(0))?;
    if !report.passed() {
        return Err(Error::PreconditionUnverified(format!(
            "certificate fails at h = 1 ({} complex violations, condition (ii) {})",
            report.violations_total,
            if report.condition_ii() { "holds" } else { "fails" }
        )));
    }
    let stats = FrameStats::new(h);
    let cx = OrdinaryContext { stats: &stats, delta, graph: h };
    Ok(h.index_sets()
        .map(|index| {
            let mut bad = 0u64;
            for (frame, bucket) in stats.frames(index) {
                let fc = FrameColor::new(index, frame.clone()).unwrap();
                for (c, &n) in bucket.colors.iter().enumerate() {
                    if n > 0 && !ordinary_total(&fc.with_top(ColorId(c as u32)), epsilon, &cx) {
                        bad += n;
                    }
                }
            }
            OrdinaryBound {
                index,
                measured: Ratio::new(bad, stats.total(index)),
                bound: 2f64.powi(index.len() as i32 + 1) * epsilon.cbrt(),
            }
        })
        .collect())
}

/// Knobs of the regularity search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    /// Upper bound on each `m_s`.
    pub max_m: usize,
    /// Random map vectors drawn per size.
    pub trials: usize,
    pub verify: VerifyBudget,
    pub mode: VerifyMode,
    /// Samples for the mean-square condition in strong mode.
    pub mean_square_samples: u64,
    pub z: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_m: 8,
            trials: 16,
            verify: VerifyBudget::default(),
            mode: VerifyMode::Auto { samples: 4096, confidence: 0.95 },
            mean_square_samples: 32,
            z: 1.96,
        }
    }
}

pub struct SearchOutcome {
    pub m: Vec<usize>,
    pub maps: MapVector,
    pub regularized: RegularizedGraph,
    pub delta: DeltaCertificate,
    pub report: RegularityReport,
    /// The target was not reached; this is the best draw seen.
    pub not_reached: bool,
    pub attempts: usize,
}

/// Iterative deepening over `(m_1..m_{k-1})`: start at all ones, try
/// `trials` random map vectors per size, and double one coordinate per round
/// (round-robin) until `max_m`. In strong mode (`l_fn` given) a draw must also
/// pass the mean-square condition at `L = l_fn(m)`.
pub fn regularity_search(
    g: &ColoredHypergraph,
    epsilon: f64,
    h: usize,
    l_fn: Option<&dyn Fn(&[usize]) -> usize>,
    budget: SearchBudget,
    rng: &mut RngStream,
) -> Result<SearchOutcome> {
    let k = g.k();
    let mut m = vec![1usize; k.saturating_sub(1)];
    let mut best: Option<(f64, SearchOutcome)> = None;
    let mut attempts = 0;
    let mut round = 0usize;
    loop {
        for t in 0..budget.trials.max(1) {
            attempts += 1;
            let mut r = rng.child(format!("search/{}/{t}", m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")));
            let maps: MapVector = m.iter().map(|&ms| random_map_uniform(g.params(), ms, &mut r)).collect();
            let reg = if k == 1 { RegularizedGraph::trivial(g) } else { regularize_vector(g, &maps)? };
            let (delta, report) = fit_delta(reg.graph(), h, budget.mode, budget.verify, &mut r)?;
            let fit = report.epsilon_fit.unwrap_or(f64::INFINITY);
            let mut ok = fit <= epsilon + TOL;
            if ok {
                if let Some(lf) = l_fn {
                    let ms = mean_square_condition(reg.graph(), lf(&m).max(1), budget.mean_square_samples, &mut r)?;
                    ok = ms.iter().all(|e| e.holds(epsilon, budget.z));
                }
            }
            let outcome = SearchOutcome { m: m.clone(), maps, regularized: reg, delta, report, not_reached: !ok, attempts };
            if ok {
                return Ok(outcome);
            }
            if best.as_ref().is_none_or(|b| fit < b.0) {
                best = Some((fit, outcome));
            }
            if k == 1 {
                break;
            }
        }
        if k == 1 {
            break;
        }
        if m.iter().all(|&x| x * 2 > budget.max_m) {
            break;
        }
        while m[round % (k - 1)] * 2 > budget.max_m {
            round += 1;
        }
        m[round % (k - 1)] *= 2;
        round += 1;
    }
    let (_, mut out) = best.expect("at least one attempt");
    out.not_reached = true;
    out.attempts = attempts;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;

    fn bip() -> ColoredHypergraph {
        let p = Params::uniform(2, 2, vec![1, 2], 2).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| ColorId((i.len() == 2 && v != [1, 1]) as u32)).unwrap();
        g
    }

    fn exact(g: &ColoredHypergraph, h: usize, delta: &DeltaCertificate, eps: f64) -> RegularityReport {
        verify_regularity(g, h, delta, eps, VerifyMode::Exact, VerifyBudget::default(), &mut RngStream::new(0)).unwrap()
    }

    #[test]
    fn constant_graph_is_exactly_regular() {
        let g = ColoredHypergraph::constant(Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        for h in 1..=2 {
            let rep = exact(&g, h, &DeltaCertificate::zero(), 0.0);
            assert!(rep.passed());
            assert_eq!(rep.epsilon_fit, Some(0.0));
        }
    }

    #[test]
    fn saturated_slack_makes_condition_i_vacuous() {
        let g = bip();
        let one = DeltaCertificate::constant(&g, 1.0);
        let rep = exact(&g, 2, &one, 0.5);
        assert!(rep.condition_i());
        assert!(!rep.condition_ii());
    }

    #[test]
    fn bipartite_h1_factors_exactly() {
        let rep = exact(&bip(), 1, &DeltaCertificate::zero(), 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn exact_budget_enforced() {
        let g = bip();
        let r = verify_regularity(&g, 3, &DeltaCertificate::zero(), 0.0, VerifyMode::Exact, VerifyBudget { maps: 10, complexes: 10 }, &mut RngStream::new(0));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn fitted_certificate_verifies() {
        let p = Params::uniform(2, 2, vec![1, 2], 4).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, v| ColorId((i.len() == 2 && (v[0] + v[1]) % 3 == 0) as u32)).unwrap();
        let (delta, rep) = fit_delta(&g, 2, VerifyMode::Exact, VerifyBudget::default(), &mut RngStream::new(0)).unwrap();
        assert!(rep.passed());
        let fit = rep.epsilon_fit.unwrap();
        let again = exact(&g, 2, &delta, fit);
        assert!(again.passed());
        // monotone in epsilon
        assert!(exact(&g, 2, &delta, fit + 0.1).passed());
    }

    #[test]
    fn ordinary_thresholds() {
        let g = ColoredHypergraph::constant(Params::uniform(2, 2, vec![1, 10], 2).unwrap(), &[ColorId(0), ColorId(0)]).unwrap();
        let stats = FrameStats::new(&g);
        let delta = DeltaCertificate::zero();
        let cx = OrdinaryContext { stats: &stats, delta: &delta, graph: &g };
        let tc = TotalColor::new(IndexSet::full(2), vec![ColorId(0); 3]).unwrap();
        assert!(ordinary_total(&tc, 1.0, &cx));
        assert!(ordinary_total(&tc, 0.001, &cx));
        let absent = TotalColor::new(IndexSet::full(2), vec![ColorId(0), ColorId(0), ColorId(3)]).unwrap();
        assert!(!ordinary_total(&absent, 0.001, &cx));
        assert!(ordinary_frame(&absent.frame(), 0.001, &cx));
    }

    #[test]
    fn constant_graph_mean_square_is_zero() {
        let g = ColoredHypergraph::constant(Params::uniform(2, 2, vec![1, 2], 3).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let est = mean_square_condition(&g, 2, 8, &mut RngStream::new(1)).unwrap();
        assert!(est.iter().all(|e| e.mean == 0.0 && e.holds(0.0, 2.0)));
    }

    #[test]
    fn search_on_constant_graph_succeeds_immediately() {
        let g = ColoredHypergraph::constant(Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let out = regularity_search(&g, 0.0, 1, None, SearchBudget::default(), &mut RngStream::new(2)).unwrap();
        assert!(!out.not_reached);
        assert_eq!(out.m, vec![1]);
        assert_eq!(out.report.epsilon_fit, Some(0.0));
    }

    #[test]
    fn delta_text_round_trip() {
        let g = bip();
        let d = DeltaCertificate::constant(&g, 0.125);
        assert!(!d.is_empty());
        assert_eq!(DeltaCertificate::parse(&d.render()).unwrap(), d);
        assert!(DeltaCertificate::parse("delta 1\n0,1 0 0\n").is_err());
        assert!(DeltaCertificate::parse("0 0 0.5\n").is_err());
    }

    #[test]
    fn ordinary_mass_constant_and_vacuous() {
        let g = ColoredHypergraph::constant(Params::uniform(2, 2, vec![1, 2], 2).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let out = ordinary_mass_check(&g, &DeltaCertificate::zero(), 0.001, VerifyBudget::default()).unwrap();
        assert!(out.iter().all(|b| b.holds() && *b.measured.numer() == 0));
        let out = ordinary_mass_check(&bip(), &DeltaCertificate::zero(), 1.0, VerifyBudget::default()).unwrap();
        assert!(out.iter().all(|b| b.bound >= 1.0 && b.holds()));
    }
}
