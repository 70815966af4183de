//! The one-sided property tester and the reduction from non-partite
//! monotone properties.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{ColorId, ColoredHypergraph, IndexSet, Params, SimplicialComplex};
use crate::sampling::RngStream;
use rayon::prelude::*;

/// A hypergraph property. Implementations must be invariant under relabeling
/// vertices inside parts and closed under induced subgraphs.
pub trait PropertyOracle: Sync {
    fn name(&self) -> String;
    fn satisfies(&self, g: &ColoredHypergraph) -> bool;
}

/// "No copy of any member of the family".
pub struct FamilyOracle {
    pub family: Family,
    pub budget: u128,
}

impl FamilyOracle {
    pub fn new(family: Family) -> Self {
        FamilyOracle { family, budget: 1 << 40 }
    }
}

impl PropertyOracle for FamilyOracle {
    fn name(&self) -> String {
        format!("{}-member family", self.family.members().len())
    }

    fn satisfies(&self, g: &ColoredHypergraph) -> bool {
        self.family.is_free(g, self.budget).unwrap_or(false)
    }
}

/// Spot checks run when an oracle is registered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistrationReport {
    pub checks: usize,
    /// Checks where the source graph satisfied the property (heredity was exercised).
    pub heredity_exercised: usize,
}

pub const REGISTRATION_CHECKS: usize = 64;

/// Check heredity and relabeling invariance on random graphs shaped like
/// `params`; any failure rejects the oracle.
pub fn register(oracle: &dyn PropertyOracle, params: &Params, rng: &RngStream) -> Result<RegistrationReport> {
    let mut exercised = 0;
    for i in 0..REGISTRATION_CHECKS {
        let mut r = rng.child(format!("register/{i}"));
        // sparse top colors half the time, so satisfying graphs show up
        let bias = if i % 2 == 0 { 0.8 } else { 0.0 };
        let mut g = ColoredHypergraph::blank(params.clone())?;
        g.fill_with(|idx, _| {
            let b = params.b[idx.len() - 1] as u64;
            if r.unit() < bias {
                ColorId(0)
            } else {
                ColorId(r.below(b) as u32)
            }
        })?;
        let sat = oracle.satisfies(&g);
        let perm: Vec<Vec<u32>> = params
            .part_sizes
            .iter()
            .map(|&n| r.sample_distinct(n, n))
            .collect();
        if oracle.satisfies(&relabel(&g, &perm)) != sat {
            return Err(Error::OracleRejected(format!("{}: answer changed under relabeling (check {i})", oracle.name())));
        }
        if sat {
            exercised += 1;
            let w: Vec<Vec<u32>> = params
                .part_sizes
                .iter()
                .map(|&n| {
                    let m = 1 + r.below(n as u64) as usize;
                    let mut s = r.sample_distinct(n, m);
                    s.sort_unstable();
                    s
                })
                .collect();
            let sub = induced_subgraph(&g, &w)?;
            if !oracle.satisfies(sub.graph()) {
                return Err(Error::OracleRejected(format!("{}: induced subgraph violates (check {i})", oracle.name())));
            }
        }
    }
    Ok(RegistrationReport { checks: REGISTRATION_CHECKS, heredity_exercised: exercised })
}

/// `g` with vertex `v` of part `p` renamed to `perm[p][v]`.
fn relabel(g: &ColoredHypergraph, perm: &[Vec<u32>]) -> ColoredHypergraph {
    let mut out = g.clone();
    for index in g.index_sets() {
        for e in g.edges(index) {
            let verts: Vec<u32> = index.members().zip(&e.verts).map(|(p, &v)| perm[p][v as usize]).collect();
            let c = g.color_unchecked(index, &e.verts);
            let target = out.class(index).offset(&verts);
            out.set_at(index, target, c);
        }
    }
    out
}

/// The subgraph induced by `w` (one vertex list per part, order kept).
pub fn induced_subgraph(g: &ColoredHypergraph, w: &[Vec<u32>]) -> Result<SimplicialComplex> {
    if w.len() != g.r() {
        return Err(Error::InvalidDomain(format!("{} vertex lists for {} parts", w.len(), g.r())));
    }
    for (p, ws) in w.iter().enumerate() {
        if let Some(&v) = ws.iter().find(|&&v| v as usize >= g.params().part_sizes[p]) {
            return Err(Error::InvalidVertex { part: p, vertex: v });
        }
        if ws.is_empty() {
            return Err(Error::InvalidDomain(format!("part {p} has no sampled vertex")));
        }
    }
    let p = g.params().with_part_sizes(w.iter().map(|x| x.len()).collect())?;
    let mut sub = ColoredHypergraph::with_sizes(p, |i| g.class_size(i))?;
    sub.fill_with(|index: IndexSet, verts| {
        let orig: Vec<u32> = index.members().zip(verts).map(|(p, &v)| w[p][v as usize]).collect();
        g.color_unchecked(index, &orig)
    })?;
    Ok(SimplicialComplex::all_visible(sub))
}

/// `c` and `h0` of the tester; `trials` overrides `ceil(3/c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TesterConfig {
    pub c: f64,
    pub h0: usize,
    pub trials: Option<usize>,
}

impl TesterConfig {
    pub fn new(c: f64, h0: usize) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) || h0 == 0 {
            return Err(Error::InvalidParams(format!("need c in (0, 1] and h0 >= 1, got c = {c}, h0 = {h0}")));
        }
        Ok(TesterConfig { c, h0, trials: None })
    }

    pub fn rounds(&self) -> usize {
        self.trials.unwrap_or_else(|| rounds_for(self.c))
    }
}

/// `ceil(3/c)`, robust to `3/c` landing a hair above an integer.
pub fn rounds_for(c: f64) -> usize {
    (3.0 / c - 1e-9).ceil() as usize
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Accept,
    Reject {
        round: usize,
        sample: Vec<Vec<u32>>,
        witness: ColoredHypergraph,
    },
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

#[derive(Clone, Debug)]
pub struct TestOutcome {
    pub verdict: Verdict,
    /// Every round's vertex sets, drawn before any evaluation.
    pub samples: Vec<Vec<Vec<u32>>>,
    /// Random draws consumed.
    pub draws: u64,
}

/// Draw `rounds` independent sets of `h0` distinct vertices per part and
/// reject iff some induced subgraph violates the property. The first
/// violating round (in draw order) is reported.
pub fn test(g: &ColoredHypergraph, oracle: &dyn PropertyOracle, cfg: &TesterConfig, rng: &RngStream) -> Result<TestOutcome> {
    let min_part = *g.params().part_sizes.iter().min().unwrap();
    if cfg.h0 > min_part {
        return Err(Error::SampleTooLarge { h0: cfg.h0, min_part });
    }
    let mut draw = rng.child("tester/rounds");
    let samples: Vec<Vec<Vec<u32>>> = (0..cfg.rounds())
        .map(|_| g.params().part_sizes.iter().map(|&n| draw.sample_distinct(n, cfg.h0)).collect())
        .collect();
    let first_bad = samples
        .par_iter()
        .enumerate()
        .map(|(i, w)| -> Result<Option<(usize, ColoredHypergraph)>> {
            let sub = induced_subgraph(g, w)?.into_graph();
            Ok((!oracle.satisfies(&sub)).then_some((i, sub)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    let verdict = match first_bad {
        None => Verdict::Accept,
        Some((round, witness)) => Verdict::Reject { round, sample: samples[round].clone(), witness },
    };
    Ok(TestOutcome { verdict, samples, draws: draw.draw_count() })
}

/// Result of partitioning a non-partite `k`-uniform hypergraph.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// Top color 1 marks a kept edge, 0 an absent one.
    pub graph: ColoredHypergraph,
    /// `(part, position in part)` of every original vertex.
    pub placement: Vec<(usize, u32)>,
    pub kept: u64,
    pub deleted: u64,
    /// `r * r^{k-2} * N^k`, the comparison scale for deletions.
    pub scale: f64,
}

/// Split `n` vertices into `r` balanced parts at random and keep the edges
/// meeting `k` distinct parts.
pub fn monotone_reduction(n: usize, k: usize, edges: &[Vec<u32>], r: usize, rng: &RngStream) -> Result<Reduction> {
    if r < k || k == 0 || n < r {
        return Err(Error::InvalidParams(format!("need n >= r >= k >= 1, got n = {n}, r = {r}, k = {k}")));
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    rng.child("reduction/partition").shuffle(&mut order);
    let mut placement = vec![(0usize, 0u32); n];
    let mut sizes = vec![0usize; r];
    for (pos, &v) in order.iter().enumerate() {
        let part = pos % r;
        placement[v as usize] = (part, sizes[part] as u32);
        sizes[part] += 1;
    }
    let mut b = vec![1u32; k];
    b[k - 1] = 2;
    let params = Params::new(r, k, b, sizes)?;
    let mut graph = ColoredHypergraph::with_sizes(params, |i| if i.len() == k { 2 } else { 1 })?;
    let (mut kept, mut deleted) = (0u64, 0u64);
    for e in edges {
        if e.len() != k || e.iter().any(|&v| v as usize >= n) {
            return Err(Error::InvalidEdge(format!("{e:?} is not a {k}-set of vertices below {n}")));
        }
        let mut placed: Vec<(usize, u32)> = e.iter().map(|&v| placement[v as usize]).collect();
        placed.sort_unstable();
        if placed.windows(2).any(|w| w[0].0 == w[1].0) {
            deleted += 1;
            continue;
        }
        let index = IndexSet::new(&placed.iter().map(|x| x.0).collect::<Vec<_>>())?;
        let verts: Vec<u32> = placed.iter().map(|x| x.1).collect();
        let off = graph.class(index).offset(&verts);
        if graph.class(index).table()[off] == ColorId(0) {
            kept += 1;
        }
        graph.set_at(index, off, ColorId(1));
    }
    let scale = r as f64 * (r as f64).powi(k as i32 - 2) * (n as f64).powi(k as i32);
    Ok(Reduction { graph, placement, kept, deleted, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Builtin;

    fn triangle_oracle() -> FamilyOracle {
        FamilyOracle::new(Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1))))
    }

    fn bipartite_like(n: usize) -> ColoredHypergraph {
        let p = Params::uniform(3, 2, vec![1, 2], n).unwrap();
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, _| ColorId((i.len() == 2 && i.contains(0)) as u32)).unwrap();
        g
    }

    #[test]
    fn rounds_arithmetic() {
        assert_eq!(rounds_for(0.5), 6);
        assert_eq!(rounds_for(0.1), 30);
        assert_eq!(rounds_for(0.03), 100);
    }

    #[test]
    fn triangle_oracle_registers() {
        let o = triangle_oracle();
        let rep = register(&o, &Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &RngStream::new(0)).unwrap();
        assert!(rep.heredity_exercised > 0);
    }

    struct AtLeastOneEdge;
    impl PropertyOracle for AtLeastOneEdge {
        fn name(&self) -> String {
            "some black edge".into()
        }
        fn satisfies(&self, g: &ColoredHypergraph) -> bool {
            g.index_sets_of_arity(2).iter().any(|&i| g.class(i).table().contains(&ColorId(1)))
        }
    }

    #[test]
    fn non_hereditary_oracle_is_rejected() {
        let r = register(&AtLeastOneEdge, &Params::uniform(3, 2, vec![1, 2], 3).unwrap(), &RngStream::new(0));
        assert!(matches!(r, Err(Error::OracleRejected(_))));
    }

    #[test]
    fn satisfying_graph_always_accepted() {
        let g = bipartite_like(6);
        let cfg = TesterConfig::new(0.5, 2).unwrap();
        for seed in 0..20 {
            let out = test(&g, &triangle_oracle(), &cfg, &RngStream::new(seed)).unwrap();
            assert!(out.verdict.accepted());
            assert_eq!(out.samples.len(), 6);
            assert_eq!(out.draws, 6 * 3 * 2);
        }
    }

    #[test]
    fn complete_graph_rejected_with_valid_witness() {
        let g = ColoredHypergraph::constant(Params::uniform(3, 2, vec![1, 2], 4).unwrap(), &[ColorId(0), ColorId(1)]).unwrap();
        let out = test(&g, &triangle_oracle(), &TesterConfig::new(0.5, 1).unwrap(), &RngStream::new(1)).unwrap();
        match out.verdict {
            Verdict::Reject { round, witness, .. } => {
                assert_eq!(round, 0);
                assert!(!triangle_oracle().satisfies(&witness));
            }
            Verdict::Accept => panic!("complete graph accepted"),
        }
    }

    #[test]
    fn sample_too_large() {
        let g = bipartite_like(2);
        let r = test(&g, &triangle_oracle(), &TesterConfig::new(0.5, 3).unwrap(), &RngStream::new(0));
        assert!(matches!(r, Err(Error::SampleTooLarge { h0: 3, min_part: 2 })));
    }

    #[test]
    fn induced_identity_and_lookup() {
        let g = bipartite_like(3);
        let all: Vec<Vec<u32>> = vec![vec![0, 1, 2]; 3];
        assert_eq!(induced_subgraph(&g, &all).unwrap().graph(), &g);
        let bad = vec![vec![0], vec![5], vec![0]];
        assert!(matches!(induced_subgraph(&g, &bad), Err(Error::InvalidVertex { part: 1, vertex: 5 })));
    }

    #[test]
    fn reduction_counts() {
        // all pairs on 3 vertices, one per part: nothing deleted
        let edges = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
        let red = monotone_reduction(3, 2, &edges, 3, &RngStream::new(0)).unwrap();
        assert_eq!((red.kept, red.deleted), (3, 0));
        let red = monotone_reduction(6, 2, &[], 3, &RngStream::new(0)).unwrap();
        assert_eq!((red.kept, red.deleted), (0, 0));
    }
}
