use hyperremoval::counting::{copy_probability, CountMode};
use hyperremoval::editor::{removal_pipeline, Branch, PipelineConfig};
use hyperremoval::family::{Builtin, Family};
use hyperremoval::harness::{farness_exact, farness_packing, generate, GeneratorSpec};
use hyperremoval::regularize::{regularize, FrameStats};
use hyperremoval::sampling::{random_map_uniform, RngStream};
use hyperremoval::tester::{test, FamilyOracle, TesterConfig};
use hyperremoval::{cph, ColorId, ColoredHypergraph, Edge, IndexSet, Params, SimplicialComplex};
use proptest::prelude::*;

fn graph(r: usize, k: usize, n: usize, b: Vec<u32>, seed: u64) -> ColoredHypergraph {
    let probs = b.iter().map(|&c| vec![1.0 / c as f64; c as usize]).collect();
    let params = Params::uniform(r, k, b, n).unwrap();
    generate(&GeneratorSpec::Random { params, probs }, &RngStream::new(seed)).unwrap()
}

fn shape() -> impl Strategy<Value = (usize, usize, usize, Vec<u32>, u64)> {
    (2usize..=3, 1usize..=3, 1usize..=4, any::<u64>()).prop_flat_map(|(r, k, n, seed)| {
        let k = k.min(r);
        (Just(r), Just(k), Just(n), prop::collection::vec(1u32..=3, k), Just(seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cph_round_trip((r, k, n, b, seed) in shape()) {
        let g = graph(r, k, n, b, seed);
        prop_assert_eq!(cph::parse(&cph::render(&g)).unwrap(), g);
    }

    #[test]
    fn densities_sum_to_one((r, k, n, b, seed) in shape()) {
        let g = graph(r, k, n, b, seed);
        let stats = FrameStats::new(&g);
        for index in g.index_sets() {
            let mut total = 0;
            for (frame, bucket) in stats.frames(index) {
                prop_assert_eq!(bucket.colors.iter().sum::<u64>(), bucket.count);
                let s: f64 = (0..g.class_size(index)).map(|c| stats.density_f64(index, frame, ColorId(c)).unwrap()).sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                total += bucket.count;
            }
            prop_assert_eq!(total, g.class(index).len() as u64);
        }
    }

    #[test]
    fn regularization_refines_and_keeps_top((r, k, n, b, seed) in shape(), m in 1usize..=2) {
        prop_assume!(k >= 2);
        let g = graph(r, k, n, b, seed);
        let phi = random_map_uniform(g.params(), m, &mut RngStream::new(seed ^ 7));
        let reg = regularize(&g, k - 1, &phi).unwrap();
        for index in g.index_sets() {
            for e in g.edges(index) {
                let new = reg.graph().color(&e).unwrap();
                // the new color determines the old one
                prop_assert_eq!(reg.base_color(index, new), g.color(&e).unwrap());
                if index.len() == k {
                    prop_assert_eq!(new, g.color(&e).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_edge_copy_is_density(seed in any::<u64>(), n in 1usize..=4) {
        let g = graph(3, 2, n, vec![1, 2], seed);
        let mut s = SimplicialComplex::invisible(3, 2, 1, |i| g.class_size(i)).unwrap();
        let e = Edge::new(IndexSet::new(&[0, 2]).unwrap(), vec![0, 0]).unwrap();
        for j in [IndexSet::new(&[0]).unwrap(), IndexSet::new(&[2]).unwrap()] {
            s.set_visible(&e.restrict(j).unwrap(), Some(ColorId(0))).unwrap();
        }
        s.set_visible(&e, Some(ColorId(1))).unwrap();
        let est = copy_probability(&g, &s, CountMode::Exact { budget: 1 << 20 }, &mut RngStream::new(0)).unwrap();
        let black = g.class(e.index).table().iter().filter(|&&c| c == ColorId(1)).count();
        prop_assert_eq!(est.hits, (black * n) as u128);
    }

    #[test]
    fn tester_never_rejects_free_graphs(seed in any::<u64>(), n in 2usize..=12, c in 0.05f64..0.9) {
        // only the 0-1 and 0-2 pairs may be black: no triangle
        let p = Params::uniform(3, 2, vec![1, 2], n).unwrap();
        let mut rng = RngStream::new(seed);
        let mut g = ColoredHypergraph::blank(p).unwrap();
        g.fill_with(|i, _| ColorId((i.len() == 2 && i.contains(0) && rng.bernoulli(0.5)) as u32)).unwrap();
        let oracle = FamilyOracle::new(Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1))));
        let out = test(&g, &oracle, &TesterConfig::new(c, 2).unwrap(), &RngStream::new(seed)).unwrap();
        prop_assert!(out.verdict.accepted());
    }

    #[test]
    fn packing_never_exceeds_exact_farness(seed in any::<u64>()) {
        let g = graph(3, 2, 2, vec![1, 2], seed);
        let fam = Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1)));
        let tri = fam.members()[0].clone();
        let packed = farness_packing(&g, &tri, 1 << 20).unwrap().lower_bound;
        let exact = farness_exact(&g, &FamilyOracle::new(fam), 1 << 24).unwrap().lower_bound;
        prop_assert!(packed <= exact);
    }
}

#[test]
fn large_edits_do_not_count_as_removal() {
    // a blow-up whose editing recolors a quarter of the top edges
    let text = "cph 3 2\nparts 2 2 2\nbounds 1 2\ncolors 0 1\ncolors 0,1 2\ncolors 0,2 2\ncolors 1 1\ncolors 1,2 2\ncolors 2 1\n\
                edge 0,1 0 1 1\nedge 0,1 1 1 1\nedge 0,2 0 1 1\nedge 1,2 0 1 1\nedge 1,2 1 1 1\n";
    let pattern = cph::parse(text).unwrap();
    let g = generate(&GeneratorSpec::Blowup { pattern, block: 3 }, &RngStream::new(0)).unwrap();
    let fam = Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1)));
    let out = removal_pipeline(&g, &fam, &PipelineConfig::new(0.1), &RngStream::new(3).child("run/0")).unwrap();
    match out.branch {
        Branch::Copy { estimate, .. } => assert!(estimate.value > 0.0),
        Branch::Edited { changed, .. } => panic!("edited branch with {changed} changed"),
    }
    let m = out.machinery.unwrap();
    assert!(!m.edited_has_copy);
    assert!(!m.edit_report.within_target(2));
}

#[test]
fn random_generator_matches_declared_frequencies() {
    // 3 classes of 200 x 200 pairs: 1.2e5 top edges
    let params = Params::uniform(3, 2, vec![1, 3], 200).unwrap();
    let probs = vec![vec![1.0], vec![0.2, 0.3, 0.5]];
    let g = generate(&GeneratorSpec::Random { params, probs: probs.clone() }, &RngStream::new(11)).unwrap();
    let mut counts = [0u64; 3];
    let mut n = 0u64;
    for index in g.index_sets_of_arity(2) {
        for c in g.class(index).table() {
            counts[c.index()] += 1;
            n += 1;
        }
    }
    for (c, &p) in probs[1].iter().enumerate() {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[c] as f64 - n as f64 * p).abs() <= 3.0 * sigma, "color {c}: {} of {n}", counts[c]);
    }
}

#[test]
fn exact_farness_is_at_most_three_packings() {
    let fam = Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1)));
    let tri = fam.members()[0].clone();
    let oracle = FamilyOracle::new(fam);
    for seed in 0..12 {
        let g = graph(3, 2, 2, vec![1, 2], seed);
        let packed = farness_packing(&g, &tri, 1 << 20).unwrap().lower_bound;
        let exact = farness_exact(&g, &oracle, 1 << 24).unwrap().lower_bound;
        assert!(packed <= exact && exact <= 3 * packed, "seed {seed}: packing {packed}, exact {exact}");
    }
}
