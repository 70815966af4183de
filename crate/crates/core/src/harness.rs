//! Instance generators, farness certificates, experiment configs and
//! flat key-value reports.

use crate::counting::{copy_probability, CountMode, Pattern};
use crate::cph;
use crate::editor::{edit_graph, removal_pipeline, Branch, CopySource, PipelineConfig};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{ColorId, ColoredHypergraph, IndexSet, Params, UniformColoredGraph};
use crate::regularity::{fit_delta, VerifyBudget, VerifyMode};
use crate::sampling::{PartitionwiseMap, RngStream};
use crate::tester::{register, test, FamilyOracle, PropertyOracle, TesterConfig, Verdict};
use std::collections::{BTreeMap, HashSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA: &str = "rrl-report/1";

/// How to build an instance.
#[derive(Clone, Debug)]
pub enum GeneratorSpec {
    /// One color per arity.
    Constant { params: Params, colors: Vec<ColorId> },
    /// Per arity, a probability vector over the colors of that arity.
    Random { params: Params, probs: Vec<Vec<f64>> },
    /// Every pattern vertex becomes a block of `block` vertices.
    Blowup { pattern: ColoredHypergraph, block: usize },
    /// `count` vertex-disjoint copies of `copy` written over `base`.
    Planted { base: Box<GeneratorSpec>, copy: UniformColoredGraph, count: usize },
}

/// Largest table volume a generator may allocate.
pub const MAX_VOLUME: u128 = 1 << 26;

fn volume(p: &Params) -> u128 {
    p.index_sets().iter().map(|&i| i.members().map(|m| p.part_sizes[m] as u128).product::<u128>()).sum()
}

fn check_volume(p: &Params) -> Result<()> {
    let v = volume(p);
    if v > MAX_VOLUME {
        return Err(Error::budget("generated table volume", v, MAX_VOLUME));
    }
    Ok(())
}

pub fn generate(kind: &GeneratorSpec, rng: &RngStream) -> Result<ColoredHypergraph> {
    match kind {
        GeneratorSpec::Constant { params, colors } => {
            check_volume(params)?;
            ColoredHypergraph::constant(params.clone(), colors)
        }
        GeneratorSpec::Random { params, probs } => {
            check_volume(params)?;
            if probs.len() != params.k {
                return Err(Error::Config(format!("need {} probability vectors, got {}", params.k, probs.len())));
            }
            for (a, p) in probs.iter().enumerate() {
                let sum: f64 = p.iter().sum();
                if p.is_empty() || p.len() > params.b[a] as usize || (sum - 1.0).abs() > 1e-9 || p.iter().any(|&x| x < 0.0) {
                    return Err(Error::Config(format!("arity {} probabilities {p:?} must sum to 1 over at most {} colors", a + 1, params.b[a])));
                }
            }
            let mut g = ColoredHypergraph::with_sizes(params.clone(), |i| probs[i.len() - 1].len() as u32)?;
            let sets: Vec<IndexSet> = g.index_sets().collect();
            for index in sets {
                let mut r = rng.child(format!("generate/{index}"));
                let p = &probs[index.len() - 1];
                let n = g.class(index).len();
                for off in 0..n {
                    let c = if p.len() == 1 { 0 } else { r.weighted(p) };
                    g.set_at(index, off, ColorId(c as u32));
                }
            }
            Ok(g)
        }
        GeneratorSpec::Blowup { pattern, block } => {
            if *block == 0 {
                return Err(Error::Config("block size must be positive".into()));
            }
            let p = pattern.params();
            let params = p.with_part_sizes(p.part_sizes.iter().map(|n| n * block).collect())?;
            check_volume(&params)?;
            let mut g = ColoredHypergraph::with_sizes(params, |i| pattern.class_size(i))?;
            let block = *block as u32;
            g.fill_with(|index, verts| {
                let pv: Vec<u32> = verts.iter().map(|v| v / block).collect();
                pattern.color_unchecked(index, &pv)
            })?;
            Ok(g)
        }
        GeneratorSpec::Planted { base, copy, count } => {
            let mut g = generate(base, rng)?;
            if copy.r() != g.r() || copy.k() != g.k() {
                return Err(Error::Config("planted graph shape differs from base".into()));
            }
            let h = copy.h();
            let mut r = rng.child("generate/plant");
            let mut chosen = Vec::with_capacity(g.r());
            for (p, &n) in g.params().part_sizes.iter().enumerate() {
                if count * h > n {
                    return Err(Error::Config(format!("part {p} has {n} vertices, {count} copies need {}", count * h)));
                }
                chosen.push(r.sample_distinct(n, count * h));
            }
            for j in 0..*count {
                let images: Vec<Vec<u32>> = chosen.iter().map(|c| c[j * h..(j + 1) * h].to_vec()).collect();
                let map = PartitionwiseMap::new(g.params(), images)?;
                for (e, c) in copy.visible_edges() {
                    let img = map.apply(&e)?;
                    if c.0 >= g.class_size(e.index) {
                        return Err(Error::Config(format!("planted color {c} outside class {}", e.index)));
                    }
                    g.set_color(&img, c)?;
                }
            }
            Ok(g)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FarnessMethod {
    Exact,
    Packing,
}

/// A lower bound on the number of top-arity recolorings needed to satisfy a
/// property (exact: the minimum itself).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarnessCertificate {
    pub lower_bound: u64,
    pub method: FarnessMethod,
    /// Candidate graphs examined (exact) or copies scanned (packing).
    pub work: u128,
}

/// Minimum number of top-arity recolorings reaching a satisfying graph, by
/// increasing edit count. `budget` caps the candidates examined.
pub fn farness_exact(g: &ColoredHypergraph, oracle: &dyn PropertyOracle, budget: u128) -> Result<FarnessCertificate> {
    let tops: Vec<(IndexSet, usize, u32)> = g
        .index_sets_of_arity(g.k())
        .into_iter()
        .flat_map(|i| {
            let size = g.class_size(i);
            (0..g.class(i).len()).map(move |off| (i, off, size))
        })
        .collect();
    let mut work = 0u128;
    for d in 0..=tops.len() as u64 {
        let alt = tops.iter().map(|t| t.2 as u128 - 1).max().unwrap_or(0);
        let level = binom(tops.len() as u128, d as u128).saturating_mul(alt.saturating_pow(d as u32));
        if work.saturating_add(level) > budget {
            return Err(Error::budget("farness search", work.saturating_add(level), budget));
        }
        let mut scratch = g.clone();
        if search(&mut scratch, g, &tops, 0, d as usize, oracle, &mut work) {
            return Ok(FarnessCertificate { lower_bound: d, method: FarnessMethod::Exact, work });
        }
    }
    Err(Error::Config("no recoloring satisfies the property".into()))
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, j| acc.saturating_mul(n - j) / (j + 1))
}

fn search(
    cur: &mut ColoredHypergraph,
    orig: &ColoredHypergraph,
    tops: &[(IndexSet, usize, u32)],
    start: usize,
    left: usize,
    oracle: &dyn PropertyOracle,
    work: &mut u128,
) -> bool {
    if left == 0 {
        *work += 1;
        return oracle.satisfies(cur);
    }
    for pos in start..tops.len() {
        if tops.len() - pos < left {
            break;
        }
        let (index, off, size) = tops[pos];
        let old = orig.class(index).table()[off];
        for c in (0..size).map(ColorId).filter(|&c| c != old) {
            cur.set_at(index, off, c);
            if search(cur, orig, tops, pos + 1, left - 1, oracle, work) {
                return true;
            }
        }
        cur.set_at(index, off, old);
    }
    false
}

/// Greedy maximal family of copies of `f` with pairwise disjoint visible
/// image edges, scanned in canonical map order.
pub fn farness_packing(g: &ColoredHypergraph, f: &UniformColoredGraph, budget: u128) -> Result<FarnessCertificate> {
    let pattern = Pattern::compile(g, f.complex());
    let edges = f.visible_edges();
    let mut used: HashSet<(IndexSet, Vec<u32>)> = HashSet::new();
    let mut packed = 0u64;
    let mut work = 0u128;
    pattern.for_each_hit(g, budget, |map| {
        work += 1;
        let images: Vec<(IndexSet, Vec<u32>)> = edges
            .iter()
            .map(|(e, _)| {
                let img = map.apply(e).expect("pattern edge");
                (img.index, img.verts)
            })
            .collect();
        let distinct: HashSet<_> = images.iter().collect();
        if distinct.len() == images.len() && images.iter().all(|x| !used.contains(x)) {
            packed += 1;
            used.extend(images);
        }
    })?;
    Ok(FarnessCertificate { lower_bound: packed, method: FarnessMethod::Packing, work })
}

/// `[section]` headers followed by `key = value` lines; `#` comments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    base_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(no + 1, "expected `key = value`"))?;
            let sec = current.as_ref().ok_or_else(|| Error::parse(no + 1, "key outside a section"))?;
            let prev = sections.get_mut(sec).unwrap().insert(k.trim().to_string(), v.trim().to_string());
            if prev.is_some() {
                return Err(Error::parse(no + 1, format!("duplicate key {}", k.trim())));
            }
        }
        Ok(Config { sections, base_dir: None })
    }

    /// Resolve relative file names against `dir`.
    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn parse_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("{section}.{key}: cannot parse {v:?}"))),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<T> {
        let v = self.get(section, key).ok_or_else(|| Error::Config(format!("missing {section}.{key}")))?;
        v.parse().map_err(|_| Error::Config(format!("{section}.{key}: cannot parse {v:?}")))
    }

    pub fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        self.get(section, key)
            .map(|v| {
                v.split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::Config(format!("{section}.{key}: cannot parse {t:?}"))))
                    .collect()
            })
            .transpose()
    }

    fn path(&self, p: &str) -> PathBuf {
        match &self.base_dir {
            Some(d) if Path::new(p).is_relative() => d.join(p),
            _ => PathBuf::from(p),
        }
    }

    fn read(&self, p: &str) -> Result<String> {
        std::fs::read_to_string(self.path(p)).map_err(|e| Error::Config(format!("{p}: {e}")))
    }
}

/// Sorted key-value report with a schema line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    entries: BTreeMap<String, String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = format!("schema = {REPORT_SCHEMA}\n");
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name.to_string(), source: Box::new(e) })
}

fn probs_for(cfg: &Config, sec: &str, k: usize, b: &[u32]) -> Result<Vec<Vec<f64>>> {
    (1..=k)
        .map(|a| {
            let key = if a == k { "p".to_string() } else { format!("p.{a}") };
            Ok(match cfg.list::<f64>(sec, &key)? {
                Some(p) => p,
                None if a == k => vec![1.0 / b[a - 1] as f64; b[a - 1] as usize],
                None => vec![1.0],
            })
        })
        .collect()
}

fn params_from(cfg: &Config, sec: &str) -> Result<Params> {
    let r: usize = cfg.require(sec, "r")?;
    let k: usize = cfg.require(sec, "k")?;
    let n: usize = cfg.require(sec, "n")?;
    let b = cfg.list::<u32>(sec, "b")?.unwrap_or_else(|| {
        let mut b = vec![1; k];
        b[k - 1] = 2;
        b
    });
    Params::uniform(r, k, b, n)
}

/// The `[graph]` section: an `input` file or a generator.
pub fn graph_from_config(cfg: &Config, family: Option<&Family>, rng: &RngStream) -> Result<ColoredHypergraph> {
    if let Some(file) = cfg.get("graph", "input") {
        return cph::parse(&cfg.read(file)?);
    }
    let kind = generator_from_config(cfg, family)?;
    generate(&kind, rng)
}

fn generator_from_config(cfg: &Config, family: Option<&Family>) -> Result<GeneratorSpec> {
    let kind = cfg.get("graph", "kind").unwrap_or("random");
    let base = match kind {
        "constant" => {
            let params = params_from(cfg, "graph")?;
            let colors = cfg.list::<u32>("graph", "colors")?.unwrap_or_else(|| vec![0; params.k]);
            GeneratorSpec::Constant { params, colors: colors.into_iter().map(ColorId).collect() }
        }
        "random" => {
            let params = params_from(cfg, "graph")?;
            let probs = probs_for(cfg, "graph", params.k, &params.b)?;
            GeneratorSpec::Random { params, probs }
        }
        "blowup" => {
            let block: usize = cfg.require("graph", "block")?;
            let pattern = match cfg.get("graph", "pattern") {
                Some(file) => cph::parse(&cfg.read(file)?)?,
                None => {
                    let params = params_from(cfg, "graph")?;
                    let probs = probs_for(cfg, "graph", params.k, &params.b)?;
                    let seed: u64 = cfg.parse_or("graph", "pattern_seed", 0)?;
                    generate(&GeneratorSpec::Random { params, probs }, &RngStream::new(seed).child("pattern"))?
                }
            };
            GeneratorSpec::Blowup { pattern, block }
        }
        other => return Err(Error::Config(format!("unknown graph kind {other:?}"))),
    };
    let count: usize = cfg.parse_or("graph", "plant_count", 0)?;
    if count == 0 {
        return Ok(base);
    }
    let member: usize = cfg.parse_or("graph", "plant_member", 0)?;
    let fam = family.ok_or_else(|| Error::Config("planting needs a [family] section".into()))?;
    let copy = fam.members().get(member).cloned().ok_or_else(|| Error::Config(format!("family has no member {member}")))?;
    Ok(GeneratorSpec::Planted { base: Box::new(base), copy, count })
}

/// The `[family]` section: `file` and/or comma-separated `builtin`s.
pub fn family_from_config(cfg: &Config, r: usize, k: usize) -> Result<Option<Family>> {
    if !cfg.has_section("family") {
        return Ok(None);
    }
    let mut text = match cfg.get("family", "file") {
        Some(f) => cfg.read(f)?,
        None => format!("fam {r} {k}\n"),
    };
    if let Some(b) = cfg.get("family", "builtin") {
        for name in b.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            text.push_str(&format!("builtin {name}\n"));
        }
    }
    Family::parse(&text).map(Some)
}

fn shape(cfg: &Config) -> Result<(usize, usize)> {
    if let Some(file) = cfg.get("graph", "input") {
        let g = cph::parse(&cfg.read(file)?)?;
        return Ok((g.r(), g.k()));
    }
    if let Some(file) = cfg.get("graph", "pattern") {
        let g = cph::parse(&cfg.read(file)?)?;
        return Ok((g.r(), g.k()));
    }
    Ok((cfg.require("graph", "r")?, cfg.require("graph", "k")?))
}

fn pipeline_config(cfg: &Config) -> Result<PipelineConfig> {
    let mut p = PipelineConfig::new(cfg.parse_or("pipeline", "epsilon", 0.1)?);
    if let Some(e1) = cfg.get("pipeline", "epsilon1") {
        p.epsilon1 = Some(e1.parse().map_err(|_| Error::Config("pipeline.epsilon1".into()))?);
    }
    p.l = cfg.list("pipeline", "l")?;
    p.l_cap = cfg.parse_or("pipeline", "l_cap", p.l_cap)?;
    p.table_budget = cfg.parse_or("pipeline", "table_budget", p.table_budget)?;
    p.outer.max_m = cfg.parse_or("pipeline", "max_m", p.outer.max_m)?;
    p.inner.max_m = p.outer.max_m;
    p.outer.trials = cfg.parse_or("pipeline", "trials", p.outer.trials)?;
    p.inner.trials = p.outer.trials;
    p.copy_budget = cfg.parse_or("pipeline", "copy_budget", p.copy_budget)?;
    p.h_slice = cfg.parse_or("pipeline", "h_slice", p.h_slice)?;
    Ok(p)
}

/// `a/b` without reduction beyond the ratio's own.
pub fn ratio_str(r: &num_rational::Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Images of every part, parts separated by `;`.
pub fn map_inline(m: &PartitionwiseMap) -> String {
    m.images()
        .iter()
        .map(|img| img.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

/// Run the experiment described by `cfg`. Identical configs give identical
/// reports.
pub fn run_experiment(cfg: &Config) -> Result<Report> {
    let kind = cfg.get("experiment", "kind").ok_or_else(|| Error::Config("missing experiment.kind".into()))?.to_string();
    let seed: u64 = cfg.parse_or("experiment", "seed", 0)?;
    let runs: u64 = cfg.parse_or("experiment", "runs", 1)?;
    let root = RngStream::new(seed);
    let mut rep = Report::new();
    rep.set("experiment.kind", &kind);
    rep.set("experiment.seed", seed);
    rep.set("experiment.runs", runs);
    let (r, k) = stage("config", shape(cfg))?;
    let family = stage("family", family_from_config(cfg, r, k))?;
    let graph_seed: u64 = cfg.parse_or("graph", "seed", seed)?;
    let g = stage("generate", graph_from_config(cfg, family.as_ref(), &RngStream::new(graph_seed)))?;
    rep.set("graph.r", g.r());
    rep.set("graph.k", g.k());
    rep.set("graph.parts", g.params().part_sizes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    rep.set("graph.volume", g.table_volume());
    let need_family = || family.clone().ok_or_else(|| Error::Config("experiment needs a [family] section".into()));
    match kind.as_str() {
        "tester" => stage("tester", run_tester(cfg, &g, need_family()?, &root, runs, &mut rep))?,
        "edit" => {
            let p = stage("config", pipeline_config(cfg))?;
            for run in 0..runs {
                let out = stage("edit", edit_graph(&g, &p, &root.child(format!("run/{run}"))))?;
                let m = &out.machinery;
                let pre = format!("run.{run}");
                let changed: u64 = m.edit_report.per_index.iter().filter(|x| x.index.len() == k).map(|x| *x.changed.numer()).sum();
                rep.set(format!("{pre}.top_changed"), changed);
                rep.set(format!("{pre}.top_edges"), g.index_sets_of_arity(k).iter().map(|&i| g.class(i).len()).sum::<usize>());
                machinery_keys(&mut rep, &pre, m);
            }
        }
        "removal" => {
            let p = stage("config", pipeline_config(cfg))?;
            let fam = need_family()?;
            let samples: u64 = cfg.parse_or("count", "samples", 4096)?;
            let confidence: f64 = cfg.parse_or("count", "confidence", 0.95)?;
            for run in 0..runs {
                let rng = root.child(format!("run/{run}"));
                let out = stage("removal", removal_pipeline(&g, &fam, &p, &rng))?;
                let pre = format!("run.{run}");
                match &out.branch {
                    Branch::Edited { changed, .. } => {
                        rep.set(format!("{pre}.branch"), "edited");
                        rep.set(format!("{pre}.changed"), ratio_str(changed));
                    }
                    Branch::Copy { member, estimate, witness, source } => {
                        rep.set(format!("{pre}.branch"), "copy");
                        rep.set(format!("{pre}.copy.source"), if *source == CopySource::Colorable { "colorable" } else { "scan" });
                        rep.set(format!("{pre}.copy.h"), member.h());
                        rep.set(format!("{pre}.copy.exact"), estimate.exact.as_ref().map(|x| x.to_string()).unwrap_or_default());
                        rep.set(format!("{pre}.copy.witness"), map_inline(witness));
                        rep.set(format!("{pre}.copy.witness_valid"), crate::counting::witness_valid(&g, member.complex(), witness));
                        let s = stage(
                            "count",
                            copy_probability(&g, member.complex(), CountMode::Sampled { samples, confidence }, &mut rng.child("sampled")),
                        )?;
                        rep.set(format!("{pre}.copy.sampled"), s.value);
                        rep.set(format!("{pre}.copy.interval"), format!("{} {}", s.lower, s.upper));
                        rep.set(format!("{pre}.copy.exact_in_interval"), s.lower <= estimate.value && estimate.value <= s.upper);
                    }
                }
                if let Some(m) = &out.machinery {
                    machinery_keys(&mut rep, &pre, m);
                }
            }
        }
        "count" => {
            let fam = need_family()?;
            let budget: u128 = cfg.parse_or("count", "budget", 1u128 << 32)?;
            let samples: u64 = cfg.parse_or("count", "samples", 4096)?;
            let confidence: f64 = cfg.parse_or("count", "confidence", 0.95)?;
            for (i, f) in fam.members().iter().enumerate() {
                let pre = format!("member.{i}");
                let ex = stage("count", copy_probability(&g, f.complex(), CountMode::Exact { budget }, &mut root.child("exact")))?;
                let s = stage(
                    "count",
                    copy_probability(&g, f.complex(), CountMode::Sampled { samples, confidence }, &mut root.child(format!("sampled/{i}"))),
                )?;
                rep.set(format!("{pre}.h"), f.h());
                rep.set(format!("{pre}.exact"), ex.exact.as_ref().map(|x| x.to_string()).unwrap_or_default());
                rep.set(format!("{pre}.maps"), ex.hits);
                rep.set(format!("{pre}.sampled"), s.value);
                rep.set(format!("{pre}.interval"), format!("{} {}", s.lower, s.upper));
                rep.set(format!("{pre}.exact_in_interval"), s.lower <= ex.value && ex.value <= s.upper);
            }
        }
        "far" => {
            let fam = need_family()?;
            let budget: u128 = cfg.parse_or("far", "budget", 1u128 << 20)?;
            let members = fam.members();
            for (i, f) in members.iter().enumerate() {
                let c = stage("far", farness_packing(&g, f, budget))?;
                rep.set(format!("far.packing.member.{i}"), c.lower_bound);
            }
            if cfg.parse_or("far", "exact", false)? {
                let c = stage("far", farness_exact(&g, &FamilyOracle::new(fam), budget))?;
                rep.set("far.exact", c.lower_bound);
                rep.set("far.exact.work", c.work);
            }
        }
        "regularity" => {
            let h: usize = cfg.parse_or("regularity", "h", 1)?;
            let mode = match cfg.get("regularity", "mode").unwrap_or("exact") {
                "exact" => VerifyMode::Exact,
                "sampled" => VerifyMode::Sampled {
                    samples: cfg.parse_or("regularity", "samples", 4096)?,
                    confidence: cfg.parse_or("regularity", "confidence", 0.95)?,
                },
                m => return Err(Error::Config(format!("unknown regularity.mode {m:?}"))),
            };
            let (_, report) = stage("regularity", fit_delta(&g, h, mode, VerifyBudget::default(), &mut root.child("fit")))?;
            rep.set("regularity.h", h);
            rep.set("regularity.epsilon_fit", report.epsilon_fit.map(|x| x.to_string()).unwrap_or("none".into()));
            rep.set("regularity.complexes", report.complexes_checked);
            rep.set("regularity.violations", report.violations_total);
        }
        other => return Err(Error::Config(format!("unknown experiment kind {other:?}"))),
    }
    Ok(rep)
}

/// Keys `{pre}.*` describing one edit run.
pub fn machinery_keys(rep: &mut Report, pre: &str, m: &crate::editor::Machinery) {
    let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let fit = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or("none".into());
    rep.set(format!("{pre}.outer.m"), join(&m.outer_m));
    rep.set(format!("{pre}.outer.fit"), fit(m.outer_fit));
    rep.set(format!("{pre}.outer.reached"), m.outer_reached);
    rep.set(format!("{pre}.inner.m"), join(&m.inner_m));
    rep.set(format!("{pre}.inner.fit"), fit(m.inner_fit));
    rep.set(format!("{pre}.inner.reached"), m.inner_reached);
    rep.set(format!("{pre}.epsilon1"), m.epsilon1);
    rep.set(format!("{pre}.l"), m.l.as_slice().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    rep.set(format!("{pre}.unrealizable"), m.unrealizable);
    for (i, name) in ["keep", "densify", "recolor", "stuck"].iter().enumerate() {
        rep.set(format!("{pre}.cases.{name}"), m.case_counts[i]);
    }
    rep.set(format!("{pre}.uncertified"), m.uncertified);
    rep.set(format!("{pre}.subset_identity"), m.edit_report.subset_identity);
    for x in &m.edit_report.per_index {
        rep.set(format!("{pre}.changed.{}", x.index), ratio_str(&x.changed));
    }
    rep.set(format!("{pre}.edited_has_copy"), m.edited_has_copy);
}

fn run_tester(cfg: &Config, g: &ColoredHypergraph, family: Family, root: &RngStream, runs: u64, rep: &mut Report) -> Result<()> {
    let c: f64 = cfg.require("tester", "c")?;
    let h0: usize = cfg.parse_or("tester", "h0", 1)?;
    let mut tc = TesterConfig::new(c, h0)?;
    if let Some(t) = cfg.get("tester", "trials") {
        tc.trials = Some(t.parse().map_err(|_| Error::Config("tester.trials".into()))?);
    }
    let oracle = FamilyOracle::new(family);
    let probe = g.params().with_part_sizes(vec![h0.max(2); g.r()])?;
    let reg = register(&oracle, &probe, &root.child("register"))?;
    rep.set("tester.registration.checks", reg.checks);
    rep.set("tester.registration.heredity_exercised", reg.heredity_exercised);
    rep.set("tester.rounds", tc.rounds());
    rep.set("tester.satisfies", oracle.satisfies(g));
    let mut rejections = 0u64;
    for run in 0..runs {
        let out = test(g, &oracle, &tc, &root.child(format!("run/{run}")))?;
        if let Verdict::Reject { round, witness, .. } = &out.verdict {
            rejections += 1;
            if rejections == 1 {
                rep.set("tester.first_reject.run", run);
                rep.set("tester.first_reject.round", round);
                rep.set("tester.first_reject.witness_violates", !oracle.satisfies(witness));
            }
        }
    }
    rep.set("tester.rejections", rejections);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Builtin;

    fn triangle_family() -> Family {
        Family::empty(3, 2).with_builtin(Builtin::Clique(ColorId(1)))
    }

    #[test]
    fn constant_and_identity_blowup() {
        let p = Params::uniform(3, 2, vec![1, 2], 2).unwrap();
        let g = generate(&GeneratorSpec::Constant { params: p.clone(), colors: vec![ColorId(0), ColorId(1)] }, &RngStream::new(0)).unwrap();
        assert!(g.class(IndexSet::new(&[0, 1]).unwrap()).table().iter().all(|&c| c == ColorId(1)));
        let pat = generate(&GeneratorSpec::Random { params: p, probs: vec![vec![1.0], vec![0.5, 0.5]] }, &RngStream::new(4)).unwrap();
        let same = generate(&GeneratorSpec::Blowup { pattern: pat.clone(), block: 1 }, &RngStream::new(0)).unwrap();
        assert_eq!(same, pat);
    }

    #[test]
    fn planted_triangles_are_found() {
        let p = Params::uniform(3, 2, vec![1, 2], 20).unwrap();
        let base = GeneratorSpec::Constant { params: p, colors: vec![ColorId(0), ColorId(0)] };
        let tri = triangle_family().members()[0].clone();
        let g = generate(&GeneratorSpec::Planted { base: Box::new(base), copy: tri.clone(), count: 5 }, &RngStream::new(2)).unwrap();
        let est = copy_probability(&g, tri.complex(), CountMode::Exact { budget: 1 << 30 }, &mut RngStream::new(0)).unwrap();
        assert!(est.hits >= 5);
        assert!(farness_packing(&g, &tri, 1 << 30).unwrap().lower_bound >= 5);
    }

    #[test]
    fn farness_of_planted_triangles() {
        let p = Params::uniform(3, 2, vec![1, 2], 2).unwrap();
        let base = GeneratorSpec::Constant { params: p, colors: vec![ColorId(0), ColorId(0)] };
        let tri = triangle_family().members()[0].clone();
        let oracle = FamilyOracle::new(triangle_family());
        let zero = generate(&base, &RngStream::new(0)).unwrap();
        assert_eq!(farness_exact(&zero, &oracle, 1 << 20).unwrap().lower_bound, 0);
        let one = generate(&GeneratorSpec::Planted { base: Box::new(base.clone()), copy: tri.clone(), count: 1 }, &RngStream::new(1)).unwrap();
        assert_eq!(farness_exact(&one, &oracle, 1 << 20).unwrap().lower_bound, 1);
        let two = generate(&GeneratorSpec::Planted { base: Box::new(base), copy: tri.clone(), count: 2 }, &RngStream::new(1)).unwrap();
        assert_eq!(farness_exact(&two, &oracle, 1 << 20).unwrap().lower_bound, 2);
        assert_eq!(farness_packing(&two, &tri, 1 << 20).unwrap().lower_bound, 2);
    }

    #[test]
    fn config_and_report() {
        let cfg = Config::parse("[experiment]\nkind = tester # comment\nseed = 3\n[graph]\nkind = constant\nr = 3\nk = 2\nn = 4\ncolors = 0 0\n[family]\nbuiltin = clique:1\n[tester]\nc = 0.5\n").unwrap();
        assert!(Config::parse("x = 1").is_err());
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.get("tester.rejections"), Some("0"));
        assert_eq!(a.get("tester.rounds"), Some("6"));
        assert_eq!(run_experiment(&cfg).unwrap().render(), a.render());
        assert!(a.render().starts_with("schema = rrl-report/1\n"));
    }

    #[test]
    fn stage_tags_errors() {
        let cfg = Config::parse("[experiment]\nkind = removal\n[graph]\nkind = constant\nr = 3\nk = 2\nn = 2\n").unwrap();
        let e = run_experiment(&cfg).unwrap_err();
        assert!(matches!(e.root(), Error::Config(_)));
    }
}
