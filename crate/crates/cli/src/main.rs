//! `rrl`: command-line front end for the hyperremoval toolkit.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperremoval::counting::{copy_probability, CountMode};
use hyperremoval::editor::{removal_pipeline, Branch, CopySource, PipelineConfig};
use hyperremoval::family::Family;
use hyperremoval::harness::{
    farness_exact, farness_packing, graph_from_config, machinery_keys, map_inline, ratio_str, run_experiment, Config, Report,
};
use hyperremoval::model::FrameColor;
use hyperremoval::regularity::{
    fit_delta, regularity_search, verify_regularity, DeltaCertificate, RegularityReport, SearchBudget, VerifyBudget, VerifyMode,
};
use hyperremoval::regularize::{regularize, relative_density, DensityQuery};
use hyperremoval::sampling::{PartitionwiseMap, RngStream};
use hyperremoval::tester::{test, FamilyOracle, PropertyOracle, TesterConfig, Verdict};
use hyperremoval::{cph, ColorId, ColoredHypergraph, Error, IndexSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rrl", version, about = "Colored partite hypergraph removal toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance
    Gen(GenArgs),
    /// Exact relative density d(target | frame)
    Density(DensityArgs),
    /// Regularize low arities against a partitionwise map
    Regularize(RegularizeArgs),
    /// Check a slack certificate
    RegVerify(RegVerifyArgs),
    /// Fit a slack certificate
    RegFit(RegFitArgs),
    /// Search regularization sizes until the graph is regular
    RegSearch(RegSearchArgs),
    /// Run the removal pipeline: edit or exhibit a copy
    Edit(EditArgs),
    /// Copy probability of every family member
    Count(CountArgs),
    /// One-sided property tester
    Test(TestArgs),
    /// Farness certificate
    Far(FarArgs),
    /// Run an experiment config
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Constant,
    Random,
    Blowup,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "random")]
    kind: GenKind,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Vertices per part
    #[arg(long)]
    n: Option<usize>,
    /// Palette sizes per arity, space separated
    #[arg(long)]
    b: Option<String>,
    /// Constant colors per arity
    #[arg(long)]
    colors: Option<String>,
    /// Top-arity color probabilities
    #[arg(long)]
    p: Option<String>,
    /// Pattern file for blow-ups
    #[arg(long)]
    pattern: Option<PathBuf>,
    #[arg(long)]
    block: Option<usize>,
    /// Family whose member is planted
    #[arg(long)]
    plant_family: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    plant_member: usize,
    #[arg(long, default_value_t = 0)]
    plant_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Index set, e.g. `0,2`
    #[arg(long)]
    index: String,
    #[arg(long)]
    target: u32,
    /// Frame colors in relative-mask order, comma separated (empty for arity 1)
    #[arg(long, default_value = "")]
    frame: String,
}

#[derive(Args)]
struct RegularizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: usize,
    /// One `part images...` line per part
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
    Auto,
}

#[derive(Args)]
struct VerifyOpts {
    #[arg(long, default_value_t = 1)]
    h: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 4096)]
    samples: u64,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Largest map space enumerated exactly
    #[arg(long, default_value_t = 1 << 20)]
    budget: u128,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl VerifyOpts {
    fn mode(&self) -> VerifyMode {
        match self.mode {
            Mode::Exact => VerifyMode::Exact,
            Mode::Sampled => VerifyMode::Sampled { samples: self.samples, confidence: self.confidence },
            Mode::Auto => VerifyMode::Auto { samples: self.samples, confidence: self.confidence },
        }
    }

    fn budget(&self) -> VerifyBudget {
        VerifyBudget { maps: self.budget, ..VerifyBudget::default() }
    }
}

#[derive(Args)]
struct RegVerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Certificate file; zero slack when absent
    #[arg(long)]
    delta: Option<PathBuf>,
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    opts: VerifyOpts,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RegFitArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    opts: VerifyOpts,
    /// Where to write the certificate
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RegSearchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    opts: VerifyOpts,
    #[arg(long, default_value_t = 8)]
    max_m: usize,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    /// Regularized graph
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EditArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    family: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    epsilon1: Option<f64>,
    /// Explicit L vector, space separated
    #[arg(long)]
    l: Option<String>,
    #[arg(long, default_value_t = 2)]
    max_m: usize,
    #[arg(long, default_value_t = 2)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    h_slice: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Edited graph (edited branch only)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    family: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 4096)]
    samples: u64,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 1 << 32)]
    budget: u128,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Family defining the property (freeness)
    #[arg(long)]
    property: PathBuf,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    h0: usize,
    /// Override the round count
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the rejecting sample
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FarMethod {
    Exact,
    Packing,
}

#[derive(Args)]
struct FarArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    property: PathBuf,
    #[arg(long, value_enum, default_value = "packing")]
    method: FarMethod,
    #[arg(long, default_value_t = 1 << 24)]
    budget: u128,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Nonzero exit without an error message.
struct Violation;

type Outcome = anyhow::Result<Result<(), Violation>>;

fn read(p: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(p: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn load_graph(p: &Path) -> anyhow::Result<ColoredHypergraph> {
    Ok(cph::parse(&read(p)?)?)
}

fn load_family(p: &Path) -> anyhow::Result<Family> {
    Ok(Family::parse(&read(p)?)?)
}

fn emit(rep: &Report, to: Option<&Path>) -> anyhow::Result<()> {
    match to {
        Some(p) => write(p, &rep.render()),
        None => {
            print!("{}", rep.render());
            Ok(())
        }
    }
}

fn emit_graph(g: &ColoredHypergraph, to: Option<&Path>) -> anyhow::Result<()> {
    match to {
        Some(p) => write(p, &cph::render(g)),
        None => {
            print!("{}", cph::render(g));
            Ok(())
        }
    }
}

fn regularity_keys(rep: &mut Report, r: &RegularityReport) {
    rep.set("regularity.h", r.h);
    rep.set("regularity.epsilon", r.epsilon);
    rep.set("regularity.epsilon_fit", r.epsilon_fit.map(|x| x.to_string()).unwrap_or("none".into()));
    rep.set("regularity.complexes", r.complexes_checked);
    rep.set("regularity.violations", r.violations_total);
    rep.set("regularity.condition_i", r.condition_i());
    rep.set("regularity.condition_ii", r.condition_ii());
    for m in &r.condition_ii_margins {
        rep.set(format!("regularity.margin.{}", m.index), format!("{} {}", m.expectation, m.allowed));
    }
    for (i, v) in r.condition_i_violations.iter().enumerate() {
        rep.set(format!("regularity.violation.{i}"), format!("{} [{} {}]", v.observed, v.lower, v.upper));
    }
}

fn gen(a: GenArgs) -> Outcome {
    let mut text = String::from("[graph]\n");
    let kind = match a.kind {
        GenKind::Constant => "constant",
        GenKind::Random => "random",
        GenKind::Blowup => "blowup",
    };
    text.push_str(&format!("kind = {kind}\n"));
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            text.push_str(&format!("{k} = {v}\n"));
        }
    };
    put("r", a.r.map(|x| x.to_string()));
    put("k", a.k.map(|x| x.to_string()));
    put("n", a.n.map(|x| x.to_string()));
    put("b", a.b);
    put("colors", a.colors);
    put("p", a.p);
    put("pattern", a.pattern.map(|p| p.display().to_string()));
    put("block", a.block.map(|x| x.to_string()));
    put("plant_count", Some(a.plant_count.to_string()));
    put("plant_member", Some(a.plant_member.to_string()));
    let cfg = Config::parse(&text)?;
    let family = a.plant_family.as_deref().map(load_family).transpose()?;
    let g = graph_from_config(&cfg, family.as_ref(), &RngStream::new(a.seed))?;
    emit_graph(&g, a.out.as_deref())?;
    Ok(Ok(()))
}

fn density(a: DensityArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let index: IndexSet = a.index.parse()?;
    let entries = a
        .frame
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|t| t.parse().map(ColorId).map_err(|_| anyhow!("bad frame color {t:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let frame = FrameColor::new(index, entries)?;
    let d = relative_density(&g, &DensityQuery { target: ColorId(a.target), frame })?;
    let mut rep = Report::new();
    rep.set("density", ratio_str(&d));
    rep.set("density.value", *d.numer() as f64 / *d.denom() as f64);
    emit(&rep, None)?;
    Ok(Ok(()))
}

fn regularize_cmd(a: RegularizeArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let phi = PartitionwiseMap::parse(g.params(), &read(&a.map)?)?;
    let reg = regularize(&g, a.s, &phi)?;
    emit_graph(reg.graph(), a.out.as_deref())?;
    Ok(Ok(()))
}

fn reg_verify(a: RegVerifyArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let delta = match &a.delta {
        Some(p) => DeltaCertificate::parse(&read(p)?)?,
        None => DeltaCertificate::zero(),
    };
    let r = verify_regularity(&g, a.opts.h, &delta, a.epsilon, a.opts.mode(), a.opts.budget(), &mut RngStream::new(a.opts.seed))?;
    let mut rep = Report::new();
    rep.set("seed", a.opts.seed);
    regularity_keys(&mut rep, &r);
    rep.set("regularity.passed", r.passed());
    emit(&rep, a.report.as_deref())?;
    Ok(if r.passed() { Ok(()) } else { Err(Violation) })
}

fn reg_fit(a: RegFitArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let (delta, r) = fit_delta(&g, a.opts.h, a.opts.mode(), a.opts.budget(), &mut RngStream::new(a.opts.seed))?;
    if let Some(p) = &a.out {
        write(p, &delta.render())?;
    }
    let mut rep = Report::new();
    rep.set("seed", a.opts.seed);
    rep.set("delta.entries", delta.len());
    regularity_keys(&mut rep, &r);
    emit(&rep, a.report.as_deref())?;
    Ok(if r.condition_i() { Ok(()) } else { Err(Violation) })
}

fn reg_search(a: RegSearchArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let budget = SearchBudget {
        max_m: a.max_m,
        trials: a.trials,
        verify: a.opts.budget(),
        mode: a.opts.mode(),
        ..SearchBudget::default()
    };
    let out = regularity_search(&g, a.epsilon, a.opts.h, None, budget, &mut RngStream::new(a.opts.seed))?;
    if let Some(p) = &a.out {
        write(p, &cph::render(out.regularized.graph()))?;
    }
    let mut rep = Report::new();
    rep.set("seed", a.opts.seed);
    rep.set("search.m", out.m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    rep.set("search.target", a.epsilon);
    rep.set("search.attempts", out.attempts);
    rep.set("search.reached", !out.not_reached);
    for (s, phi) in out.maps.iter().enumerate() {
        rep.set(format!("search.map.{}", s + 1), map_inline(phi));
    }
    regularity_keys(&mut rep, &out.report);
    emit(&rep, a.report.as_deref())?;
    Ok(if out.not_reached { Err(Violation) } else { Ok(()) })
}

fn edit(a: EditArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let family = load_family(&a.family)?;
    let mut cfg = PipelineConfig::new(a.epsilon);
    cfg.epsilon1 = a.epsilon1;
    cfg.l = a
        .l
        .as_deref()
        .map(|s| s.split_whitespace().map(|t| t.parse().map_err(|_| anyhow!("bad L entry {t:?}"))).collect())
        .transpose()?;
    cfg.outer.max_m = a.max_m;
    cfg.inner.max_m = a.max_m;
    cfg.outer.trials = a.trials;
    cfg.inner.trials = a.trials;
    cfg.h_slice = a.h_slice;
    let out = removal_pipeline(&g, &family, &cfg, &RngStream::new(a.seed))?;
    let mut rep = Report::new();
    rep.set("seed", a.seed);
    rep.set("epsilon", a.epsilon);
    match &out.branch {
        Branch::Edited { graph, changed } => {
            rep.set("branch", "edited");
            rep.set("changed", ratio_str(changed));
            if let Some(p) = &a.out {
                write(p, &cph::render(graph))?;
            }
        }
        Branch::Copy { member, estimate, witness, source } => {
            rep.set("branch", "copy");
            rep.set("copy.source", if *source == CopySource::Colorable { "colorable" } else { "scan" });
            rep.set("copy.h", member.h());
            rep.set("copy.exact", estimate.exact.as_ref().map(|x| x.to_string()).unwrap_or_default());
            rep.set("copy.maps", estimate.hits);
            rep.set("copy.witness", map_inline(witness));
        }
    }
    if let Some(m) = &out.machinery {
        machinery_keys(&mut rep, "edit", m);
    }
    emit(&rep, a.report.as_deref())?;
    Ok(Ok(()))
}

fn count(a: CountArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let family = load_family(&a.family)?;
    let mode = match a.mode {
        Mode::Exact => CountMode::Exact { budget: a.budget },
        Mode::Sampled => CountMode::Sampled { samples: a.samples, confidence: a.confidence },
        Mode::Auto => {
            let maps = family.members().iter().map(|f| f.h()).max().unwrap_or(1);
            match hyperremoval::sampling::map_count(&g.params().part_sizes, maps) {
                Some(n) if n <= a.budget => CountMode::Exact { budget: a.budget },
                _ => CountMode::Sampled { samples: a.samples, confidence: a.confidence },
            }
        }
    };
    let root = RngStream::new(a.seed);
    let mut rep = Report::new();
    rep.set("seed", a.seed);
    for (i, f) in family.members().iter().enumerate() {
        let est = copy_probability(&g, f.complex(), mode, &mut root.child(format!("member/{i}")))?;
        let pre = format!("member.{i}");
        rep.set(format!("{pre}.h"), f.h());
        rep.set(format!("{pre}.value"), est.value);
        rep.set(format!("{pre}.interval"), format!("{} {}", est.lower, est.upper));
        rep.set(format!("{pre}.hits"), est.hits);
        rep.set(format!("{pre}.trials"), est.trials);
        if let Some(x) = &est.exact {
            rep.set(format!("{pre}.exact"), x);
        }
        if let Some(w) = &est.witness {
            rep.set(format!("{pre}.witness"), map_inline(w));
        }
    }
    emit(&rep, a.report.as_deref())?;
    Ok(Ok(()))
}

fn test_cmd(a: TestArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let oracle = FamilyOracle::new(load_family(&a.property)?);
    let mut cfg = TesterConfig::new(a.c, a.h0)?;
    cfg.trials = a.trials;
    let out = test(&g, &oracle, &cfg, &RngStream::new(a.seed))?;
    let mut rep = Report::new();
    rep.set("seed", a.seed);
    rep.set("tester.oracle", oracle.name());
    rep.set("tester.rounds", cfg.rounds());
    rep.set("tester.draws", out.draws);
    match &out.verdict {
        Verdict::Accept => rep.set("tester.verdict", "accept"),
        Verdict::Reject { round, sample, witness } => {
            rep.set("tester.verdict", "reject");
            rep.set("tester.round", round);
            let s: Vec<String> = sample.iter().map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect();
            rep.set("tester.sample", s.join(";"));
            if let Some(p) = &a.witness {
                write(p, &cph::render(witness))?;
            }
        }
    }
    emit(&rep, a.report.as_deref())?;
    Ok(if out.verdict.accepted() { Ok(()) } else { Err(Violation) })
}

fn far(a: FarArgs) -> Outcome {
    let g = load_graph(&a.input)?;
    let family = load_family(&a.property)?;
    let mut rep = Report::new();
    match a.method {
        FarMethod::Exact => {
            let c = farness_exact(&g, &FamilyOracle::new(family), a.budget)?;
            rep.set("far.method", "exact");
            rep.set("far.lower_bound", c.lower_bound);
            rep.set("far.work", c.work);
        }
        FarMethod::Packing => {
            rep.set("far.method", "packing");
            let mut best = 0;
            for (i, f) in family.members().iter().enumerate() {
                let c = farness_packing(&g, f, a.budget)?;
                rep.set(format!("far.member.{i}"), c.lower_bound);
                best = best.max(c.lower_bound);
            }
            rep.set("far.lower_bound", best);
        }
    }
    let tops: usize = g.index_sets_of_arity(g.k()).iter().map(|&i| g.class(i).len()).sum();
    rep.set("far.top_edges", tops);
    emit(&rep, a.report.as_deref())?;
    Ok(Ok(()))
}

fn run(a: RunArgs) -> Outcome {
    let dir = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let cfg = Config::parse(&read(&a.config)?)?.with_base_dir(dir);
    let rep = run_experiment(&cfg)?;
    emit(&rep, a.report.as_deref())?;
    Ok(Ok(()))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>().map(Error::root) {
        Some(Error::BudgetExceeded { .. }) => 3,
        Some(Error::OracleRejected(_)) | Some(Error::PreconditionUnverified(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("RRL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let result = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Density(a) => density(a),
        Cmd::Regularize(a) => regularize_cmd(a),
        Cmd::RegVerify(a) => reg_verify(a),
        Cmd::RegFit(a) => reg_fit(a),
        Cmd::RegSearch(a) => reg_search(a),
        Cmd::Edit(a) => edit(a),
        Cmd::Count(a) => count(a),
        Cmd::Test(a) => test_cmd(a),
        Cmd::Far(a) => far(a),
        Cmd::Run(a) => run(a),
    };
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Violation)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rrl: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
