use std::collections::BTreeMap;
use std::error::Error;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use neteffect::detect::{run_test, verdict};
use neteffect::estimate::{edge_counting_baseline, estimate_compatibility};
use neteffect::io::{read_edge_list, read_labels, write_edge_list, write_labels, write_predictions, EdgeListOptions};
use neteffect::metrics::{accuracy, class_insensitive_homophily, edge_homophily, held_out};
use neteffect::pipeline::{classify, propagation_matrix, ClassifyConfig};
use neteffect::synth::{generate, GeneratorSpec};
use neteffect::{
    initial_beliefs, par, sample_priors, CompatibilityMatrix, Graph, LabelSet, PriorSet, PropagationConfig,
    RidgeConfig, TestConfig, WalkConfig,
};
use serde::Serialize;

use crate::args::{Cli, ClassifyArgs, Command, EstimateArgs, Estimator, InputArgs, StatsArgs, SynthArgs, TestArgs, WalkArgs};
use crate::report::{AccuracySection, EstimateSection, GraphSummary, RunReport, TestSection};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

pub fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let mut ctx = Context {
        seed: cli.seed,
        start: Instant::now(),
        timings: BTreeMap::new(),
    };
    match &cli.command {
        Command::Test(a) => cmd_test(&mut ctx, a),
        Command::Estimate(a) => cmd_estimate(&mut ctx, a),
        Command::Classify(a) => cmd_classify(&mut ctx, a),
        Command::Synth(a) => cmd_synth(&mut ctx, a),
        Command::Stats(a) => cmd_stats(a),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<u16>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: Option<u16>) -> Result<()> {
    Ok(())
}

struct Context {
    seed: u64,
    start: Instant,
    timings: BTreeMap<&'static str, f64>,
}

impl Context {
    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(stage, t.elapsed().as_secs_f64());
        out
    }

    fn report(&mut self, subcommand: &'static str, graph: GraphSummary) -> RunReport {
        self.timings.insert("total", self.start.elapsed().as_secs_f64());
        RunReport {
            command: std::env::args().collect(),
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            threads: par::current_num_threads(),
            graph,
            timings: std::mem::take(&mut self.timings),
            test: None,
            estimate: None,
            classify: None,
            accuracy: None,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn with_path<T>(path: &Path, r: neteffect::Result<T>) -> Result<T> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Largest node id mentioned in a label file, so trailing isolated nodes
/// still get a row.
fn max_label_id(path: &Path) -> Result<Option<usize>> {
    let mut max = None;
    for line in open(path)?.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(id) = t.split_whitespace().next().and_then(|s| s.parse::<usize>().ok()) {
            max = max.max(Some(id));
        }
    }
    Ok(max)
}

fn load_graph_and_labels(edges: &Path, labels: &Path) -> Result<(Graph, LabelSet)> {
    let mut graph = with_path(edges, read_edge_list(open(edges)?, EdgeListOptions::default()))?;
    if let Some(id) = max_label_id(labels)? {
        if id >= graph.num_nodes() {
            let pairs: Vec<(usize, usize)> = graph.edges().collect();
            graph = Graph::from_edges(id + 1, pairs)?;
        }
    }
    let labels = with_path(labels, read_labels(open(labels)?, graph.num_nodes()))?;
    Ok((graph, labels))
}

struct Input {
    graph: Graph,
    labels: LabelSet,
    priors: PriorSet,
}

impl Input {
    fn load(ctx: &mut Context, args: &InputArgs) -> Result<Input> {
        let (graph, labels) = ctx.timed("load", || load_graph_and_labels(&args.edges, &args.labels))?;
        let priors = sample_priors(&labels, args.prior_frac, ctx.seed, args.stratified)?;
        Ok(Input { graph, labels, priors })
    }

    fn summary(&self) -> GraphSummary {
        GraphSummary {
            nodes: self.graph.num_nodes(),
            edges: self.graph.num_edges(),
            classes: self.labels.num_classes(),
            labeled: self.labels.num_labeled(),
            priors: Some(self.priors.len()),
        }
    }
}

fn walk_config(args: &WalkArgs, seed: u64) -> WalkConfig {
    WalkConfig {
        walk_length: args.walk_len,
        trials: args.walk_trials,
        rank: args.rank,
        seed,
        backtracking: false,
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn write_matrix_csv(rows: &[Vec<f64>], names: &[String], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "class,{}", names.join(","))?;
    for (name, row) in names.iter().zip(rows) {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{name},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn to_rows(h: &CompatibilityMatrix) -> Vec<Vec<f64>> {
    h.values.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn cmd_test(ctx: &mut Context, args: &TestArgs) -> Result<()> {
    let input = Input::load(ctx, &args.input)?;
    let config = TestConfig {
        rounds: args.rounds as usize,
        cap: args.cap,
        alpha: args.alpha,
        seed: ctx.seed,
    };
    let table = ctx.timed("test", || run_test(&input.graph, &input.priors, &input.labels, &config))?;
    for &(a, b) in &table.insufficient {
        let names = input.labels.class_names();
        eprintln!("warning: no prior edge relates classes {} and {}; p-value set to 1", names[a], names[b]);
    }
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        table.write_csv(input.labels.class_names(), &mut w)?;
        w.flush()?;
    }
    let mut report = ctx.report("test", input.summary());
    report.test = Some(TestSection {
        rounds: config.rounds,
        cap: config.cap,
        alpha: config.alpha,
        verdict: verdict(&table, config.alpha),
        insufficient_pairs: table.insufficient.clone(),
    });
    emit(&report, args.output.report.as_deref())
}

fn cmd_estimate(ctx: &mut Context, args: &EstimateArgs) -> Result<()> {
    let input = Input::load(ctx, &args.input)?;
    let section = match args.estimator {
        Estimator::EdgeCount => {
            let h = ctx.timed("estimate", || edge_counting_baseline(&input.graph, &input.priors, &input.labels));
            EstimateSection {
                estimator: "edge-count",
                emphasis: false,
                embedding_rank: None,
                alphas: None,
                classes_without_priors: Vec::new(),
                row_argmax: h.row_argmax(),
                compatibility: to_rows(&h),
            }
        }
        Estimator::Nef => {
            let walk = walk_config(&args.walk, ctx.seed);
            let pm = ctx.timed("emphasis", || propagation_matrix(&input.graph, &walk, !args.walk.no_emphasis))?;
            let ehat = initial_beliefs(&input.priors, &input.labels, true);
            let est = ctx.timed("estimate", || {
                estimate_compatibility(&pm.matrix, &ehat, &input.priors, &RidgeConfig::default())
            })?;
            let h = est.matrix.to_display();
            EstimateSection {
                estimator: "nef",
                emphasis: pm.embedding_rank.is_some(),
                embedding_rank: pm.embedding_rank,
                alphas: Some(est.alphas),
                classes_without_priors: est.classes_without_priors,
                // argmax of the raw fit; clamping in the display form can tie rows
                row_argmax: est.matrix.row_argmax(),
                compatibility: to_rows(&h),
            }
        }
    };
    if let Some(path) = &args.csv {
        write_matrix_csv(&section.compatibility, input.labels.class_names(), path)?;
    }
    let mut report = ctx.report("estimate", input.summary());
    report.estimate = Some(section);
    emit(&report, args.output.report.as_deref())
}

fn cmd_classify(ctx: &mut Context, args: &ClassifyArgs) -> Result<()> {
    let input = Input::load(ctx, &args.input)?;
    let config = ClassifyConfig {
        mode: args.mode.into(),
        emphasis: !args.walk.no_emphasis,
        normalize_compatibility: !args.raw_compatibility,
        walk: walk_config(&args.walk, ctx.seed),
        ridge: RidgeConfig::default(),
        propagation: PropagationConfig {
            f_safety: args.f_safety,
            l1_threshold: args.l1_threshold,
            max_iter: args.max_iter,
        },
    };
    let out = classify(&input.graph, &input.labels, &input.priors, &config)?;
    if let Some(path) = &args.predictions {
        let mut w = create(path)?;
        write_predictions(&input.labels, &out.predictions, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.dump_emphasis {
        let pm = propagation_matrix(&input.graph, &config.walk, config.emphasis && config.mode != neteffect::Mode::NetEffectA)?;
        let mut w = create(path)?;
        pm.matrix.write_triples(&mut w)?;
        w.flush()?;
    }
    let eval = held_out(&input.labels, &input.priors);
    let mut report = ctx.report("classify", input.summary());
    if !eval.is_empty() {
        report.accuracy = Some(AccuracySection {
            accuracy: accuracy(&out.predictions, &input.labels, &eval)?,
            evaluated: eval.len(),
        });
    }
    let t = out.report.timings;
    report.timings.extend([
        ("emphasis", t.emphasis),
        ("estimate", t.estimate),
        ("propagate", t.propagate),
    ]);
    report.classify = Some(out.report);
    emit(&report, args.output.report.as_deref())
}

fn synth_spec(args: &SynthArgs, seed: u64) -> Result<GeneratorSpec> {
    if let Some(name) = &args.preset {
        return Ok(GeneratorSpec::preset(name, seed)?);
    }
    if let Some(path) = &args.spec {
        let mut spec: GeneratorSpec =
            serde_json::from_reader(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        spec.seed = seed;
        return Ok(spec);
    }
    Ok(GeneratorSpec {
        class_sizes: args.class_sizes.clone().unwrap_or_default(),
        h_mix: args.h_mix.clone().map(|m| m.0).unwrap_or_default(),
        m_target: args.num_edges,
        noise_frac: args.noise,
        seed,
    })
}

fn cmd_synth(ctx: &mut Context, args: &SynthArgs) -> Result<()> {
    let spec = synth_spec(args, ctx.seed)?;
    let (graph, labels) = ctx.timed("generate", || generate(&spec))?;
    let mut w = create(&args.out_edges)?;
    write_edge_list(&graph, &mut w)?;
    w.flush()?;
    let mut w = create(&args.out_labels)?;
    write_labels(&labels, &mut w)?;
    w.flush()?;
    let summary = GraphSummary {
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        classes: labels.num_classes(),
        labeled: labels.num_labeled(),
        priors: None,
    };
    let report = ctx.report("synth", summary);
    emit(&report, args.output.report.as_deref())
}

#[derive(Serialize)]
struct Stats {
    nodes: usize,
    edges: usize,
    classes: usize,
    labeled: usize,
    class_counts: BTreeMap<String, usize>,
    edge_homophily: f64,
    /// Edges with an unlabeled endpoint, left out of `edge_homophily`.
    edges_skipped: usize,
    h_hat: f64,
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let (graph, labels) = load_graph_and_labels(&args.edges, &args.labels)?;
    let eh = edge_homophily(&graph, &labels)?;
    let stats = Stats {
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        classes: labels.num_classes(),
        labeled: labels.num_labeled(),
        class_counts: labels
            .class_names()
            .iter()
            .cloned()
            .zip(labels.class_counts())
            .collect(),
        edge_homophily: eh.ratio,
        edges_skipped: eh.skipped,
        h_hat: class_insensitive_homophily(&graph, &labels)?,
    };
    emit(&stats, None)
}
