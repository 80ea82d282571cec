//! The `idealcount` command line.
//!
//! Exit status is 0 on success, 1 on bad input or usage, and 2 when an
//! internal invariant breaks (cells of the benchmark grid disagreeing).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idealcount_core::bounds::{lower_bound, upper_bound_forest_trials};
use idealcount_core::generate::{fixture, generate_random_dag, FixtureKind};
use idealcount_core::oracle::{brute_force_count, brute_force_count_exhaustive, brute_force_enumerate};
use idealcount_core::{CounterConfig, Dag, Modules, PivotStrategy};
use serde_json::{json, Value};

use crate::analysis::{
    bench_csv, benchmark, count_with_budget, entropy_csv, entropy_ratio_profile, levelwise_profile,
    profile_csv, random_corpus, worker_count, BenchOptions, ProfileOptions,
};
use crate::annotations::{
    default_evidence, parse_gaf, parse_gene_tsv, propagate, restrict_to_root, truncate_to_level,
    used_subontology, AnnotationCorpus, TsvColumns, UsedMode,
};
use crate::edgelist::{parse_edge_list, write_edge_list};
use crate::obo::{parse_obo, OboOptions, Ontology, DEFAULT_RELATIONS};

#[derive(Debug, Parser)]
#[command(
    name = "idealcount",
    version,
    about = "Exact counts of consistent subgraphs of DAGs and ontologies"
)]
struct Cli {
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Edges,
    Obo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnnotationFormat {
    Gaf,
    Tsv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count the consistent subgraphs of a graph or ontology.
    Count(CountArgs),
    /// Brute-force count or enumeration for graphs of at most 25 vertices.
    Oracle(OracleArgs),
    /// Lower and spanning-forest upper bounds.
    Bounds(BoundsArgs),
    /// Write random or fixture graphs as edge lists.
    Gen(GenArgs),
    /// Strategy and module grid over random graphs.
    Bench(BenchArgs),
    /// Count profile over level truncations.
    Levels(LevelsArgs),
    /// Annotation entropy against the maximum at each level.
    Entropy(LevelsArgs),
    /// Term, edge and namespace tallies of an OBO file.
    OboStats(OboStatsArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Edge list or OBO file; `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    /// Overrides detection by file extension.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Keep only terms of this OBO namespace.
    #[arg(long)]
    namespace: Option<String>,
    /// Comma-separated OBO relations that become edges.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RELATIONS.map(String::from))]
    relations: Vec<String>,
    /// Keep only this term and its descendants.
    #[arg(long)]
    root: Option<String>,
}

#[derive(Debug, Args)]
struct AnnotationArgs {
    /// GAF or entity/term TSV file.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Overrides detection by extension (`.gaf` is GAF, anything else TSV).
    #[arg(long, value_enum)]
    annotation_format: Option<AnnotationFormat>,
    /// Comma-separated evidence codes accepted from GAF input.
    #[arg(long, value_delimiter = ',')]
    evidence: Option<Vec<String>>,
    /// 0-based entity column of TSV input.
    #[arg(long, default_value_t = 0)]
    entity_column: usize,
    /// 0-based term column of TSV input.
    #[arg(long, default_value_t = 2)]
    term_column: usize,
    /// TSV input starts with a header line.
    #[arg(long)]
    tsv_header: bool,
    /// Whether implied ancestor terms count as used.
    #[arg(long, default_value_t = UsedMode::Propagated)]
    used_mode: UsedMode,
}

#[derive(Debug, Args)]
struct CounterArgs {
    #[arg(long, default_value_t = PivotStrategy::MaxDegree)]
    pivot: PivotStrategy,
    #[arg(long)]
    no_prune: bool,
    #[arg(long)]
    no_hash: bool,
    #[arg(long)]
    no_reverse: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CounterArgs {
    fn config(&self) -> CounterConfig {
        CounterConfig {
            pivot: self.pivot,
            prune: !self.no_prune,
            hash: !self.no_hash,
            reverse: !self.no_reverse,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct CountArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    counter: CounterArgs,
    #[command(flatten)]
    annotations: AnnotationArgs,
    /// Truncate to vertices of at most this level first.
    #[arg(long)]
    level: Option<usize>,
    /// Count only the part used by the annotations.
    #[arg(long)]
    used: bool,
    /// Give up after this many seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// List every consistent subgraph.
    #[arg(long)]
    enumerate: bool,
    /// Count by testing all `2^n` subsets instead of the pruned walk.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Spanning forests drawn for the upper bound; the smallest is kept.
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed of the first graph; graph `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Named graph instead of random ones (chain, antichain, diamond, star, figure3).
    #[arg(long)]
    fixture: Option<FixtureKind>,
    /// Write one file per graph here instead of to standard output.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    graphs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = PivotStrategy::ALL)]
    strategies: Vec<PivotStrategy>,
    /// Comma-separated module sets: none, prune, prune+hash, prune+hash+reverse.
    #[arg(long, value_delimiter = ',', value_parser = parse_modules, default_values = Modules::ALL.map(Modules::name))]
    configs: Vec<Modules>,
    /// Seconds allowed per graph and cell.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Add a brute-force column.
    #[arg(long)]
    brute_force: bool,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    counter: CounterArgs,
    #[command(flatten)]
    annotations: AnnotationArgs,
    /// Deepest level; defaults to the deepest in the graph.
    #[arg(long)]
    max_level: Option<usize>,
    /// Seconds allowed per exact count.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 8)]
    trials: usize,
    /// Per-level CSV rows for plotting.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Debug, Args)]
struct OboStatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    namespace: Option<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RELATIONS.map(String::from))]
    relations: Vec<String>,
}

fn parse_modules(s: &str) -> Result<Modules, String> {
    Modules::parse(s).ok_or_else(|| {
        format!("unknown module set `{s}` (expected none, prune, prune+hash or prune+hash+reverse)")
    })
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Invariant(String),
}

type Outcome = Result<String, Failure>;

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::Input(format!("invalid duration {s}")))
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn load_ontology(path: &Path, namespace: Option<String>, relations: &[String]) -> Result<Ontology, Failure> {
    let text = read_text(path)?;
    let options = OboOptions {
        relations: relations.iter().cloned().collect(),
        namespace,
    };
    parse_obo(&text, &options).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_graph(args: &InputArgs) -> Result<Dag, Failure> {
    let format = args.format.unwrap_or(if has_extension(&args.input, "obo") {
        InputFormat::Obo
    } else {
        InputFormat::Edges
    });
    let d = match format {
        InputFormat::Obo => load_ontology(&args.input, args.namespace.clone(), &args.relations)?.dag,
        InputFormat::Edges => parse_edge_list(&read_text(&args.input)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", args.input.display())))?,
    };
    match &args.root {
        Some(r) => restrict_to_root(&d, r).map_err(input_err),
        None => Ok(d),
    }
}

fn load_corpus(args: &AnnotationArgs) -> Result<Option<AnnotationCorpus>, Failure> {
    let Some(path) = &args.annotations else {
        return Ok(None);
    };
    let text = read_text(path)?;
    let format = args.annotation_format.unwrap_or(if has_extension(path, "gaf") {
        AnnotationFormat::Gaf
    } else {
        AnnotationFormat::Tsv
    });
    let (corpus, report) = match format {
        AnnotationFormat::Gaf => {
            let evidence: BTreeSet<String> = match &args.evidence {
                Some(codes) => codes.iter().cloned().collect(),
                None => default_evidence(),
            };
            parse_gaf(&text, &evidence)
        }
        AnnotationFormat::Tsv => parse_gene_tsv(
            &text,
            TsvColumns {
                entity: args.entity_column,
                term: args.term_column,
                header: args.tsv_header,
            },
        ),
    };
    if report.malformed > 0 {
        log::warn!("{}: {} malformed rows skipped", path.display(), report.malformed);
    }
    Ok(Some(corpus))
}

/// The corpus whose terms define the used subontology of `d`.
fn used_corpus(corpus: &AnnotationCorpus, d: &Dag, mode: UsedMode) -> AnnotationCorpus {
    match mode {
        UsedMode::Propagated => propagate(corpus, d).0,
        UsedMode::Direct => corpus.clone(),
    }
}

fn stats_json(d: &Dag) -> Value {
    let s = d.stats();
    json!({
        "n": s.n,
        "e": s.e,
        "leaves": s.leaves,
        "roots": s.roots,
        "multi_parent": s.multi_parent,
        "bound": s.bound,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn count(args: CountArgs) -> Outcome {
    let mut d = load_graph(&args.input)?;
    let corpus = load_corpus(&args.annotations)?;
    let used = match (args.used, &corpus) {
        (true, None) => return Err(Failure::Input("--used needs --annotations".into())),
        (true, Some(c)) => Some(used_corpus(c, &d, args.annotations.used_mode)),
        (false, _) => None,
    };
    if let Some(level) = args.level {
        d = truncate_to_level(&d, level);
    }
    if let Some(c) = &used {
        d = used_subontology(&d, c);
    }
    let budget = args.timeout.map(seconds).transpose()?;
    let config = args.counter.config();
    let report = count_with_budget(&d, &config, budget);
    let mut out = json!({
        "input": args.input.input.display().to_string(),
        "graph": stats_json(&d),
        "config": {
            "pivot": config.pivot.name(),
            "prune": config.prune,
            "hash": config.hash,
            "reverse": config.reverse,
            "seed": config.seed,
        },
        "timed_out": report.is_none(),
        "count": report.as_ref().map(|r| r.count.to_string()),
    });
    if let Some(r) = &report {
        out["recursive_calls"] = json!(r.recursive_calls);
        out["memo_hits"] = json!(r.memo_hits);
        out["memo_entries"] = json!(r.memo_entries);
        out["reversals"] = json!(r.reversals);
        out["prunes"] = json!(r.prunes);
        out["timing"] = json!({ "wall_seconds": r.wall_time.as_secs_f64() });
    }
    Ok(pretty(&out))
}

fn oracle(args: OracleArgs) -> Outcome {
    let d = load_graph(&args.input)?;
    let count = if args.exhaustive {
        brute_force_count_exhaustive(&d)
    } else {
        brute_force_count(&d)
    }
    .map_err(input_err)?;
    let mut out = json!({ "graph": stats_json(&d), "count": count.to_string() });
    if args.enumerate {
        let sets: Vec<Vec<&str>> = brute_force_enumerate(&d)
            .map_err(input_err)?
            .iter()
            .map(|s| s.iter().map(|&v| d.name(v)).collect())
            .collect();
        out["sets"] = json!(sets);
    }
    Ok(pretty(&out))
}

fn bounds(args: BoundsArgs) -> Outcome {
    let d = load_graph(&args.input)?;
    Ok(pretty(&json!({
        "graph": stats_json(&d),
        "lower": lower_bound(&d).to_string(),
        "upper": upper_bound_forest_trials(&d, args.seed, args.trials).to_string(),
        "trials": args.trials.max(1),
        "seed": args.seed,
    })))
}

fn gen(args: GenArgs) -> Outcome {
    let graphs: Vec<(String, Dag)> = match args.fixture {
        Some(kind) => vec![(
            format!("{kind}_{}", args.n),
            fixture(kind, args.n).map_err(input_err)?,
        )],
        None => (0..args.count as u64)
            .map(|i| {
                let seed = args.seed.wrapping_add(i);
                generate_random_dag(args.n, seed)
                    .map(|d| (format!("random_n{}_s{seed}", args.n), d))
                    .map_err(input_err)
            })
            .collect::<Result<_, _>>()?,
    };
    let Some(dir) = args.out_dir else {
        let mut out = String::new();
        for (name, d) in &graphs {
            out.push_str(&format!("# {name}\n"));
            out.push_str(&write_edge_list(d));
        }
        return Ok(out);
    };
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for (name, d) in &graphs {
        let path = dir.join(format!("{name}.edges"));
        std::fs::write(&path, write_edge_list(d))
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        files.push(path.display().to_string());
    }
    Ok(pretty(&json!({ "files": files })))
}

fn bench(args: BenchArgs, output: Output) -> Outcome {
    if args.n == 0 || args.graphs == 0 {
        return Err(Failure::Input("--n and --graphs must be positive".into()));
    }
    let graphs = random_corpus(args.n, args.graphs, args.seed);
    let descriptor = format!("random n={} graphs={} seed={}", args.n, args.graphs, args.seed);
    let opts = BenchOptions {
        cells: BenchOptions::grid(&args.strategies, &args.configs, args.brute_force),
        timeout: Some(seconds(args.timeout)?),
        seed: args.seed,
        threads: worker_count(),
    };
    let records = benchmark(&graphs, &descriptor, &opts).map_err(|e| Failure::Invariant(e.to_string()))?;
    Ok(match output {
        Output::Csv => bench_csv(&records),
        Output::Json => pretty(&json!({ "graphs": descriptor, "records": records })),
    })
}

fn profile_options(args: &LevelsArgs) -> Result<ProfileOptions, Failure> {
    Ok(ProfileOptions {
        config: args.counter.config(),
        budget: args.budget.map(seconds).transpose()?,
        bound_trials: args.trials,
        bound_seed: args.counter.seed,
    })
}

fn levels(args: LevelsArgs, output: Output) -> Outcome {
    let d = load_graph(&args.input)?;
    let corpus = load_corpus(&args.annotations)?;
    let used = corpus.map(|c| used_corpus(&c, &d, args.annotations.used_mode));
    let profile = levelwise_profile(&d, used.as_ref(), args.max_level, &profile_options(&args)?);
    Ok(if args.plot_data || output == Output::Csv {
        profile_csv(&profile)
    } else {
        pretty(&json!({ "graph": stats_json(&d), "levels": profile.rows }))
    })
}

fn entropy(args: LevelsArgs, output: Output) -> Outcome {
    let d = load_graph(&args.input)?;
    let Some(corpus) = load_corpus(&args.annotations)? else {
        return Err(Failure::Input("entropy needs --annotations".into()));
    };
    let (corpus, unknown) = propagate(&corpus, &d);
    let rows = entropy_ratio_profile(&corpus, &d, args.max_level, &profile_options(&args)?);
    Ok(if args.plot_data || output == Output::Csv {
        entropy_csv(&rows)
    } else {
        pretty(&json!({
            "graph": stats_json(&d),
            "entities": corpus.len(),
            "unknown_terms": unknown,
            "levels": rows,
        }))
    })
}

fn obo_stats(args: OboStatsArgs) -> Outcome {
    let o = load_ontology(&args.input, args.namespace, &args.relations)?;
    Ok(pretty(&json!({
        "terms": o.dag.len(),
        "edges": o.dag.edge_count(),
        "graph": stats_json(&o.dag),
        "namespaces": o.namespaces(),
        "report": o.report,
    })))
}

/// Runs the command line on `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let output = cli.output;
    let result = match cli.command {
        Command::Count(a) => count(a),
        Command::Oracle(a) => oracle(a),
        Command::Bounds(a) => bounds(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a, output),
        Command::Levels(a) => levels(a, output),
        Command::Entropy(a) => entropy(a, output),
        Command::OboStats(a) => obo_stats(a),
    };
    match result {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Invariant(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
    }
}
