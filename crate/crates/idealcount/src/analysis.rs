//! Level-wise count profiles, annotation entropy and the benchmark grid.
//!
//! Machine-readable records keep wall-clock measurements in a nested
//! `timing` object so that everything else can be compared byte for byte.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use idealcount_core::bounds::{lower_bound, upper_bound_forest_trials};
use idealcount_core::entropy::{entropy_bits, entropy_ratio, estimated_ratio, log2_count};
use idealcount_core::generate::generate_random_dag;
use idealcount_core::oracle::{brute_force_count, ORACLE_LIMIT};
use idealcount_core::{
    cdag, cdag_interruptible, Count, CountReport, CounterConfig, Dag, Modules, PhiMap, PivotStrategy,
};
use serde::{Serialize, Serializer};

use crate::annotations::{truncate_to_level, used_subontology, AnnotationCorpus};
use crate::edgelist::write_edge_list;

pub(crate) fn count_str<S: Serializer>(c: &Count, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(c)
}

fn opt_count_str<S: Serializer>(c: &Option<Count>, s: S) -> Result<S::Ok, S::Error> {
    match c {
        Some(c) => s.collect_str(c),
        None => s.serialize_none(),
    }
}

/// Counts `d`, giving up once `budget` has elapsed.
pub fn count_with_budget(d: &Dag, config: &CounterConfig, budget: Option<Duration>) -> Option<CountReport> {
    let Some(budget) = budget else {
        return Some(cdag(d, config));
    };
    let started = Instant::now();
    let mut stop = |calls: u64| calls.is_multiple_of(64) && started.elapsed() > budget;
    cdag_interruptible(d, &PhiMap::new(), config, &mut stop)
        .expect("empty subtotals are valid")
        .ok()
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgraphRow {
    pub n: usize,
    pub e: usize,
    pub leaves: usize,
    pub roots: usize,
    pub multi_parent: usize,
    pub bound: usize,
    #[serde(serialize_with = "opt_count_str")]
    pub count: Option<Count>,
    #[serde(serialize_with = "count_str")]
    pub lower: Count,
    #[serde(serialize_with = "count_str")]
    pub upper: Count,
    pub timed_out: bool,
    pub recursive_calls: Option<u64>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub config: CounterConfig,
    /// Time allowed for each exact count; `None` waits indefinitely.
    pub budget: Option<Duration>,
    pub bound_trials: usize,
    pub bound_seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            config: CounterConfig::default(),
            budget: None,
            bound_trials: 8,
            bound_seed: 0,
        }
    }
}

pub fn measure(d: &Dag, opts: &ProfileOptions) -> SubgraphRow {
    let s = d.stats();
    let report = count_with_budget(d, &opts.config, opts.budget);
    SubgraphRow {
        n: s.n,
        e: s.e,
        leaves: s.leaves,
        roots: s.roots,
        multi_parent: s.multi_parent,
        bound: s.bound,
        timed_out: report.is_none(),
        recursive_calls: report.as_ref().map(|r| r.recursive_calls),
        timing: Timing {
            seconds: report.as_ref().map_or(0.0, |r| r.wall_time.as_secs_f64()),
        },
        count: report.map(|r| r.count),
        lower: lower_bound(d),
        upper: upper_bound_forest_trials(d, opts.bound_seed, opts.bound_trials),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub full: SubgraphRow,
    pub used: Option<SubgraphRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelProfile {
    pub rows: Vec<LevelRecord>,
}

pub fn max_level(d: &Dag) -> usize {
    d.levels().into_iter().max().unwrap_or(0)
}

/// Truncates `d` at every level up to `max_level` (default: the deepest) and
/// measures each truncation. With `used`, also measures the part of each
/// truncation used by the corpus.
pub fn levelwise_profile(
    d: &Dag,
    used: Option<&AnnotationCorpus>,
    max: Option<usize>,
    opts: &ProfileOptions,
) -> LevelProfile {
    let top = max.unwrap_or_else(|| max_level(d));
    let rows = (0..=top)
        .map(|level| {
            let t = truncate_to_level(d, level);
            LevelRecord {
                level,
                used: used.map(|c| measure(&used_subontology(&t, c), opts)),
                full: measure(&t, opts),
            }
        })
        .collect();
    LevelProfile { rows }
}

/// Entropy in bits of the distinct annotations seen at `level`: each entity
/// contributes its terms of level at most `level`, possibly none.
pub fn observed_entropy(corpus: &AnnotationCorpus, d: &Dag, level: usize) -> f64 {
    entropy_bits(
        annotation_frequencies(corpus, d, &d.levels(), level)
            .values()
            .copied(),
    )
}

fn annotation_frequencies(
    corpus: &AnnotationCorpus,
    d: &Dag,
    levels: &[usize],
    level: usize,
) -> BTreeMap<Vec<usize>, u64> {
    let mut freq: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for set in corpus.vertex_sets(d) {
        let key: Vec<usize> = set.into_iter().filter(|&v| levels[v] <= level).collect();
        *freq.entry(key).or_insert(0) += 1;
    }
    freq
}

/// `log2` of the number of consistent subgraphs.
pub fn max_entropy(d: &Dag, config: &CounterConfig) -> f64 {
    log2_count(&cdag(d, config).count)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRow {
    pub level: usize,
    pub entities: usize,
    pub distinct: usize,
    pub observed_bits: f64,
    /// `log2` of the exact count, when it finished in time.
    pub max_bits: Option<f64>,
    pub ratio: Option<f64>,
    pub lower_bits: f64,
    pub upper_bits: f64,
    /// Mean of the ratios against both bounds.
    pub estimated_ratio: f64,
    pub estimated_low: f64,
    pub estimated_high: f64,
    pub timed_out: bool,
    pub timing: Timing,
}

pub fn entropy_ratio_profile(
    corpus: &AnnotationCorpus,
    d: &Dag,
    max: Option<usize>,
    opts: &ProfileOptions,
) -> Vec<EntropyRow> {
    let levels = d.levels();
    let top = max.unwrap_or_else(|| max_level(d));
    (0..=top)
        .map(|level| {
            let freq = annotation_frequencies(corpus, d, &levels, level);
            let h = entropy_bits(freq.values().copied());
            let t = truncate_to_level(d, level);
            let row = measure(&t, opts);
            let est = estimated_ratio(h, &row.lower, &row.upper);
            EntropyRow {
                level,
                entities: corpus.len(),
                distinct: freq.len(),
                observed_bits: h,
                max_bits: row.count.as_ref().map(log2_count),
                ratio: row.count.as_ref().map(|c| entropy_ratio(h, c)),
                lower_bits: log2_count(&row.lower),
                upper_bits: log2_count(&row.upper),
                estimated_ratio: est.estimate,
                estimated_low: est.low,
                estimated_high: est.high,
                timed_out: row.timed_out,
                timing: row.timing,
            }
        })
        .collect()
}

/// `graphs` random DAGs with `n` vertices; graph `i` uses seed `seed + i`.
pub fn random_corpus(n: usize, graphs: usize, seed: u64) -> Vec<Dag> {
    (0..graphs as u64)
        .map(|i| generate_random_dag(n, seed.wrapping_add(i)).expect("n >= 1"))
        .collect()
}

/// One column of the benchmark grid. `pivot == None` is brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub pivot: Option<PivotStrategy>,
    pub modules: Modules,
}

impl Cell {
    fn labels(&self) -> (String, String) {
        match self.pivot {
            Some(p) => (p.name().to_string(), self.modules.name().to_string()),
            None => ("brute-force".to_string(), "-".to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub cells: Vec<Cell>,
    pub timeout: Option<Duration>,
    pub seed: u64,
    pub threads: usize,
}

impl BenchOptions {
    pub fn grid(strategies: &[PivotStrategy], modules: &[Modules], oracle: bool) -> Vec<Cell> {
        let mut cells: Vec<Cell> = modules
            .iter()
            .flat_map(|&m| {
                strategies.iter().map(move |&p| Cell {
                    pivot: Some(p),
                    modules: m,
                })
            })
            .collect();
        if oracle {
            cells.push(Cell {
                pivot: None,
                modules: Modules::None,
            });
        }
        cells
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchTiming {
    pub mean_seconds: Option<f64>,
    pub max_seconds: Option<f64>,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub strategy: String,
    pub modules: String,
    pub graphs: String,
    pub completed: usize,
    pub timeouts: usize,
    /// Graphs beyond the brute-force size limit.
    pub skipped: usize,
    pub mean_calls: Option<f64>,
    pub timing: BenchTiming,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("cells disagree on graph {graph}: {}\n{edges}", fmt_cells(.cells))]
    CountMismatch {
        graph: usize,
        /// Offending graph as an edge list.
        edges: String,
        cells: Vec<(String, String, String)>,
    },
}

fn fmt_cells(cells: &[(String, String, String)]) -> String {
    cells
        .iter()
        .map(|(p, m, c)| format!("{p}/{m}={c}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone)]
enum Outcome {
    Done {
        count: Count,
        calls: Option<u64>,
        time: Duration,
    },
    TimedOut,
    Skipped,
}

fn run_cell(d: &Dag, cell: Cell, seed: u64, timeout: Option<Duration>) -> Outcome {
    match cell.pivot {
        None => {
            if d.len() > ORACLE_LIMIT {
                return Outcome::Skipped;
            }
            let started = Instant::now();
            let count = brute_force_count(d).expect("size checked");
            let time = started.elapsed();
            if timeout.is_some_and(|t| time > t) {
                Outcome::TimedOut
            } else {
                Outcome::Done {
                    count,
                    calls: None,
                    time,
                }
            }
        }
        Some(pivot) => match count_with_budget(d, &cell.modules.config(pivot, seed), timeout) {
            Some(r) => Outcome::Done {
                count: r.count,
                calls: Some(r.recursive_calls),
                time: r.wall_time,
            },
            None => Outcome::TimedOut,
        },
    }
}

/// Number of workers: `IDEALCOUNT_THREADS` when set, else the available
/// parallelism.
pub fn worker_count() -> usize {
    std::env::var("IDEALCOUNT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell on every graph and checks that all completed cells agree
/// on each graph's count. Records come out in cell order.
pub fn benchmark(
    graphs: &[Dag],
    descriptor: &str,
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>, BenchError> {
    let threads = opts.threads.clamp(1, graphs.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Vec<Outcome>>>> = Mutex::new(vec![None; graphs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= graphs.len() {
                    break;
                }
                let seed = opts.seed.wrapping_add(i as u64);
                let row: Vec<Outcome> = opts
                    .cells
                    .iter()
                    .map(|&c| run_cell(&graphs[i], c, seed, opts.timeout))
                    .collect();
                results.lock().expect("no worker panicked")[i] = Some(row);
            });
        }
    });
    let results: Vec<Vec<Outcome>> = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every graph ran"))
        .collect();

    for (i, row) in results.iter().enumerate() {
        let done: Vec<(Cell, &Count)> = opts
            .cells
            .iter()
            .zip(row)
            .filter_map(|(&c, o)| match o {
                Outcome::Done { count, .. } => Some((c, count)),
                _ => None,
            })
            .collect();
        if done.windows(2).any(|w| w[0].1 != w[1].1) {
            return Err(BenchError::CountMismatch {
                graph: i,
                edges: write_edge_list(&graphs[i]),
                cells: done
                    .iter()
                    .map(|(c, n)| {
                        let (p, m) = c.labels();
                        (p, m, n.to_string())
                    })
                    .collect(),
            });
        }
    }

    Ok(opts
        .cells
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            let (strategy, modules) = cell.labels();
            let (mut completed, mut timeouts, mut skipped) = (0, 0, 0);
            let (mut calls, mut secs, mut worst) = (0u128, 0f64, 0f64);
            let mut has_calls = false;
            for row in &results {
                match &row[j] {
                    Outcome::Done { calls: c, time, .. } => {
                        completed += 1;
                        if let Some(c) = c {
                            calls += *c as u128;
                            has_calls = true;
                        }
                        secs += time.as_secs_f64();
                        worst = worst.max(time.as_secs_f64());
                    }
                    Outcome::TimedOut => timeouts += 1,
                    Outcome::Skipped => skipped += 1,
                }
            }
            let mean = |total: f64| (completed > 0).then(|| total / completed as f64);
            BenchRecord {
                strategy,
                modules,
                graphs: descriptor.to_string(),
                completed,
                timeouts,
                skipped,
                mean_calls: if has_calls { mean(calls as f64) } else { None },
                timing: BenchTiming {
                    mean_seconds: mean(secs),
                    max_seconds: (completed > 0).then_some(worst),
                    threads,
                },
            }
        })
        .collect())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

const ROW_FIELDS: [&str; 11] = [
    "n",
    "e",
    "leaves",
    "roots",
    "multi_parent",
    "bound",
    "count",
    "lower",
    "upper",
    "timed_out",
    "calls",
];

fn row_fields(r: &SubgraphRow) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.e.to_string(),
        r.leaves.to_string(),
        r.roots.to_string(),
        r.multi_parent.to_string(),
        r.bound.to_string(),
        opt(&r.count),
        r.lower.to_string(),
        r.upper.to_string(),
        r.timed_out.to_string(),
        opt(&r.recursive_calls),
    ]
}

/// One line per level; timing columns last.
pub fn profile_csv(p: &LevelProfile) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["level".to_string()];
    header.extend(ROW_FIELDS.iter().map(|f| f.to_string()));
    header.extend(ROW_FIELDS.iter().map(|f| format!("used_{f}")));
    header.extend(["seconds".to_string(), "used_seconds".to_string()]);
    w.write_record(&header).expect("in-memory writer");
    for rec in &p.rows {
        let mut fields = vec![rec.level.to_string()];
        fields.extend(row_fields(&rec.full));
        match &rec.used {
            Some(u) => fields.extend(row_fields(u)),
            None => fields.extend(ROW_FIELDS.iter().map(|_| String::new())),
        }
        fields.push(rec.full.timing.seconds.to_string());
        fields.push(
            rec.used
                .as_ref()
                .map(|u| u.timing.seconds.to_string())
                .unwrap_or_default(),
        );
        w.write_record(&fields).expect("in-memory writer");
    }
    finish_csv(w)
}

pub fn entropy_csv(rows: &[EntropyRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "level",
        "entities",
        "distinct",
        "observed_bits",
        "max_bits",
        "ratio",
        "lower_bits",
        "upper_bits",
        "estimated_ratio",
        "estimated_low",
        "estimated_high",
        "timed_out",
        "seconds",
    ])
    .expect("in-memory writer");
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.entities.to_string(),
            r.distinct.to_string(),
            r.observed_bits.to_string(),
            opt(&r.max_bits),
            opt(&r.ratio),
            r.lower_bits.to_string(),
            r.upper_bits.to_string(),
            r.estimated_ratio.to_string(),
            r.estimated_low.to_string(),
            r.estimated_high.to_string(),
            r.timed_out.to_string(),
            r.timing.seconds.to_string(),
        ])
        .expect("in-memory writer");
    }
    finish_csv(w)
}

pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "strategy",
        "modules",
        "graphs",
        "completed",
        "timeouts",
        "skipped",
        "mean_calls",
        "mean_seconds",
        "max_seconds",
        "threads",
    ])
    .expect("in-memory writer");
    for r in records {
        w.write_record([
            r.strategy.clone(),
            r.modules.clone(),
            r.graphs.clone(),
            r.completed.to_string(),
            r.timeouts.to_string(),
            r.skipped.to_string(),
            opt(&r.mean_calls),
            opt(&r.timing.mean_seconds),
            opt(&r.timing.max_seconds),
            r.timing.threads.to_string(),
        ])
        .expect("in-memory writer");
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use idealcount_core::generate::{fixture, FixtureKind};

    fn counts(p: &LevelProfile) -> Vec<Count> {
        p.rows.iter().map(|r| r.full.count.clone().unwrap()).collect()
    }

    #[test]
    fn level_profiles() {
        let d = fixture(FixtureKind::Diamond, 0).unwrap();
        let p = levelwise_profile(&d, None, None, &ProfileOptions::default());
        assert_eq!(counts(&p), [2u32, 5, 6].map(Count::from));
        let c = fixture(FixtureKind::Chain, 4).unwrap();
        let p = levelwise_profile(&c, None, None, &ProfileOptions::default());
        assert_eq!(counts(&p), [2u32, 3, 4, 5].map(Count::from));
    }

    #[test]
    fn entropies() {
        let d = fixture(FixtureKind::Diamond, 0).unwrap();
        let mut corpus = AnnotationCorpus::new("test");
        for (e, terms) in [
            ("p", &["a"][..]),
            ("q", &["a"]),
            ("r", &["a", "b"]),
            ("s", &["a", "b", "c", "d"]),
        ] {
            for t in terms {
                corpus.insert(e, t);
            }
        }
        assert!((observed_entropy(&corpus, &d, 2) - 1.5).abs() < 1e-12);
        assert_eq!(observed_entropy(&corpus, &d, 0), 0.0);
        let rows = entropy_ratio_profile(&corpus, &d, None, &ProfileOptions::default());
        let last = rows.last().unwrap();
        assert!((last.ratio.unwrap() - 1.5 / 6f64.log2()).abs() < 1e-12);
        assert!(last.estimated_low <= last.ratio.unwrap() && last.ratio.unwrap() <= last.estimated_high);
        assert!((max_entropy(&d, &CounterConfig::default()) - 6f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn budget_marks_timeouts() {
        let d = generate_random_dag(400, 3).unwrap();
        let cfg = Modules::None.config(PivotStrategy::Random, 0);
        assert!(count_with_budget(&d, &cfg, Some(Duration::ZERO)).is_none());
    }

    #[test]
    fn grid_agrees() {
        let graphs = random_corpus(12, 10, 5);
        let opts = BenchOptions {
            cells: BenchOptions::grid(&PivotStrategy::ALL, &Modules::ALL, true),
            timeout: None,
            seed: 5,
            threads: 2,
        };
        let records = benchmark(&graphs, "test", &opts).unwrap();
        assert_eq!(records.len(), 21);
        assert!(records.iter().all(|r| r.completed == 10));
        assert!(bench_csv(&records).lines().count() == 22);
    }
}
