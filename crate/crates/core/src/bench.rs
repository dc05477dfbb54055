//! Benchmark harness: run the solver over a parameter grid of generated
//! instances and emit per-instance rows plus per-configuration summaries
//! as CSV.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use crate::generator;
use crate::instance::GeneratorParams;
use crate::solver::{solve, SolveConfig, Termination};

/// One solved instance.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub k: u32,
    pub d: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Proven satisfiable: solved to optimality with weight zero. `None`
    /// while the instance is unsolved (time limit).
    pub satisfiable: Option<bool>,
    pub weight: i64,
    pub constraint_weight: i64,
    pub authorisation_weight: i64,
    pub seconds: f64,
    pub nodes: u64,
    pub termination: Termination,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.termination != Termination::TimeLimit
    }
}

/// Aggregates of one (k, d, alpha) grid cell, in the style of the usual
/// results tables: percent solved, percent satisfiable and mean weights
/// over the solved instances.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub k: u32,
    pub d: f64,
    pub alpha: f64,
    pub instances: u64,
    pub solved_pct: f64,
    pub satisfiable_pct: f64,
    pub mean_weight: f64,
    pub mean_constraint_weight: f64,
    pub mean_authorisation_weight: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub ks: Vec<u32>,
    pub ds: Vec<f64>,
    pub alphas: Vec<f64>,
    pub seed_start: u64,
    pub seed_count: u64,
    pub time_limit: Option<Duration>,
    pub workers: usize,
}

/// Run the whole grid. Rows come back in grid order (k, then d, then
/// alpha, then seed) regardless of which worker finished first.
pub fn run_grid(config: &BenchConfig) -> Vec<BenchRow> {
    let mut cells = Vec::new();
    for &k in &config.ks {
        for &d in &config.ds {
            for &alpha in &config.alphas {
                for seed in config.seed_start..config.seed_start + config.seed_count {
                    cells.push(GeneratorParams { k, d, alpha, seed });
                }
            }
        }
    }
    let results: Vec<Mutex<Option<BenchRow>>> =
        (0..cells.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = config.workers.max(1).min(cells.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= cells.len() {
                    break;
                }
                let row = run_one(cells[index], config.time_limit);
                *results[index].lock().unwrap() = Some(row);
            });
        }
    });

    results
        .into_iter()
        .map(|cell| cell.into_inner().unwrap().expect("worker filled every cell"))
        .collect()
}

pub fn run_one(params: GeneratorParams, time_limit: Option<Duration>) -> BenchRow {
    let instance = generator::generate(params).expect("grid parameters were validated");
    let config = SolveConfig {
        time_limit,
        ..Default::default()
    };
    let report = solve(&instance, &config).expect("generated instances are valid");
    BenchRow {
        k: params.k,
        d: params.d,
        alpha: params.alpha,
        seed: params.seed,
        satisfiable: if report.termination == Termination::TimeLimit {
            None
        } else {
            Some(report.weight.is_zero())
        },
        weight: report.weight.0,
        constraint_weight: report.constraint_weight.0,
        authorisation_weight: report.authorisation_weight.0,
        seconds: report.wall_time.as_secs_f64(),
        nodes: report.nodes_expanded,
        termination: report.termination,
    }
}

/// Summaries per grid cell, in row order of first appearance.
pub fn summarise(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut order: Vec<(u32, f64, f64)> = Vec::new();
    for row in rows {
        let key = (row.k, row.d, row.alpha);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(k, d, alpha)| {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.k == k && r.d == d && r.alpha == alpha)
                .collect();
            let solved: Vec<&&BenchRow> = cell.iter().filter(|r| r.solved()).collect();
            let pct = |count: usize, total: usize| {
                if total == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / total as f64
                }
            };
            let mean = |extract: &dyn Fn(&BenchRow) -> f64| {
                if solved.is_empty() {
                    f64::NAN
                } else {
                    solved.iter().map(|r| extract(r)).sum::<f64>() / solved.len() as f64
                }
            };
            BenchSummary {
                k,
                d,
                alpha,
                instances: cell.len() as u64,
                solved_pct: pct(solved.len(), cell.len()),
                satisfiable_pct: pct(
                    solved.iter().filter(|r| r.satisfiable == Some(true)).count(),
                    solved.len(),
                ),
                mean_weight: mean(&|r| r.weight as f64),
                mean_constraint_weight: mean(&|r| r.constraint_weight as f64),
                mean_authorisation_weight: mean(&|r| r.authorisation_weight as f64),
                mean_seconds: mean(&|r| r.seconds),
            }
        })
        .collect()
}

pub const CSV_HEADER: &str = "record,k,d,alpha,seed,satisfiable,weight,w_c,w_a,time_s,nodes,\
                              termination,instances,solved_pct,satisfiable_pct,mean_weight,\
                              mean_w_c,mean_w_a,mean_time_s";

fn float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{}", x)
    }
}

/// Render rows and their summaries as CSV. The `record` column separates
/// instance rows from summary rows; unused columns stay empty.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let satisfiable = match r.satisfiable {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        out.push_str(&format!(
            "instance,{},{},{},{},{},{},{},{},{},{},{},,,,,,,\n",
            r.k,
            r.d,
            r.alpha,
            r.seed,
            satisfiable,
            r.weight,
            r.constraint_weight,
            r.authorisation_weight,
            float(r.seconds),
            r.nodes,
            r.termination.name(),
        ));
    }
    for s in summarise(rows) {
        out.push_str(&format!(
            "summary,{},{},{},,,,,,,,,{},{},{},{},{},{},{}\n",
            s.k,
            s.d,
            s.alpha,
            s.instances,
            float(s.solved_pct),
            float(s.satisfiable_pct),
            float(s.mean_weight),
            float(s.mean_constraint_weight),
            float(s.mean_authorisation_weight),
            float(s.mean_seconds),
        ));
    }
    out
}
