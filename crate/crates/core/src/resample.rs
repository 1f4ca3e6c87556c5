//! k-fold cross-validation and the learner × task benchmark grid.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::{Array2, Axis};

use crate::data::Task;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, Measure, PredictionSet, UndefinedPolicy};
use crate::parallel::map_indexed;
use crate::rng::{derive_seed, permutation};
use crate::transform::{ChainOrder, MultilabelLearner};

/// Assignment of `n` instances to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    /// Every fold in `0..k` must be non-empty.
    pub fn new(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        let n = fold_of.len();
        let mut sizes = vec![0usize; k];
        for &f in &fold_of {
            if f >= k {
                return Err(Error::InvalidArgument(format!(
                    "fold index {f} out of range for {k} folds"
                )));
            }
            sizes[f] += 1;
        }
        if k < 2 || sizes.contains(&0) {
            return Err(Error::InvalidFolds { folds: k, n });
        }
        Ok(Self { fold_of, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.fold_of
    }

    /// Held-out rows of fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == f).collect()
    }

    /// Training rows of fold `f` (the complement), ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle, then contiguous chunks; the first `n % k` folds get one extra row.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { folds: k, n });
    }
    let order = permutation(n, seed);
    let mut fold_of = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &i in &order[start..start + size] {
            fold_of[i] = f;
        }
        start += size;
    }
    FoldAssignment::new(fold_of, k)
}

/// Cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleDesc {
    /// Number of folds.
    pub iters: usize,
    pub seed: u64,
    /// Stratified splitting is not supported; `true` is rejected.
    pub stratify: bool,
    /// Threads for independent folds and grid cells.
    pub workers: usize,
    pub policy: UndefinedPolicy,
}

impl ResampleDesc {
    pub fn cv(iters: usize, seed: u64) -> Self {
        Self {
            iters,
            seed,
            stratify: false,
            workers: 1,
            policy: UndefinedPolicy::Strict,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_policy(mut self, policy: UndefinedPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.stratify {
            return Err(Error::InvalidArgument(
                "stratified cross-validation is not supported".into(),
            ));
        }
        if self.iters < 2 || self.iters > n {
            return Err(Error::InvalidFolds { folds: self.iters, n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainOrderPolicy {
    /// Use the learner's configured order (identity when unset).
    #[default]
    Identity,
    /// Draw a fresh seeded order for every fold.
    RandomPerIteration,
}

impl FromStr for ChainOrderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" | "fixed" => Ok(Self::Identity),
            "random" | "random_per_iteration" | "random-per-iteration" => Ok(Self::RandomPerIteration),
            other => Err(Error::InvalidArgument(format!("unknown chain order policy `{other}`"))),
        }
    }
}

const CHAIN_STREAM: u64 = 0x100;
const INNER_STREAM: u64 = 0x200;

/// Outcome of one cross-validation run.
#[derive(Debug, Clone)]
pub struct ResampleResult {
    pub learner: String,
    pub task_id: String,
    pub measures: Vec<Measure>,
    /// `per_fold[f][j]` is measure `j` on fold `f`; `None` when undefined.
    pub per_fold: Vec<Vec<Option<f64>>>,
    pub aggregate_mean: Vec<Option<f64>>,
    /// Sample standard deviation over folds (n − 1 denominator).
    pub aggregate_sd: Vec<Option<f64>>,
    /// Held-out predictions of all rows, in task row order.
    pub pooled: PredictionSet,
    /// Chain order per fold, for CC and NST.
    pub chain_orders: Vec<Option<ChainOrder>>,
    pub folds: FoldAssignment,
    pub wall_time: Duration,
}

fn mean_sd(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let Some(v) = values.iter().copied().collect::<Option<Vec<f64>>>() else {
        return (None, None);
    };
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let sd = (v.len() > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt());
    (Some(mean), sd)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ResampleResult {
    pub fn mean(&self, measure: Measure) -> Option<f64> {
        let j = self.measures.iter().position(|&m| m == measure)?;
        self.aggregate_mean[j]
    }

    /// Long-format CSV `task,learner,measure,statistic,value` at full precision.
    pub fn machine_csv(&self) -> String {
        let mut out = String::from("task,learner,measure,statistic,value\n");
        self.append_machine_rows(&mut out);
        out
    }

    fn append_machine_rows(&self, out: &mut String) {
        for (j, m) in self.measures.iter().enumerate() {
            for (f, row) in self.per_fold.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{m},fold{},{}",
                    csv_field(&self.task_id),
                    csv_field(&self.learner),
                    f + 1,
                    fmt_value(row[j])
                );
            }
            let _ = writeln!(
                out,
                "{},{},{m},mean,{}",
                csv_field(&self.task_id),
                csv_field(&self.learner),
                fmt_value(self.aggregate_mean[j])
            );
            let _ = writeln!(
                out,
                "{},{},{m},sd,{}",
                csv_field(&self.task_id),
                csv_field(&self.learner),
                fmt_value(self.aggregate_sd[j])
            );
        }
    }

    /// Human-readable per-fold table with mean and sd rows, 4 decimals.
    pub fn summary_text(&self) -> String {
        let mut header = vec!["fold".to_string()];
        header.extend(self.measures.iter().map(|m| m.name().to_string()));
        let mut rows = vec![header];
        let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
        for (f, vals) in self.per_fold.iter().enumerate() {
            let mut row = vec![(f + 1).to_string()];
            row.extend(vals.iter().map(|&v| cell(v)));
            rows.push(row);
        }
        let mut mean = vec!["mean".to_string()];
        mean.extend(self.aggregate_mean.iter().map(|&v| cell(v)));
        let mut sd = vec!["sd".to_string()];
        sd.extend(self.aggregate_sd.iter().map(|&v| cell(v)));
        rows.push(mean);
        rows.push(sd);
        align(&rows)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Cross-validates `learner` on `task`. Fold `f` trains on the complement of
/// fold `f` and predicts its rows; every measure is scored per fold.
pub fn resample(
    learner: &MultilabelLearner,
    task: &Task,
    rdesc: &ResampleDesc,
    measures: &[Measure],
    chain_policy: ChainOrderPolicy,
) -> Result<ResampleResult> {
    let started = Instant::now();
    let data = task.dataset();
    let (n, m) = (data.n_instances(), data.n_labels());
    rdesc.validate(n)?;
    if measures.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    let folds = kfold_split(n, rdesc.iters, rdesc.seed)?;
    let inner_workers = if rdesc.workers > 1 { 1 } else { learner.workers };

    let outcomes = map_indexed(rdesc.workers, folds.k(), |f| {
        let mut fold_learner = learner
            .clone()
            .with_seed(derive_seed(learner.seed ^ rdesc.seed, INNER_STREAM + f as u64))
            .with_workers(inner_workers);
        if learner.method.uses_chain() && chain_policy == ChainOrderPolicy::RandomPerIteration {
            fold_learner =
                fold_learner.with_chain_order(ChainOrder::random(m, derive_seed(rdesc.seed, CHAIN_STREAM + f as u64)));
        }
        let train = task.with_dataset(data.select_rows(&folds.train_indices(f))?);
        let test_rows = folds.test_indices(f);
        let test = data.select_rows(&test_rows)?;
        let model = fold_learner.fit(&train)?;
        let pred = model.predict_dataset(&test)?;
        let values = evaluate_all(&pred, measures, rdesc.policy)?;
        Ok((test_rows, pred, values, model.chain_order().cloned()))
    })?;

    let mut probs = Array2::<f64>::zeros((n, m));
    let mut per_fold = Vec::with_capacity(folds.k());
    let mut chain_orders = Vec::with_capacity(folds.k());
    for (rows, pred, values, order) in outcomes {
        for (r, &i) in rows.iter().enumerate() {
            probs.row_mut(i).assign(&pred.probs().index_axis(Axis(0), r));
        }
        per_fold.push(values.iter().map(|v| v.value).collect::<Vec<_>>());
        chain_orders.push(order);
    }
    let (aggregate_mean, aggregate_sd) = (0..measures.len())
        .map(|j| mean_sd(&per_fold.iter().map(|row: &Vec<Option<f64>>| row[j]).collect::<Vec<_>>()))
        .unzip();
    let pooled = PredictionSet::from_probs(
        probs,
        learner.threshold,
        data.label_names().to_vec(),
        Some(data.labels().to_owned()),
    )?;

    Ok(ResampleResult {
        learner: learner.name(),
        task_id: task.id().to_string(),
        measures: measures.to_vec(),
        per_fold,
        aggregate_mean,
        aggregate_sd,
        pooled,
        chain_orders,
        folds,
        wall_time: started.elapsed(),
    })
}

/// Results of a full learner × task grid; `cells[t][l]` is task `t`, learner `l`.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub learners: Vec<String>,
    pub tasks: Vec<String>,
    pub measures: Vec<Measure>,
    pub cells: Vec<Vec<std::result::Result<ResampleResult, String>>>,
}

/// A task that could not be loaded still gets a row of failed cells.
#[derive(Debug, Clone)]
pub enum BenchmarkTask {
    Loaded(Task),
    Failed { id: String, error: String },
}

impl BenchmarkTask {
    pub fn id(&self) -> &str {
        match self {
            BenchmarkTask::Loaded(t) => t.id(),
            BenchmarkTask::Failed { id, .. } => id,
        }
    }
}

impl From<Task> for BenchmarkTask {
    fn from(t: Task) -> Self {
        BenchmarkTask::Loaded(t)
    }
}

fn unique_names(grid: &[MultilabelLearner]) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(grid.len());
    for l in grid {
        let base = l.name();
        let mut name = base.clone();
        let mut copy = 2;
        while names.contains(&name) {
            name = format!("{base}#{copy}");
            copy += 1;
        }
        names.push(name);
    }
    names
}

/// Runs every learner on every task. A failing cell stores its error message
/// and the rest of the grid still runs.
pub fn benchmark(
    grid: &[MultilabelLearner],
    tasks: &[BenchmarkTask],
    rdesc: &ResampleDesc,
    measures: &[Measure],
    chain_policy: ChainOrderPolicy,
) -> Result<BenchmarkResult> {
    if grid.is_empty() || tasks.is_empty() {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one learner and one task".into(),
        ));
    }
    if measures.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    let learners = unique_names(grid);
    let cell_desc = ResampleDesc { workers: 1, ..*rdesc };
    let n_cells = tasks.len() * grid.len();
    let flat = map_indexed(rdesc.workers, n_cells, |c| {
        let (t, l) = (c / grid.len(), c % grid.len());
        let outcome = match &tasks[t] {
            BenchmarkTask::Failed { error, .. } => Err(error.clone()),
            BenchmarkTask::Loaded(task) => resample(
                &grid[l].clone().with_workers(1),
                task,
                &cell_desc,
                measures,
                chain_policy,
            )
            .map(|mut r| {
                r.learner = learners[l].clone();
                r
            })
            .map_err(|e| {
                log::warn!("{} on {}: {e}", learners[l], task.id());
                e.to_string()
            }),
        };
        Ok(outcome)
    })?;
    let mut cells = Vec::with_capacity(tasks.len());
    let mut it = flat.into_iter();
    for _ in tasks {
        cells.push(it.by_ref().take(grid.len()).collect());
    }
    Ok(BenchmarkResult {
        learners,
        tasks: tasks.iter().map(|t| t.id().to_string()).collect(),
        measures: measures.to_vec(),
        cells,
    })
}

impl BenchmarkResult {
    pub fn value(&self, task: usize, learner: usize, measure: Measure) -> Option<f64> {
        self.cells[task][learner].as_ref().ok()?.mean(measure)
    }

    pub fn n_failed(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_err()).count()
    }

    /// Per task row, marks the cells with the best mean (lowest loss or
    /// highest score). Ties are all marked.
    pub fn best_flags(&self, measure: Measure) -> Vec<Vec<bool>> {
        (0..self.tasks.len())
            .map(|t| {
                let vals: Vec<Option<f64>> = (0..self.learners.len()).map(|l| self.value(t, l, measure)).collect();
                let best = vals
                    .iter()
                    .flatten()
                    .copied()
                    .reduce(|a, b| if measure.is_loss() { a.min(b) } else { a.max(b) });
                vals.iter().map(|v| v.is_some() && *v == best).collect()
            })
            .collect()
    }

    fn table_rows(&self, measure: Measure) -> Vec<Vec<String>> {
        let flags = self.best_flags(measure);
        let mut header = vec!["dataset".to_string()];
        header.extend(self.learners.iter().cloned());
        let mut rows = vec![header];
        for (t, id) in self.tasks.iter().enumerate() {
            let mut row = vec![id.clone()];
            for (cell, &best) in self.cells[t].iter().zip(&flags[t]) {
                row.push(match cell {
                    Err(_) => "ERROR".to_string(),
                    Ok(r) => match r.mean(measure) {
                        None => "NA".to_string(),
                        Some(v) if best => format!("{v:.4}*"),
                        Some(v) => format!("{v:.4}"),
                    },
                });
            }
            rows.push(row);
        }
        rows
    }

    /// Rows are datasets, columns are learners in grid order, values are
    /// fold means at 4 decimals; `*` marks the best cell(s) of a row.
    pub fn table_dsv(&self, measure: Measure, delimiter: char) -> String {
        let mut out = String::new();
        for row in self.table_rows(measure) {
            out.push_str(&row.join(&delimiter.to_string()));
            out.push('\n');
        }
        out
    }

    pub fn table_text(&self, measure: Measure) -> String {
        format!("{measure}\n{}", align(&self.table_rows(measure)))
    }

    /// Long format at full precision; failed cells get one `error` row.
    pub fn machine_csv(&self) -> String {
        let mut out = String::from("task,learner,measure,statistic,value\n");
        for (t, row) in self.cells.iter().enumerate() {
            for (l, cell) in row.iter().enumerate() {
                match cell {
                    Ok(r) => r.append_machine_rows(&mut out),
                    Err(e) => {
                        let _ = writeln!(
                            out,
                            "{},{},,error,{}",
                            csv_field(&self.tasks[t]),
                            csv_field(&self.learners[l]),
                            csv_field(e)
                        );
                    }
                }
            }
        }
        out
    }
}
