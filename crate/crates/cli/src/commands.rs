use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mlforge::data::{dataset_from_table, dataset_stats, filter_sparse_labels, sparse_labels};
use mlforge::io::{self, LabelSpec, ReadOptions};
use mlforge::metrics::{binary_label_performance, evaluate_all, BinaryMeasure};
use mlforge::resample::{benchmark, BenchmarkTask, ChainOrderPolicy};
use mlforge::{BaseLearnerSpec, ChainOrder, Measure, Method, MultilabelLearner, ResampleDesc, Task, UndefinedPolicy};

use crate::config::{chain_policy_name, policy_name, BenchConfig, ConfigError};
use crate::{DataArgs, LearnerArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lib(#[from] mlforge::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Config(_) => ExitCode::from(2),
            CliError::Lib(mlforge::Error::InvalidArgument(_) | mlforge::Error::InvalidFolds { .. }) => {
                ExitCode::from(2)
            }
            CliError::Lib(e) if e.is_ingestion() => ExitCode::from(3),
            CliError::Lib(_) | CliError::Write { .. } => ExitCode::from(4),
        }
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn write_out(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub struct EvalArgs {
    pub predictions: PathBuf,
    pub truth: Option<PathBuf>,
    pub labels: Option<String>,
    pub measures: Option<String>,
    pub policy: String,
    pub per_label: bool,
}

pub struct ResampleArgs {
    pub data: DataArgs,
    pub learner: LearnerArgs,
    pub iters: usize,
    pub chain_order: String,
    pub measures: Option<String>,
    pub policy: String,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

fn usage<T>(r: mlforge::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_measures(list: Option<&str>) -> Result<Vec<Measure>, CliError> {
    match list {
        None => Ok(Measure::ALL.to_vec()),
        Some(s) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| usage(p.parse::<Measure>()))
            .collect(),
    }
}

fn measure_names(measures: &[Measure]) -> String {
    measures.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
}

fn fmt_full(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"))
}

fn load_task(data: &DataArgs) -> Result<Task, CliError> {
    let labels: LabelSpec = usage(data.labels.parse())?;
    let options = ReadOptions {
        drop_constant: !data.keep_constant,
    };
    Ok(io::read_task(&data.dataset, &labels, &options)?)
}

fn apply_min_prevalence(task: Task, min_prevalence: f64) -> Result<Task, CliError> {
    if min_prevalence <= 0.0 {
        return Ok(task);
    }
    let (task, removed) = filter_sparse_labels(&task, min_prevalence)?;
    if !removed.is_empty() {
        log::info!("{}: removed sparse label(s) {}", task.id(), removed.join(", "));
    }
    Ok(task)
}

fn build_learner(args: &LearnerArgs, workers: usize) -> Result<MultilabelLearner, CliError> {
    let method: Method = usage(args.method.parse())?;
    let base = usage(BaseLearnerSpec::parse(&args.base))?;
    let mut learner = MultilabelLearner::new(method, base)
        .with_threshold(args.threshold)
        .with_internal_folds(args.internal_folds)
        .with_seed(args.seed)
        .with_workers(workers);
    if let Some(meta) = &args.meta {
        learner = learner.with_meta(usage(BaseLearnerSpec::parse(meta))?);
    }
    Ok(learner)
}

fn echo_data(out: &mut String, data: &DataArgs) {
    let _ = writeln!(out, "dataset = {}", data.dataset.display());
    let _ = writeln!(out, "labels = {}", data.labels);
    let _ = writeln!(out, "keep_constant = {}", data.keep_constant);
}

fn echo_learner(out: &mut String, learner: &MultilabelLearner, min_prevalence: f64) {
    let _ = writeln!(out, "method = {}", learner.method);
    let _ = writeln!(out, "base = {}", learner.base);
    if learner.method.has_first_level() {
        let _ = writeln!(out, "meta = {}", learner.meta_spec());
    }
    let _ = writeln!(out, "threshold = {}", learner.threshold);
    if learner.method.uses_internal_cv() {
        let _ = writeln!(out, "internal_folds = {}", learner.internal_folds);
    }
    let _ = writeln!(out, "seed = {}", learner.seed);
    let _ = writeln!(out, "min_prevalence = {min_prevalence}");
}

pub fn stats(data: &DataArgs, min_prevalence: f64) -> CmdResult {
    let task = load_task(data)?;
    let s = dataset_stats(&task);
    let mut out = String::from("# config\n");
    echo_data(&mut out, data);
    let _ = writeln!(out, "min_prevalence = {min_prevalence}\n");
    let _ = writeln!(out, "instances\t{}", s.n_instances);
    let _ = writeln!(out, "predictors\t{}", s.n_predictors);
    let _ = writeln!(out, "labels\t{}", s.n_labels);
    let _ = writeln!(out, "cardinality\t{:?}", s.cardinality);
    if s.is_featureless() {
        let _ = writeln!(out, "note\tno predictors; only the featureless learner applies");
    }
    let _ = writeln!(out, "\nlabel\tprevalence");
    for (name, p) in task.dataset().label_names().iter().zip(&s.per_label_prevalence) {
        let _ = writeln!(out, "{name}\t{p:.4}");
    }
    let removed = sparse_labels(&task, min_prevalence);
    let listed = if removed.is_empty() {
        "(none)".to_string()
    } else {
        removed.join(", ")
    };
    let _ = writeln!(out, "\nremoved below {min_prevalence}\t{listed}");
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

pub fn train(data: &DataArgs, args: &LearnerArgs, order: Option<&str>, out_path: &Path, workers: usize) -> CmdResult {
    let task = apply_min_prevalence(load_task(data)?, args.min_prevalence)?;
    let mut learner = build_learner(args, workers)?;
    if let Some(order) = order {
        learner = learner.with_chain_order(usage(order.parse::<ChainOrder>())?);
    }
    let model = learner.fit(&task)?;
    io::save_model(&model, out_path)?;
    let mut out = String::from("# config\n");
    echo_data(&mut out, data);
    echo_learner(&mut out, &learner, args.min_prevalence);
    if let Some(o) = model.chain_order() {
        let _ = writeln!(out, "chain_order = {o}");
    }
    let d = task.dataset();
    let _ = writeln!(
        out,
        "\ntrained {} on {} instances, {} features, {} labels -> {}",
        learner.name(),
        d.n_instances(),
        d.n_features(),
        d.n_labels(),
        out_path.display()
    );
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

pub fn predict(model_path: &Path, dataset: &Path, out_path: &Path) -> CmdResult {
    let model = io::load_model(model_path)?;
    let table = io::read_table(dataset)?;
    let (features, truth) = io::prediction_inputs(&table, &model)?;
    let mut pred = model.predict(features.view())?;
    let has_truth = truth.is_some();
    if let Some(t) = truth {
        pred = pred.with_truth(t)?;
    }
    io::write_predictions(&pred, out_path)?;
    println!("# config");
    println!("model = {}", model_path.display());
    println!("dataset = {}", dataset.display());
    println!(
        "\npredicted {} instances, {} labels (truth {}) -> {}",
        pred.n_instances(),
        pred.n_labels(),
        if has_truth { "included" } else { "absent" },
        out_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn eval(args: &EvalArgs) -> CmdResult {
    let mut pred = io::read_predictions(&args.predictions)?;
    if let Some(path) = &args.truth {
        let table = io::read_table(path)?;
        let names = match &args.labels {
            Some(l) => usage(l.parse::<LabelSpec>()?.resolve(&table))?,
            None => pred.label_names().to_vec(),
        };
        if names != pred.label_names() {
            return Err(CliError::Usage(format!(
                "truth labels {} do not match prediction labels {}",
                names.join(","),
                pred.label_names().join(",")
            )));
        }
        let truth = dataset_from_table(&table, &names)?.labels().to_owned();
        pred = pred.with_truth(truth)?;
    }
    if pred.truth().is_none() {
        return Err(CliError::Usage("the prediction file has no truth; pass --truth".into()));
    }
    let measures = parse_measures(args.measures.as_deref())?;
    let policy: UndefinedPolicy = usage(args.policy.parse())?;
    let values = evaluate_all(&pred, &measures, policy)?;
    println!("# config");
    println!("predictions = {}", args.predictions.display());
    if let Some(t) = &args.truth {
        println!("truth = {}", t.display());
    }
    println!("measures = {}", measure_names(&measures));
    println!("policy = {}\n", policy_name(policy));
    println!("measure\tvalue\tundefined");
    for v in &values {
        println!("{}\t{}\t{}", v.measure, fmt_full(v.value), v.n_undefined_instances);
    }
    if args.per_label {
        let perf = binary_label_performance(&pred, &[BinaryMeasure::Acc, BinaryMeasure::Mmce, BinaryMeasure::Auc])?;
        println!("\nlabel\tacc\tmmce\tauc");
        for p in perf {
            println!(
                "{}\t{}\t{}\t{}",
                p.label,
                fmt_full(p.acc),
                fmt_full(p.mmce),
                fmt_full(p.auc)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn resample(args: &ResampleArgs) -> CmdResult {
    let task = apply_min_prevalence(load_task(&args.data)?, args.learner.min_prevalence)?;
    let learner = build_learner(&args.learner, 1)?;
    let chain_policy: ChainOrderPolicy = usage(args.chain_order.parse())?;
    let policy: UndefinedPolicy = usage(args.policy.parse())?;
    let measures = parse_measures(args.measures.as_deref())?;
    let rdesc = ResampleDesc::cv(args.iters, args.learner.seed)
        .with_workers(args.workers)
        .with_policy(policy);
    let result = mlforge::resample(&learner, &task, &rdesc, &measures, chain_policy)?;
    if let Some(path) = &args.out {
        write_out(path, &result.machine_csv())?;
    }
    let mut out = String::from("# config\n");
    echo_data(&mut out, &args.data);
    echo_learner(&mut out, &learner, args.learner.min_prevalence);
    let _ = writeln!(out, "iters = {}", args.iters);
    let _ = writeln!(out, "chain_order = {}", chain_policy_name(chain_policy));
    let _ = writeln!(out, "measures = {}", measure_names(&measures));
    let _ = writeln!(out, "policy = {}", policy_name(policy));
    let _ = writeln!(out, "workers = {}\n", args.workers);
    let _ = writeln!(out, "{} on {}", result.learner, result.task_id);
    out.push_str(&result.summary_text());
    for (f, order) in result.chain_orders.iter().enumerate() {
        if let Some(o) = order {
            let _ = writeln!(out, "chain order fold {}: {o}", f + 1);
        }
    }
    let _ = writeln!(out, "wall time: {:.3}s", result.wall_time.as_secs_f64());
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

pub fn bench(config_path: &Path, out_dir: &Path, workers: usize) -> CmdResult {
    let config = BenchConfig::load(config_path)?;
    if config.datasets.is_empty() || config.learners.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: the config needs at least one dataset and one learner",
            config_path.display()
        )));
    }
    let options = ReadOptions {
        drop_constant: !config.keep_constant,
    };
    let tasks: Vec<BenchmarkTask> = config
        .datasets
        .iter()
        .map(|d| {
            let loaded = io::read_table(&d.path)
                .and_then(|table| {
                    let mut table = table;
                    let targets = d.labels.resolve(&table)?;
                    if options.drop_constant {
                        table.drop_constant_columns(&targets);
                    }
                    Task::new(d.name.clone(), dataset_from_table(&table, &targets)?)
                })
                .and_then(|t| {
                    if config.min_prevalence > 0.0 {
                        filter_sparse_labels(&t, config.min_prevalence).map(|(t, _)| t)
                    } else {
                        Ok(t)
                    }
                });
            match loaded {
                Ok(t) => BenchmarkTask::Loaded(t),
                Err(e) => {
                    log::warn!("dataset {}: {e}", d.name);
                    BenchmarkTask::Failed {
                        id: d.name.clone(),
                        error: e.to_string(),
                    }
                }
            }
        })
        .collect();
    let rdesc = ResampleDesc::cv(config.folds, config.seed)
        .with_workers(workers)
        .with_policy(config.policy);
    let result = benchmark(&config.learners, &tasks, &rdesc, &config.measures, config.chain_order)?;

    let write = |name: &str, body: &str| write_out(&out_dir.join(name), body);
    fs::create_dir_all(out_dir).map_err(|source| CliError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;
    write("config.ini", &config.to_string())?;
    write("long.csv", &result.machine_csv())?;
    println!("# config\n{config}");
    for &m in &config.measures {
        write(&format!("{m}.tsv"), &result.table_dsv(m, '\t'))?;
        let text = result.table_text(m);
        write(&format!("{m}.txt"), &text)?;
        println!("{text}");
    }
    let failed = result.n_failed();
    if failed > 0 {
        eprintln!("{failed} benchmark cell(s) failed; see ERROR cells");
        return Ok(ExitCode::from(5));
    }
    println!("results written to {}", out_dir.display());
    Ok(ExitCode::SUCCESS)
}
