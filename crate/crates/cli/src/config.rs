//! Benchmark configuration files.
//!
//! Line-oriented `key = value` pairs grouped under bracketed section headers.
//! `#` and `;` start a comment at line start or after whitespace; blank lines are ignored; keys are
//! case-sensitive and unknown keys are an error.
//!
//! ```text
//! [experiment]
//! folds = 10
//! seed = 1
//! measures = hamming, f1
//!
//! [dataset scene]
//! path = data/scene.arff
//! labels = last:6
//!
//! [grid]
//! methods = BR, CC, NST, DBR, STA
//! bases = featureless, logistic
//!
//! [learner]
//! method = STA
//! base = tree:max_depth=4
//! meta = logistic
//! ```
//!
//! Sections:
//! - `[experiment]` (at most once): `folds`, `seed`, `measures`, `chain_order`
//!   (`random` or `identity`), `policy` (`strict` or `skip`), `threshold`,
//!   `internal_folds`, `min_prevalence`, `keep_constant`.
//! - `[dataset NAME]`: `path` (relative to the config file) and `labels`
//!   (`last:K` or a comma-separated list).
//! - `[grid]`: `methods` × `bases`, expanded method-major.
//! - `[learner]`: one learner with `method`, `base` and optional `meta`,
//!   `threshold`, `internal_folds`.
//!
//! Grid learners come first, then `[learner]` sections in file order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use mlforge::io::LabelSpec;
use mlforge::learners::DEFAULT_THRESHOLD;
use mlforge::resample::ChainOrderPolicy;
use mlforge::transform::DEFAULT_INTERNAL_FOLDS;
use mlforge::{BaseLearnerSpec, Measure, Method, MultilabelLearner, UndefinedPolicy};

#[derive(Debug, thiserror::Error)]
#[error("{path}:{line}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    pub labels: LabelSpec,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub folds: usize,
    pub seed: u64,
    pub measures: Vec<Measure>,
    pub chain_order: ChainOrderPolicy,
    pub policy: UndefinedPolicy,
    pub threshold: f64,
    pub internal_folds: usize,
    pub min_prevalence: f64,
    pub keep_constant: bool,
    pub datasets: Vec<DatasetEntry>,
    pub learners: Vec<MultilabelLearner>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 1,
            measures: Measure::ALL.to_vec(),
            chain_order: ChainOrderPolicy::RandomPerIteration,
            policy: UndefinedPolicy::Strict,
            threshold: DEFAULT_THRESHOLD,
            internal_folds: DEFAULT_INTERNAL_FOLDS,
            min_prevalence: 0.02,
            keep_constant: false,
            datasets: Vec::new(),
            learners: Vec::new(),
        }
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn policy_name(p: UndefinedPolicy) -> &'static str {
    match p {
        UndefinedPolicy::Strict => "strict",
        UndefinedPolicy::SkipUndefined => "skip",
    }
}

pub fn chain_policy_name(p: ChainOrderPolicy) -> &'static str {
    match p {
        ChainOrderPolicy::Identity => "identity",
        ChainOrderPolicy::RandomPerIteration => "random",
    }
}

struct Section {
    kind: String,
    arg: Option<String>,
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let base_dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base_dir)
    }

    pub fn parse(text: &str, source: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let err = |line: usize, message: String| ConfigError {
            path: source.to_string(),
            line,
            message,
        };
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            let no = i + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| err(no, "unterminated section header".into()))?
                    .trim();
                let (kind, arg) = match inner.split_once(char::is_whitespace) {
                    Some((k, a)) => (k.to_string(), Some(a.trim().to_string())),
                    None => (inner.to_string(), None),
                };
                sections.push(Section {
                    kind,
                    arg,
                    line: no,
                    keys: BTreeMap::new(),
                });
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(no, format!("expected `key = value`, found `{line}`")))?;
            let section = sections
                .last_mut()
                .ok_or_else(|| err(no, "key outside of any section".into()))?;
            let key = k.trim().to_string();
            if section.keys.insert(key.clone(), (no, v.trim().to_string())).is_some() {
                return Err(err(no, format!("duplicate key `{key}`")));
            }
        }

        let mut cfg = BenchConfig::default();
        let mut grid_learners = Vec::new();
        let mut single_learners = Vec::new();
        let mut seen_experiment = false;
        for mut s in sections {
            let mut take = |key: &str| s.keys.remove(key);
            match (s.kind.as_str(), &s.arg) {
                ("experiment", None) => {
                    if std::mem::replace(&mut seen_experiment, true) {
                        return Err(err(s.line, "duplicate [experiment] section".into()));
                    }
                    if let Some((l, v)) = take("folds") {
                        cfg.folds = v.parse().map_err(|_| err(l, format!("bad folds `{v}`")))?;
                    }
                    if let Some((l, v)) = take("seed") {
                        cfg.seed = v.parse().map_err(|_| err(l, format!("bad seed `{v}`")))?;
                    }
                    if let Some((l, v)) = take("measures") {
                        cfg.measures = list(&v)
                            .iter()
                            .map(|m| m.parse::<Measure>().map_err(|e| err(l, e.to_string())))
                            .collect::<Result<_, _>>()?;
                        if cfg.measures.is_empty() {
                            return Err(err(l, "empty measures list".into()));
                        }
                    }
                    if let Some((l, v)) = take("chain_order") {
                        cfg.chain_order = v.parse().map_err(|e: mlforge::Error| err(l, e.to_string()))?;
                    }
                    if let Some((l, v)) = take("policy") {
                        cfg.policy = v.parse().map_err(|e: mlforge::Error| err(l, e.to_string()))?;
                    }
                    if let Some((l, v)) = take("threshold") {
                        cfg.threshold = v.parse().map_err(|_| err(l, format!("bad threshold `{v}`")))?;
                    }
                    if let Some((l, v)) = take("internal_folds") {
                        cfg.internal_folds = v.parse().map_err(|_| err(l, format!("bad internal_folds `{v}`")))?;
                    }
                    if let Some((l, v)) = take("min_prevalence") {
                        cfg.min_prevalence = v.parse().map_err(|_| err(l, format!("bad min_prevalence `{v}`")))?;
                    }
                    if let Some((l, v)) = take("keep_constant") {
                        cfg.keep_constant = v.parse().map_err(|_| err(l, format!("bad keep_constant `{v}`")))?;
                    }
                }
                ("dataset", Some(name)) => {
                    let (_, p) = take("path").ok_or_else(|| err(s.line, format!("dataset `{name}` needs a path")))?;
                    let (l, labels) =
                        take("labels").ok_or_else(|| err(s.line, format!("dataset `{name}` needs labels")))?;
                    let labels = labels.parse().map_err(|e: mlforge::Error| err(l, e.to_string()))?;
                    if cfg.datasets.iter().any(|d| &d.name == name) {
                        return Err(err(s.line, format!("duplicate dataset `{name}`")));
                    }
                    cfg.datasets.push(DatasetEntry {
                        name: name.clone(),
                        path: base_dir.join(p),
                        labels,
                    });
                }
                ("grid", None) => {
                    let (lm, methods) = take("methods").ok_or_else(|| err(s.line, "[grid] needs methods".into()))?;
                    let (lb, bases) = take("bases").ok_or_else(|| err(s.line, "[grid] needs bases".into()))?;
                    let methods: Vec<Method> = list(&methods)
                        .iter()
                        .map(|m| m.parse().map_err(|e: mlforge::Error| err(lm, e.to_string())))
                        .collect::<Result<_, _>>()?;
                    let bases: Vec<BaseLearnerSpec> = bases
                        .split(';')
                        .flat_map(split_bases)
                        .map(|b| BaseLearnerSpec::parse(&b).map_err(|e| err(lb, e.to_string())))
                        .collect::<Result<_, _>>()?;
                    for &m in &methods {
                        for b in &bases {
                            grid_learners.push((m, b.clone(), None, None, None));
                        }
                    }
                }
                ("learner", _) => {
                    let (lm, method) = take("method").ok_or_else(|| err(s.line, "[learner] needs a method".into()))?;
                    let (lb, base) = take("base").ok_or_else(|| err(s.line, "[learner] needs a base".into()))?;
                    let method: Method = method.parse().map_err(|e: mlforge::Error| err(lm, e.to_string()))?;
                    let base = BaseLearnerSpec::parse(&base).map_err(|e| err(lb, e.to_string()))?;
                    let meta = match take("meta") {
                        Some((l, v)) => Some(BaseLearnerSpec::parse(&v).map_err(|e| err(l, e.to_string()))?),
                        None => None,
                    };
                    let threshold = match take("threshold") {
                        Some((l, v)) => Some(v.parse::<f64>().map_err(|_| err(l, format!("bad threshold `{v}`")))?),
                        None => None,
                    };
                    let folds = match take("internal_folds") {
                        Some((l, v)) => Some(
                            v.parse::<usize>()
                                .map_err(|_| err(l, format!("bad internal_folds `{v}`")))?,
                        ),
                        None => None,
                    };
                    single_learners.push((method, base, meta, threshold, folds));
                }
                (kind, _) => return Err(err(s.line, format!("unknown section `[{kind}]`"))),
            }
            if let Some((key, (l, _))) = s.keys.iter().next() {
                return Err(err(*l, format!("unknown key `{key}` in [{}]", s.kind)));
            }
        }
        if cfg.datasets.is_empty() {
            return Err(err(0, "no [dataset] sections".into()));
        }
        let all: Vec<_> = grid_learners.into_iter().chain(single_learners).collect();
        if all.is_empty() {
            return Err(err(0, "no learners: add a [grid] or [learner] section".into()));
        }
        cfg.learners = all
            .into_iter()
            .map(|(method, base, meta, threshold, folds)| {
                let mut l = MultilabelLearner::new(method, base)
                    .with_threshold(threshold.unwrap_or(cfg.threshold))
                    .with_internal_folds(folds.unwrap_or(cfg.internal_folds))
                    .with_seed(cfg.seed);
                if let Some(meta) = meta {
                    l = l.with_meta(meta);
                }
                l
            })
            .collect();
        Ok(cfg)
    }
}

/// Splits `featureless, logistic:l2=0.1,iterations=50, tree` at commas that
/// start a new learner kind rather than a hyperparameter.
fn split_bases(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match out.last_mut() {
            Some(prev) if part.contains('=') && !part.contains(':') => {
                prev.push(',');
                prev.push_str(part);
            }
            _ => out.push(part.to_string()),
        }
    }
    out
}

/// Drops a trailing comment: `#` or `;` at line start or after whitespace.
fn strip_comment(line: &str) -> &str {
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        if (c == '#' || c == ';') && prev_space {
            return &line[..i];
        }
        prev_space = c.is_whitespace();
    }
    line
}

impl fmt::Display for BenchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[experiment]")?;
        writeln!(f, "folds = {}", self.folds)?;
        writeln!(f, "seed = {}", self.seed)?;
        let m: Vec<&str> = self.measures.iter().map(|m| m.name()).collect();
        writeln!(f, "measures = {}", m.join(", "))?;
        writeln!(f, "chain_order = {}", chain_policy_name(self.chain_order))?;
        writeln!(f, "policy = {}", policy_name(self.policy))?;
        writeln!(f, "threshold = {}", self.threshold)?;
        writeln!(f, "internal_folds = {}", self.internal_folds)?;
        writeln!(f, "min_prevalence = {}", self.min_prevalence)?;
        writeln!(f, "keep_constant = {}", self.keep_constant)?;
        for d in &self.datasets {
            writeln!(f, "\n[dataset {}]", d.name)?;
            writeln!(f, "path = {}", d.path.display())?;
            writeln!(f, "labels = {}", d.labels)?;
        }
        for l in &self.learners {
            writeln!(f, "\n[learner]")?;
            writeln!(f, "method = {}", l.method)?;
            writeln!(f, "base = {}", l.base)?;
            if let Some(meta) = &l.meta {
                writeln!(f, "meta = {meta}")?;
            }
            writeln!(f, "threshold = {}", l.threshold)?;
            writeln!(f, "internal_folds = {}", l.internal_folds)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# demo\n[experiment]\nfolds = 3\nmeasures = hamming, f1\n\n[dataset a]\npath = a.csv\nlabels = y1,y2\n\n[grid]\nmethods = BR, CC\nbases = featureless, logistic:l2=0.1,iterations=50\n\n[learner]\nmethod = STA\nbase = tree\nmeta = logistic\n";

    #[test]
    fn trailing_comments() {
        let c = BenchConfig::parse("[experiment]\nfolds = 4   # four\nchain_order = identity ; fixed\n[dataset a]\npath = a.csv\nlabels = last:1\n[learner]\nmethod = BR\nbase = featureless\n", "c", Path::new("/")).unwrap();
        assert_eq!(c.folds, 4);
        assert_eq!(c.chain_order, ChainOrderPolicy::Identity);
        assert_eq!(strip_comment("path = a#b.csv"), "path = a#b.csv");
    }

    #[test]
    fn parses_grid_and_learners() {
        let c = BenchConfig::parse(SAMPLE, "c.ini", Path::new("/data")).unwrap();
        assert_eq!(c.folds, 3);
        assert_eq!(c.measures, vec![Measure::Hamming, Measure::F1]);
        assert_eq!(c.datasets[0].path, Path::new("/data/a.csv"));
        let names: Vec<String> = c.learners.iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            [
                "BR(featureless)",
                "BR(logistic)",
                "CC(featureless)",
                "CC(logistic)",
                "STA(tree)"
            ]
        );
        assert_eq!(
            c.learners[1].base.to_string(),
            "logistic:learning_rate=0.1,iterations=50,l2=0.1"
        );
        // the echoed config parses back to the same learners
        let echoed = BenchConfig::parse(&c.to_string(), "echo", Path::new("/")).unwrap();
        assert_eq!(echoed.learners, c.learners);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        for (text, needle) in [
            ("[experiment]\nfold = 3\n", "unknown key `fold`"),
            ("[experimnt]\n", "unknown section"),
            ("folds = 3\n", "outside of any section"),
            ("[experiment]\nfolds = x\n", "bad folds"),
            ("[dataset a]\npath = a.csv\n", "needs labels"),
            ("[experiment]\nseed = 1\nseed = 2\n", "duplicate key"),
        ] {
            let e = BenchConfig::parse(text, "c", Path::new(".")).unwrap_err().to_string();
            assert!(e.contains(needle), "{text:?}: {e}");
        }
    }
}
