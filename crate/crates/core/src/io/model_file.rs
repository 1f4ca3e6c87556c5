//! Versioned text format for fitted multilabel models.
//!
//! ```text
//! mlforge-model 1
//! method CC
//! m 3
//! p 4
//! order 2,0,1
//! threshold 0.5
//! internal_folds none
//! seed 0
//! base logistic:learning_rate=0.1,iterations=1000,l2=0.0001
//! meta logistic:learning_rate=0.1,iterations=1000,l2=0.0001
//! features 4
//! <one name per line>
//! labels 3
//! <one name per line>
//! model final 0 lines 5
//! <5 lines>
//! ...
//! end
//! ```
//!
//! Every model block states its line count, so truncation is detected before
//! any parameter is decoded. Reals are written as shortest round-trip decimals,
//! which makes loaded predictions bit-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learners::{BaseLearnerSpec, BinaryModel, FittedState, LogisticModel, Memorizer, TreeModel, TreeNode};
use crate::transform::{ChainOrder, Method, MultilabelModel};

const MAGIC: &str = "mlforge-model";
pub const MODEL_VERSION: u32 = 1;

fn reals(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn encode_binary(model: &BinaryModel) -> Vec<String> {
    let mut lines = vec![format!(
        "dim {} rate {}",
        model.input_dimension(),
        model.train_positive_rate()
    )];
    match model.state() {
        FittedState::Constant(p) => lines.push(format!("constant {p}")),
        FittedState::Featureless => lines.push("featureless".into()),
        FittedState::CopyColumn(offset) => lines.push(format!("copy_column {offset}")),
        FittedState::Logistic(m) => {
            lines.push("logistic".into());
            lines.push(format!("bias {}", m.bias));
            lines.push(format!("means {}", reals(&m.means)));
            lines.push(format!("scales {}", reals(&m.scales)));
            lines.push(format!("weights {}", reals(&m.weights)));
        }
        FittedState::Tree(t) => {
            lines.push(format!("tree {}", t.nodes.len()));
            for node in &t.nodes {
                lines.push(match node {
                    TreeNode::Leaf { prob } => format!("leaf {prob}"),
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => format!("split {feature} {threshold} {left} {right}"),
                });
            }
        }
        FittedState::Memorizer(m) => {
            lines.push(format!("memorizer {}", m.entries.len()));
            for (row, target) in &m.entries {
                lines.push(format!("{} : {target}", reals(row)));
            }
        }
    }
    lines
}

pub fn model_to_string(model: &MultilabelModel) -> Result<String> {
    let names = model.feature_names().iter().chain(model.label_names());
    if let Some(bad) = names.into_iter().find(|n| n.contains(['\n', '\r'])) {
        return Err(Error::InvalidArgument(format!("name {bad:?} cannot be written")));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {MODEL_VERSION}");
    let _ = writeln!(out, "method {}", model.method());
    let _ = writeln!(out, "m {}", model.n_labels());
    let _ = writeln!(out, "p {}", model.n_features());
    let _ = writeln!(
        out,
        "order {}",
        model.chain_order().map_or("none".to_string(), ToString::to_string)
    );
    let _ = writeln!(out, "threshold {}", model.threshold());
    let _ = writeln!(
        out,
        "internal_folds {}",
        model.internal_folds().map_or("none".to_string(), |k| k.to_string())
    );
    let _ = writeln!(out, "seed {}", model.seed());
    let _ = writeln!(out, "base {}", model.base());
    let _ = writeln!(out, "meta {}", model.meta());
    let _ = writeln!(out, "features {}", model.n_features());
    for n in model.feature_names() {
        let _ = writeln!(out, "{n}");
    }
    let _ = writeln!(out, "labels {}", model.n_labels());
    for n in model.label_names() {
        let _ = writeln!(out, "{n}");
    }
    let blocks = model
        .per_label_models()
        .iter()
        .enumerate()
        .map(|(k, b)| ("final", k, b))
        .chain(
            model
                .first_level_models()
                .iter()
                .enumerate()
                .map(|(k, b)| ("first", k, b)),
        );
    for (role, k, b) in blocks {
        let lines = encode_binary(b);
        let _ = writeln!(out, "model {role} {k} lines {}", lines.len());
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out.push_str("end\n");
    Ok(out)
}

pub fn save_model(model: &MultilabelModel, path: &Path) -> Result<()> {
    super::write_file(path, &model_to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MultilabelModel> {
    let text = super::read_file(path)?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptedBlock(msg.into())
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| corrupt(format!("file ends before {what}")))
    }

    /// Reads `key value` and returns the value.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let (no, line) = self.next(&format!("`{key}`"))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| corrupt(format!("line {no}: expected `{key}`, found `{line}`")))
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| corrupt(format!("`{s}` is not a valid {what}")))
}

fn real_list(s: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| num::<f64>(t, what))
        .collect::<Result<_>>()?;
    if v.len() != len {
        return Err(corrupt(format!("{what}: {} values, expected {len}", v.len())));
    }
    Ok(v)
}

fn decode_binary(lines: &[&str]) -> Result<BinaryModel> {
    let head: Vec<&str> = lines.first().copied().unwrap_or("").split_whitespace().collect();
    let [_, dim, _, rate] = head.as_slice() else {
        return Err(corrupt("binary model header"));
    };
    let dim: usize = num(dim, "input dimension")?;
    let rate: f64 = num(rate, "positive rate")?;
    let body = lines.get(1).copied().unwrap_or("");
    let (kind, arg) = body.split_once(' ').unwrap_or((body, ""));
    let expect_len = |n: usize| {
        if lines.len() == n {
            Ok(())
        } else {
            Err(corrupt(format!("{kind} block has {} lines, expected {n}", lines.len())))
        }
    };
    let state = match kind {
        "constant" => {
            expect_len(2)?;
            FittedState::Constant(num(arg, "constant")?)
        }
        "featureless" => {
            expect_len(2)?;
            FittedState::Featureless
        }
        "copy_column" => {
            expect_len(2)?;
            FittedState::CopyColumn(num(arg, "column offset")?)
        }
        "logistic" => {
            expect_len(6)?;
            let field = |i: usize, key: &str| -> Result<&str> {
                lines[i]
                    .strip_prefix(key)
                    .map(str::trim_start)
                    .ok_or_else(|| corrupt(format!("logistic block lacks `{key}`")))
            };
            FittedState::Logistic(LogisticModel {
                bias: num(field(2, "bias")?, "bias")?,
                means: real_list(field(3, "means")?, dim, "means")?,
                scales: real_list(field(4, "scales")?, dim, "scales")?,
                weights: real_list(field(5, "weights")?, dim, "weights")?,
            })
        }
        "tree" => {
            let count: usize = num(arg, "node count")?;
            expect_len(2 + count)?;
            let mut nodes = Vec::with_capacity(count);
            for l in &lines[2..] {
                let t: Vec<&str> = l.split_whitespace().collect();
                nodes.push(match t.as_slice() {
                    ["leaf", p] => TreeNode::Leaf {
                        prob: num(p, "leaf probability")?,
                    },
                    ["split", f, thr, left, right] => {
                        let node = TreeNode::Split {
                            feature: num(f, "feature index")?,
                            threshold: num(thr, "threshold")?,
                            left: num(left, "node index")?,
                            right: num(right, "node index")?,
                        };
                        if let TreeNode::Split {
                            feature, left, right, ..
                        } = node
                        {
                            if feature >= dim || left >= count || right >= count {
                                return Err(corrupt("tree node index out of range"));
                            }
                        }
                        node
                    }
                    _ => return Err(corrupt(format!("bad tree node `{l}`"))),
                });
            }
            // children always follow their parent, so traversal terminates
            for (i, n) in nodes.iter().enumerate() {
                if let TreeNode::Split { left, right, .. } = n {
                    if *left <= i || *right <= i {
                        return Err(corrupt("tree nodes are not in preorder"));
                    }
                }
            }
            FittedState::Tree(TreeModel { nodes })
        }
        "memorizer" => {
            let count: usize = num(arg, "entry count")?;
            expect_len(2 + count)?;
            let entries = lines[2..]
                .iter()
                .map(|l| {
                    let (row, target) = l.split_once(':').ok_or_else(|| corrupt("memorizer entry lacks `:`"))?;
                    Ok((real_list(row, dim, "memorized row")?, num(target, "memorized target")?))
                })
                .collect::<Result<Vec<_>>>()?;
            FittedState::Memorizer(Memorizer::from_entries(entries))
        }
        other => return Err(corrupt(format!("unknown binary model kind `{other}`"))),
    };
    Ok(BinaryModel::from_parts(dim, rate, state))
}

pub fn parse_model(text: &str) -> Result<MultilabelModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.next("the header").map_err(|_| corrupt("empty model file"))?;
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim().parse::<u32>().ok())
        .ok_or_else(|| corrupt(format!("not a model file (expected `{MAGIC} <version>`)")))?;
    if version > MODEL_VERSION {
        return Err(Error::VersionMismatch {
            what: "model file",
            found: version,
            supported: MODEL_VERSION,
        });
    }

    let method: Method = lines.field("method")?.parse().map_err(|_| corrupt("unknown method"))?;
    let m: usize = num(lines.field("m")?, "label count")?;
    let p: usize = num(lines.field("p")?, "feature count")?;
    let order = match lines.field("order")? {
        "none" => None,
        s => Some(s.parse::<ChainOrder>().map_err(|e| corrupt(e.to_string()))?),
    };
    let threshold: f64 = num(lines.field("threshold")?, "threshold")?;
    let internal_folds = match lines.field("internal_folds")? {
        "none" => None,
        s => Some(num::<usize>(s, "fold count")?),
    };
    let seed: u64 = num(lines.field("seed")?, "seed")?;
    let base = BaseLearnerSpec::parse(lines.field("base")?).map_err(|e| corrupt(e.to_string()))?;
    let meta = BaseLearnerSpec::parse(lines.field("meta")?).map_err(|e| corrupt(e.to_string()))?;

    let mut names = |key: &str, expected: usize| -> Result<Vec<String>> {
        let count: usize = num(lines.field(key)?, "name count")?;
        if count != expected {
            return Err(corrupt(format!("{key}: {count} names, expected {expected}")));
        }
        (0..count)
            .map(|_| lines.next(key).map(|(_, l)| l.to_string()))
            .collect()
    };
    let feature_names = names("features", p)?;
    let label_names = names("labels", m)?;

    let mut per_label = Vec::new();
    let mut first_level = Vec::new();
    loop {
        let (no, line) = lines.next("`end`")?;
        if line == "end" {
            break;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let ["model", role, k, "lines", count] = t.as_slice() else {
            return Err(corrupt(format!("line {no}: expected a model block, found `{line}`")));
        };
        let (k, count): (usize, usize) = (num(k, "label index")?, num(count, "line count")?);
        let body: Vec<&str> = (0..count)
            .map(|_| lines.next("the end of a model block").map(|(_, l)| l))
            .collect::<Result<_>>()?;
        let target = match *role {
            "final" => &mut per_label,
            "first" => &mut first_level,
            other => return Err(corrupt(format!("line {no}: unknown model role `{other}`"))),
        };
        if k != target.len() {
            return Err(corrupt(format!("line {no}: model blocks out of order")));
        }
        target.push(decode_binary(&body)?);
    }
    if let Some((no, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(corrupt(format!("line {}: content after `end`: `{extra}`", no + 1)));
    }

    let model = MultilabelModel {
        method,
        base,
        meta,
        threshold,
        chain_order: order,
        internal_folds,
        seed,
        label_names,
        feature_names,
        per_label,
        first_level,
    };
    crate::learners::check_threshold(model.threshold).map_err(|e| corrupt(e.to_string()))?;
    model.check_layout()?;
    Ok(model)
}
