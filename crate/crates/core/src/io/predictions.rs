//! Prediction files.
//!
//! ```text
//! mlforge-predictions 1 threshold=0.5 n=2 m=3 truth=1
//! y1<TAB>y2<TAB>y3
//! 1 0 1 | 1 0 0 | 0.93 0.12 0.4
//! 0 0 1 | 0 0 1 | 0.02 0.3 0.77
//! ```
//!
//! Each instance line holds truth bits (only when `truth=1`), hard labels and
//! probabilities, separated by `|`. Reals use the shortest decimal that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::metrics::PredictionSet;

const MAGIC: &str = "mlforge-predictions";
pub const PREDICTIONS_VERSION: u32 = 1;

pub fn predictions_to_string(pred: &PredictionSet) -> Result<String> {
    if let Some(bad) = pred.label_names().iter().find(|n| n.contains(['\t', '\n', '\r'])) {
        return Err(Error::InvalidArgument(format!("label name {bad:?} cannot be written")));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {PREDICTIONS_VERSION} threshold={} n={} m={} truth={}",
        pred.threshold(),
        pred.n_instances(),
        pred.n_labels(),
        u8::from(pred.truth().is_some())
    );
    out.push_str(&pred.label_names().join("\t"));
    out.push('\n');
    let join = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(" ");
    for i in 0..pred.n_instances() {
        if let Some(t) = pred.truth() {
            out.push_str(&join(&mut t.row(i).iter().map(u8::to_string)));
            out.push_str(" | ");
        }
        out.push_str(&join(&mut pred.predicted().row(i).iter().map(u8::to_string)));
        out.push_str(" | ");
        out.push_str(&join(&mut pred.probs().row(i).iter().map(f64::to_string)));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_predictions(pred: &PredictionSet, path: &Path) -> Result<()> {
    super::write_file(path, &predictions_to_string(pred)?)?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet> {
    let text = super::read_file(path)?;
    parse_predictions(&text, &path.display().to_string())
}

pub fn parse_predictions(text: &str, source_name: &str) -> Result<PredictionSet> {
    let err = |line: usize, msg: String| Error::parse(source_name, line, msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty prediction file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(err(1, format!("not a prediction file (expected `{MAGIC}`)")));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "missing format version".into()))?;
    if version > PREDICTIONS_VERSION {
        return Err(Error::VersionMismatch {
            what: "prediction file",
            found: version,
            supported: PREDICTIONS_VERSION,
        });
    }
    let (mut threshold, mut n, mut m, mut has_truth) = (None, None, None, None);
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| err(1, format!("malformed header field `{kv}`")))?;
        let bad = || err(1, format!("bad value in `{kv}`"));
        match k {
            "threshold" => threshold = Some(v.parse::<f64>().map_err(|_| bad())?),
            "n" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
            "m" => m = Some(v.parse::<usize>().map_err(|_| bad())?),
            "truth" => has_truth = Some(v == "1"),
            _ => return Err(err(1, format!("unknown header field `{k}`"))),
        }
    }
    let missing = |f: &str| err(1, format!("header lacks `{f}`"));
    let threshold = threshold.ok_or_else(|| missing("threshold"))?;
    let n = n.ok_or_else(|| missing("n"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let has_truth = has_truth.ok_or_else(|| missing("truth"))?;

    let names: Vec<String> = lines
        .next()
        .ok_or_else(|| err(2, "missing label-name line".into()))?
        .split('\t')
        .map(str::to_string)
        .collect();
    if names.len() != m {
        return Err(err(2, format!("{} label names for m={m}", names.len())));
    }

    let mut truth = Array2::<u8>::zeros((n, m));
    let mut predicted = Array2::<u8>::zeros((n, m));
    let mut probs = Array2::<f64>::zeros((n, m));
    let blocks = if has_truth { 3 } else { 2 };
    for i in 0..n {
        let lineno = i + 3;
        let line = lines
            .next()
            .ok_or_else(|| err(lineno, format!("expected {n} instance lines, found {i}")))?;
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != blocks {
            return Err(err(
                lineno,
                format!(
                    "expected {blocks} `|`-separated blocks (truth, hard labels, probabilities), found {}",
                    parts.len()
                ),
            ));
        }
        let fields = |block: &str, what: &str| -> Result<Vec<String>> {
            let v: Vec<String> = block.split_whitespace().map(str::to_string).collect();
            if v.len() != m {
                return Err(err(
                    lineno,
                    format!("{what} block has {} values, expected {m}", v.len()),
                ));
            }
            Ok(v)
        };
        let bits = |block: &str, what: &str, out: &mut Array2<u8>| -> Result<()> {
            for (k, b) in fields(block, what)?.iter().enumerate() {
                out[[i, k]] = match b.as_str() {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(err(lineno, format!("`{b}` is not a bit in the {what} block"))),
                };
            }
            Ok(())
        };
        let mut b = 0;
        if has_truth {
            bits(parts[0], "truth", &mut truth)?;
            b = 1;
        }
        bits(parts[b], "hard-label", &mut predicted)?;
        for (k, p) in fields(parts[b + 1], "probability")?.iter().enumerate() {
            probs[[i, k]] = p
                .parse::<f64>()
                .map_err(|_| err(lineno, format!("`{p}` is not a probability")))?;
        }
    }
    if let Some((extra, _)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(n + 3 + extra, "unexpected content after the last instance".into()));
    }
    PredictionSet::new(has_truth.then_some(truth), probs, predicted, names, threshold)
        .map_err(|e| err(1, e.to_string()))
}
