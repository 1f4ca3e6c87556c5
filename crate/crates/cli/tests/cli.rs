use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TOY: &str = "@relation toy
@attribute x1 numeric
@attribute x2 numeric
@attribute y1 {0,1}
@attribute y2 {0,1}
@attribute y3 {0,1}
@data
0.1,1.0,1,1,0
0.4,0.2,1,0,1
0.9,0.5,0,1,1
0.3,0.8,1,1,0
0.7,0.1,0,1,1
0.2,0.6,1,0,1
";

// labels never all-zero, prevalences well below one half
const SPARSE: &str = "x1,x2,a,b,c
0.1,0.3,1,0,0
0.5,0.2,0,1,0
0.9,0.7,0,0,1
0.3,0.1,1,0,0
0.6,0.8,0,1,0
0.2,0.5,0,0,1
0.8,0.4,1,0,0
0.4,0.9,0,1,0
0.7,0.6,0,0,1
";

fn mlforge(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("MLFORGE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.arff"), TOY).unwrap();
    fs::write(dir.path().join("sparse.csv"), SPARSE).unwrap();
    dir
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no `{key}` line in\n{text}"))
        .split('\t')
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn stats_reports_cardinality() {
    let dir = setup();
    let o = mlforge(&["stats", "toy.arff", "--labels", "last:3"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "cardinality").parse::<f64>().unwrap(), 2.0);
    assert_eq!(field(&out, "instances"), "6");
    assert_eq!(field(&out, "labels"), "3");
}

#[test]
fn featureless_train_predict_eval() {
    let dir = setup();
    let d = dir.path();
    let o = mlforge(
        &[
            "train",
            "sparse.csv",
            "--labels",
            "a,b,c",
            "--base",
            "featureless",
            "-o",
            "m.model",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mlforge(&["predict", "--model", "m.model", "sparse.csv", "-o", "p.txt"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mlforge(&["eval", "p.txt"], d);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "recall").parse::<f64>().unwrap(), 0.0);
    assert_eq!(field(&out, "f1").parse::<f64>().unwrap(), 0.0);
    assert_eq!(field(&out, "precision"), "NA");
}

#[test]
fn eval_with_identical_truth_is_perfect() {
    let dir = setup();
    let d = dir.path();
    assert!(mlforge(
        &[
            "train",
            "toy.arff",
            "--labels",
            "last:3",
            "--base",
            "mock_memorizer",
            "-o",
            "m.model"
        ],
        d
    )
    .status
    .success());
    // predict on a copy without labels, then supply truth separately
    fs::write(
        d.join("x.csv"),
        "x1,x2\n0.1,1.0\n0.4,0.2\n0.9,0.5\n0.3,0.8\n0.7,0.1\n0.2,0.6\n",
    )
    .unwrap();
    let o = mlforge(&["predict", "--model", "m.model", "x.csv", "-o", "p.txt"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!mlforge(&["eval", "p.txt"], d).status.success());
    let o = mlforge(
        &[
            "eval",
            "p.txt",
            "--truth",
            "toy.arff",
            "--measures",
            "hamming,subset01,accuracy",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(field(&out, "hamming"), "0.0");
    assert_eq!(field(&out, "subset01"), "0.0");
    assert_eq!(field(&out, "accuracy"), "1.0");
}

#[test]
fn feature_count_mismatch_fails() {
    let dir = setup();
    let d = dir.path();
    assert!(
        mlforge(&["train", "toy.arff", "--labels", "last:3", "-o", "m.model"], d)
            .status
            .success()
    );
    fs::write(d.join("wide.csv"), "x1,x2,x3,y1,y2,y3\n1,2,3,0,1,0\n2,1,0,1,0,1\n").unwrap();
    let o = mlforge(&["predict", "--model", "m.model", "wide.csv", "-o", "p.txt"], d);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert!(!d.join("p.txt").exists());
}

#[test]
fn resample_is_deterministic() {
    let dir = setup();
    let d = dir.path();
    let args = [
        "resample", "toy.arff", "--labels", "last:3", "--method", "CC", "--iters", "3", "--seed", "4",
    ];
    let run = |out: &str, workers: &str| {
        let mut a = args.to_vec();
        a.extend(["--out", out, "--workers", workers]);
        let o = mlforge(&a, d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (stdout(&o), fs::read_to_string(d.join(out)).unwrap())
    };
    let (text, first) = run("r1.csv", "1");
    let (_, second) = run("r2.csv", "3");
    assert_eq!(first, second);
    let fold_rows = text
        .lines()
        .filter(|l| l.split_whitespace().next().is_some_and(|w| w.parse::<usize>().is_ok()))
        .count();
    assert_eq!(fold_rows, 3);
    assert!(first.contains("toy,CC(logistic),hamming,fold3,"));
}

#[test]
fn resample_rejects_too_many_folds() {
    let dir = setup();
    let o = mlforge(
        &["resample", "toy.arff", "--labels", "last:3", "--iters", "7"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_dataset_exits_with_ingestion_code() {
    let dir = setup();
    fs::write(
        dir.path().join("bad.arff"),
        "@relation r\n@attribute a numeric\n@data\n1,2\n",
    )
    .unwrap();
    let o = mlforge(&["stats", "bad.arff", "--labels", "last:1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_smoke() {
    let dir = setup();
    let d = dir.path();
    fs::write(
        d.join("bench.ini"),
        "[experiment]\nfolds = 3\nseed = 2\nmeasures = hamming, f1\nmin_prevalence = 0\n\n\
         [dataset toy]\npath = toy.arff\nlabels = last:3\n\n\
         [dataset sparse]\npath = sparse.csv\nlabels = a,b,c\n\n\
         [dataset broken]\npath = missing.arff\nlabels = last:2\n\n\
         [grid]\nmethods = BR, CC, NST, DBR, STA\nbases = featureless\n",
    )
    .unwrap();
    let o = mlforge(&["bench", "bench.ini", "-o", "out", "--workers", "2"], d);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "hamming.tsv",
        "hamming.txt",
        "f1.tsv",
        "f1.txt",
        "long.csv",
        "config.ini",
    ] {
        assert!(d.join("out").join(name).exists(), "{name}");
    }
    let tsv = fs::read_to_string(d.join("out/hamming.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        rows[0],
        [
            "dataset",
            "BR(featureless)",
            "CC(featureless)",
            "NST(featureless)",
            "DBR(featureless)",
            "STA(featureless)"
        ]
    );
    assert_eq!(rows[3][0], "broken");
    assert!(rows[3][1..].iter().all(|c| *c == "ERROR"));
    assert!(rows[1][1..].iter().any(|c| c.ends_with('*')));
    let long = fs::read_to_string(d.join("out/long.csv")).unwrap();
    assert!(long.lines().any(|l| l.starts_with("broken,BR(featureless),,error,")));

    let again = mlforge(&["bench", "bench.ini", "-o", "out2"], d);
    assert_eq!(again.status.code(), Some(5));
    assert_eq!(long, fs::read_to_string(d.join("out2/long.csv")).unwrap());
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = setup();
    fs::write(dir.path().join("c.ini"), "[experiment]\nfolds = 3\nbogus = 1\n").unwrap();
    let o = mlforge(&["bench", "c.ini"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c.ini:3"));
}
