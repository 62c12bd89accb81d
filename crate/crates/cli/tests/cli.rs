use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cvlab_cli::decompose_row;
use cvlab_core::{Dataset, LearnerSpec};

fn cvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvlab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const EIGHT_ROWS: &str = "x1,x2,y\n\
    0.5,-1.0,1.2\n-0.3,0.4,0.1\n1.1,2.0,2.3\n-1.5,0.2,-0.4\n\
    0.9,-0.7,0.8\n-0.2,-1.3,0.3\n2.0,0.1,1.0\n-0.8,1.7,-0.2\n";

const KERNEL: &str = "kind = \"kernel\"\nbandwidth = { fixed = 0.7 }\n";

#[test]
fn decompose_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = write(dir.path(), "d.csv", EIGHT_ROWS);
    let learner_path = write(dir.path(), "l.toml", KERNEL);
    let out_path = dir.path().join("row.csv");
    let out = cvlab(&[
        "decompose", "--data", &data_path, "--learner", &learner_path, "--k", "4", "--seed", "9",
        "--mu", "rt", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let data = Dataset::read_csv(EIGHT_ROWS.as_bytes()).unwrap();
    let spec: LearnerSpec = toml::from_str(KERNEL).unwrap();
    let want = decompose_row(&data, &spec, 4, 9, "rt").unwrap();
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(printed, fs::read_to_string(&out_path).unwrap());
    let row: Vec<&str> = printed.lines().nth(1).unwrap().split(',').collect();
    let got: Vec<f64> = row[4..].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(got, vec![want.cv_total, want.cv_star, want.z, want.delta_sq]);
    assert_eq!(&row[..4], &["0", "kernel", "8", "4"]);
}

#[test]
fn decompose_exact_learner_has_no_excess_terms() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = write(dir.path(), "d.csv", EIGHT_ROWS);
    let learner_path = write(dir.path(), "l.toml", "kind = \"synthetic\"\ngamma = 0.3\nc = 0.0\n");
    let out = cvlab(&["decompose", "--data", &data_path, "--learner", &learner_path, "--k", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let printed = String::from_utf8(out.stdout).unwrap();
    // the default label contains commas, so read the numeric columns from the right
    let row: Vec<&str> = printed.lines().nth(1).unwrap().rsplitn(5, ',').collect();
    assert_eq!((row[1], row[0]), ("0", "0"));
    let (cv, star): (f64, f64) = (row[3].parse().unwrap(), row[2].parse().unwrap());
    assert!((cv - star).abs() <= 1e-15 * star);
}

#[test]
fn decompose_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = write(dir.path(), "d.csv", EIGHT_ROWS);
    let bad_schema = write(dir.path(), "bad.csv", "a,b,y\n1,2,3\n");
    let learner_path = write(dir.path(), "l.toml", KERNEL);
    let bad_learner = write(dir.path(), "bad.toml", "kind = \"kernel\"\nbandwith = 1\n");

    let k1 = cvlab(&["decompose", "--data", &data_path, "--learner", &learner_path, "--k", "1"]);
    assert_eq!(code(&k1), 2, "{}", stderr(&k1));
    let schema = cvlab(&["decompose", "--data", &bad_schema, "--learner", &learner_path, "--k", "2"]);
    assert_eq!(code(&schema), 2, "{}", stderr(&schema));
    let learner = cvlab(&["decompose", "--data", &data_path, "--learner", &bad_learner, "--k", "2"]);
    assert_eq!(code(&learner), 2);
    assert!(stderr(&learner).contains(":2"), "{}", stderr(&learner));
    let mu = cvlab(&["decompose", "--data", &data_path, "--learner", &learner_path, "--k", "2", "--mu", "sine"]);
    assert_eq!(code(&mu), 2);
}

#[test]
fn rates_recovers_synthetic_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let learner = write(dir.path(), "l.toml", "kind = \"synthetic\"\ngamma = 0.4\nc = 1.0\n");
    let out_dir = dir.path().join("rates");
    let out = cvlab(&[
        "rates", "--learner", &learner, "--n", "400,1600,6400", "--reps", "10", "--seed", "3",
        "--mc-draws", "20000", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let gamma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("gamma_hat = "))
        .and_then(|v| v.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.38..=0.42).contains(&gamma), "{gamma}");
    assert!(out_dir.join("rates.csv").exists());
}

#[test]
fn rates_errors() {
    let dir = tempfile::tempdir().unwrap();
    let exact = write(dir.path(), "l.toml", "kind = \"synthetic\"\ngamma = 0.4\nc = 0.0\n");
    let zero = cvlab(&["rates", "--learner", &exact, "--n", "100,400,1600", "--reps", "2", "--mc-draws", "10"]);
    assert_eq!(code(&zero), 1);
    assert!(stderr(&zero).contains("zero excess risk"), "{}", stderr(&zero));
    let short = cvlab(&["rates", "--learner", &exact, "--n", "100,400", "--reps", "2"]);
    assert_eq!(code(&short), 2, "{}", stderr(&short));
}

const SMALL_RUN: &str = r#"
master_seed = 5
folds = 5
replications = 12
n_grid = [40, 80, 320]
mc_draws_oracle = 200
reports = ["prop1", "prop2", "scaling", "rates", "figures"]

[dgp]
mean = "rt"
p = 4

[[learners]]
name = "fast"
kind = "synthetic"
gamma = 0.4
c = 1.0

[[learners]]
name = "forest"
kind = "forest"
num_trees = 5
min_leaf = 3
subsample = 0.5
mtry = 2
"#;

#[test]
fn run_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let o = cvlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let other: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_digest"], other["config_digest"]);
    assert_eq!(manifest["master_seed"], 5);
    for artifact in manifest["artifacts"].as_array().unwrap() {
        let name = artifact.as_str().unwrap();
        if name.ends_with(".csv") {
            assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
        }
    }
    for name in ["replications.csv", "prop2.txt", "fig2_scatter_n80.csv", "fig1_hist_n320.csv", "rates_fast.csv"] {
        assert!(a.join(name).exists(), "{name}");
    }
    // the CSV is exactly the library's table
    let cfg = cvlab_core::config::ExperimentConfig::from_toml(SMALL_RUN).unwrap();
    let mut want = Vec::new();
    cvlab_core::analysis::run_replications(&cfg).unwrap().write_csv(&mut want).unwrap();
    assert_eq!(fs::read(a.join("replications.csv")).unwrap(), want);
}

#[test]
fn run_overrides_change_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_RUN);
    let out = dir.path().join("o");
    let o = cvlab(&[
        "run", "--config", &cfg, "--out", out.to_str().unwrap(), "--reps", "2", "--n", "20,40", "--seed", "8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2 * 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 8);
    assert!(fs::read_to_string(out.join("figures_n20.txt")).unwrap().starts_with("skipped"));
}

#[test]
fn run_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let missing = cvlab(&["run", "--config", "/nonexistent/cfg.toml", "--out", out]);
    assert_eq!(code(&missing), 2);

    let malformed = write(dir.path(), "m.toml", "master_seed = 1\nfolds = 1\nreplications = 3\nn_grid = [10]\n[dgp]\nmean = \"rt\"\np = 3\n[[learners]]\nkind = \"constant\"\nvalue = 0.0\n");
    let o = cvlab(&["run", "--config", &malformed, "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let preset = cvlab(&["run", "--preset", "nope", "--out", out]);
    assert_eq!(code(&preset), 2);

    let failing = write(
        dir.path(),
        "f.toml",
        "master_seed = 1\nfolds = 3\nreplications = 2\nn_grid = [6]\n[dgp]\nmean = \"rt\"\np = 3\n\
         [[learners]]\nname = \"stumps\"\nkind = \"boosted_stumps\"\nmax_rounds = 5\nlearning_rate = 0.5\n\
         internal_cv_folds = 5\npatience = 2\n",
    );
    let o = cvlab(&["run", "--config", &failing, "--out", out]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("stumps"), "{}", stderr(&o));
}

#[test]
fn presets_are_listed_and_printed() {
    let list = cvlab(&["preset"]);
    assert_eq!(code(&list), 0);
    let names = String::from_utf8(list.stdout).unwrap();
    assert!(names.contains("rosset-comment-fig1") && names.contains("prop-suite"));
    let text = cvlab(&["preset", "prop-suite"]);
    assert!(cvlab_core::config::ExperimentConfig::from_toml(&String::from_utf8(text.stdout).unwrap()).is_ok());
}
