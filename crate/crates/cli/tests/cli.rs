use std::path::Path;
use std::process::{Command, Output};

use featred::LabeledFeatureSet;

fn featred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featred"))
        .args(args)
        .output()
        .expect("spawn featred")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn table1_writes_six_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    let o = featred(&["table1", "--seed", "1", "--tasks", "2000", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().len(), 6);
    assert_eq!(r.records().count(), 6);
    let meta = std::fs::read_to_string(dir.path().join("t1.csv.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": \"1\""), "{meta}");
    assert!(meta.contains("\"created_unix\""));
}

#[test]
fn unknown_flag_and_subcommand_are_usage_errors() {
    let o = featred(&["table1", "--out", "x.csv", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Usage:"), "{}", stderr(&o));
    assert_eq!(code(&featred(&["no-such-command"])), 2);
    assert_eq!(code(&featred(&[])), 2);
    assert_eq!(code(&featred(&["mask-sweep", "--out", "x.csv", "--classifier", "svm"])), 2);
    assert_eq!(code(&featred(&["table1", "--out", "x.csv", "--workers", "0"])), 2);
}

#[test]
fn keep_above_dim_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = featred(&["mask-sweep", "--spec", "two-dim", "--keep", "1,3", "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("keep value 3"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn io_failures_exit_4() {
    assert_eq!(code(&featred(&["table1", "--tasks", "5", "--out", "/no/such/dir/t.csv"])), 4);
    assert_eq!(code(&featred(&["ffsb-info", "--features", "/no/such/file.ffsb"])), 4);
    assert_eq!(code(&featred(&["table1", "--out", "x.csv", "--config", "/no/such/config"])), 4);
}

#[test]
fn spec_files_and_their_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    std::fs::write(&spec, "dim = 2\nmean_a = -1, -10\nmean_b = 1, 10\nstd = 0.6, 10\n").unwrap();
    let out = dir.path().join("a.csv");
    let o = featred(&["thm2-gap", "--spec", path_str(&spec), "--shots", "4", "--tasks", "10", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    std::fs::write(&spec, "dim = 2\nmean_a = -1, -10\nmean_b = 1, 10\nstd = 0.6, 10\ncolour = red\n").unwrap();
    let o = featred(&["thm1-check", "--spec", path_str(&spec), "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    let o = featred(&["thm1-check", "--spec", "not-a-preset", "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# sweep settings\nspec = redundant-512\nkeep = 2, 512\ntasks = 30\nseed = 9\nfrozen-meta = true\n").unwrap();
    let out = dir.path().join("s.csv");
    let o = featred(&["mask-sweep", "--config", path_str(&cfg), "--tasks", "12", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta = std::fs::read_to_string(dir.path().join("s.csv.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": \"9\""), "{meta}");
    assert!(meta.contains("\"tasks\": \"12\""), "{meta}");
    assert!(meta.contains("\"keep\": \"2,512\""), "{meta}");
    assert!(!meta.contains("created_unix"), "{meta}");

    std::fs::write(&cfg, "tasks = 30\nwibble = 1\n").unwrap();
    let o = featred(&["mask-sweep", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("wibble"), "{}", stderr(&o));
    std::fs::write(&cfg, "tasks = 30\ntasks = 31\n").unwrap();
    assert_eq!(code(&featred(&["mask-sweep", "--config", path_str(&cfg), "--out", path_str(&out)])), 3);
}

#[test]
fn json_output_embeds_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    let o = featred(&[
        "adjust-eval", "--spec", "soft-mask-64", "--tasks", "20", "--seed", "4", "--format", "json", "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"metadata\""));
    assert!(text.contains("\"seed\": \"4\""));
    assert!(text.contains("\"adjust\": \"estimated-augmented\""));
}

#[test]
fn ffsb_info_reports_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.ffsb");
    let data =
        LabeledFeatureSet::new(vec![0.5; 12], 2, vec![0, 0, 0, 1, 1, 1], 2, Some(vec![0, 0, 0, 1, 1, 1])).unwrap();
    featred::storage::write_feature_file(&data, &path).unwrap();
    let o = featred(&["ffsb-info", "--features", path_str(&path)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for line in ["n_samples: 6", "dim: 2", "n_classes: 2", "has_groups: true", "groups: 2", "class_counts: 3,3"] {
        assert!(text.contains(line), "{line} missing from\n{text}");
    }

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    let o = featred(&["ffsb-info", "--features", path_str(&path)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("not an FFSB file"));
}

#[test]
fn gaussian_only_flags_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = featred(&["wayshot-grid", "--ways", "2,3", "--tasks", "5", "--out", path_str(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = featred(&["mask-sweep", "--ways", "2,3", "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
}
