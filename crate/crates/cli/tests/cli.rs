use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy-20.csv")
}

fn rsh(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsh"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn rsh")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "rsh failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(doc: &Value, schema_file: &str) {
    let schema = json(&root().join("schemas").join(schema_file));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:#?}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dirty_corpus_report_matches_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs/dirty-corpus.toml");
    let input = root().join("data/dirty-corpus.csv");
    ok(&rsh(&["--config", s(&cfg), "clean", s(&input)], dir.path()));
    let report = json(&dir.path().join("correction-report.json"));
    let manifest = json(&root().join("data/dirty-corpus-manifest.json"));
    assert_eq!(report["corrected_cells"], manifest["expected_corrections"]);
    assert_eq!(report["retained_records"], manifest["records"]);
    assert_valid(&report, "correction-report.schema.json");

    // cleaning the output again changes nothing
    let again = tempfile::tempdir().unwrap();
    let cleaned = dir.path().join("cleaned.csv");
    ok(&rsh(
        &["--config", s(&cfg), "clean", s(&cleaned)],
        again.path(),
    ));
    assert_eq!(
        json(&again.path().join("correction-report.json"))["corrected_cells"],
        0
    );
    assert_eq!(
        fs::read(&cleaned).unwrap(),
        fs::read(again.path().join("cleaned.csv")).unwrap()
    );
}

#[test]
fn pima_clean_reports_the_prune_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = root().join("data/pima-indians-diabetes.csv");
    ok(&rsh(&["clean", "--normalize", s(&input)], dir.path()));
    let report = json(&dir.path().join("correction-report.json"));
    assert_valid(&report, "correction-report.schema.json");
    let pruned = report["pruned_records"].as_u64().unwrap();
    assert_eq!(pruned + report["retained_records"].as_u64().unwrap(), 768);
    let cleaned = fs::read_to_string(dir.path().join("cleaned.csv")).unwrap();
    assert_eq!(cleaned.lines().count() as u64, 1 + 768 - pruned);
    assert!(report["normalization"]["columns"].as_array().unwrap().len() == 8);
}

#[test]
fn toy_evaluation_is_quick_and_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    ok(&rsh(
        &["--seed", "7", "evaluate", "--baselines", s(&toy())],
        a.path(),
    ));
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "{:?}",
        start.elapsed()
    );
    ok(&rsh(
        &[
            "--seed",
            "7",
            "--threads",
            "2",
            "evaluate",
            "--baselines",
            s(&toy()),
        ],
        b.path(),
    ));
    for f in ["eval-summary.json", "table.txt"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let summary = json(&a.path().join("eval-summary.json"));
    assert_valid(&summary, "eval-summary.schema.json");
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["fold_summaries"].as_array().unwrap().len(), 10);
    assert_eq!(summary["baselines"].as_array().unwrap().len(), 4);
    let table = fs::read_to_string(a.path().join("table.txt")).unwrap();
    assert!(table.contains("seed 7"));
    assert!(table.contains("91.27"));
}

#[test]
fn rules_and_masks_are_dumped() {
    let dir = tempfile::tempdir().unwrap();
    ok(&rsh(&["--seed", "3", "mine-rules", s(&toy())], dir.path()));
    let rules = json(&dir.path().join("rules.json"));
    assert_eq!(rules["seed"], 3);
    assert_eq!(
        rules["fuzzy_rules"].as_u64().unwrap() as usize,
        rules["rules"]["fuzzy"].as_array().unwrap().len()
    );

    ok(&rsh(
        &["--seed", "3", "select-features", s(&toy())],
        dir.path(),
    ));
    let masks = json(&dir.path().join("masks.json"));
    assert_valid(&masks, "masks.schema.json");
    for m in masks["members"].as_array().unwrap() {
        assert_eq!(m["trace"].as_array().unwrap().len(), 31);
    }
}

#[test]
fn bad_configs_fail_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, expect) in [
        ("unknown.toml", "[ga]\npopulation = 5\n", "unknown field"),
        (
            "range.toml",
            "[correction]\nlev_threshold = 0\n",
            "lev_threshold",
        ),
        ("boost.toml", "[boost]\nweight_up = 0.5\n", "weight_up"),
    ] {
        let cfg = dir.path().join(name);
        fs::write(&cfg, text).unwrap();
        let out = dir.path().join(format!("out-{name}"));
        let o = rsh(&["--config", s(&cfg), "evaluate", s(&toy())], &out);
        assert!(!o.status.success(), "{name} accepted");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(expect), "{name}: {err}");
        assert!(!out.exists(), "{name}: output written");
    }
}

#[test]
fn failures_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let mut text = fs::read_to_string(toy()).unwrap();
    text.push_str("1,abc,70,20,80,30,0.5,40,tested_negative\n");
    fs::write(&bad, text).unwrap();
    let o = rsh(&["clean", s(&bad)], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("load stage failed"));
}

#[test]
fn predictions_replay_and_flag_missing_features() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pima = root().join("data/pima-indians-diabetes.csv");
    ok(&rsh(&["train", s(&pima)], d));
    ok(&rsh(&["clean", s(&pima)], d));
    let model_path = d.join("model.json");
    let bundle = json(&model_path);
    let model = &bundle["model"];

    // training records replayed through their own model
    let preds_dir = d.join("replay");
    ok(&rsh(
        &["predict", s(&model_path), s(&d.join("cleaned.csv"))],
        &preds_dir,
    ));
    let labels = model["schema"]["class_labels"].as_array().unwrap();
    let recorded: Vec<&str> = model["training_predictions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| labels[p.as_u64().unwrap() as usize].as_str().unwrap())
        .collect();
    let csv = fs::read_to_string(preds_dir.join("predictions.csv")).unwrap();
    let replayed: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(replayed, recorded);

    // empty records file
    let empty = d.join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = d.join("empty-out");
    ok(&rsh(&["predict", s(&model_path), s(&empty)], &out));
    assert_eq!(fs::read(out.join("predictions.csv")).unwrap(), b"");

    // glucose is required by every member
    for m in model["members"].as_array().unwrap() {
        assert!(m["mask"].as_str().unwrap().as_bytes()[1] == b'1');
    }
    let rows = d.join("rows.csv");
    fs::write(
        &rows,
        "pregnancies,glucose,blood_pressure,skin_thickness,insulin,bmi,pedigree,age\n\
         2,120,70,20,80,30,0.5,40\n\
         1,0,70,20,80,30,0.5,40\n\
         4,150,80,30,100,35,0.3,50\n",
    )
    .unwrap();
    let out = d.join("rows-out");
    let o = rsh(&["predict", s(&model_path), s(&rows)], &out);
    assert_eq!(o.status.code(), Some(3));
    let csv = fs::read_to_string(out.join("predictions.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("1,,missing glucose"), "{}", lines[2]);
    assert!(!lines[1].contains("missing") && !lines[3].contains("missing"));
}
