use std::path::{Path, PathBuf};
use std::process::Command;

use tbnma::cli::{ingest, run_analysis, write_csv, RunConfig};
use tbnma::model::ModelKind;
use tbnma::sampler::SamplerConfig;
use tbnma::simgen::{default_scenarios, generate};

fn skeleton() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv")
}

fn short() -> SamplerConfig {
    SamplerConfig {
        n_chains: 2,
        n_iter: 600,
        burn_in: 300,
        thin: 3,
        seed: 21,
        ..SamplerConfig::default()
    }
}

fn tbnma(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tbnma"))
        .args(args)
        .output()
        .expect("spawn")
}

fn code(args: &[&str]) -> i32 {
    tbnma(args).status.code().expect("exit code")
}

#[test]
fn summary_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::new(skeleton(), ModelKind::Tbnma, dir.path());
    config.baseline = Some("LIN".into());
    config.time_varying = vec!["VAN".into()];
    config.sampler = short();
    run_analysis(&config).unwrap();

    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/summary.v1.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&summary)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:?}");

    let mut broken = summary.clone();
    broken["format_version"] = 2.into();
    assert!(!validator.is_valid(&broken));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|name| {
            let mut config = RunConfig::new(skeleton(), ModelKind::MetaBnma, dir.path().join(name));
            config.baseline = Some("LIN".into());
            config.time_varying = vec!["VAN".into()];
            config.sampler = short();
            run_analysis(&config).unwrap();
            let mut bytes = std::fs::read(dir.path().join(name).join("summary.json")).unwrap();
            bytes.extend(std::fs::read(dir.path().join(name).join("curves.csv")).unwrap());
            bytes
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bnma_curves_are_flat() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::new(skeleton(), ModelKind::Bnma, dir.path());
    config.sampler = short();
    config.grid = 11;
    let summary = run_analysis(&config).unwrap();
    assert!(summary.time_varying.is_empty());

    let mut rdr = csv::Reader::from_path(dir.path().join("curves.csv")).unwrap();
    let mut by_treatment: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for row in rdr.records() {
        let row = row.unwrap();
        by_treatment
            .entry(row[0].to_string())
            .or_default()
            .push(row[2].parse().unwrap());
    }
    assert_eq!(by_treatment.len(), summary.data.treatments - 1);
    for (label, means) in by_treatment {
        assert_eq!(means.len(), 11);
        assert!(means.iter().all(|m| *m == means[0]), "{label}");
    }
}

#[test]
fn simulated_dataset_round_trips() {
    let data = ingest(&skeleton())
        .unwrap()
        .with_baseline_label("LIN")
        .unwrap();
    let scenario = &default_scenarios("VAN", 8)[2];
    let (sim, _) = generate(&data, scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    write_csv(&sim, &path).unwrap();
    let back = ingest(&path)
        .unwrap()
        .with_baseline(sim.baseline())
        .unwrap();
    assert_eq!(back, sim);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let input = skeleton();
    let input = input.to_str().unwrap();

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["run", input, "--model", "nope", "--out", out]), 1);
    assert_eq!(code(&["run", input, "--model", "meta", "--out", out]), 1);
    assert_eq!(
        code(&["run", input, "--model", "bnma", "--iters", "10", "--burnin", "10", "--out", out]),
        1
    );
    assert_eq!(
        code(&["run", "/nonexistent/x.csv", "--model", "bnma", "--out", out]),
        2
    );
    assert_eq!(
        code(&[
            "run",
            input,
            "--model",
            "tbnma",
            "--time-varying",
            "NOPE",
            "--out",
            out
        ]),
        2
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "study,date,treatment,events,total\nS1,2001-01,A,5,3\nS1,2001-01,B,1,3\n",
    )
    .unwrap();
    let o = tbnma(&[
        "run",
        bad.to_str().unwrap(),
        "--model",
        "bnma",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = tbnma(&[
        "run",
        input,
        "--model",
        "tbnma",
        "--baseline",
        "LIN",
        "--time-varying",
        "VAN,TIG",
        "--chains",
        "2",
        "--iters",
        "200",
        "--burnin",
        "100",
        "--thin",
        "1",
        "--out",
        out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["summary.json", "curves.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
