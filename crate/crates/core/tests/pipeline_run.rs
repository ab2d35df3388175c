use std::path::{Path, PathBuf};

use drawres::pipeline::{run, Manifest, RunConfig, Subcommand};
use drawres::Error;

const SMALL: &str = r#"
seed = 5
[synth]
days = 1
[train]
methods = ["anfis-fcm", "gmdh"]
feature_sets = ["combined", "linear"]
[flag]
method = "anfis-fcm"
[sampling]
y_s = 6000
"#;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("drawres-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::parse(SMALL).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn missing_upstream_artifact_names_prior_subcommand() {
    let dir = scratch("missing");
    let cfg = config(&dir);
    for (cmd, prior) in [
        (Subcommand::Ingest, "synth"),
        (Subcommand::Features, "ingest"),
        (Subcommand::Train, "ingest"),
        (Subcommand::Evaluate, "ingest"),
        (Subcommand::Flag, "ingest"),
        (Subcommand::SamplePlan, "flag"),
    ] {
        match run(cmd, &cfg) {
            Err(Error::MissingArtifact { subcommand, .. }) => assert_eq!(subcommand, prior, "{cmd}"),
            other => panic!("{cmd}: expected missing artifact, got {other:?}"),
        }
    }
    run(Subcommand::Synth, &cfg).unwrap();
    run(Subcommand::Ingest, &cfg).unwrap();
    assert!(matches!(
        run(Subcommand::Train, &cfg),
        Err(Error::MissingArtifact { subcommand: "features", .. })
    ));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn staged_run_matches_pipeline_and_manifest_tracks_artifacts() {
    let (staged, whole) = (scratch("staged"), scratch("whole"));
    let cfg = config(&staged);
    for cmd in Subcommand::STAGES {
        run(cmd, &cfg).unwrap();
    }
    let outcome = run(Subcommand::Pipeline, &config(&whole)).unwrap();
    let ms = Manifest::read(&staged.join("manifest.toml")).unwrap();
    let mw = Manifest::read(&whole.join("manifest.toml")).unwrap();
    assert_eq!(ms.seed, 5);
    assert_eq!(ms.artifacts.len(), mw.artifacts.len());
    for (name, hash) in &ms.artifacts {
        if name != "config.toml" {
            assert_eq!(&mw.artifacts[name], hash, "{name}");
        }
    }
    for a in &outcome.artifacts {
        assert!(whole.join(a).is_file(), "{a}");
    }
    let header = std::fs::read_to_string(whole.join("metrics.csv")).unwrap();
    assert!(header.starts_with("method,params,train_mse,train_rmse,train_r,test_mse,test_rmse,test_r\n"));
    assert_eq!(header.lines().count(), 1 + 4);
    let flags = std::fs::read_to_string(whole.join("flags.csv")).unwrap();
    assert!(flags.lines().skip(1).any(|l| l.ends_with(",1,1")));
    for d in [staged, whole] {
        let _ = std::fs::remove_dir_all(d);
    }
}

#[test]
fn manifest_hash_follows_config() {
    let dir = scratch("hash");
    let mut cfg = config(&dir);
    cfg.sampling.m1 = Some(1055.0);
    cfg.sampling.sigma = Some(1.16);
    run(Subcommand::SamplePlan, &cfg).unwrap();
    let first = Manifest::read(&dir.join("manifest.toml")).unwrap();
    assert_eq!(first.config_sha256, cfg.hash());
    cfg.sampling.z = 201;
    run(Subcommand::SamplePlan, &cfg).unwrap();
    let second = Manifest::read(&dir.join("manifest.toml")).unwrap();
    assert_ne!(first.config_sha256, second.config_sha256);
    assert_ne!(first.artifacts["sampling_report.csv"], second.artifacts["sampling_report.csv"]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn paper_sampling_config_reports_published_probabilities() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_sampling.toml");
    let mut cfg = RunConfig::load(&path).unwrap();
    let dir = scratch("fixed");
    cfg.out_dir = dir.clone();
    run(Subcommand::SamplePlan, &cfg).unwrap();
    let txt = std::fs::read_to_string(dir.join("sampling_report.txt")).unwrap();
    assert!(txt.contains("P_old               0.0477"), "{txt}");
    assert!(txt.contains("P_new               0.5577"), "{txt}");
    assert!(txt.contains("delta P             0.5100"), "{txt}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_carry_key_paths() {
    let err = RunConfig::parse("[synth]\n[train.ga]\npopulaton = 3\n").unwrap_err();
    assert!(err.to_string().contains("train.ga"), "{err}");
    let err = RunConfig::parse("[synth]\n[sampling]\nmode = \"fast\"\n").unwrap_err();
    assert!(err.to_string().contains("sampling.mode"), "{err}");
}
