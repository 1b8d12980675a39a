use std::path::Path;

use sgrb::artifact::{parse_container, OfflineArtifact, ARTIFACT_VERSION};
use sgrb::config::StudyConfig;
use sgrb::study::cmd_offline;
use sgrb::Error;

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_match_the_builtin_ones() {
    assert_eq!(StudyConfig::load(&configs_dir().join("default.json")).unwrap(), StudyConfig::default());
    assert_eq!(StudyConfig::load(&configs_dir().join("quick.json")).unwrap(), StudyConfig::quick());
}

#[test]
fn defaults_reproduce_the_reference_setup() {
    let c = StudyConfig::default();
    let m = &c.model;
    assert_eq!((m.kappa0, m.sigma, m.correlation_length, m.kl_modes), (-1000.0, 200.0, 1.0, 5));
    assert_eq!((m.parameter_lower, m.parameter_upper), ([-200.0; 2], [200.0; 2]));
    let d = &c.discretization;
    assert_eq!((d.n_cells, d.n_xi, d.sg_degree, d.n_train), (16, 1024, 2, 64));
    assert_eq!((d.reference.n_cells, d.reference.n_xi, d.reference.sg_degree), (32, 16384, 3));
    assert_eq!(c.run.r_list, vec![1, 2, 4, 8, 16, 32, 64]);
    assert_eq!(StudyConfig::from_json("{}").unwrap(), c);
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        r#"{"model": {"kappa": 1.0}}"#,
        r#"{"surprise": 1}"#,
        r#"{"discretization": {"n_cells": 15}}"#,
        r#"{"discretization": {"n_xi": 1}}"#,
        r#"{"model": {"domain": [[0.0, 1.0], [0.0, 1.0]]}}"#,
        r#"{"model": {"correlation_length": 0.0}}"#,
        r#"{"run": {"r_list": [0, 4]}}"#,
        r#"{"model": {"parameter_lower": [10.0, 0.0], "parameter_upper": [0.0, 0.0]}}"#,
        "not json",
    ];
    for text in cases {
        let err = StudyConfig::from_json(text).unwrap_err();
        assert!(err.is_config(), "{text}: {err}");
    }
}

#[test]
fn seeds_and_points() {
    let mut c = StudyConfig::quick();
    c.override_seeds(40);
    let d = &c.discretization;
    assert_eq!((d.sample_seed, d.train_seed, d.test_seed), (40, 41, 42));
    let train = c.train_points().unwrap();
    assert_eq!(train.len(), d.n_train);
    assert!(train.iter().all(|p| c.contains(p)));
    assert_eq!(train, c.train_points().unwrap());
    assert_ne!(train, c.test_points().unwrap());
    c.run.test_mu = Some(vec![[1.0, 2.0]]);
    assert_eq!(c.test_points().unwrap(), vec![[1.0, 2.0]]);
    assert!(!c.contains(&[201.0, 0.0]));
    let round = StudyConfig::from_json(&c.to_json()).unwrap();
    assert_eq!(round, c);
}

fn quick_artifact() -> OfflineArtifact {
    let mut c = StudyConfig::quick();
    c.discretization.n_train = 4;
    c.discretization.n_xi = 16;
    cmd_offline(&c).unwrap()
}

#[test]
fn artifact_round_trip_is_bitwise() {
    let art = quick_artifact();
    let bytes = art.to_bytes().unwrap();
    let back = OfflineArtifact::from_bytes(&bytes).unwrap();
    let again = back.to_bytes().unwrap();
    assert!(again == bytes, "round trip changed the encoding");
    let (_, a) = parse_container(&bytes).unwrap();
    let (_, b) = parse_container(&back.to_bytes().unwrap()).unwrap();
    assert_eq!(a.len(), b.len());
    for name in a.names() {
        let (ea, da) = a.get(name).unwrap();
        let (eb, db) = b.get(name).unwrap();
        assert_eq!((ea.rows, ea.cols), (eb.rows, eb.cols));
        assert!(da.iter().zip(db).all(|(x, y)| x.to_bits() == y.to_bits()), "{name}");
    }
    assert_eq!(back.config, art.config);
    assert_eq!(back.mcrb.samples, art.mcrb.samples);
    assert_eq!(back.sgrb.alpha_bar.to_bits(), art.sgrb.alpha_bar.to_bits());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.sgrb");
    art.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(OfflineArtifact::load(&path).unwrap().to_bytes().unwrap(), bytes);
}

#[test]
fn damaged_artifacts_are_rejected() {
    let bytes = quick_artifact().to_bytes().unwrap();

    let mut wrong_version = bytes.clone();
    wrong_version[8..12].copy_from_slice(&(ARTIFACT_VERSION + 1).to_le_bytes());
    let err = OfflineArtifact::from_bytes(&wrong_version).unwrap_err();
    assert!(matches!(err, Error::Artifact(ref m) if m.contains("version")), "{err}");

    let mut flipped = bytes.clone();
    let mid = bytes.len() - 100;
    flipped[mid] ^= 1;
    let err = OfflineArtifact::from_bytes(&flipped).unwrap_err();
    assert!(matches!(err, Error::Artifact(ref m) if m.contains("checksum")), "{err}");

    assert!(matches!(OfflineArtifact::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::Artifact(_))));
    assert!(matches!(OfflineArtifact::from_bytes(b"hello"), Err(Error::Artifact(_))));
    assert!(OfflineArtifact::load(Path::new("/nonexistent/artifact.sgrb")).is_err());
}
