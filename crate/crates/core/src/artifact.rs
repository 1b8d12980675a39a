//! Offline artifact: a single versioned file holding both reduced models.
//!
//! Layout: 8-byte magic, u32 format version, u64 manifest length, the JSON
//! manifest, the f64 payload (little endian, arrays back to back in manifest
//! order) and a trailing SHA-256 of everything before it. The full-order
//! model is rebuilt from the configuration echo on load.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::StudyConfig;
use crate::error::{Error, Result};
use crate::mcrb::{McrbRom, PodReport};
use crate::model::FullOrderModel;
use crate::rom::ReducedSpace;
use crate::sgrb::{SgSystem, SgrbRom};
use crate::stochastic::{build_double_orthogonal_basis, SampleSet};

pub const ARTIFACT_MAGIC: &[u8; 8] = b"SGRBART\0";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: StudyConfig,
    pub sample_seed: u64,
    pub scalars: Vec<(String, f64)>,
    pub pod_reports: Vec<PodReportRecord>,
    pub arrays: Vec<ArrayEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodReportRecord {
    pub name: String,
    pub n_snapshots: usize,
    pub r_max: usize,
    pub optimality_defect: Option<f64>,
    pub orthonormality_defect: Option<f64>,
}

impl From<&PodReport> for PodReportRecord {
    fn from(r: &PodReport) -> Self {
        PodReportRecord {
            name: r.name.clone(),
            n_snapshots: r.n_snapshots,
            r_max: r.r_max,
            optimality_defect: r.optimality_defect,
            orthonormality_defect: r.orthonormality_defect,
        }
    }
}

/// Named column-major arrays in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrayStore {
    entries: Vec<(ArrayEntry, Vec<f64>)>,
}

impl ArrayStore {
    pub fn push(&mut self, name: impl Into<String>, rows: usize, cols: usize, data: Vec<f64>) {
        debug_assert_eq!(rows * cols, data.len());
        let entry = ArrayEntry {
            name: name.into(),
            rows,
            cols,
        };
        self.entries.push((entry, data));
    }

    pub fn push_matrix(&mut self, name: impl Into<String>, m: &DMatrix<f64>) {
        self.push(name, m.nrows(), m.ncols(), m.as_slice().to_vec());
    }

    pub fn push_vec(&mut self, name: impl Into<String>, v: &[f64]) {
        self.push(name, v.len(), 1, v.to_vec());
    }

    pub fn get(&self, name: &str) -> Result<(&ArrayEntry, &[f64])> {
        self.entries
            .iter()
            .find(|(e, _)| e.name == name)
            .map(|(e, d)| (e, d.as_slice()))
            .ok_or_else(|| Error::Artifact(format!("missing array `{name}`")))
    }

    pub fn matrix(&self, name: &str) -> Result<DMatrix<f64>> {
        let (e, d) = self.get(name)?;
        Ok(DMatrix::from_column_slice(e.rows, e.cols, d))
    }

    pub fn vec(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.get(name)?.1.to_vec())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(e, _)| e.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Both reduced models plus everything needed to evaluate them.
#[derive(Debug, Clone)]
pub struct OfflineArtifact {
    pub config: StudyConfig,
    pub mcrb: McrbRom,
    pub sgrb: SgrbRom,
    pub pod_reports: Vec<PodReportRecord>,
}

fn push_space(store: &mut ArrayStore, prefix: &str, s: &ReducedSpace) {
    store.push_matrix(format!("{prefix}/basis"), &s.basis);
    store.push_vec(format!("{prefix}/singular_values"), &s.singular_values);
    for (q, t) in s.terms.iter().enumerate() {
        store.push_matrix(format!("{prefix}/term{q}"), t);
    }
    store.push_vec(format!("{prefix}/f_red"), &s.f_red);
    store.push_vec(format!("{prefix}/l_red"), &s.l_red);
}

fn read_space(store: &ArrayStore, prefix: &str, n_terms: usize) -> Result<ReducedSpace> {
    Ok(ReducedSpace {
        basis: store.matrix(&format!("{prefix}/basis"))?,
        singular_values: store.vec(&format!("{prefix}/singular_values"))?,
        terms: (0..n_terms)
            .map(|q| store.matrix(&format!("{prefix}/term{q}")))
            .collect::<Result<_>>()?,
        f_red: store.vec(&format!("{prefix}/f_red"))?,
        l_red: store.vec(&format!("{prefix}/l_red"))?,
    })
}

fn flatten_mu(mu: &[[f64; 2]]) -> Vec<f64> {
    mu.iter().flatten().copied().collect()
}

fn unflatten_mu(v: &[f64]) -> Vec<[f64; 2]> {
    v.chunks(2).map(|c| [c[0], c[1]]).collect()
}

impl OfflineArtifact {
    pub fn to_store(&self) -> ArrayStore {
        let mut st = ArrayStore::default();
        let samples = &self.mcrb.samples;
        st.push("samples", samples.k, samples.n_xi, samples.samples.clone());
        let kl = &self.mcrb.model.kl;
        st.push_vec("kl/omega", &kl.modes_1d.iter().map(|m| m.omega).collect::<Vec<_>>());
        st.push_vec("kl/lambda", &kl.modes_2d.iter().map(|m| m.lambda).collect::<Vec<_>>());

        st.push_vec("mcrb/alpha", &self.mcrb.alpha);
        st.push("mcrb/train_mu", 2, self.mcrb.train_mu.len(), flatten_mu(&self.mcrb.train_mu));
        for (i, s) in self.mcrb.spaces.iter().enumerate() {
            push_space(&mut st, &format!("mcrb/space{i}"), s);
        }

        let sg = &self.sgrb;
        st.push("sgrb/train_mu", 2, sg.train_mu.len(), flatten_mu(&sg.train_mu));
        for (i, s) in sg.spaces.iter().enumerate() {
            push_space(&mut st, &format!("sgrb/space{i}"), s);
            st.push_matrix(format!("sgrb/space{i}/mode_map"), &sg.mode_maps[i]);
        }
        for (i, (terms, load)) in sg.cross.iter().zip(&sg.cross_load).enumerate() {
            for (q, t) in terms.iter().enumerate() {
                st.push_matrix(format!("sgrb/cross{}/term{q}", i + 1), t);
            }
            st.push_vec(format!("sgrb/cross{}/load", i + 1), load);
        }
        st
    }

    fn scalars(&self) -> Vec<(String, f64)> {
        vec![
            ("mcrb/snapshot_rank".into(), self.mcrb.snapshot_rank as f64),
            ("sgrb/alpha_bar".into(), self.sgrb.alpha_bar),
            ("sgrb/gamma2".into(), self.sgrb.gamma2),
        ]
    }

    /// Serializes to the container format.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let store = self.to_store();
        let manifest = Manifest {
            version: ARTIFACT_VERSION,
            config: self.config.clone(),
            sample_seed: self.mcrb.samples.seed,
            scalars: self.scalars(),
            pod_reports: self.pod_reports.clone(),
            arrays: store.entries.iter().map(|(e, _)| e.clone()).collect(),
        };
        let json = serde_json::to_vec(&manifest)?;
        let payload: usize = store.entries.iter().map(|(_, d)| d.len() * 8).sum();
        let mut out = Vec::with_capacity(8 + 4 + 8 + json.len() + payload + 32);
        out.extend_from_slice(ARTIFACT_MAGIC);
        out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, d) in &store.entries {
            for v in d {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (manifest, store) = parse_container(bytes)?;
        Self::from_parts(manifest, store)
    }

    fn from_parts(manifest: Manifest, store: ArrayStore) -> Result<Self> {
        let config = manifest.config;
        config.validate()?;
        let scalar = |name: &str| -> Result<f64> {
            manifest
                .scalars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Artifact(format!("missing scalar `{name}`")))
        };
        let model = Arc::new(FullOrderModel::build(
            config.discretization.n_cells,
            config.field_parameters(),
        )?);
        let (e, data) = store.get("samples")?;
        if e.rows != model.k() {
            return Err(Error::Artifact(format!(
                "sample dimension {} does not match {} KL modes",
                e.rows,
                model.k()
            )));
        }
        let samples = Arc::new(SampleSet {
            samples: data.to_vec(),
            seed: manifest.sample_seed,
            n_xi: e.cols,
            k: e.rows,
        });
        let n_terms = model.k() + 3;
        let mcrb = McrbRom {
            model: model.clone(),
            samples,
            spaces: (0..5)
                .map(|i| read_space(&store, &format!("mcrb/space{i}"), n_terms))
                .collect::<Result<_>>()?,
            alpha: store.vec("mcrb/alpha")?,
            train_mu: unflatten_mu(&store.vec("mcrb/train_mu")?),
            snapshot_rank: scalar("mcrb/snapshot_rank")? as usize,
        };
        let basis = build_double_orthogonal_basis(config.discretization.sg_degree, model.k())?;
        let sg = Arc::new(SgSystem::new(model, basis)?);
        let mut spaces = Vec::with_capacity(4);
        let mut mode_maps = Vec::with_capacity(4);
        for i in 0..4 {
            spaces.push(read_space(&store, &format!("sgrb/space{i}"), 3)?);
            mode_maps.push(store.matrix(&format!("sgrb/space{i}/mode_map"))?);
        }
        let mut cross = Vec::with_capacity(3);
        let mut cross_load = Vec::with_capacity(3);
        for i in 1..4 {
            cross.push(
                (0..3)
                    .map(|q| store.matrix(&format!("sgrb/cross{i}/term{q}")))
                    .collect::<Result<Vec<_>>>()?,
            );
            cross_load.push(store.vec(&format!("sgrb/cross{i}/load"))?);
        }
        if spaces[0].basis.nrows() != sg.m_total() {
            return Err(Error::Artifact(format!(
                "SGRB basis has {} rows, the configured SG system has {}",
                spaces[0].basis.nrows(),
                sg.m_total()
            )));
        }
        let sgrb = SgrbRom {
            sg,
            spaces,
            cross,
            cross_load,
            mode_maps,
            alpha_bar: scalar("sgrb/alpha_bar")?,
            gamma2: scalar("sgrb/gamma2")?,
            train_mu: unflatten_mu(&store.vec("sgrb/train_mu")?),
        };
        Ok(OfflineArtifact {
            config,
            mcrb,
            sgrb,
            pod_reports: manifest.pod_reports,
        })
    }
}

/// Checks magic, version and checksum and splits the payload into arrays.
pub fn parse_container(bytes: &[u8]) -> Result<(Manifest, ArrayStore)> {
    let header = 8 + 4 + 8;
    if bytes.len() < header + 32 || &bytes[..8] != ARTIFACT_MAGIC {
        return Err(Error::Artifact("not an artifact file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!(
            "artifact format version {version} is not supported (expected {ARTIFACT_VERSION})"
        )));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Artifact("checksum mismatch".into()));
    }
    let json_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let json_end = header
        .checked_add(json_len)
        .filter(|&e| e <= body.len())
        .ok_or_else(|| Error::Artifact("truncated manifest".into()))?;
    let manifest: Manifest = serde_json::from_slice(&body[header..json_end])?;
    if manifest.version != version {
        return Err(Error::Artifact("manifest version disagrees with header".into()));
    }
    let mut store = ArrayStore::default();
    let mut pos = json_end;
    for e in &manifest.arrays {
        let n = e.rows * e.cols;
        let end = pos + n * 8;
        if end > body.len() {
            return Err(Error::Artifact(format!("truncated array `{}`", e.name)));
        }
        let data = body[pos..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.entries.push((e.clone(), data));
        pos = end;
    }
    if pos != body.len() {
        return Err(Error::Artifact("trailing bytes after the payload".into()));
    }
    Ok((manifest, store))
}
