//! On-disk layout of one seed's run directory.
//!
//! Every artifact is listed in `manifest.json` with its SHA-256. Loading
//! verifies each file against the manifest and the cross-links between
//! artifacts, and refuses anything stale or edited.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seal_core::auditval::ValidationReport;
use seal_core::canonical::{self, sha256_hex};
use seal_core::datagen::{Dataset, DatasetSidecar};
use seal_core::ercd::AugmentedDataset;
use seal_core::fedcal::{write_history_jsonl, write_theta_trace};
use seal_core::governance::{LifecycleRecord, SealedPackage, KEY_LEN};
use seal_core::taskmodel::MlpModel;

use crate::config::RunConfig;
use crate::pipeline::SeedState;
use crate::summary::SeedRow;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LoopState {
    seed: u64,
    config_digest: String,
    clock: u64,
    iteration: usize,
    theta_unit: Vec<f64>,
    fid_pre: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// File name to hex SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

pub fn seed_dir(output: &Path, seed: u64) -> PathBuf {
    output.join(format!("seed-{seed}"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn read_key(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let key = hex::decode(text.trim()).map_err(|e| CliError::Config(format!("key file {}: {e}", path.display())))?;
    if key.len() != KEY_LEN {
        return Err(CliError::Config(format!("key file {} holds {} bytes, need {KEY_LEN}", path.display(), key.len())));
    }
    Ok(key)
}

fn dataset_files(name: &str, d: &Dataset, out: &mut BTreeMap<String, Vec<u8>>) {
    out.insert(format!("{name}.jsonl"), d.to_jsonl().into_bytes());
    let sidecar = canonical::to_canonical_string(&d.sidecar()).expect("sidecar serializes");
    out.insert(format!("{name}.sidecar.json"), sidecar.into_bytes());
}

fn is_calibration_output(name: &str) -> bool {
    name.starts_with("calibration-") || name.starts_with("theta-trace-")
}

/// Serializes every artifact of `st`.
fn render(cfg: &RunConfig, st: &SeedState) -> Result<BTreeMap<String, Vec<u8>>, CliError> {
    let mut out = BTreeMap::new();
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    out.insert("config.json".into(), canonical::to_canonical_string(&c).expect("config serializes").into_bytes());
    let ls = LoopState {
        seed: st.seed,
        config_digest: st.config_digest.clone(),
        clock: st.clock,
        iteration: st.iteration,
        theta_unit: st.theta_unit.clone(),
        fid_pre: st.fid_pre,
    };
    out.insert("state.json".into(), canonical::to_canonical_string(&ls).expect("state serializes").into_bytes());
    dataset_files("real", &st.real, &mut out);
    dataset_files("synthetic", &st.synthetic, &mut out);
    dataset_files("current", &st.current, &mut out);
    if let Some(d) = &st.dprime {
        out.insert("dprime.json".into(), d.to_canonical_json().into_bytes());
    }
    let layout = cfg.theta.theta_layout();
    for (i, cal) in &st.calibrations {
        let mut jsonl = Vec::new();
        write_history_jsonl(&mut jsonl, &cal.history).map_err(|e| CliError::Io(e.to_string()))?;
        out.insert(format!("calibration-{i}.jsonl"), jsonl);
        let mut trace = Vec::new();
        write_theta_trace(&mut trace, &layout, cal).map_err(|e| CliError::Io(e.to_string()))?;
        out.insert(format!("theta-trace-{i}.csv"), trace);
    }
    if let Some(m) = &st.model {
        out.insert("model.json".into(), m.to_json().into_bytes());
    }
    if let Some(r) = &st.report {
        out.insert("report.json".into(), r.to_canonical_json().into_bytes());
        let row = SeedRow::new(st.seed, st.iteration, st.state(), st.fid_pre, r);
        out.insert("ledger.csv".into(), crate::summary::ledger_csv(std::slice::from_ref(&row))?);
    }
    let mut log = Vec::new();
    st.lifecycle.write_jsonl(&mut log).map_err(|e| CliError::Io(e.to_string()))?;
    out.insert("lifecycle.jsonl".into(), log);
    if let Some(p) = &st.package {
        out.insert("package.seal".into(), p.to_bytes());
    }
    Ok(out)
}

/// Writes the state under `dir` and returns the new manifest. Calibration
/// outputs from earlier processes are kept; other artifacts the state no
/// longer has are removed.
pub fn save(dir: &Path, cfg: &RunConfig, st: &SeedState) -> Result<Manifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let old = read_manifest(dir).unwrap_or_default();
    let files = render(cfg, st)?;
    let mut manifest = Manifest::default();
    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        manifest.files.insert(name.clone(), sha256_hex(bytes));
    }
    for (name, digest) in old.files {
        if files.contains_key(&name) {
            continue;
        }
        if is_calibration_output(&name) {
            manifest.files.insert(name, digest);
        } else {
            let _ = fs::remove_file(dir.join(&name));
        }
    }
    let path = dir.join(MANIFEST);
    let text = canonical::to_canonical_string(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

struct Verified<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Verified<'_> {
    fn bytes(&self, name: &str) -> Result<Option<Vec<u8>>, CliError> {
        let Some(expected) = self.manifest.files.get(name) else { return Ok(None) };
        let path = self.dir.join(name);
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let got = sha256_hex(&bytes);
        if &got != expected {
            return Err(CliError::DigestMismatch { artifact: name.into(), expected: expected.clone(), got });
        }
        Ok(Some(bytes))
    }

    fn required(&self, name: &str) -> Result<Vec<u8>, CliError> {
        self.bytes(name)?.ok_or_else(|| CliError::MissingArtifact(format!("{} in {}", name, self.dir.display())))
    }

    fn text(&self, name: &str) -> Result<Option<String>, CliError> {
        self.bytes(name)?
            .map(|b| String::from_utf8(b).map_err(|e| CliError::Format(format!("{name}: {e}"))))
            .transpose()
    }

    fn json<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Option<T>, CliError> {
        self.text(name)?
            .map(|t| serde_json::from_str(&t).map_err(|e| CliError::Format(format!("{name}: {e}"))))
            .transpose()
    }

    fn dataset(&self, name: &str) -> Result<Dataset, CliError> {
        let jsonl = String::from_utf8(self.required(&format!("{name}.jsonl"))?)
            .map_err(|e| CliError::Format(format!("{name}.jsonl: {e}")))?;
        let sidecar: DatasetSidecar = self
            .json(&format!("{name}.sidecar.json"))?
            .ok_or_else(|| CliError::MissingArtifact(format!("{name}.sidecar.json")))?;
        Ok(Dataset::from_parts(&jsonl, sidecar)?)
    }
}

fn link(artifact: &str, expected: &str, got: &str) -> Result<(), CliError> {
    if expected == got {
        Ok(())
    } else {
        Err(CliError::DigestMismatch { artifact: artifact.into(), expected: expected.into(), got: got.into() })
    }
}

/// Loads and checks the state saved under `dir` for `cfg`.
pub fn load(dir: &Path, cfg: &RunConfig) -> Result<SeedState, CliError> {
    let v = Verified { dir, manifest: read_manifest(dir)? };
    for name in v.manifest.files.keys() {
        v.bytes(name)?;
    }
    let ls: LoopState = v.json("state.json")?.ok_or_else(|| CliError::MissingArtifact("state.json".into()))?;
    link("config", &ls.config_digest, &cfg.digest())?;
    let real = v.dataset("real")?;
    let synthetic = v.dataset("synthetic")?;
    let current = v.dataset("current")?;
    let dprime: Option<AugmentedDataset> = v.json("dprime.json")?;
    if let Some(d) = &dprime {
        link("dprime.json base", &d.base_digest, &current.content_digest())?;
        if !d.links_consistent() {
            return Err(CliError::Format("dprime.json artifacts disagree on the base digest".into()));
        }
    }
    let model = v.text("model.json")?.map(|t| MlpModel::from_json(&t)).transpose()?;
    let report: Option<ValidationReport> = v.json("report.json")?;
    if let Some(r) = &report {
        let d = dprime.as_ref().ok_or_else(|| CliError::MissingArtifact("dprime.json".into()))?;
        link("report.json dprime", &r.dprime_digest, &d.digest())?;
        link("report.json real data", &r.real_digest, &real.content_digest())?;
        if let Some(m) = &model {
            link("report.json model", &r.model_digest, &sha256_hex(m.to_json().as_bytes()))?;
        }
    }
    let log = v.text("lifecycle.jsonl")?.ok_or_else(|| CliError::MissingArtifact("lifecycle.jsonl".into()))?;
    let lifecycle = LifecycleRecord::from_jsonl(&synthetic.content_digest(), &log)?;
    let package = v.bytes("package.seal")?.map(|b| SealedPackage::from_bytes(&b)).transpose()?;
    Ok(SeedState {
        seed: ls.seed,
        config_digest: ls.config_digest,
        clock: ls.clock,
        iteration: ls.iteration,
        theta_unit: ls.theta_unit,
        real,
        synthetic,
        current,
        fid_pre: ls.fid_pre,
        dprime,
        calibrations: Vec::new(),
        model,
        report,
        lifecycle,
        package,
    })
}
