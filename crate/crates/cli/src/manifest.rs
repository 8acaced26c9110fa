//! Run manifest: one JSON record per structure plus artifact paths.
//!
//! Paths are stored relative to the output directory and records are kept
//! sorted by id, so identical runs serialise identically.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureRecord {
    pub id: String,
    /// Number of Cα atoms.
    pub length: usize,
    pub cloud_size: usize,
    pub interp_factor: usize,
    pub core_start: Option<usize>,
    pub core_end: Option<usize>,
    pub depth: Option<f64>,
    pub depth_class: Option<String>,
    pub homology_class: Option<String>,
    pub cloud: String,
    pub diagram: Option<String>,
    pub landscape: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config: BTreeMap<String, String>,
    pub structures: Vec<StructureRecord>,
    pub failures: Vec<Failure>,
    /// Output files of each command run, keyed by run name.
    pub artifacts: BTreeMap<String, Vec<String>>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> anyhow::Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}; run `ingest` first", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))
    }

    /// Writes the manifest after checking that every referenced file
    /// exists. The file is replaced atomically.
    pub fn save(&mut self, out_dir: &Path) -> anyhow::Result<()> {
        self.structures.sort_by(|a, b| a.id.cmp(&b.id));
        self.failures.sort_by(|a, b| (&a.id, &a.stage).cmp(&(&b.id, &b.stage)));
        for v in self.artifacts.values_mut() {
            v.sort();
            v.dedup();
        }
        let referenced = self
            .structures
            .iter()
            .flat_map(|r| [Some(&r.cloud), r.diagram.as_ref(), r.landscape.as_ref()])
            .flatten()
            .chain(self.artifacts.values().flatten());
        for rel in referenced {
            if !out_dir.join(rel).is_file() {
                bail!("manifest refers to missing file {rel}");
            }
        }
        let text = serde_json::to_string_pretty(self)? + "\n";
        let tmp = out_dir.join(format!("{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, text).with_context(|| format!("cannot write {}", tmp.display()))?;
        std::fs::rename(&tmp, out_dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    pub fn record(&self, id: &str) -> Option<&StructureRecord> {
        self.structures.iter().find(|r| r.id == id)
    }

    /// Replaces failures of `stage` with `failures`.
    pub fn set_failures(&mut self, stage: &str, failures: Vec<Failure>) {
        self.failures.retain(|f| f.stage != stage);
        self.failures.extend(failures);
    }
}
