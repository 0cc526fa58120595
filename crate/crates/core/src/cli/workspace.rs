//! On-disk workspace: `targets/`, `banks/`, `assets/`, `logs/`, `reports/`
//! under one root.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::geometry::{default_library, ShapeMask, TargetRole, TargetSpec};
use crate::session::TargetCatalog;

use super::CliError;

pub const SUBDIRS: [&str; 5] = ["targets", "banks", "assets", "logs", "reports"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkspaceLayout {
    pub root: PathBuf,
}

impl WorkspaceLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn targets_dir(&self) -> PathBuf {
        self.root.join("targets")
    }

    pub fn banks_dir(&self) -> PathBuf {
        self.root.join("banks")
    }

    pub fn assets_dir(&self) -> PathBuf {
        self.root.join("assets")
    }

    pub fn logs_dir(&self) -> PathBuf {
        self.root.join("logs")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn bank_path(&self, id: &str) -> PathBuf {
        self.banks_dir().join(format!("{id}.eirb"))
    }

    /// Creates any missing subdirectory.
    pub fn ensure(&self) -> std::io::Result<()> {
        for d in SUBDIRS {
            std::fs::create_dir_all(self.root.join(d))?;
        }
        Ok(())
    }

    /// The stock library, with `targets/<id>.mask` files overriding or
    /// extending it. A file whose id is not in the library is untrained.
    pub fn targets(&self) -> Result<Vec<TargetSpec>, CliError> {
        let mut all: BTreeMap<String, TargetSpec> = default_library().into_iter().map(|t| (t.id.clone(), t)).collect();
        let dir = self.targets_dir();
        if dir.is_dir() {
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.extension().is_none_or(|e| e != "mask") {
                    continue;
                }
                let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else { continue };
                let mask = read_mask(&path)?;
                let role = all.get(&id).map_or(TargetRole::Untrained, |t| t.role);
                all.insert(id.clone(), TargetSpec::new(id, mask, role));
            }
        }
        Ok(all.into_values().collect())
    }

    pub fn target(&self, id: &str) -> Result<TargetSpec, CliError> {
        self.targets()?
            .into_iter()
            .find(|t| t.id == id)
            .ok_or_else(|| CliError::Config(format!("unknown target '{id}' (not in the library or {})", self.targets_dir().display())))
    }

    /// Every target, without artifact requirements.
    pub fn catalog(&self) -> Result<TargetCatalog, CliError> {
        Ok(TargetCatalog::new(self.targets()?))
    }

    /// Every target; sessions need each trial's bank and assets on disk.
    pub fn serving_catalog(&self) -> Result<TargetCatalog, CliError> {
        Ok(self.catalog()?.with_banks(self.banks_dir()).with_assets(self.assets_dir()))
    }
}

pub fn read_mask(path: &Path) -> Result<ShapeMask, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ShapeMask::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
