//! Dataset manifests.
//!
//! A manifest is a TOML document naming the CSV tables of one dataset.
//! Relative paths resolve against the manifest's directory.
//!
//! ```toml
//! version = 1
//! name = "corn"
//! response_names = ["moisture", "oil", "protein", "starch"]
//! wavelength_start_nm = 1100.0
//! wavelength_step_nm = 2.0
//!
//! [files]
//! primary_spectra = "m5.csv"
//! secondary_spectra = "mp6.csv"
//! responses = "propvals.csv"
//! primary_standards = "m5nbs.csv"
//! secondary_standards = "mp6nbs.csv"
//! primary_label = "m5"      # optional
//! secondary_label = "mp6"   # optional
//! ```
//!
//! Several instrument pairs sharing one response table can be declared
//! instead of `[files]`:
//!
//! ```toml
//! responses = "propvals.csv"
//! pairs = [["m5", "mp6"], ["mp6", "m5"]]
//!
//! [instruments.m5]
//! spectra = "m5.csv"
//! standards = "m5nbs.csv"
//!
//! [instruments.mp6]
//! spectra = "mp6.csv"
//! standards = "mp6nbs.csv"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub name: String,
    pub response_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_start_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_step_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<RoleFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responses: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub instruments: BTreeMap<String, InstrumentFiles>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(String, String)>,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// Role → path map for a single primary/secondary scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleFiles {
    pub primary_spectra: PathBuf,
    pub secondary_spectra: PathBuf,
    pub responses: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_standards: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_standards: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentFiles {
    pub spectra: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standards: Option<PathBuf>,
}

/// Fully resolved files of one primary → secondary transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFiles {
    pub primary_label: String,
    pub secondary_label: String,
    pub primary_spectra: PathBuf,
    pub secondary_spectra: PathBuf,
    pub responses: PathBuf,
    pub primary_standards: Option<PathBuf>,
    pub secondary_standards: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate().map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
        Ok(manifest)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Directory relative paths resolve against.
    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.response_names.is_empty() {
            return Err(Error::InvalidInput(
                "response_names must not be empty".into(),
            ));
        }
        if let Some(step) = self.wavelength_step_nm {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::InvalidInput(
                    "wavelength_step_nm must be positive".into(),
                ));
            }
        }
        if self.files.is_none() && self.pairs.is_empty() {
            return Err(Error::InvalidInput(
                "manifest needs either a [files] table or instrument pairs".into(),
            ));
        }
        for scenario in self.scenarios()? {
            let mut paths = vec![
                &scenario.primary_spectra,
                &scenario.secondary_spectra,
                &scenario.responses,
            ];
            paths.extend(scenario.primary_standards.iter());
            paths.extend(scenario.secondary_standards.iter());
            if let Some(missing) = paths.into_iter().find(|p| !p.is_file()) {
                return Err(Error::InvalidInput(format!(
                    "referenced file {} does not exist",
                    missing.display()
                )));
            }
        }
        Ok(())
    }

    /// Every primary → secondary scenario the manifest declares.
    pub fn scenarios(&self) -> Result<Vec<ScenarioFiles>> {
        let mut out = Vec::new();
        if let Some(f) = &self.files {
            out.push(ScenarioFiles {
                primary_label: f.primary_label.clone().unwrap_or_else(|| "primary".into()),
                secondary_label: f
                    .secondary_label
                    .clone()
                    .unwrap_or_else(|| "secondary".into()),
                primary_spectra: self.resolve(&f.primary_spectra),
                secondary_spectra: self.resolve(&f.secondary_spectra),
                responses: self.resolve(&f.responses),
                primary_standards: f.primary_standards.as_deref().map(|p| self.resolve(p)),
                secondary_standards: f.secondary_standards.as_deref().map(|p| self.resolve(p)),
            });
        }
        if !self.pairs.is_empty() {
            let responses = self.responses.as_deref().ok_or_else(|| {
                Error::InvalidInput("instrument pairs need a top-level `responses` file".into())
            })?;
            for (p, s) in &self.pairs {
                let lookup = |name: &String| {
                    self.instruments.get(name).ok_or_else(|| {
                        Error::InvalidInput(format!("pair names unknown instrument {name:?}"))
                    })
                };
                let (pi, si) = (lookup(p)?, lookup(s)?);
                out.push(ScenarioFiles {
                    primary_label: p.clone(),
                    secondary_label: s.clone(),
                    primary_spectra: self.resolve(&pi.spectra),
                    secondary_spectra: self.resolve(&si.spectra),
                    responses: self.resolve(responses),
                    primary_standards: pi.standards.as_deref().map(|p| self.resolve(p)),
                    secondary_standards: si.standards.as_deref().map(|p| self.resolve(p)),
                });
            }
        }
        Ok(out)
    }

    /// Wavelength axis implied by the start/step fields, if both are set.
    pub fn wavelength_axis(&self, channels: usize) -> Option<Vec<f64>> {
        let (start, step) = (self.wavelength_start_nm?, self.wavelength_step_nm?);
        Some((0..channels).map(|j| start + step * j as f64).collect())
    }

    /// Single-scenario manifest; paths are stored as given.
    pub fn single(name: impl Into<String>, response_names: Vec<String>, files: RoleFiles) -> Self {
        Self {
            version: MANIFEST_VERSION,
            name: name.into(),
            response_names,
            wavelength_start_nm: None,
            wavelength_step_nm: None,
            files: Some(files),
            responses: None,
            instruments: BTreeMap::new(),
            pairs: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }
}
