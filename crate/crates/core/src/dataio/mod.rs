//! Dataset ingestion, synthetic data and plot-ready result tables.

mod csvio;
pub mod manifest;
pub mod synth;
pub mod tables;

use std::io::Write;
use std::path::Path;

pub use csvio::{
    load_responses_csv, load_spectra_csv, save_responses_csv, save_spectra_csv, ResponseTable,
};
pub use manifest::{DatasetManifest, InstrumentFiles, RoleFiles, ScenarioFiles};
pub use synth::{synth_two_instrument, Band, ShiftSpec, SynthDataset, SynthParams};
pub use tables::{emit_result_tables, ExperimentResult, Method, Prediction, Scenario};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
