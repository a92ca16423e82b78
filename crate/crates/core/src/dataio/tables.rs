//! Plot-ready CSV tables for experiment results.
//!
//! `emit_result_tables` writes five files into the output directory, each
//! with a fixed header:
//!
//! | file                 | columns |
//! |----------------------|---------|
//! | `rmsep_summary.csv`  | experiment, primary, secondary, response, method, gamma, n_lv, rmsep_secondary, rmsep_primary, status |
//! | `scores.csv`         | experiment, set, sample, lv, score |
//! | `reconstructions.csv`| experiment, n_lv, series, channel, wavelength_nm, value |
//! | `residuals.csv`      | experiment, n_lv, primary_norm, secondary_norm, cross_norm |
//! | `predictions.csv`    | experiment, sample, reference, predicted |
//!
//! `scores.csv` sets are `calibration`, `primary_standard` and
//! `secondary_standard`. `reconstructions.csv` series are
//! `calibration_mean`, `validation_mean` (secondary validation spectra
//! projected through the model), `primary_validation_mean` (the same
//! samples on the primary instrument), and `primary_standard_<i>` /
//! `secondary_standard_<i>`. The wavelength column is empty when the
//! spectra carry no axis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gctpls::ResidualNorms;

pub const SUMMARY_FILE: &str = "rmsep_summary.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const RECONSTRUCTIONS_FILE: &str = "reconstructions.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Graph-regularized PLS.
    Gct,
    Pls,
    /// Direct standardization of the calibration spectra, then PLS.
    DsPls,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Gct => "GCT-PLS",
            Method::Pls => "PLS",
            Method::DsPls => "DS+PLS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub primary: String,
    pub secondary: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sample: String,
    pub reference: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub set: String,
    pub sample: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionRow {
    pub n_lv: usize,
    pub series: String,
    pub values: Vec<f64>,
}

/// Outcome of one scenario × method run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub method: Method,
    pub gamma: f64,
    pub n_lv: usize,
    pub rmsep_secondary: f64,
    pub rmsep_primary: f64,
    /// Secondary-instrument validation predictions.
    pub predictions: Vec<Prediction>,
    /// Index 0 is before deflation, index `a` after component `a`.
    pub standards_residual_norms: Vec<ResidualNorms>,
    pub scores: Vec<ScoreRow>,
    pub reconstructions: Vec<ReconstructionRow>,
    pub wavelengths: Option<Vec<f64>>,
    /// Set when the run failed; numeric fields are then not meaningful.
    pub error: Option<String>,
}

impl ExperimentResult {
    pub fn id(&self) -> String {
        format!(
            "{}->{}/{}/{}",
            self.scenario.primary,
            self.scenario.secondary,
            self.scenario.response,
            self.method.label()
        )
    }

    /// A failed run, carrying only its identity and the error message.
    pub fn failed(
        scenario: Scenario,
        method: Method,
        gamma: f64,
        n_lv: usize,
        error: String,
    ) -> Self {
        Self {
            scenario,
            method,
            gamma,
            n_lv,
            rmsep_secondary: f64::NAN,
            rmsep_primary: f64::NAN,
            predictions: Vec::new(),
            standards_residual_norms: Vec::new(),
            scores: Vec::new(),
            reconstructions: Vec::new(),
            wavelengths: None,
            error: Some(error),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.error.is_some() {
            return Ok(());
        }
        let id = self.id();
        if self.predictions.is_empty() {
            return Err(Error::InvalidInput(format!("{id}: no predictions")));
        }
        let finite = [self.gamma, self.rmsep_primary, self.rmsep_secondary]
            .into_iter()
            .chain(
                self.predictions
                    .iter()
                    .flat_map(|p| [p.reference, p.predicted]),
            )
            .chain(
                self.standards_residual_norms
                    .iter()
                    .flat_map(|n| [n.primary, n.secondary, n.cross]),
            )
            .chain(self.scores.iter().flat_map(|s| s.scores.iter().copied()))
            .chain(
                self.reconstructions
                    .iter()
                    .flat_map(|r| r.values.iter().copied()),
            )
            .all(f64::is_finite);
        if !finite {
            return Err(Error::InvalidInput(format!("{id}: non-finite values")));
        }
        if self.rmsep_primary < 0.0 || self.rmsep_secondary < 0.0 {
            return Err(Error::InvalidInput(format!("{id}: negative RMSEP")));
        }
        if let Some(w) = &self.wavelengths {
            if let Some(r) = self
                .reconstructions
                .iter()
                .find(|r| r.values.len() != w.len())
            {
                return Err(Error::InvalidInput(format!(
                    "{id}: reconstruction {} has {} channels, axis has {}",
                    r.series,
                    r.values.len(),
                    w.len()
                )));
            }
        }
        Ok(())
    }
}

/// Validates every result, then writes the five tables. Nothing is written
/// if validation fails.
pub fn emit_result_tables(results: &[ExperimentResult], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::InvalidInput("no results to emit".into()));
    }
    for r in results {
        r.validate()?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut summary = String::from(
        "experiment,primary,secondary,response,method,gamma,n_lv,rmsep_secondary,rmsep_primary,status\n",
    );
    let mut scores = String::from("experiment,set,sample,lv,score\n");
    let mut recon = String::from("experiment,n_lv,series,channel,wavelength_nm,value\n");
    let mut resid = String::from("experiment,n_lv,primary_norm,secondary_norm,cross_norm\n");
    let mut preds = String::from("experiment,sample,reference,predicted\n");

    for r in results {
        let id = csv_field(&r.id());
        let (rs, rp, status) = match &r.error {
            None => (
                r.rmsep_secondary.to_string(),
                r.rmsep_primary.to_string(),
                "ok".to_string(),
            ),
            Some(e) => (
                "NaN".into(),
                "NaN".into(),
                csv_field(&format!("error: {e}")),
            ),
        };
        let _ = writeln!(
            summary,
            "{id},{},{},{},{},{},{},{rs},{rp},{status}",
            csv_field(&r.scenario.primary),
            csv_field(&r.scenario.secondary),
            csv_field(&r.scenario.response),
            r.method.label(),
            r.gamma,
            r.n_lv
        );
        for s in &r.scores {
            for (lv, v) in s.scores.iter().enumerate() {
                let _ = writeln!(
                    scores,
                    "{id},{},{},{},{v}",
                    s.set,
                    csv_field(&s.sample),
                    lv + 1
                );
            }
        }
        for row in &r.reconstructions {
            for (j, v) in row.values.iter().enumerate() {
                let wl = r
                    .wavelengths
                    .as_ref()
                    .map(|w| w[j].to_string())
                    .unwrap_or_default();
                let _ = writeln!(recon, "{id},{},{},{},{wl},{v}", row.n_lv, row.series, j + 1);
            }
        }
        for (lv, n) in r.standards_residual_norms.iter().enumerate() {
            let _ = writeln!(resid, "{id},{lv},{},{},{}", n.primary, n.secondary, n.cross);
        }
        for p in &r.predictions {
            let _ = writeln!(
                preds,
                "{id},{},{},{}",
                csv_field(&p.sample),
                p.reference,
                p.predicted
            );
        }
    }

    let files = [
        (SUMMARY_FILE, summary),
        (SCORES_FILE, scores),
        (RECONSTRUCTIONS_FILE, recon),
        (RESIDUALS_FILE, resid),
        (PREDICTIONS_FILE, preds),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        super::write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Quotes a field when it contains a separator, quote or line break.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_result() -> ExperimentResult {
        ExperimentResult {
            scenario: Scenario {
                primary: "m5".into(),
                secondary: "mp6".into(),
                response: "moisture".into(),
            },
            method: Method::Gct,
            gamma: 1e6,
            n_lv: 2,
            rmsep_secondary: 0.2,
            rmsep_primary: 0.19,
            predictions: vec![Prediction {
                sample: "s1".into(),
                reference: 10.0,
                predicted: 10.1,
            }],
            standards_residual_norms: vec![ResidualNorms {
                primary: 1.0,
                secondary: 1.1,
                cross: 0.3,
            }],
            scores: vec![ScoreRow {
                set: "calibration".into(),
                sample: "s1".into(),
                scores: vec![0.5, -0.1],
            }],
            reconstructions: vec![ReconstructionRow {
                n_lv: 1,
                series: "calibration_mean".into(),
                values: vec![0.1, 0.2],
            }],
            wavelengths: Some(vec![1100.0, 1102.0]),
            error: None,
        }
    }

    #[test]
    fn writes_all_five_tables() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_result_tables(&[sample_result()], dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        for f in &files {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.lines().count() >= 2, "{}", f.display());
        }
        let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(
            summary.lines().nth(1).unwrap(),
            "m5->mp6/moisture/GCT-PLS,m5,mp6,moisture,GCT-PLS,1000000,2,0.2,0.19,ok"
        );
        let recon = std::fs::read_to_string(dir.path().join(RECONSTRUCTIONS_FILE)).unwrap();
        assert!(recon.contains(",1,calibration_mean,2,1102,0.2"));
    }

    #[test]
    fn empty_predictions_abort_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let good = sample_result();
        let mut bad = sample_result();
        bad.predictions.clear();
        assert!(emit_result_tables(&[good, bad], dir.path()).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        assert!(emit_result_tables(&[], dir.path()).is_err());
    }

    #[test]
    fn non_finite_needs_error_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut bad = sample_result();
        bad.rmsep_secondary = f64::NAN;
        assert!(emit_result_tables(&[bad.clone()], dir.path()).is_err());
        let failed = ExperimentResult::failed(
            bad.scenario.clone(),
            Method::Pls,
            0.0,
            2,
            "rank exhausted".into(),
        );
        emit_result_tables(&[failed], dir.path()).unwrap();
        let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert!(summary.contains("NaN,NaN,error: rank exhausted"));
    }
}
