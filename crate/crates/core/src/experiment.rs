//! End-to-end transfer experiments: split, fit, predict on the secondary
//! instrument, and collect the plot-ready result tables.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::baselines;
use crate::dataio::tables::{csv_field, ReconstructionRow, ScoreRow};
use crate::dataio::{
    self, DatasetManifest, ExperimentResult, Method, Prediction, ResponseTable, Scenario,
    ScenarioFiles,
};
use crate::error::{Error, Result};
use crate::gctpls::{self, FitConfig, LatentModel, ResidualNorms};
use crate::graphreg::StandardsPair;
use crate::numcore::{column_means, ResponseVector, SpectraMatrix};
use crate::sampling;

/// Fraction of primary samples Kennard-Stone assigns to calibration when
/// no explicit count is given (60 of 80).
pub const DEFAULT_CALIBRATION_FRACTION: f64 = 0.75;

/// Default `--gamma-grid`.
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.0, 1e2, 1e4, 1e6];

/// Default fraction of the undeflated cross-instrument residual below
/// which the standards are considered exhausted.
pub const DEFAULT_EXHAUSTION_FRACTION: f64 = 0.01;

/// Where the transfer standards come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardsMode {
    /// Standards tables named in the manifest.
    External,
    /// `n` calibration samples picked by Kennard-Stone, measured on both
    /// instruments.
    KennardStone(usize),
}

impl FromStr for StandardsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("external") {
            return Ok(Self::External);
        }
        let n = s
            .strip_prefix("ks:")
            .or_else(|| s.strip_prefix("kennard-stone:"))
            .ok_or_else(|| {
                Error::InvalidInput(format!("standards mode {s:?}: expected external or ks:N"))
            })?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::InvalidInput(format!("standards mode {s:?}: bad count")))?;
        Ok(Self::KennardStone(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub n_lv: usize,
    pub standards: StandardsMode,
    pub center_standards: bool,
    /// Calibration set size; defaults to [`DEFAULT_CALIBRATION_FRACTION`]
    /// of the samples.
    pub n_calibration: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1e6,
            n_lv: 2,
            standards: StandardsMode::External,
            center_standards: false,
            n_calibration: None,
        }
    }
}

impl RunConfig {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            gamma: self.gamma,
            n_components: self.n_lv,
            center_standards: self.center_standards,
        }
    }
}

/// Both instruments' spectra of the same samples plus references.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub primary_label: String,
    pub secondary_label: String,
    pub primary: SpectraMatrix,
    pub secondary: SpectraMatrix,
    pub responses: ResponseTable,
    pub standards: Option<StandardsPair>,
}

impl ScenarioData {
    pub fn load(files: &ScenarioFiles, manifest: &DatasetManifest) -> Result<Self> {
        let with_axis = |s: SpectraMatrix| -> Result<SpectraMatrix> {
            match (s.wavelengths(), manifest.wavelength_axis(s.ncols())) {
                (None, Some(axis)) => s.with_wavelengths(axis),
                _ => Ok(s),
            }
        };
        let primary = with_axis(dataio::load_spectra_csv(&files.primary_spectra)?)?;
        let secondary = with_axis(dataio::load_spectra_csv(&files.secondary_spectra)?)?;
        let responses = dataio::load_responses_csv(&files.responses)?;
        let standards = match (&files.primary_standards, &files.secondary_standards) {
            (Some(p), Some(s)) => Some(StandardsPair::new(
                dataio::load_spectra_csv(p)?.into_values(),
                dataio::load_spectra_csv(s)?.into_values(),
            )?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{} -> {}: standards must be given for both instruments",
                    files.primary_label, files.secondary_label
                )))
            }
        };
        Self::new(
            files.primary_label.clone(),
            files.secondary_label.clone(),
            primary,
            secondary,
            responses,
            standards,
        )
    }

    pub fn new(
        primary_label: String,
        secondary_label: String,
        primary: SpectraMatrix,
        secondary: SpectraMatrix,
        responses: ResponseTable,
        standards: Option<StandardsPair>,
    ) -> Result<Self> {
        if primary.nrows() != secondary.nrows() || primary.ncols() != secondary.ncols() {
            return Err(Error::Shape(format!(
                "primary spectra are {}x{}, secondary {}x{}",
                primary.nrows(),
                primary.ncols(),
                secondary.nrows(),
                secondary.ncols()
            )));
        }
        if responses.nrows() != primary.nrows() {
            return Err(Error::Shape(format!(
                "{} samples but {} response rows",
                primary.nrows(),
                responses.nrows()
            )));
        }
        if let Some(s) = &standards {
            if s.ncols() != primary.ncols() {
                return Err(Error::Shape(format!(
                    "standards have {} channels, samples {}",
                    s.ncols(),
                    primary.ncols()
                )));
            }
        }
        Ok(Self {
            primary_label,
            secondary_label,
            primary,
            secondary,
            responses,
            standards,
        })
    }

    /// Loads every scenario of a manifest.
    pub fn load_all(manifest: &DatasetManifest) -> Result<Vec<Self>> {
        manifest
            .scenarios()?
            .iter()
            .map(|f| Self::load(f, manifest))
            .collect()
    }

    fn sample_id(&self, i: usize) -> String {
        self.primary
            .sample_ids()
            .map_or_else(|| format!("{}", i + 1), |ids| ids[i].clone())
    }
}

/// Calibration/validation sets and standards ready for fitting.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub scenario: Scenario,
    pub calibration: SpectraMatrix,
    pub y_calibration: ResponseVector,
    pub validation_primary: SpectraMatrix,
    pub validation_secondary: SpectraMatrix,
    pub y_validation: ResponseVector,
    pub standards: StandardsPair,
    pub calibration_ids: Vec<String>,
    pub validation_ids: Vec<String>,
}

/// Kennard-Stone split of the primary samples and standards selection.
pub fn prepare(data: &ScenarioData, response: &str, cfg: &RunConfig) -> Result<PreparedData> {
    let n = data.primary.nrows();
    let n_cal = cfg
        .n_calibration
        .unwrap_or_else(|| (DEFAULT_CALIBRATION_FRACTION * n as f64).round() as usize);
    if n_cal < 2 || n_cal >= n {
        return Err(Error::InvalidInput(format!(
            "calibration size {n_cal} leaves no validation samples out of {n}"
        )));
    }
    let split = sampling::kennard_stone_split(&data.primary, n_cal)?;
    let y = data.responses.get(response)?;
    let calibration = data.primary.select_rows(&split.calibration)?;

    let standards = match cfg.standards {
        StandardsMode::External => data.standards.clone().ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} -> {}: no standards files in the manifest (use --standards ks:N)",
                data.primary_label, data.secondary_label
            ))
        })?,
        StandardsMode::KennardStone(k) => {
            let picked = sampling::select_standards(&calibration, k)?;
            let rows: Vec<usize> = picked.iter().map(|&i| split.calibration[i]).collect();
            StandardsPair::new(
                data.primary.values().select_rows(&rows),
                data.secondary.values().select_rows(&rows),
            )?
        }
    };

    Ok(PreparedData {
        scenario: Scenario {
            primary: data.primary_label.clone(),
            secondary: data.secondary_label.clone(),
            response: response.to_string(),
        },
        y_calibration: y.select(&split.calibration)?,
        validation_primary: data.primary.select_rows(&split.validation)?,
        validation_secondary: data.secondary.select_rows(&split.validation)?,
        y_validation: y.select(&split.validation)?,
        calibration,
        standards,
        calibration_ids: split
            .calibration
            .iter()
            .map(|&i| data.sample_id(i))
            .collect(),
        validation_ids: split
            .validation
            .iter()
            .map(|&i| data.sample_id(i))
            .collect(),
    })
}

/// A fitted method: the model plus the transfer map it was trained behind.
#[derive(Debug, Clone)]
pub struct FittedMethod {
    pub method: Method,
    pub model: LatentModel,
    pub transfer_map: Option<baselines::TransferMap>,
}

impl FittedMethod {
    /// Predicts primary-instrument spectra; the DS map is applied first.
    pub fn predict_primary(&self, x: &SpectraMatrix) -> Result<ResponseVector> {
        match &self.transfer_map {
            Some(map) => gctpls::predict(&self.model, &baselines::apply_transfer(map, x)?),
            None => gctpls::predict(&self.model, x),
        }
    }

    /// Predicts secondary-instrument spectra as measured.
    pub fn predict_secondary(&self, x: &SpectraMatrix) -> Result<ResponseVector> {
        gctpls::predict(&self.model, x)
    }
}

pub fn fit_method(prep: &PreparedData, method: Method, cfg: &RunConfig) -> Result<FittedMethod> {
    let (model, transfer_map) = match method {
        Method::Gct => (
            gctpls::fit(
                &prep.calibration,
                &prep.y_calibration,
                &prep.standards,
                &cfg.fit_config(),
            )?,
            None,
        ),
        Method::Pls => (
            baselines::fit_pls(
                &prep.calibration,
                &prep.y_calibration,
                cfg.n_lv,
                Some(&prep.standards),
            )?,
            None,
        ),
        Method::DsPls => {
            let map = baselines::direct_standardization(&prep.standards)?
                .with_labels(&prep.scenario.primary, &prep.scenario.secondary);
            let standardized = baselines::apply_transfer(&map, &prep.calibration)?;
            let model = baselines::fit_pls(&standardized, &prep.y_calibration, cfg.n_lv, None)?;
            (model, Some(map))
        }
    };
    Ok(FittedMethod {
        method,
        model,
        transfer_map,
    })
}

/// Runs one method on prepared data and gathers every emitted table.
pub fn run_method(
    prep: &PreparedData,
    method: Method,
    cfg: &RunConfig,
) -> Result<ExperimentResult> {
    let fitted = fit_method(prep, method, cfg)?;
    let model = &fitted.model;
    let pred_s = fitted.predict_secondary(&prep.validation_secondary)?;
    let pred_p = fitted.predict_primary(&prep.validation_primary)?;
    let rmsep_secondary = sampling::rmsep(&prep.y_validation, &pred_s)?;
    let rmsep_primary = sampling::rmsep(&prep.y_validation, &pred_p)?;
    log::info!(
        "{} -> {} {} {}: RMSEP secondary {rmsep_secondary:.4}, primary {rmsep_primary:.4}",
        prep.scenario.primary,
        prep.scenario.secondary,
        prep.scenario.response,
        method
    );

    let predictions = prep
        .validation_ids
        .iter()
        .zip(
            prep.y_validation
                .values()
                .iter()
                .zip(pred_s.values().iter()),
        )
        .map(|(id, (&reference, &predicted))| Prediction {
            sample: id.clone(),
            reference,
            predicted,
        })
        .collect();

    let mut scores = Vec::new();
    for (i, id) in prep.calibration_ids.iter().enumerate() {
        scores.push(ScoreRow {
            set: "calibration".into(),
            sample: id.clone(),
            scores: model.components().iter().map(|c| c.scores[i]).collect(),
        });
    }
    if let Some((tp, ts)) = model.standards_scores() {
        for (set, t) in [("primary_standard", &tp), ("secondary_standard", &ts)] {
            for (i, row) in t.row_iter().enumerate() {
                scores.push(ScoreRow {
                    set: set.into(),
                    sample: format!("{}", i + 1),
                    scores: row.iter().copied().collect(),
                });
            }
        }
    }

    let (calibration_input, validation_primary_input) = match &fitted.transfer_map {
        Some(map) => (
            baselines::apply_transfer(map, &prep.calibration)?,
            baselines::apply_transfer(map, &prep.validation_primary)?,
        ),
        None => (prep.calibration.clone(), prep.validation_primary.clone()),
    };
    let mut reconstructions = Vec::new();
    for n_lv in 1..=model.n_components() {
        let cal = gctpls::reconstruct(model, &calibration_input, n_lv)?;
        let val = gctpls::reconstruct(model, &prep.validation_secondary, n_lv)?;
        let val_p = gctpls::reconstruct(model, &validation_primary_input, n_lv)?;
        for (series, m) in [
            ("calibration_mean", &cal),
            ("validation_mean", &val),
            ("primary_validation_mean", &val_p),
        ] {
            reconstructions.push(ReconstructionRow {
                n_lv,
                series: series.into(),
                values: column_means(m.values()).iter().copied().collect(),
            });
        }
        if let Some((p, s)) = reconstructed_standards(model, n_lv) {
            for (prefix, m) in [("primary_standard", p), ("secondary_standard", s)] {
                for (i, row) in m.row_iter().enumerate() {
                    reconstructions.push(ReconstructionRow {
                        n_lv,
                        series: format!("{prefix}_{}", i + 1),
                        values: row.iter().copied().collect(),
                    });
                }
            }
        }
    }

    Ok(ExperimentResult {
        scenario: prep.scenario.clone(),
        method,
        gamma: if method == Method::Gct {
            cfg.gamma
        } else {
            0.0
        },
        n_lv: cfg.n_lv,
        rmsep_secondary,
        rmsep_primary,
        predictions,
        standards_residual_norms: model.residual_norms().to_vec(),
        scores,
        reconstructions,
        wavelengths: prep.calibration.wavelengths().map(<[f64]>::to_vec),
        error: None,
    })
}

/// `Σ_{a<=n} t_a p_a'` for both standards blocks, using their own loadings.
fn reconstructed_standards(
    model: &LatentModel,
    n_lv: usize,
) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let first = model.components().first()?;
    let (k, d) = (first.primary_scores.len(), model.n_channels());
    if k == 0 {
        return None;
    }
    let mut p = DMatrix::zeros(k, d);
    let mut s = DMatrix::zeros(k, d);
    for c in model.components().iter().take(n_lv) {
        p.ger(1.0, &c.primary_scores, &c.primary_loading, 1.0);
        s.ger(1.0, &c.secondary_scores, &c.secondary_loading, 1.0);
    }
    Some((p, s))
}

/// `‖T_p - T_s‖_F` over all components of a model fitted with standards.
pub fn score_mismatch(model: &LatentModel) -> Option<f64> {
    let (tp, ts) = model.standards_scores()?;
    Some((tp - ts).norm())
}

/// Distance between the mean reconstructed spectra of the same samples
/// measured on the two instruments, at `n_lv` components. Comparing the
/// same samples keeps calibration/validation population differences out
/// of the number.
pub fn reconstruction_gap(
    model: &LatentModel,
    primary: &SpectraMatrix,
    secondary: &SpectraMatrix,
    n_lv: usize,
) -> Result<f64> {
    let p = gctpls::reconstruct(model, primary, n_lv)?;
    let s = gctpls::reconstruct(model, secondary, n_lv)?;
    Ok((column_means(p.values()) - column_means(s.values())).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub rmsep_secondary: f64,
    pub rmsep_primary: f64,
    pub score_mismatch: f64,
    pub reconstruction_gap: f64,
}

/// Fits the regularized model once per `gamma` in `grid`.
pub fn sweep(prep: &PreparedData, grid: &[f64], cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("gamma grid is empty".into()));
    }
    grid.iter()
        .map(|&gamma| {
            let cfg = RunConfig {
                gamma,
                ..cfg.clone()
            };
            let fitted = fit_method(prep, Method::Gct, &cfg)?;
            let pred_s = fitted.predict_secondary(&prep.validation_secondary)?;
            let pred_p = fitted.predict_primary(&prep.validation_primary)?;
            Ok(SweepRow {
                gamma,
                rmsep_secondary: sampling::rmsep(&prep.y_validation, &pred_s)?,
                rmsep_primary: sampling::rmsep(&prep.y_validation, &pred_p)?,
                score_mismatch: score_mismatch(&fitted.model).unwrap_or(0.0),
                reconstruction_gap: reconstruction_gap(
                    &fitted.model,
                    &prep.validation_primary,
                    &prep.validation_secondary,
                    cfg.n_lv,
                )?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "primary,secondary,response,gamma,n_lv,rmsep_secondary,rmsep_primary,score_mismatch,reconstruction_gap";

pub fn write_sweep_table(
    runs: &[(Scenario, Vec<SweepRow>)],
    n_lv: usize,
    path: &Path,
) -> Result<()> {
    let mut out = format!("{SWEEP_HEADER}\n");
    for (sc, rows) in runs {
        let prefix = scenario_prefix(sc);
        for r in rows {
            let _ = writeln!(
                out,
                "{prefix},{},{n_lv},{},{},{},{}",
                r.gamma, r.rmsep_secondary, r.rmsep_primary, r.score_mismatch, r.reconstruction_gap
            );
        }
    }
    dataio::write_atomic(path, out.as_bytes())
}

fn scenario_prefix(sc: &Scenario) -> String {
    [&sc.primary, &sc.secondary, &sc.response]
        .map(|f| csv_field(f))
        .join(",")
}

/// Standards residual norms of a regularized fit and the deflation stage
/// at which the cross-instrument residual is exhausted.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub norms: Vec<ResidualNorms>,
    pub fraction: f64,
    pub flagged: Option<usize>,
}

pub fn diagnose(prep: &PreparedData, cfg: &RunConfig, fraction: f64) -> Result<Diagnosis> {
    if !(fraction.is_finite() && (0.0..=1.0).contains(&fraction)) {
        return Err(Error::InvalidInput(format!(
            "exhaustion fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let model = gctpls::fit(
        &prep.calibration,
        &prep.y_calibration,
        &prep.standards,
        &cfg.fit_config(),
    )?;
    let norms: Vec<ResidualNorms> = gctpls::standards_residuals(&model)?
        .into_iter()
        .map(|r| r.norms)
        .collect();
    let flagged = gctpls::exhausted_after(&norms, fraction);
    Ok(Diagnosis {
        norms,
        fraction,
        flagged,
    })
}

pub const DIAGNOSE_HEADER: &str =
    "primary,secondary,response,n_lv,primary_norm,secondary_norm,cross_norm,cross_relative,exhausted";

pub fn write_diagnosis_table(runs: &[(Scenario, Diagnosis)], path: &Path) -> Result<()> {
    let mut out = format!("{DIAGNOSE_HEADER}\n");
    for (sc, diag) in runs {
        let prefix = scenario_prefix(sc);
        let initial = diag.norms.first().map_or(0.0, |n| n.cross);
        for (lv, n) in diag.norms.iter().enumerate() {
            let rel = if initial > 0.0 {
                n.cross / initial
            } else {
                0.0
            };
            let _ = writeln!(
                out,
                "{prefix},{lv},{},{},{},{rel},{}",
                n.primary,
                n.secondary,
                n.cross,
                diag.flagged == Some(lv)
            );
        }
    }
    dataio::write_atomic(path, out.as_bytes())
}

/// Largest absolute difference between two runs' predictions.
pub fn max_prediction_gap(a: &ExperimentResult, b: &ExperimentResult) -> f64 {
    let pa = DVector::from_iterator(
        a.predictions.len(),
        a.predictions.iter().map(|p| p.predicted),
    );
    let pb = DVector::from_iterator(
        b.predictions.len(),
        b.predictions.iter().map(|p| p.predicted),
    );
    (pa - pb).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_two_instrument, ShiftSpec, SynthParams};

    fn synthetic(shift: ShiftSpec) -> ScenarioData {
        let data = synth_two_instrument(&SynthParams {
            shift,
            n_channels: 120,
            ..SynthParams::default()
        })
        .unwrap();
        let (p, s, y) = data.all_samples().unwrap();
        ScenarioData::new(
            "A".into(),
            "B".into(),
            p,
            s,
            ResponseTable::single("analyte", y.values()),
            Some(data.standards.clone()),
        )
        .unwrap()
    }

    #[test]
    fn standards_mode_parsing() {
        assert_eq!(
            "external".parse::<StandardsMode>().unwrap(),
            StandardsMode::External
        );
        assert_eq!(
            "ks:10".parse::<StandardsMode>().unwrap(),
            StandardsMode::KennardStone(10)
        );
        assert!("ks:x".parse::<StandardsMode>().is_err());
        assert!("random".parse::<StandardsMode>().is_err());
    }

    #[test]
    fn default_split_is_sixty_twenty() {
        let data = synthetic(ShiftSpec::offset(0.05));
        let prep = prepare(&data, "analyte", &RunConfig::default()).unwrap();
        assert_eq!(prep.calibration.nrows(), 60);
        assert_eq!(prep.validation_secondary.nrows(), 20);
    }

    #[test]
    fn kennard_stone_standards_come_from_calibration() {
        let data = synthetic(ShiftSpec::offset(0.05));
        let cfg = RunConfig {
            standards: StandardsMode::KennardStone(10),
            ..RunConfig::default()
        };
        let prep = prepare(&data, "analyte", &cfg).unwrap();
        assert_eq!(prep.standards.count(), 10);
        for row in prep.standards.primary().row_iter() {
            assert!(prep.calibration.values().row_iter().any(|r| r == row));
        }
    }

    #[test]
    fn identical_instruments_make_methods_agree() {
        let data = synthetic(ShiftSpec::none());
        let same = StandardsPair::new(
            data.standards.as_ref().unwrap().primary().clone(),
            data.standards.as_ref().unwrap().primary().clone(),
        )
        .unwrap();
        let data = ScenarioData {
            standards: Some(same),
            ..data
        };
        let cfg = RunConfig::default();
        let prep = prepare(&data, "analyte", &cfg).unwrap();
        let gct = run_method(&prep, Method::Gct, &cfg).unwrap();
        let pls = run_method(&prep, Method::Pls, &cfg).unwrap();
        assert!((gct.rmsep_secondary - pls.rmsep_secondary).abs() <= 1e-8 * pls.rmsep_secondary);
        assert!(max_prediction_gap(&gct, &pls) <= 1e-8);
    }

    #[test]
    fn sweep_rows_follow_grid() {
        let data = synthetic(ShiftSpec::offset(0.05));
        let cfg = RunConfig::default();
        let prep = prepare(&data, "analyte", &cfg).unwrap();
        let rows = sweep(&prep, &DEFAULT_GAMMA_GRID, &cfg).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.gamma).collect::<Vec<_>>(),
            DEFAULT_GAMMA_GRID
        );
        assert!(sweep(&prep, &[], &cfg).is_err());
        let single = sweep(&prep, &[0.0], &cfg).unwrap();
        let pls = run_method(&prep, Method::Pls, &cfg).unwrap();
        assert!((single[0].rmsep_secondary - pls.rmsep_secondary).abs() <= 1e-12);
    }

    #[test]
    fn missing_external_standards_is_an_input_error() {
        let data = ScenarioData {
            standards: None,
            ..synthetic(ShiftSpec::none())
        };
        let err = prepare(&data, "analyte", &RunConfig::default()).unwrap_err();
        assert!(!err.is_numerical());
    }
}
