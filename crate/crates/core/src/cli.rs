//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 3 when the
//! numerics fail (degenerate response, singular systems, exhausted rank).
//! Logging goes to standard error and is controlled by
//! `SPECTRAL_TRANSFER_LOG` (`error`, `warn`, `info`, `debug`).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines;
use crate::dataio::{
    self, emit_result_tables, Band, DatasetManifest, ExperimentResult, Method, ResponseTable,
    RoleFiles, ShiftSpec, SynthParams,
};
use crate::error::{Error, Result};
use crate::experiment::{
    self, RunConfig, ScenarioData, StandardsMode, DEFAULT_EXHAUSTION_FRACTION,
};
use crate::persist;

pub const LOG_ENV: &str = "SPECTRAL_TRANSFER_LOG";

pub const MODEL_FILE: &str = "model.json";
pub const TRANSFER_MAP_FILE: &str = "transfer_map.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const DIAGNOSE_FILE: &str = "diagnose.csv";
pub const SYNTH_MANIFEST: &str = "manifest.toml";

#[derive(Debug, Parser)]
#[command(
    name = "spectral-transfer",
    version,
    about = "Calibration transfer between NIR spectrometers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model on the calibration split and save it.
    Fit(FitArgs),
    /// Predict responses for a spectra table with a saved model.
    Predict(PredictArgs),
    /// Fit, predict the secondary validation set and emit all result tables.
    TransferEval(EvalArgs),
    /// Regularized fits over a grid of gamma values.
    Sweep(SweepArgs),
    /// Standards residual norms per latent variable.
    Diagnose(DiagnoseArgs),
    /// Write a seeded synthetic two-instrument dataset with its manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Instrument pair as PRIMARY:SECONDARY; all declared pairs by default.
    #[arg(long)]
    pub pair: Option<String>,
    /// Calibration set size; 75 % of the samples by default.
    #[arg(long = "n-cal")]
    pub n_calibration: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1e6, value_parser = parse_gamma)]
    pub gamma: f64,
    /// Number of latent variables.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub lv: u64,
    /// `external` (manifest files) or `ks:N` (Kennard-Stone picks from the
    /// calibration set).
    #[arg(long, default_value = "external", value_parser = parse_standards)]
    pub standards: StandardsMode,
    /// Center the standards with their own means before building the
    /// regularizer.
    #[arg(long)]
    pub center_standards: bool,
}

impl ModelArgs {
    fn run_config(&self, data: &DataArgs) -> RunConfig {
        RunConfig {
            gamma: self.gamma,
            n_lv: self.lv as usize,
            standards: self.standards,
            center_standards: self.center_standards,
            n_calibration: data.n_calibration,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub response: String,
    #[arg(long, default_value = "gct", value_parser = parse_method)]
    pub method: Method,
    /// Output directory for the model (and transfer map for `ds`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved model from `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// Spectra to predict (CSV).
    #[arg(long)]
    pub spectra: PathBuf,
    /// Apply a saved direct-standardization map to the spectra first.
    #[arg(long)]
    pub transfer_map: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Response name, comma list, or `all`.
    #[arg(long, default_value = "all")]
    pub response: String,
    /// Comma list of gct, pls, ds.
    #[arg(long, default_value = "gct,pls,ds", value_parser = parse_method, value_delimiter = ',')]
    pub method: Vec<Method>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "all")]
    pub response: String,
    #[arg(long, default_value = "0,1e2,1e4,1e6", value_parser = parse_gamma, value_delimiter = ',')]
    pub gamma_grid: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "all")]
    pub response: String,
    /// Cross-instrument residual fraction that counts as exhausted.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTION_FRACTION)]
    pub fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Secondary-instrument perturbation: `none`, or a comma list of
    /// `offset=A`, `band=A:CENTER:WIDTH`, `gain=G`, `wshift=NM`.
    #[arg(long, default_value = "offset=0.05", value_parser = parse_shift)]
    pub shift: ShiftSpec,
    #[arg(long, default_value_t = 1e-3)]
    pub noise: f64,
    #[arg(long, default_value_t = 200)]
    pub channels: usize,
    #[arg(long, default_value_t = 80)]
    pub samples: usize,
    #[arg(long = "n-standards", default_value_t = 3)]
    pub n_standards: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_gamma(s: &str) -> std::result::Result<f64, String> {
    let g: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if g.is_finite() && g >= 0.0 {
        Ok(g)
    } else {
        Err(format!("gamma must be finite and >= 0, got {s}"))
    }
}

fn parse_standards(s: &str) -> std::result::Result<StandardsMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "gct" | "gct-pls" => Ok(Method::Gct),
        "pls" => Ok(Method::Pls),
        "ds" | "ds+pls" => Ok(Method::DsPls),
        other => Err(format!("unknown method {other:?}; expected gct, pls or ds")),
    }
}

fn parse_shift(s: &str) -> std::result::Result<ShiftSpec, String> {
    let mut spec = ShiftSpec::none();
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(spec);
    }
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {v:?} in shift"))
    };
    for item in s.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("shift item {item:?} is not key=value"))?;
        spec = match key.trim() {
            "offset" => spec.with_offset(ShiftSpec::offset(num(value)?).offsets[0]),
            "band" => {
                let parts: Vec<&str> = value.split(':').collect();
                let [a, c, w] = parts[..] else {
                    return Err(format!("band {value:?} is not AMPLITUDE:CENTER:WIDTH"));
                };
                spec.with_offset(Band::new(num(a)?, num(c)?, num(w)?))
            }
            "gain" => spec.with_gain(num(value)?),
            "wshift" => spec.with_wavelength_shift(num(value)?),
            other => return Err(format!("unknown shift key {other:?}")),
        };
    }
    Ok(spec)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Runs a parsed command. `Ok` carries the exit code, which is 3 when
/// some runs of a batch failed numerically but tables were still written.
pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Fit(a) => cmd_fit(a).map(|()| 0),
        Command::Predict(a) => cmd_predict(a).map(|()| 0),
        Command::TransferEval(a) => cmd_transfer_eval(a),
        Command::Sweep(a) => cmd_sweep(a).map(|()| 0),
        Command::Diagnose(a) => cmd_diagnose(a).map(|()| 0),
        Command::Synth(a) => cmd_synth(a).map(|()| 0),
    }
}

fn load_scenarios(data: &DataArgs) -> Result<(DatasetManifest, Vec<ScenarioData>)> {
    let manifest = DatasetManifest::load(&data.manifest)?;
    let mut files = manifest.scenarios()?;
    if let Some(pair) = &data.pair {
        let (p, s) = pair.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("--pair {pair:?}: expected PRIMARY:SECONDARY"))
        })?;
        files.retain(|f| f.primary_label == p && f.secondary_label == s);
        if files.is_empty() {
            return Err(Error::InvalidInput(format!(
                "manifest declares no pair {pair}"
            )));
        }
    }
    let scenarios = files
        .iter()
        .map(|f| ScenarioData::load(f, &manifest))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, scenarios))
}

fn responses(manifest: &DatasetManifest, arg: &str) -> Vec<String> {
    if arg.trim().eq_ignore_ascii_case("all") {
        manifest.response_names.clone()
    } else {
        arg.split(',').map(|s| s.trim().to_string()).collect()
    }
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let (_, scenarios) = load_scenarios(&a.data)?;
    let [data] = &scenarios[..] else {
        return Err(Error::InvalidInput(format!(
            "manifest declares {} pairs; choose one with --pair",
            scenarios.len()
        )));
    };
    let cfg = a.model.run_config(&a.data);
    let prep = experiment::prepare(data, &a.response, &cfg)?;
    let fitted = experiment::fit_method(&prep, a.method, &cfg)?;
    create_dir(&a.out)?;
    persist::save_model(a.out.join(MODEL_FILE), &fitted.model)?;
    if let Some(map) = &fitted.transfer_map {
        persist::save_transfer_map(a.out.join(TRANSFER_MAP_FILE), map)?;
    }
    let pred = fitted.predict_secondary(&prep.validation_secondary)?;
    let rmsep = crate::sampling::rmsep(&prep.y_validation, &pred)?;
    println!(
        "{} {}->{} {}: RMSEP on secondary validation {rmsep}",
        a.method, data.primary_label, data.secondary_label, a.response
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = persist::load_model(&a.model)?;
    let mut spectra = dataio::load_spectra_csv(&a.spectra)?;
    if let Some(path) = &a.transfer_map {
        spectra = baselines::apply_transfer(&persist::load_transfer_map(path)?, &spectra)?;
    }
    let pred = crate::gctpls::predict(&model, &spectra)?;
    let mut out = String::from("sample,predicted\n");
    for (i, v) in pred.values().iter().enumerate() {
        let id = spectra
            .sample_ids()
            .map_or_else(|| (i + 1).to_string(), |ids| ids[i].clone());
        let _ = writeln!(out, "{},{v}", dataio::tables::csv_field(&id));
    }
    dataio::write_atomic(&a.out, out.as_bytes())
}

fn cmd_transfer_eval(a: &EvalArgs) -> Result<i32> {
    if a.method.is_empty() {
        return Err(Error::InvalidInput("no methods given".into()));
    }
    let (manifest, scenarios) = load_scenarios(&a.data)?;
    let cfg = a.model.run_config(&a.data);
    let mut results: Vec<ExperimentResult> = Vec::new();
    let mut numerical_failure = false;
    for data in &scenarios {
        for response in responses(&manifest, &a.response) {
            let prep = experiment::prepare(data, &response, &cfg)?;
            for &method in &a.method {
                match experiment::run_method(&prep, method, &cfg) {
                    Ok(r) => results.push(r),
                    Err(e) if e.is_numerical() => {
                        log::error!(
                            "{}->{} {response} {method}: {e}",
                            data.primary_label,
                            data.secondary_label
                        );
                        numerical_failure = true;
                        let gamma = if method == Method::Gct {
                            cfg.gamma
                        } else {
                            0.0
                        };
                        results.push(ExperimentResult::failed(
                            prep.scenario.clone(),
                            method,
                            gamma,
                            cfg.n_lv,
                            e.to_string(),
                        ));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    emit_result_tables(&results, &a.out)?;
    for r in &results {
        match &r.error {
            None => println!(
                "{}: RMSEP secondary {} primary {}",
                r.id(),
                r.rmsep_secondary,
                r.rmsep_primary
            ),
            Some(e) => println!("{}: failed: {e}", r.id()),
        }
    }
    Ok(if numerical_failure { 3 } else { 0 })
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let (manifest, scenarios) = load_scenarios(&a.data)?;
    let cfg = a.model.run_config(&a.data);
    let mut runs = Vec::new();
    for data in &scenarios {
        for response in responses(&manifest, &a.response) {
            let prep = experiment::prepare(data, &response, &cfg)?;
            let rows = experiment::sweep(&prep, &a.gamma_grid, &cfg)?;
            for r in &rows {
                println!(
                    "{}->{} {response} gamma={}: RMSEP {} |Tp-Ts| {}",
                    data.primary_label,
                    data.secondary_label,
                    r.gamma,
                    r.rmsep_secondary,
                    r.score_mismatch
                );
            }
            runs.push((prep.scenario, rows));
        }
    }
    create_dir(&a.out)?;
    experiment::write_sweep_table(&runs, cfg.n_lv, &a.out.join(SWEEP_FILE))
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let (manifest, scenarios) = load_scenarios(&a.data)?;
    let cfg = a.model.run_config(&a.data);
    let mut runs = Vec::new();
    for data in &scenarios {
        for response in responses(&manifest, &a.response) {
            let prep = experiment::prepare(data, &response, &cfg)?;
            let diag = experiment::diagnose(&prep, &cfg, a.fraction)?;
            let flagged = diag
                .flagged
                .map_or_else(|| "none".to_string(), |i| i.to_string());
            println!(
                "{}->{} {response}: cross residual below {} of initial after LV {flagged}",
                data.primary_label, data.secondary_label, a.fraction
            );
            runs.push((prep.scenario, diag));
        }
    }
    create_dir(&a.out)?;
    experiment::write_diagnosis_table(&runs, &a.out.join(DIAGNOSE_FILE))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.samples < 3 {
        return Err(Error::InvalidInput("--samples must be at least 3".into()));
    }
    let params = SynthParams {
        n_calibration: a.samples - 1,
        n_validation: 1,
        n_channels: a.channels,
        n_standards: a.n_standards,
        shift: a.shift.clone(),
        noise_level: a.noise,
        seed: a.seed,
    };
    let data = dataio::synth_two_instrument(&params)?;
    let (primary, secondary, y) = data.all_samples()?;
    create_dir(&a.out)?;
    let standards = |m: &nalgebra::DMatrix<f64>| crate::numcore::SpectraMatrix::new(m.clone());
    dataio::save_spectra_csv(a.out.join("primary.csv"), &primary)?;
    dataio::save_spectra_csv(a.out.join("secondary.csv"), &secondary)?;
    dataio::save_responses_csv(
        a.out.join("responses.csv"),
        &ResponseTable::single("analyte", y.values()),
    )?;
    dataio::save_spectra_csv(
        a.out.join("primary_standards.csv"),
        &standards(data.standards.primary())?,
    )?;
    dataio::save_spectra_csv(
        a.out.join("secondary_standards.csv"),
        &standards(data.standards.secondary())?,
    )?;
    let mut manifest = DatasetManifest::single(
        "synthetic",
        vec!["analyte".into()],
        RoleFiles {
            primary_spectra: "primary.csv".into(),
            secondary_spectra: "secondary.csv".into(),
            responses: "responses.csv".into(),
            primary_standards: Some("primary_standards.csv".into()),
            secondary_standards: Some("secondary_standards.csv".into()),
            primary_label: Some("primary".into()),
            secondary_label: Some("secondary".into()),
        },
    );
    manifest.wavelength_start_nm = Some(dataio::synth::SYNTH_START_NM);
    manifest.wavelength_step_nm = Some(dataio::synth::SYNTH_STEP_NM);
    dataio::write_atomic(&a.out.join(SYNTH_MANIFEST), manifest.to_toml()?.as_bytes())?;
    println!("wrote {}", a.out.join(SYNTH_MANIFEST).display());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_parsing() {
        assert!(parse_shift("none").unwrap().is_identity());
        let s = parse_shift("offset=0.1,gain=1.02,wshift=0.5,band=0.02:0.6:0.05").unwrap();
        assert_eq!(s.gain, 1.02);
        assert_eq!(s.wavelength_shift_nm, 0.5);
        assert_eq!(s.offsets.len(), 2);
        assert_eq!(s.offsets[1], Band::new(0.02, 0.6, 0.05));
        assert!(parse_shift("offset").is_err());
        assert!(parse_shift("tilt=2").is_err());
        assert!(parse_shift("band=1:2").is_err());
    }

    #[test]
    fn flag_validation() {
        assert!(parse_gamma("-1").is_err());
        assert!(parse_gamma("inf").is_err());
        assert_eq!(parse_gamma("1e6").unwrap(), 1e6);
        assert_eq!(parse_method("DS").unwrap(), Method::DsPls);
        assert!(parse_method("svm").is_err());
        assert_eq!(
            parse_standards("ks:4").unwrap(),
            StandardsMode::KennardStone(4)
        );
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["spectral-transfer"]), 2);
        assert_eq!(run(["spectral-transfer", "fit", "--lv", "0"]), 2);
        assert_eq!(run(["spectral-transfer", "--help"]), 0);
    }
}
